// hallucheck: validate completions, identify hallucination profiles, build a
// typed benchmark, evaluate models against it and render reports.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "hallucheck/errors.hpp"
#include "hallucheck/pipeline.hpp"

namespace fs = std::filesystem;
using namespace hallucheck;

namespace {

constexpr const char* kVersion = "0.3.0";

// Values given on the command line; unset ones fall back to --config.
struct Flags {
  std::optional<std::string> config;
  std::optional<std::string> out_dir;
  std::optional<int> jobs;
  std::optional<std::string> interpreter;
  std::optional<std::int64_t> wall_ms;
  std::optional<std::int64_t> mem_bytes;
  std::optional<int> threshold_k;
  std::optional<std::string> classification_table;
  std::optional<int> repeat_count, block_size, enum_count;
  std::optional<double> parse_valid_frac, window_frac;

  std::optional<std::string> dataset, completions, provider, template_path;
  std::optional<std::string> states, profiles, benchmark, evaluation, rates;
  std::optional<std::string> artifacts_dir;
  std::optional<std::string> indicator, weighting;
  std::optional<int> top_m;
  std::vector<std::string> run_ids;
  bool fail_fast = false;
  bool numeric = false;
  bool record_measurements = false;
  bool require_netns = false;
};

struct Config {
  fs::path out_dir = "out";
  int jobs = 1;
  InterpreterSpec interpreter;
  std::string interpreter_command;
  std::optional<std::int64_t> wall_ms, mem_bytes;
  int threshold_k = 2;
  ClassificationTable table = ClassificationTable::defaults();
  DegenerationThresholds thresholds;

  fs::path dataset, completions, template_path, artifacts_dir;
  std::optional<ProviderConfig> provider;
  fs::path states, profiles, benchmark, evaluation, rates;
  IndicatorMode indicator = IndicatorMode::kTarget;
  Weighting weighting = Weighting::kSamples;
  int top_m = 3;
  std::vector<std::string> run_ids;
  bool fail_fast = false, numeric = false, record_measurements = false,
       require_netns = false;
};

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

Json load_json_file(const fs::path& path) {
  try {
    return Json::parse(read_text_file(path));
  } catch (const Json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

Config resolve_config(const Flags& f) {
  Config c;
  Json file = Json::object();
  fs::path base;
  if (f.config) {
    file = load_json_file(*f.config);
    if (!file.is_object()) throw ConfigError(*f.config + ": expected a JSON object");
    base = fs::path(*f.config).parent_path();
  }

  auto str = [&](const std::optional<std::string>& flag, const char* key,
                 fs::path& out, bool relative_to_config = true) {
    if (flag) {
      out = *flag;
    } else if (file.contains(key)) {
      out = relative_to_config ? resolve(base, file[key].get<std::string>())
                               : fs::path(file[key].get<std::string>());
    }
  };
  auto pick = [&](const auto& flag, const char* key, auto& out) {
    using T = std::decay_t<decltype(out)>;
    if (flag) {
      out = *flag;
    } else if (file.contains(key)) {
      out = file[key].template get<T>();
    }
  };

  try {
    str(f.out_dir, "out_dir", c.out_dir);
    c.jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    pick(f.jobs, "jobs", c.jobs);
    if (c.jobs < 1) throw ConfigError("--jobs must be at least 1");

    c.interpreter_command = "python3 -s {file}";
    pick(f.interpreter, "interpreter", c.interpreter_command);
    c.interpreter = InterpreterSpec::from_command_line(c.interpreter_command);

    if (file.contains("limits")) {
      const auto& l = file["limits"];
      if (l.contains("wall_ms")) c.wall_ms = l["wall_ms"].get<std::int64_t>();
      if (l.contains("mem_bytes")) c.mem_bytes = l["mem_bytes"].get<std::int64_t>();
    }
    if (f.wall_ms) c.wall_ms = f.wall_ms;
    if (f.mem_bytes) c.mem_bytes = f.mem_bytes;
    ResourceLimits probe;
    if (c.wall_ms) probe.wall_time_ms = *c.wall_ms;
    if (c.mem_bytes) probe.memory_bytes = *c.mem_bytes;
    try {
      probe.validate();
    } catch (const ValidationError& e) {
      throw ConfigError(std::string("limits override: ") + e.what());
    }

    pick(f.threshold_k, "threshold_k", c.threshold_k);

    if (f.classification_table) {
      c.table = ClassificationTable::load(*f.classification_table);
    } else if (file.contains("classification_table")) {
      const auto& t = file["classification_table"];
      c.table = t.is_string() ? ClassificationTable::load(resolve(base, t.get<std::string>()))
                              : ClassificationTable::from_json(t);
    }

    if (file.contains("degeneration")) c.thresholds = thresholds_from_json(file["degeneration"]);
    if (f.repeat_count) c.thresholds.repeat_count = *f.repeat_count;
    if (f.block_size) c.thresholds.block_size = *f.block_size;
    if (f.enum_count) c.thresholds.enum_count = *f.enum_count;
    if (f.parse_valid_frac) c.thresholds.parse_valid_frac = *f.parse_valid_frac;
    if (f.window_frac) c.thresholds.window_frac = *f.window_frac;
    try {
      c.thresholds.validate();
    } catch (const Error&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }

    str(f.dataset, "dataset", c.dataset);
    str(f.completions, "completions", c.completions);
    str(f.template_path, "template", c.template_path);
    str(f.artifacts_dir, "artifacts_dir", c.artifacts_dir);
    str(f.states, "states", c.states);
    str(f.profiles, "profiles", c.profiles);
    str(f.benchmark, "benchmark", c.benchmark);
    str(f.evaluation, "evaluation", c.evaluation);
    str(f.rates, "rates", c.rates);

    if (f.provider) {
      c.provider = provider_from_json(load_json_file(*f.provider));
    } else if (file.contains("provider")) {
      const auto& p = file["provider"];
      c.provider = provider_from_json(p.is_string() ? load_json_file(resolve(base, p.get<std::string>()))
                                                    : p);
      if (c.provider->is_file() && !c.provider->path.empty()) {
        c.provider->path = resolve(base, c.provider->path.string());
      }
    }

    std::string indicator = "target", weighting = "samples";
    pick(f.indicator, "indicator", indicator);
    pick(f.weighting, "weighting", weighting);
    c.indicator = indicator_mode_from_string(indicator);
    c.weighting = weighting_from_string(weighting);
    pick(f.top_m, "top_m", c.top_m);
    if (c.top_m < 1) throw ConfigError("--top-m must be at least 1");

    c.run_ids = f.run_ids;
    if (c.run_ids.empty() && file.contains("run_ids")) {
      c.run_ids = file["run_ids"].get<std::vector<std::string>>();
    }
    c.fail_fast = f.fail_fast || file.value("fail_fast", false);
    c.numeric = f.numeric || file.value("numeric", false);
    c.record_measurements = f.record_measurements || file.value("record_measurements", false);
    c.require_netns = f.require_netns || file.value("require_network_isolation", false);
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

fs::path or_default(const fs::path& given, const Config& c, const char* name) {
  return given.empty() ? c.out_dir / name : given;
}

void require_file(const fs::path& p, const char* what) {
  if (!fs::exists(p)) throw ConfigError(std::string(what) + " not found: " + p.string());
}

void write_output(const fs::path& path, std::string_view text) {
  try {
    write_file_atomic(path, text);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw HarnessError("cannot write " + path.string() + ": " + e.what());
  }
}

void warn(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
}

std::string utc_now() {
  auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// ---------------------------------------------------------------- stages

struct ValidateOutput {
  std::vector<StateRecord> states;
  int harness_faults = 0;
};

ValidateOutput stage_validate(const Config& c, const std::string& command) {
  if (c.dataset.empty()) throw ConfigError("validate needs --dataset");
  const bool have_file = !c.completions.empty();
  if (have_file == c.provider.has_value()) {
    throw ConfigError("give exactly one of --completions and --provider");
  }
  require_file(c.dataset, "dataset");
  auto dataset = load_dataset(c.dataset);

  std::vector<Completion> completions;
  std::vector<std::string> warnings;
  if (have_file) {
    require_file(c.completions, "completions file");
    auto loaded = load_completions(c.completions, &dataset);
    completions = std::move(loaded.items);
    warnings = std::move(loaded.warnings);
  } else {
    c.provider->validate();
    std::string tmpl(kDefaultInstructionTemplate);
    if (!c.template_path.empty()) tmpl = read_text_file(c.template_path);
    CompletionSource source(*c.provider);
    completions = acquire_completions(dataset, source, tmpl, c.jobs);
    write_output(c.out_dir / "completions.jsonl", completions_to_jsonl(completions));
  }

  ValidateOptions opts;
  opts.interpreter = c.interpreter;
  opts.thresholds = c.thresholds;
  opts.table = c.table;
  opts.sandbox.numeric_compare = c.numeric;
  opts.sandbox.require_network_isolation = c.require_netns;
  opts.wall_time_ms = c.wall_ms;
  opts.memory_bytes = c.mem_bytes;
  opts.jobs = c.jobs;
  opts.fail_fast = c.fail_fast;
  opts.artifact_root = c.artifacts_dir;
  auto result = run_validation(dataset, completions, opts);
  warnings.insert(warnings.end(), result.warnings.begin(), result.warnings.end());
  warn(warnings);

  write_output(c.out_dir / "states.jsonl",
               states_to_jsonl(result.states, c.record_measurements));

  std::set<std::string> models;
  for (const auto& comp : completions) models.insert(comp.model_id);
  OrderedJson run;
  run["tool"] = "hallucheck";
  run["version"] = kVersion;
  run["command"] = command;
  run["generated_at"] = utc_now();
  run["dataset_id"] = dataset.dataset_id;
  run["tasks"] = dataset.tasks.size();
  run["completions"] = completions.size();
  run["models"] = models;
  run["records"] = result.states.size();
  run["harness_faults"] = result.harness_faults;
  run["interpreter"] = c.interpreter.run_argv;
  run["limits_override"] = {
      {"wall_ms", c.wall_ms ? OrderedJson(*c.wall_ms) : OrderedJson()},
      {"mem_bytes", c.mem_bytes ? OrderedJson(*c.mem_bytes) : OrderedJson()}};
  run["degeneration"] = thresholds_to_json(c.thresholds);
  run["classification_table"] = c.table.to_json();
  run["numeric_compare"] = c.numeric;
  run["fail_fast"] = c.fail_fast;
  run["network_isolation"] = network_isolation_available();
  if (c.provider) run["provider"] = provider_to_json(*c.provider);
  run["warnings"] = warnings;
  write_output(c.out_dir / "run.json", run.dump(2) + "\n");

  std::cout << "validate: " << result.states.size() << " records, "
            << result.harness_faults << " harness faults -> "
            << (c.out_dir / "states.jsonl").string() << "\n";
  return {std::move(result.states), result.harness_faults};
}

std::vector<SampleProfile> stage_identify(const Config& c,
                                          const std::vector<StateRecord>& states) {
  auto r = run_identification(states);
  write_output(c.out_dir / "frequencies.json", frequencies_to_json(r).dump(2) + "\n");
  write_output(c.out_dir / "profiles.jsonl", profiles_to_jsonl(r.profiles, c.top_m));
  write_output(c.out_dir / "cooccurrence.json", cooccurrence_report_json(r).dump(2) + "\n");
  write_output(c.out_dir / "cooccurrence.md", cooccurrence_markdown(r.cooccurrence));
  std::cout << "identify: " << r.profiles.size() << " profiles -> "
            << (c.out_dir / "profiles.jsonl").string() << "\n";
  return std::move(r.profiles);
}

BenchmarkManifest stage_build(const Config& c, const std::vector<SampleProfile>& profiles) {
  auto m = build_benchmark(profiles, c.threshold_k, c.run_ids);
  warn(m.warnings);
  export_manifest(m, c.out_dir / "benchmark.jsonl");
  write_output(c.out_dir / "benchmark_summary.csv", manifest_summary_csv(m));
  std::cout << "build-bench: " << m.entry_count() << " entries at k=" << c.threshold_k
            << " -> " << (c.out_dir / "benchmark.jsonl").string() << "\n";
  return m;
}

void write_reports(const Config& c, const std::vector<RateCell>& cells) {
  auto report = render_report(cells, c.weighting);
  write_output(c.out_dir / "report.md", report_markdown(report));
  write_output(c.out_dir / "report.csv", report_csv(report));
  write_output(c.out_dir / "report.json", report_json(report).dump(2) + "\n");
  std::cout << "report: " << report.rows.size() << " models -> "
            << (c.out_dir / "report.md").string() << "\n";
}

void stage_evaluate(const Config& c, const BenchmarkManifest& m,
                    const std::vector<SampleProfile>& profiles) {
  auto e = evaluate(m, profiles, c.indicator);
  warn(e.warnings);
  write_output(c.out_dir / "evaluation.json", evaluation_to_json(e).dump(2) + "\n");
  write_reports(c, rate_cells(e));
}

// Externally computed rates: model,subcategory,hr_percent,weight per line.
std::vector<RateCell> load_rate_csv(const fs::path& path) {
  std::vector<RateCell> cells;
  std::istringstream in(read_text_file(path));
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty() || (n == 1 && line.rfind("model", 0) == 0)) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string part; std::getline(ss, part, ',');) f.push_back(part);
    if (f.size() != 4) throw IngestError("expected 4 comma-separated fields", n);
    try {
      cells.push_back({f[0], subcategory_from_string(f[1]), std::stod(f[2]), std::stod(f[3])});
    } catch (const std::logic_error& e) {
      throw IngestError(e.what(), n);
    }
  }
  return cells;
}

std::vector<SampleProfile> read_profiles(const Config& c) {
  auto path = or_default(c.profiles, c, "profiles.jsonl");
  require_file(path, "profiles file");
  return load_profiles(path);
}

int run_command(const std::string& name, const Config& c) {
  fs::create_directories(c.out_dir);
  if (name == "validate") {
    auto out = stage_validate(c, "validate");
    if (out.harness_faults > 0) {
      throw HarnessError(std::to_string(out.harness_faults) +
                         " executions ended in SandboxError; see states.jsonl");
    }
  } else if (name == "identify") {
    auto path = or_default(c.states, c, "states.jsonl");
    require_file(path, "states file");
    stage_identify(c, load_states(path));
  } else if (name == "build-bench") {
    stage_build(c, read_profiles(c));
  } else if (name == "evaluate") {
    auto path = or_default(c.benchmark, c, "benchmark.jsonl");
    require_file(path, "benchmark");
    stage_evaluate(c, manifest_from_jsonl_file(path), read_profiles(c));
  } else if (name == "report") {
    if (!c.rates.empty()) {
      write_reports(c, load_rate_csv(c.rates));
    } else {
      auto path = or_default(c.evaluation, c, "evaluation.json");
      require_file(path, "evaluation");
      write_reports(c, rate_cells(evaluation_from_json(load_json_file(path))));
    }
    auto profiles_path = or_default(c.profiles, c, "profiles.jsonl");
    if (fs::exists(profiles_path)) {
      std::map<std::string, std::vector<SampleProfile>> by_model;
      for (auto& p : load_profiles(profiles_path)) by_model[p.model_id].push_back(std::move(p));
      std::vector<CooccurrenceMatrix> matrices;
      for (const auto& [model, ps] : by_model) matrices.push_back(cooccurrence(ps));
      write_output(c.out_dir / "cooccurrence.md", cooccurrence_markdown(matrices));
    }
  } else if (name == "run") {
    auto out = stage_validate(c, "run");
    auto profiles = stage_identify(c, out.states);
    auto manifest = stage_build(c, profiles);
    stage_evaluate(c, manifest, profiles);
    if (out.harness_faults > 0) {
      throw HarnessError(std::to_string(out.harness_faults) +
                         " executions ended in SandboxError; see states.jsonl");
    }
  }
  return 0;
}

void print_error(const std::string& kind, const std::string& message, int code) {
  OrderedJson j;
  j["error"] = kind;
  j["message"] = message;
  j["exit_code"] = code;
  std::cerr << j.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Execution-based hallucination analysis for generated programs", "hallucheck"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;

  app.add_option("--config", f.config, "JSON file with defaults for any option")->check(CLI::ExistingFile);
  app.add_option("--out-dir", f.out_dir, "Directory for outputs and default inputs (default: out)");
  app.add_option("--jobs", f.jobs, "Parallel sandbox executions and provider fetches");
  app.add_option("--interpreter", f.interpreter, "Run command; {file} is the program path");
  app.add_option("--limits.wall-ms", f.wall_ms, "Override every task's wall-time limit");
  app.add_option("--limits.mem-bytes", f.mem_bytes, "Override every task's memory limit");
  app.add_option("--threshold-k", f.threshold_k, "Benchmark inclusion needs frequency > k (default 2)");
  app.add_option("--classification-table", f.classification_table, "Exception-to-subcategory table")
      ->check(CLI::ExistingFile);
  app.add_option("--degeneration.repeat_count", f.repeat_count);
  app.add_option("--degeneration.block_size", f.block_size);
  app.add_option("--degeneration.enum_count", f.enum_count);
  app.add_option("--degeneration.parse_valid_frac", f.parse_valid_frac);
  app.add_option("--degeneration.window_frac", f.window_frac);

  auto add_validate_flags = [&](CLI::App* sub) {
    sub->add_option("--dataset", f.dataset, "tasks.jsonl");
    sub->add_option("--completions", f.completions, "completions.jsonl");
    sub->add_option("--provider", f.provider, "Provider config JSON (instead of --completions)");
    sub->add_option("--template", f.template_path, "Generation instruction template file");
    sub->add_option("--artifacts-dir", f.artifacts_dir, "Keep per-execution stdin/stdout/stderr here");
    sub->add_flag("--fail-fast", f.fail_fast, "Stop a completion's tests after its first failure");
    sub->add_flag("--numeric", f.numeric, "Compare numeric tokens with 1e-6 tolerance");
    sub->add_flag("--record-measurements", f.record_measurements,
                  "Include wall time and peak memory in states.jsonl");
    sub->add_flag("--require-network-isolation", f.require_netns,
                  "Treat a missing private network namespace as a harness fault");
  };
  auto add_report_flags = [&](CLI::App* sub) {
    sub->add_option("--weighting", f.weighting, "samples or uniform (default samples)");
  };

  auto* validate = app.add_subcommand("validate", "Run completions and classify every execution");
  add_validate_flags(validate);

  auto* identify = app.add_subcommand("identify", "Aggregate states into profiles and frequencies");
  identify->add_option("--states", f.states, "states.jsonl (default <out-dir>/states.jsonl)");
  identify->add_option("--top-m", f.top_m, "Most common labels listed per profile (default 3)");

  auto* build = app.add_subcommand("build-bench", "Select benchmark samples per subcategory");
  build->add_option("--profiles", f.profiles, "profiles.jsonl (default <out-dir>/profiles.jsonl)");
  build->add_option("--run-id", f.run_ids, "Provenance ids recorded in the manifest");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score models on a benchmark");
  evaluate_cmd->add_option("--benchmark", f.benchmark, "benchmark.jsonl (default <out-dir>/benchmark.jsonl)");
  evaluate_cmd->add_option("--profiles", f.profiles, "profiles of the evaluated models");
  evaluate_cmd->add_option("--indicator", f.indicator, "target or any (default target)");
  add_report_flags(evaluate_cmd);

  auto* report = app.add_subcommand("report", "Render rate tables and co-occurrence summaries");
  report->add_option("--evaluation", f.evaluation, "evaluation.json (default <out-dir>/evaluation.json)");
  report->add_option("--rates", f.rates, "CSV of model,subcategory,hr_percent,weight instead");
  report->add_option("--profiles", f.profiles, "profiles.jsonl for the co-occurrence summary");
  add_report_flags(report);

  auto* run = app.add_subcommand("run", "validate, identify, build-bench and evaluate in one go");
  add_validate_flags(run);
  run->add_option("--top-m", f.top_m, "Most common labels listed per profile (default 3)");
  run->add_option("--run-id", f.run_ids, "Provenance ids recorded in the manifest");
  run->add_option("--indicator", f.indicator, "target or any (default target)");
  add_report_flags(run);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what(), 1);
    return 1;
  }

  try {
    const auto config = resolve_config(f);
    return run_command(app.get_subcommands().front()->get_name(), config);
  } catch (const Error& e) {
    const int code = static_cast<int>(e.exit_code());
    print_error(e.kind(), e.what(), code);
    return code;
  } catch (const std::exception& e) {
    print_error("internal", e.what(), 3);
    return 3;
  }
}
