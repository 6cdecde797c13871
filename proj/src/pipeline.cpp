#include "hallucheck/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <tuple>
#include <atomic>
#include <exception>
#include <mutex>
#include <thread>

#include "hallucheck/errors.hpp"

namespace hallucheck {

namespace fs = std::filesystem;

namespace {

std::string path_component(std::string_view s) {
  std::string out;
  for (char c : s) {
    bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '-' ||
                c == '_' || c == '.';
    out += keep ? c : '_';
  }
  return out.empty() || out == "." || out == ".." ? "_" : out;
}

struct CompletionResult {
  std::vector<StateRecord> states;
  int faults = 0;
};

CompletionResult validate_one(const Task& task, const Completion& completion,
                              const ValidateOptions& options) {
  CompletionResult result;
  ResourceLimits limits = task.limits;
  if (options.wall_time_ms) limits.wall_time_ms = *options.wall_time_ms;
  if (options.memory_bytes) limits.memory_bytes = *options.memory_bytes;
  const int test_count = static_cast<int>(task.test_cases.size());

  auto base_record = [&] {
    StateRecord r;
    r.task_id = task.task_id;
    r.model_id = completion.model_id;
    r.sample_index = completion.sample_index;
    r.test_count = test_count;
    return r;
  };

  auto syntax = check_syntax(completion.source_code, limits, options.interpreter);
  std::optional<bool> parses;
  if (!options.interpreter.check_argv.empty()) {
    parses = !(syntax && syntax->status == ExecutionStatus::kSyntaxFailure);
  }
  auto verdict = detect(completion.source_code, completion.truncated,
                        options.thresholds, parses);

  if (verdict.kind != DegenerationKind::kNone) {
    auto r = base_record();
    r.verdict = verdict;
    r.classification = classify(verdict, nullptr, options.table);
    result.states.push_back(std::move(r));
    return result;
  }

  SandboxOptions sandbox = options.sandbox;
  sandbox.skip_syntax_check = true;
  for (int i = 0; i < test_count; ++i) {
    auto r = base_record();
    r.test_index = i;
    r.verdict = verdict;
    if (syntax) {
      // The program never starts, so every test sees the same failure.
      r.outcome = *syntax;
    } else {
      if (!options.artifact_root.empty()) {
        auto model_dir = path_component(completion.model_id);
        if (completion.sample_index) {
          model_dir += "#" + std::to_string(*completion.sample_index);
        }
        sandbox.artifact_dir = options.artifact_root /
                               path_component(task.task_id) / model_dir /
                               std::to_string(i);
      }
      r.outcome = execute(completion.source_code,
                          task.test_cases[static_cast<std::size_t>(i)], limits,
                          options.interpreter, sandbox);
    }
    r.classification = classify(verdict, &*r.outcome, options.table);
    if (r.classification.kind == ClassificationKind::kHarnessFault) ++result.faults;
    const bool passed = r.classification.kind == ClassificationKind::kPass;
    result.states.push_back(std::move(r));
    if (options.fail_fast && !passed) break;
  }
  return result;
}

}  // namespace

void parallel_for(std::size_t count, int jobs,
                  const std::function<void(std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < std::min(workers, count); ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
            next = count;
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

ValidateResult run_validation(const Dataset& dataset,
                              const std::vector<Completion>& completions,
                              const ValidateOptions& options) {
  options.thresholds.validate();
  ValidateResult result;
  std::vector<std::pair<const Task*, const Completion*>> work;
  for (const auto& c : completions) {
    const Task* task = dataset.find(c.task_id);
    if (task == nullptr) {
      result.warnings.push_back("skipping completion of model '" + c.model_id +
                                "' for unknown task '" + c.task_id + "'");
      continue;
    }
    work.emplace_back(task, &c);
  }

  std::vector<CompletionResult> per_completion(work.size());
  parallel_for(work.size(), options.jobs, [&](std::size_t i) {
    per_completion[i] = validate_one(*work[i].first, *work[i].second, options);
  });

  for (auto& r : per_completion) {
    result.harness_faults += r.faults;
    for (auto& s : r.states) result.states.push_back(std::move(s));
  }
  std::stable_sort(result.states.begin(), result.states.end(),
                   [](const StateRecord& a, const StateRecord& b) {
                     return std::tie(a.task_id, a.model_id, a.sample_index,
                                     a.test_index) <
                            std::tie(b.task_id, b.model_id, b.sample_index,
                                     b.test_index);
                   });
  return result;
}

std::vector<Completion> acquire_completions(const Dataset& dataset,
                                            const CompletionSource& source,
                                            std::string_view instruction_template,
                                            int jobs) {
  std::vector<Completion> out(dataset.tasks.size());
  parallel_for(dataset.tasks.size(), jobs, [&](std::size_t i) {
    const auto& task = dataset.tasks[i];
    auto instruction =
        render_instruction(task.question, task.limits, instruction_template);
    out[i] = source.fetch(task, instruction);
  });
  return out;
}

IdentifyResult run_identification(const std::vector<StateRecord>& states) {
  IdentifyResult r;
  r.profiles = build_profiles(states);
  r.by_subcategory = frequency_list(r.profiles, Granularity::kSubcategory);
  r.by_cause = frequency_list(r.profiles, Granularity::kRawCause);
  std::map<std::string, std::vector<SampleProfile>> per_model;
  for (const auto& p : r.profiles) per_model[p.model_id].push_back(p);
  for (const auto& [model, profiles] : per_model) {
    r.by_model[model] = frequency_list(profiles, Granularity::kSubcategory);
    r.cooccurrence.push_back(cooccurrence(profiles));
  }
  return r;
}

std::string states_to_jsonl(const std::vector<StateRecord>& states,
                            bool with_measurements) {
  std::vector<OrderedJson> records;
  records.reserve(states.size());
  for (const auto& s : states) records.push_back(state_to_json(s, with_measurements));
  return to_jsonl(records);
}

namespace {

OrderedJson frequency_json(const FrequencyList& list) {
  OrderedJson out = OrderedJson::array();
  for (const auto& e : list) {
    out.push_back({{"name", e.name}, {"count", e.count}, {"share", e.share}});
  }
  return out;
}

}  // namespace

OrderedJson frequencies_to_json(const IdentifyResult& r) {
  OrderedJson j;
  j["subcategory"] = frequency_json(r.by_subcategory);
  j["raw_cause"] = frequency_json(r.by_cause);
  OrderedJson per_model = OrderedJson::object();
  for (const auto& [model, list] : r.by_model) per_model[model] = frequency_json(list);
  j["per_model"] = per_model;
  return j;
}

OrderedJson cooccurrence_report_json(const IdentifyResult& r) {
  OrderedJson j;
  j["models"] = OrderedJson::array();
  double rate_sum = 0.0;
  for (const auto& m : r.cooccurrence) {
    j["models"].push_back(cooccurrence_to_json(m));
    rate_sum += m.cross_task_rate;
  }
  const double mean = r.cooccurrence.empty()
                          ? 0.0
                          : rate_sum / static_cast<double>(r.cooccurrence.size());
  j["mean_cross_task_rate"] = mean;
  j["mean_cross_task_rate_text"] = format_percent(mean);
  return j;
}

std::string profiles_to_jsonl(const std::vector<SampleProfile>& profiles,
                              int top_m) {
  std::vector<OrderedJson> records;
  records.reserve(profiles.size());
  for (const auto& p : profiles) records.push_back(profile_to_json(p, top_m));
  return to_jsonl(records);
}

std::string cooccurrence_markdown(const std::vector<CooccurrenceMatrix>& matrices) {
  std::string out;
  for (const auto& m : matrices) {
    out += "### " + m.model_id + "\n\nCross-task rate: " +
           format_percent(m.cross_task_rate) + " (" +
           std::to_string(m.multi_label_tasks) + " of " +
           std::to_string(m.hallucinating_tasks) + " hallucinating tasks)\n\n|";
    for (auto s : kAllSubcategories) out += " | " + std::string(short_code(s));
    out += " |\n|---";
    for (std::size_t i = 0; i < kSubcategoryCount; ++i) out += "|---:";
    out += "|\n";
    for (auto a : kAllSubcategories) {
      out += "| " + std::string(short_code(a));
      for (auto b : kAllSubcategories) {
        out += " | " + std::to_string(m.counts[index_of(a)][index_of(b)]);
      }
      out += " |\n";
    }
    out += "\n";
  }
  return out;
}

}  // namespace hallucheck
