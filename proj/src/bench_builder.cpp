#include "hallucheck/bench_builder.hpp"

#include <algorithm>
#include <set>

#include "hallucheck/errors.hpp"

namespace hallucheck {

bool BenchmarkManifest::empty() const { return entry_count() == 0; }

std::size_t BenchmarkManifest::entry_count() const {
  std::size_t n = 0;
  for (const auto& e : entries) n += e.size();
  return n;
}

int BenchmarkManifest::task_count(Subcategory s) const {
  return static_cast<int>(of(s).size());
}

int BenchmarkManifest::sample_count(Subcategory s) const {
  int n = 0;
  for (const auto& e : of(s)) n += e.test_count;
  return n;
}

int BenchmarkManifest::task_count(Category c) const {
  auto [a, b] = subcategories_of(c);
  return task_count(a) + task_count(b);
}

int BenchmarkManifest::sample_count(Category c) const {
  auto [a, b] = subcategories_of(c);
  return sample_count(a) + sample_count(b);
}

double BenchmarkManifest::overlap_rate() const {
  std::map<std::string, int> memberships;
  for (const auto& group : entries) {
    for (const auto& e : group) ++memberships[e.task_id];
  }
  if (memberships.empty()) return 0.0;
  auto multi = std::count_if(memberships.begin(), memberships.end(),
                             [](const auto& kv) { return kv.second > 1; });
  return static_cast<double>(multi) / static_cast<double>(memberships.size());
}

BenchmarkManifest build_benchmark(const std::vector<SampleProfile>& profiles,
                                  int threshold_k,
                                  std::vector<std::string> run_ids) {
  if (threshold_k <= 0) {
    throw ConfigError("threshold_k must be a positive integer, got " +
                      std::to_string(threshold_k));
  }
  BenchmarkManifest manifest;
  manifest.threshold_k = threshold_k;
  manifest.run_ids = std::move(run_ids);
  if (profiles.empty()) {
    manifest.warnings.push_back("no profiles given; manifest is empty");
    return manifest;
  }

  std::set<std::string> models;
  std::map<std::string, int> tests_per_task;
  // task -> subcategory -> model -> count
  std::map<std::string,
           std::array<std::map<std::string, int>, kSubcategoryCount>>
      observed;
  for (const auto& p : profiles) {
    models.insert(p.model_id);
    auto& tests = tests_per_task[p.task_id];
    tests = std::max(tests, p.test_count);
    auto& per_sub = observed[p.task_id];
    for (const auto& l : p.labels) ++per_sub[index_of(l.subcategory)][p.model_id];
  }
  manifest.models.assign(models.begin(), models.end());
  if (models.size() < 2) {
    manifest.warnings.push_back(
        "profiles cover a single model; cross-model frequency is degenerate");
  }

  for (const auto& [task_id, per_sub] : observed) {
    for (auto s : kAllSubcategories) {
      const auto& per_model = per_sub[index_of(s)];
      int total = 0;
      for (const auto& [model, n] : per_model) total += n;
      if (total <= threshold_k) continue;
      BenchmarkEntry e;
      e.task_id = task_id;
      e.target_subcategory = s;
      e.observed_frequency = total;
      e.per_model_frequency = per_model;
      for (const auto& [model, n] : per_model) e.contributing_models.push_back(model);
      e.test_count = tests_per_task[task_id];
      manifest.entries[index_of(s)].push_back(std::move(e));
    }
  }
  for (auto& group : manifest.entries) {
    std::sort(group.begin(), group.end(), [](const auto& a, const auto& b) {
      if (a.observed_frequency != b.observed_frequency) {
        return a.observed_frequency > b.observed_frequency;
      }
      return a.task_id < b.task_id;
    });
  }
  return manifest;
}

std::string manifest_to_jsonl(const BenchmarkManifest& m) {
  std::vector<OrderedJson> records;
  OrderedJson summary;
  summary["record"] = "summary";
  summary["threshold_k"] = m.threshold_k;
  summary["run_ids"] = m.run_ids;
  summary["models"] = m.models;
  OrderedJson rows = OrderedJson::array();
  for (auto c : kAllCategories) {
    for (auto s : subcategories_of(c)) {
      rows.push_back({{"category", to_string(c)},
                      {"category_tasks", m.task_count(c)},
                      {"category_samples", m.sample_count(c)},
                      {"subcategory", to_string(s)},
                      {"subcategory_tasks", m.task_count(s)},
                      {"subcategory_samples", m.sample_count(s)}});
    }
  }
  summary["rows"] = rows;
  summary["overlap_rate"] = m.overlap_rate();
  records.push_back(summary);
  for (auto s : kAllSubcategories) {
    for (const auto& e : m.of(s)) {
      OrderedJson r;
      r["record"] = "entry";
      r["task_id"] = e.task_id;
      r["category"] = to_string(category_of(e.target_subcategory));
      r["target_subcategory"] = to_string(e.target_subcategory);
      r["observed_frequency"] = e.observed_frequency;
      r["contributing_models"] = e.contributing_models;
      r["per_model_frequency"] = e.per_model_frequency;
      r["test_count"] = e.test_count;
      records.push_back(r);
    }
  }
  return to_jsonl(records);
}

BenchmarkManifest manifest_from_jsonl_file(const std::filesystem::path& path) {
  BenchmarkManifest m;
  bool have_summary = false;
  for_each_jsonl(path, [&](const Json& j, std::size_t line) {
    const auto kind = j.value("record", "");
    if (kind == "summary") {
      have_summary = true;
      m.threshold_k = j.at("threshold_k").get<int>();
      m.run_ids = j.value("run_ids", std::vector<std::string>{});
      m.models = j.value("models", std::vector<std::string>{});
    } else if (kind == "entry") {
      BenchmarkEntry e;
      e.task_id = j.at("task_id").get<std::string>();
      e.target_subcategory =
          subcategory_from_string(j.at("target_subcategory").get<std::string>());
      e.observed_frequency = j.at("observed_frequency").get<int>();
      e.contributing_models =
          j.value("contributing_models", std::vector<std::string>{});
      e.per_model_frequency =
          j.value("per_model_frequency", std::map<std::string, int>{});
      e.test_count = j.value("test_count", 0);
      m.entries[index_of(e.target_subcategory)].push_back(std::move(e));
    } else {
      throw IngestError("unknown manifest record '" + kind + "'", line);
    }
  });
  if (!have_summary) throw IngestError("manifest lacks a summary record");
  return m;
}

void export_manifest(const BenchmarkManifest& manifest,
                     const std::filesystem::path& path) {
  write_file_atomic(path, manifest_to_jsonl(manifest));
}

std::string manifest_summary_csv(const BenchmarkManifest& m) {
  std::string out = "Category,#Tasks,#Samples,Sub-Category,#Tasks,#Samples\n";
  for (auto c : kAllCategories) {
    for (auto s : subcategories_of(c)) {
      out += std::string(to_string(c)) + "," + std::to_string(m.task_count(c)) +
             "," + std::to_string(m.sample_count(c)) + "," +
             std::string(display_name(s)) + "," + std::to_string(m.task_count(s)) +
             "," + std::to_string(m.sample_count(s)) + "\n";
    }
  }
  return out;
}

}  // namespace hallucheck
