#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "hallucheck/aggregate.hpp"

namespace hallucheck {

struct BenchmarkEntry {
  std::string task_id;
  Subcategory target_subcategory = Subcategory::kLogicDeviation;
  /// Observations of the target across every evaluated model and execution.
  int observed_frequency = 0;
  std::vector<std::string> contributing_models;
  std::map<std::string, int> per_model_frequency;
  /// Executions the task offers (its test-case count); summed into the
  /// manifest's sample counts.
  int test_count = 0;

  bool operator==(const BenchmarkEntry&) const = default;
};

struct BenchmarkManifest {
  int threshold_k = 2;
  std::vector<std::string> run_ids;
  std::vector<std::string> models;
  /// Entries per subcategory, frequency descending then task_id.
  std::array<std::vector<BenchmarkEntry>, kSubcategoryCount> entries;
  std::vector<std::string> warnings;

  const std::vector<BenchmarkEntry>& of(Subcategory s) const {
    return entries[index_of(s)];
  }
  bool empty() const;
  std::size_t entry_count() const;

  int task_count(Subcategory s) const;
  int sample_count(Subcategory s) const;
  int task_count(Category c) const;
  int sample_count(Category c) const;
  /// Share of distinct tasks that appear under two or more subcategories.
  double overlap_rate() const;

  bool operator==(const BenchmarkManifest& o) const {
    return threshold_k == o.threshold_k && run_ids == o.run_ids &&
           models == o.models && entries == o.entries;
  }
};

/// Keeps, for every subcategory, the tasks whose cross-model frequency of
/// that subcategory strictly exceeds `threshold_k`.
BenchmarkManifest build_benchmark(const std::vector<SampleProfile>& profiles,
                                  int threshold_k,
                                  std::vector<std::string> run_ids = {});

/// Summary header line followed by one line per entry.
std::string manifest_to_jsonl(const BenchmarkManifest& manifest);
BenchmarkManifest manifest_from_jsonl_file(const std::filesystem::path& path);
void export_manifest(const BenchmarkManifest& manifest,
                     const std::filesystem::path& path);

/// Category, #Tasks, #Samples, Sub-Category, #Tasks, #Samples.
std::string manifest_summary_csv(const BenchmarkManifest& manifest);

}  // namespace hallucheck
