#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hallucheck/degeneration.hpp"
#include "hallucheck/sandbox.hpp"
#include "hallucheck/taxonomy.hpp"

namespace hallucheck {

/// One classified observation: a single test execution, or the single
/// pre-execution record of a degenerate completion (no test index).
struct StateRecord {
  std::string task_id;
  std::string model_id;
  std::optional<std::int64_t> sample_index;
  std::optional<int> test_index;
  int test_count = 0;  // number of test cases the task defines
  DegenerationVerdict verdict;
  std::optional<ExecutionOutcome> outcome;
  Classification classification;
};

OrderedJson state_to_json(const StateRecord& r, bool with_measurements);
StateRecord state_from_json(const Json& j);
std::vector<StateRecord> load_states(const std::filesystem::path& path);

/// The labels one model produced on one task, over all its executions.
struct SampleProfile {
  std::string task_id;
  std::string model_id;
  std::vector<HallucinationLabel> labels;  // multiset, sorted
  int pass_count = 0;
  int fault_count = 0;     // harness faults, excluded from rates
  int unmapped_count = 0;  // runtime failures outside the table
  std::vector<std::string> unmapped_causes;
  int test_count = 0;
  bool degenerate = false;

  int count(Subcategory s) const;
  std::set<Subcategory> distinct_subcategories() const;
  bool operator==(const SampleProfile&) const = default;
};

OrderedJson profile_to_json(const SampleProfile& p, int top_m);
SampleProfile profile_from_json(const Json& j);
std::vector<SampleProfile> load_profiles(const std::filesystem::path& path);

/// Groups records into one profile per (task_id, model_id), ordered by
/// task_id then model_id.
std::vector<SampleProfile> build_profiles(const std::vector<StateRecord>& records);

/// The `m` most frequent subcategories of a profile (count descending, then
/// subcategory order).
std::vector<std::pair<Subcategory, int>> top_labels(const SampleProfile& p, int m);

enum class Granularity { kSubcategory, kRawCause };

struct FrequencyEntry {
  std::string name;
  std::int64_t count = 0;
  double share = 0.0;
  bool operator==(const FrequencyEntry&) const = default;
};

using FrequencyList = std::vector<FrequencyEntry>;

/// Label counts keyed by name; merging is associative and commutative, so
/// per-model partial counts can be folded in any order.
class FrequencyCounter {
 public:
  explicit FrequencyCounter(Granularity g) : granularity_(g) {}

  void add(const SampleProfile& p);
  void merge(const FrequencyCounter& other);
  FrequencyList finish() const;

 private:
  Granularity granularity_;
  std::map<std::string, std::int64_t> counts_;
};

/// Counts sorted descending with ties broken by name; shares are
/// count/total. No labels yields an empty list.
FrequencyList frequency_list(const std::vector<SampleProfile>& profiles,
                             Granularity granularity);

struct CooccurrenceMatrix {
  std::string model_id;
  std::array<std::array<int, kSubcategoryCount>, kSubcategoryCount> counts{};
  int hallucinating_tasks = 0;  // tasks with at least one label
  int multi_label_tasks = 0;    // tasks with two or more distinct subcategories
  double cross_task_rate = 0.0;
};

/// Task-level co-occurrence for a single model. Throws ValidationError when
/// profiles from several models are mixed.
CooccurrenceMatrix cooccurrence(const std::vector<SampleProfile>& profiles);

OrderedJson cooccurrence_to_json(const CooccurrenceMatrix& m);

/// Rounds half-to-even at two decimals and prints with exactly two.
std::string format_fixed2(double value);

/// 0.0107 -> "1.07%".
std::string format_percent(double fraction);

}  // namespace hallucheck
