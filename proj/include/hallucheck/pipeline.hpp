#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hallucheck/aggregate.hpp"
#include "hallucheck/bench_builder.hpp"
#include "hallucheck/corpus.hpp"
#include "hallucheck/degeneration.hpp"
#include "hallucheck/evalreport.hpp"
#include "hallucheck/gateway.hpp"
#include "hallucheck/sandbox.hpp"
#include "hallucheck/taxonomy.hpp"

namespace hallucheck {

/// Runs `fn(i)` for i in [0, count) on up to `jobs` threads. The first
/// exception thrown by any call is rethrown after all workers stop.
void parallel_for(std::size_t count, int jobs,
                  const std::function<void(std::size_t)>& fn);

struct ValidateOptions {
  InterpreterSpec interpreter;
  DegenerationThresholds thresholds;
  ClassificationTable table = ClassificationTable::defaults();
  SandboxOptions sandbox;
  std::optional<std::int64_t> wall_time_ms;  // overrides every task's limit
  std::optional<std::int64_t> memory_bytes;
  int jobs = 1;
  /// Stop a completion's remaining tests after its first non-Pass result.
  bool fail_fast = false;
  /// Per-execution artifacts under <root>/<task>/<model>/<test>/.
  std::filesystem::path artifact_root;
};

struct ValidateResult {
  std::vector<StateRecord> states;  // sorted by task, model, sample, test
  std::vector<std::string> warnings;
  int harness_faults = 0;
};

/// Degeneration gate, then per-test execution and classification, for
/// every completion whose task is in the dataset.
ValidateResult run_validation(const Dataset& dataset,
                              const std::vector<Completion>& completions,
                              const ValidateOptions& options);

/// Asks the provider for one completion per task.
std::vector<Completion> acquire_completions(const Dataset& dataset,
                                            const CompletionSource& source,
                                            std::string_view instruction_template,
                                            int jobs);

struct IdentifyResult {
  std::vector<SampleProfile> profiles;
  FrequencyList by_subcategory;
  FrequencyList by_cause;
  std::map<std::string, FrequencyList> by_model;
  std::vector<CooccurrenceMatrix> cooccurrence;  // one per model
};

IdentifyResult run_identification(const std::vector<StateRecord>& states);

std::string states_to_jsonl(const std::vector<StateRecord>& states,
                            bool with_measurements);
OrderedJson frequencies_to_json(const IdentifyResult& r);
OrderedJson cooccurrence_report_json(const IdentifyResult& r);
std::string profiles_to_jsonl(const std::vector<SampleProfile>& profiles,
                              int top_m);
std::string cooccurrence_markdown(const std::vector<CooccurrenceMatrix>& m);

}  // namespace hallucheck
