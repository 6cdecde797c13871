#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hallucheck/jsonl.hpp"

namespace hallucheck {

struct TestCase {
  std::string input;            // fed to standard input
  std::string expected_output;  // may be legitimately empty

  bool operator==(const TestCase&) const = default;
};

/// Per-task execution limits. Values below the floors cannot run a real
/// interpreter and are rejected by validate().
struct ResourceLimits {
  static constexpr std::int64_t kMinWallTimeMs = 100;
  static constexpr std::int64_t kMinMemoryBytes = 16LL << 20;
  static constexpr std::int64_t kDefaultWallTimeMs = 5000;
  static constexpr std::int64_t kDefaultMemoryBytes = 256LL << 20;

  std::int64_t wall_time_ms = kDefaultWallTimeMs;
  std::int64_t memory_bytes = kDefaultMemoryBytes;

  void validate() const;
  bool operator==(const ResourceLimits&) const = default;
};

struct Task {
  std::string task_id;
  std::string question;
  std::vector<TestCase> test_cases;
  ResourceLimits limits;

  bool operator==(const Task&) const = default;
};

struct Completion {
  std::string task_id;
  std::string model_id;
  std::string raw_response;
  std::string source_code;
  std::optional<std::int64_t> sample_index;
  bool truncated = false;      // provider reported a length stop
  bool unknown_task = false;   // task_id absent from the reference dataset

  bool operator==(const Completion&) const = default;
};

struct Dataset {
  std::string dataset_id;
  std::vector<Task> tasks;

  const Task* find(const std::string& task_id) const;
  bool operator==(const Dataset&) const = default;
};

struct LoadedCompletions {
  std::vector<Completion> items;
  std::vector<std::string> warnings;
};

Task task_from_json(const Json& j);
OrderedJson task_to_json(const Task& task);
Completion completion_from_json(const Json& j);
OrderedJson completion_to_json(const Completion& c);

/// Reads a tasks JSON-lines file. The dataset id defaults to the file stem.
/// Throws IngestError for malformed lines and ValidationError for
/// duplicate ids or tasks without test cases.
Dataset load_dataset(const std::filesystem::path& path);
std::string dataset_to_jsonl(const Dataset& dataset);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

/// Reads completion records. When `dataset` is given, records naming an
/// unknown task are kept, flagged, and reported in `warnings`.
LoadedCompletions load_completions(const std::filesystem::path& path,
                                   const Dataset* dataset = nullptr);
std::string completions_to_jsonl(const std::vector<Completion>& completions);

}  // namespace hallucheck
