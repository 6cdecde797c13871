#include "hallucheck/corpus.hpp"

#include <set>
#include <tuple>
#include <utility>

#include "hallucheck/errors.hpp"
#include "hallucheck/gateway.hpp"

namespace hallucheck {

namespace {

std::string require_string(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw IngestError(std::string("missing field '") + key + "'");
  }
  if (!it->is_string()) {
    throw IngestError(std::string("field '") + key + "' must be a string");
  }
  return it->get<std::string>();
}

std::int64_t require_positive_int(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_number_integer()) {
    throw IngestError(std::string("field '") + key + "' must be an integer");
  }
  return it->get<std::int64_t>();
}

}  // namespace

void ResourceLimits::validate() const {
  if (wall_time_ms < kMinWallTimeMs) {
    throw ValidationError("wall_time_ms must be >= " +
                          std::to_string(kMinWallTimeMs) + ", got " +
                          std::to_string(wall_time_ms));
  }
  if (memory_bytes < kMinMemoryBytes) {
    throw ValidationError("memory_bytes must be >= " +
                          std::to_string(kMinMemoryBytes) + ", got " +
                          std::to_string(memory_bytes));
  }
}

const Task* Dataset::find(const std::string& task_id) const {
  for (const auto& t : tasks) {
    if (t.task_id == task_id) return &t;
  }
  return nullptr;
}

Task task_from_json(const Json& j) {
  Task task;
  task.task_id = require_string(j, "task_id");
  if (task.task_id.empty()) throw IngestError("task_id must be non-empty");
  task.question = j.contains("question") ? require_string(j, "question") : "";
  auto tests = j.find("test_cases");
  if (tests == j.end() || !tests->is_array()) {
    throw IngestError("task '" + task.task_id +
                      "': field 'test_cases' must be an array");
  }
  for (const auto& tc : *tests) {
    if (!tc.is_object()) throw IngestError("test case must be an object");
    // A missing expected_output is an error; an empty string is a valid
    // expectation (programs that print nothing).
    task.test_cases.push_back(
        {require_string(tc, "input"), require_string(tc, "expected_output")});
  }
  if (auto lim = j.find("limits"); lim != j.end() && !lim->is_null()) {
    if (!lim->is_object()) throw IngestError("field 'limits' must be an object");
    if (lim->contains("wall_time_ms")) {
      task.limits.wall_time_ms = require_positive_int(*lim, "wall_time_ms");
    }
    if (lim->contains("memory_bytes")) {
      task.limits.memory_bytes = require_positive_int(*lim, "memory_bytes");
    }
  }
  return task;
}

OrderedJson task_to_json(const Task& task) {
  OrderedJson j;
  j["task_id"] = task.task_id;
  j["question"] = task.question;
  j["test_cases"] = OrderedJson::array();
  for (const auto& tc : task.test_cases) {
    j["test_cases"].push_back(
        {{"input", tc.input}, {"expected_output", tc.expected_output}});
  }
  j["limits"] = {{"wall_time_ms", task.limits.wall_time_ms},
                 {"memory_bytes", task.limits.memory_bytes}};
  return j;
}

Completion completion_from_json(const Json& j) {
  Completion c;
  c.task_id = require_string(j, "task_id");
  c.model_id = require_string(j, "model_id");
  c.raw_response = require_string(j, "raw_response");
  if (j.contains("source_code") && !j["source_code"].is_null()) {
    c.source_code = require_string(j, "source_code");
  } else {
    c.source_code = extract_code(c.raw_response);
  }
  if (j.contains("sample_index") && !j["sample_index"].is_null()) {
    c.sample_index = require_positive_int(j, "sample_index");
  }
  if (auto t = j.find("truncated"); t != j.end() && !t->is_null()) {
    if (!t->is_boolean()) throw IngestError("field 'truncated' must be boolean");
    c.truncated = t->get<bool>();
  }
  return c;
}

OrderedJson completion_to_json(const Completion& c) {
  OrderedJson j;
  j["task_id"] = c.task_id;
  j["model_id"] = c.model_id;
  if (c.sample_index) j["sample_index"] = *c.sample_index;
  j["raw_response"] = c.raw_response;
  j["source_code"] = c.source_code;
  j["truncated"] = c.truncated;
  return j;
}

Dataset load_dataset(const std::filesystem::path& path) {
  Dataset ds;
  ds.dataset_id = path.stem().string();
  std::set<std::string> seen;
  for_each_jsonl(path, [&](const Json& record, std::size_t line) {
    Task task;
    try {
      task = task_from_json(record);
    } catch (const IngestError& e) {
      throw IngestError(e.what(), line);
    }
    if (!seen.insert(task.task_id).second) {
      throw ValidationError("duplicate task_id '" + task.task_id +
                            "' at line " + std::to_string(line));
    }
    if (task.test_cases.empty()) {
      throw ValidationError("task '" + task.task_id + "' has no test cases");
    }
    try {
      task.limits.validate();
    } catch (const ValidationError& e) {
      throw ValidationError("task '" + task.task_id + "': " + e.what());
    }
    ds.tasks.push_back(std::move(task));
  });
  return ds;
}

std::string dataset_to_jsonl(const Dataset& dataset) {
  std::vector<OrderedJson> records;
  records.reserve(dataset.tasks.size());
  for (const auto& t : dataset.tasks) records.push_back(task_to_json(t));
  return to_jsonl(records);
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  write_file_atomic(path, dataset_to_jsonl(dataset));
}

LoadedCompletions load_completions(const std::filesystem::path& path,
                                   const Dataset* dataset) {
  LoadedCompletions out;
  std::set<std::pair<std::string, std::string>> unindexed;
  std::set<std::tuple<std::string, std::string, std::int64_t>> indexed;
  for_each_jsonl(path, [&](const Json& record, std::size_t line) {
    Completion c;
    try {
      c = completion_from_json(record);
    } catch (const IngestError& e) {
      throw IngestError(e.what(), line);
    }
    bool duplicate =
        c.sample_index
            ? !indexed.emplace(c.task_id, c.model_id, *c.sample_index).second
            : !unindexed.emplace(c.task_id, c.model_id).second;
    if (duplicate) {
      throw ValidationError("duplicate completion for task '" + c.task_id +
                            "' model '" + c.model_id + "' at line " +
                            std::to_string(line) +
                            " (use sample_index to keep several samples)");
    }
    if (dataset != nullptr && dataset->find(c.task_id) == nullptr) {
      c.unknown_task = true;
      out.warnings.push_back("line " + std::to_string(line) +
                             ": completion references unknown task_id '" +
                             c.task_id + "'");
    }
    out.items.push_back(std::move(c));
  });
  return out;
}

std::string completions_to_jsonl(const std::vector<Completion>& completions) {
  std::vector<OrderedJson> records;
  records.reserve(completions.size());
  for (const auto& c : completions) records.push_back(completion_to_json(c));
  return to_jsonl(records);
}

}  // namespace hallucheck
