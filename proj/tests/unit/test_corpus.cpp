#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "hallucheck/corpus.hpp"
#include "hallucheck/errors.hpp"

namespace hallucheck {
namespace {

namespace fs = std::filesystem;

class TempFiles : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("hallucheck-corpus-" +
            std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    auto p = dir_ / name;
    std::ofstream(p) << text;
    return p;
  }

  fs::path dir_;
};

constexpr const char* kTwoTasks =
    R"j({"task_id": "b", "question": "double", "test_cases": [{"input": "3", "expected_output": "6"}]})j"
    "\n"
    R"j({"task_id": "a", "question": "echo", "test_cases": [{"input": "x", "expected_output": "x"}, {"input": "", "expected_output": ""}], "limits": {"wall_time_ms": 2000, "memory_bytes": 67108864}})j"
    "\n";

TEST_F(TempFiles, LoadsTasksInFileOrder) {
  auto ds = load_dataset(write("tasks.jsonl", kTwoTasks));
  ASSERT_EQ(ds.tasks.size(), 2u);
  EXPECT_EQ(ds.dataset_id, "tasks");
  EXPECT_EQ(ds.tasks[0].task_id, "b");
  EXPECT_EQ(ds.tasks[1].task_id, "a");
  EXPECT_EQ(ds.tasks[0].limits, ResourceLimits{});
  EXPECT_EQ(ds.tasks[1].limits.wall_time_ms, 2000);
  EXPECT_EQ(ds.tasks[1].test_cases[1].expected_output, "");
}

TEST_F(TempFiles, EmptyTestCasesNamesTheTask) {
  auto p = write("t.jsonl", R"j({"task_id": "lonely", "question": "", "test_cases": []})j" "\n");
  try {
    load_dataset(p);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("lonely"), std::string::npos);
  }
}

TEST_F(TempFiles, DuplicateTaskIdRejected) {
  auto line = std::string(R"j({"task_id": "a", "test_cases": [{"input": "", "expected_output": ""}]})j") + "\n";
  EXPECT_THROW(load_dataset(write("t.jsonl", line + line)), ValidationError);
}

TEST_F(TempFiles, MalformedLineReportsLineNumber) {
  auto p = write("t.jsonl", std::string(kTwoTasks) + "\n{not json\n");
  try {
    load_dataset(p);
    FAIL() << "expected IngestError";
  } catch (const IngestError& e) {
    EXPECT_EQ(e.line(), 4u);
  }
}

TEST_F(TempFiles, MissingExpectedOutputIsNotEmptyOutput) {
  auto p = write("t.jsonl",
                 R"j({"task_id": "a", "test_cases": [{"input": "1"}]})j" "\n");
  EXPECT_THROW(load_dataset(p), IngestError);
}

TEST_F(TempFiles, LimitsBelowFloorRejected) {
  auto p = write("t.jsonl",
                 R"j({"task_id": "a", "test_cases": [{"input": "", "expected_output": ""}], "limits": {"wall_time_ms": 50}})j" "\n");
  EXPECT_THROW(load_dataset(p), ValidationError);
  EXPECT_THROW((ResourceLimits{1000, 1 << 20}.validate()), ValidationError);
  EXPECT_NO_THROW((ResourceLimits{100, 16LL << 20}.validate()));
}

TEST_F(TempFiles, RoundTripIsIdentical) {
  auto first = load_dataset(write("tasks.jsonl", kTwoTasks));
  save_dataset(first, dir_ / "again" / "tasks.jsonl");
  auto second = load_dataset(dir_ / "again" / "tasks.jsonl");
  EXPECT_EQ(first, second);
  // Identical bytes give identical values.
  EXPECT_EQ(load_dataset(dir_ / "again" / "tasks.jsonl"), second);
}

TEST_F(TempFiles, AppsStyleRecordKeepsEveryIoPair) {
  const fs::path record = fs::path(HALLUCHECK_FIXTURES) / "apps" / "apps-4021.json";
  const fs::path script = fs::path(HALLUCHECK_SOURCE_DIR) / "tools" / "apps_to_jsonl.py";
  auto out = dir_ / "apps.jsonl";
  auto cmd = "python3 " + script.string() + " " + out.string() + " " + record.string();
  ASSERT_EQ(std::system(cmd.c_str()), 0);

  // Count pairs straight from the source record.
  std::ifstream in(record);
  auto raw = Json::parse(in);
  auto io = Json::parse(raw["input_output"].get<std::string>());
  const auto pairs = std::min(io["inputs"].size(), io["outputs"].size());

  auto ds = load_dataset(out);
  ASSERT_EQ(ds.tasks.size(), 1u);
  EXPECT_EQ(ds.tasks[0].task_id, "apps-4021");
  EXPECT_EQ(ds.tasks[0].test_cases.size(), pairs);
  EXPECT_EQ(pairs, 5u);
}

TEST_F(TempFiles, LoadsCompletionsAndExtractsCode) {
  auto p = write("c.jsonl",
                 R"j({"task_id": "a", "model_id": "m", "raw_response": "Here:\n```python\nprint(1)\n```\n"})j" "\n"
                 R"j({"task_id": "b", "model_id": "m", "raw_response": "print(2)"})j" "\n"
                 R"j({"task_id": "c", "model_id": "m", "raw_response": "x", "source_code": "print(3)"})j" "\n");
  auto loaded = load_completions(p);
  ASSERT_EQ(loaded.items.size(), 3u);
  EXPECT_EQ(loaded.items[0].source_code, "print(1)");
  EXPECT_EQ(loaded.items[1].source_code, "print(2)");
  EXPECT_EQ(loaded.items[2].source_code, "print(3)");
  EXPECT_TRUE(loaded.warnings.empty());
}

TEST_F(TempFiles, UnknownTaskIsFlaggedNotDropped) {
  auto ds = load_dataset(write("tasks.jsonl", kTwoTasks));
  auto p = write("c.jsonl",
                 R"j({"task_id": "a", "model_id": "m", "raw_response": "print(1)"})j" "\n"
                 R"j({"task_id": "zzz", "model_id": "m", "raw_response": "print(1)"})j" "\n");
  auto loaded = load_completions(p, &ds);
  ASSERT_EQ(loaded.items.size(), 2u);
  EXPECT_FALSE(loaded.items[0].unknown_task);
  EXPECT_TRUE(loaded.items[1].unknown_task);
  ASSERT_EQ(loaded.warnings.size(), 1u);
  EXPECT_NE(loaded.warnings[0].find("zzz"), std::string::npos);
}

TEST_F(TempFiles, RepeatedPairsNeedSampleIndex) {
  auto dup = std::string(R"j({"task_id": "a", "model_id": "m", "raw_response": "1"})j") + "\n";
  EXPECT_THROW(load_completions(write("c.jsonl", dup + dup)), ValidationError);
  auto indexed =
      std::string(R"j({"task_id": "a", "model_id": "m", "sample_index": 0, "raw_response": "1"})j") + "\n" +
      R"j({"task_id": "a", "model_id": "m", "sample_index": 1, "raw_response": "2"})j" + "\n";
  EXPECT_EQ(load_completions(write("c2.jsonl", indexed)).items.size(), 2u);
}

TEST_F(TempFiles, MalformedCompletionLine) {
  auto p = write("c.jsonl", R"j({"task_id": "a", "model_id": "m", "raw_response": "1"})j" "\n[1,2\n");
  try {
    load_completions(p);
    FAIL();
  } catch (const IngestError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

}  // namespace
}  // namespace hallucheck
