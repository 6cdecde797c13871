#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "hallucheck/bench_builder.hpp"
#include "hallucheck/errors.hpp"
#include "synthetic.hpp"

namespace hallucheck {
namespace {

namespace fs = std::filesystem;

SampleProfile identity_profile(std::string task, std::string model, int n) {
  SampleProfile p;
  p.task_id = std::move(task);
  p.model_id = std::move(model);
  for (int i = 0; i < n; ++i) p.labels.push_back(HallucinationLabel::of(Subcategory::kIdentity, "NameError"));
  p.test_count = std::max(n, 1);
  p.pass_count = p.test_count - n;
  return p;
}

TEST(Build, StrictlyExceedsThreshold) {
  // Cross-model Identity frequencies A:5, B:2, C:0.
  std::vector<SampleProfile> profiles = {
      identity_profile("A", "m1", 3), identity_profile("A", "m2", 2),
      identity_profile("B", "m1", 1), identity_profile("B", "m2", 1),
      identity_profile("C", "m1", 0), identity_profile("C", "m2", 0),
  };
  auto m = build_benchmark(profiles, 2);
  const auto& ids = m.of(Subcategory::kIdentity);
  ASSERT_EQ(ids.size(), 1u);
  EXPECT_EQ(ids[0].task_id, "A");
  EXPECT_EQ(ids[0].observed_frequency, 5);
  EXPECT_EQ(ids[0].contributing_models, (std::vector<std::string>{"m1", "m2"}));
  EXPECT_EQ(ids[0].per_model_frequency.at("m1"), 3);
  EXPECT_EQ(m.entry_count(), 1u);
  EXPECT_TRUE(m.warnings.empty());
}

TEST(Build, ThresholdMustBePositive) {
  EXPECT_THROW(build_benchmark({}, 0), ConfigError);
  EXPECT_THROW(build_benchmark({}, -3), ConfigError);
}

TEST(Build, EmptyProfilesWarn) {
  auto m = build_benchmark({}, 2);
  EXPECT_TRUE(m.empty());
  EXPECT_EQ(m.warnings.size(), 1u);
}

TEST(Build, SingleModelWarns) {
  auto m = build_benchmark({identity_profile("A", "m1", 4)}, 2);
  EXPECT_EQ(m.of(Subcategory::kIdentity).size(), 1u);
  EXPECT_EQ(m.warnings.size(), 1u);
}

TEST(Build, MatchesBruteForceOracleAndIsMonotone) {
  for (unsigned seed : {3u, 4u, 5u}) {
    auto recs = testing::synthetic_records(50, 3, seed);
    auto profiles = build_profiles(recs);
    std::size_t previous = SIZE_MAX;
    for (int k = 1; k <= 6; ++k) {
      auto m = build_benchmark(profiles, k);
      for (auto s : kAllSubcategories) {
        auto expected = testing::brute_inclusion(recs, s, k);
        const auto& got = m.of(s);
        ASSERT_EQ(got.size(), expected.size()) << to_string(s) << " k=" << k;
        for (std::size_t i = 0; i < got.size(); ++i) {
          EXPECT_EQ(got[i].observed_frequency, expected[i].first);
          EXPECT_EQ(got[i].task_id, expected[i].second);
        }
        if (k > 1) {
          auto looser = build_benchmark(profiles, k - 1);
          for (const auto& e : got) {
            auto& l = looser.of(s);
            EXPECT_TRUE(std::any_of(l.begin(), l.end(),
                                    [&](const auto& x) { return x.task_id == e.task_id; }));
          }
        }
      }
      EXPECT_LE(m.entry_count(), previous);
      previous = m.entry_count();
    }
  }
}

TEST(Build, InputOrderDoesNotMatter) {
  auto profiles = build_profiles(testing::synthetic_records(40, 3, 12));
  auto expected = manifest_to_jsonl(build_benchmark(profiles, 2, {"r1"}));
  std::mt19937 rng(1);
  for (int i = 0; i < 4; ++i) {
    std::shuffle(profiles.begin(), profiles.end(), rng);
    EXPECT_EQ(manifest_to_jsonl(build_benchmark(profiles, 2, {"r1"})), expected);
  }
}

TEST(Additivity, CategoryEqualsSumOfSubcategories) {
  std::mt19937 rng(2024);
  for (int round = 0; round < 40; ++round) {
    auto recs = testing::synthetic_records(10 + static_cast<int>(rng() % 60),
                                           2 + static_cast<int>(rng() % 4), rng());
    auto m = build_benchmark(build_profiles(recs), 1 + static_cast<int>(rng() % 3));
    // Recount from the exported rows rather than the accessors.
    auto lines = manifest_to_jsonl(m);
    auto summary = Json::parse(lines.substr(0, lines.find('\n')));
    std::map<std::string, std::pair<int, int>> sums;
    for (const auto& row : summary["rows"]) {
      auto& [tasks, samples] = sums[row["category"].get<std::string>()];
      tasks += row["subcategory_tasks"].get<int>();
      samples += row["subcategory_samples"].get<int>();
    }
    for (const auto& row : summary["rows"]) {
      const auto& [tasks, samples] = sums[row["category"].get<std::string>()];
      EXPECT_EQ(row["category_tasks"].get<int>(), tasks);
      EXPECT_EQ(row["category_samples"].get<int>(), samples);
    }
    int entry_samples = 0;
    for (const auto& group : m.entries) {
      for (const auto& e : group) entry_samples += e.test_count;
    }
    int category_samples = 0;
    for (auto c : kAllCategories) category_samples += m.sample_count(c);
    EXPECT_EQ(category_samples, entry_samples);
  }
}

class Export : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / "hallucheck-bench-test";
    fs::remove_all(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

TEST_F(Export, EmptyManifestHasZeroSummary) {
  auto m = build_benchmark({}, 2);
  auto text = manifest_to_jsonl(m);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 1);
  auto summary = Json::parse(text);
  EXPECT_EQ(summary["record"], "summary");
  EXPECT_EQ(summary["threshold_k"], 2);
  ASSERT_EQ(summary["rows"].size(), 8u);
  for (const auto& row : summary["rows"]) {
    EXPECT_EQ(row["subcategory_tasks"], 0);
    EXPECT_EQ(row["category_samples"], 0);
  }
}

TEST_F(Export, TwoEntriesGiveThreeLines) {
  std::vector<SampleProfile> profiles = {identity_profile("A", "m1", 3),
                                         identity_profile("B", "m1", 4),
                                         identity_profile("B", "m2", 1)};
  auto m = build_benchmark(profiles, 2, {"run-1"});
  ASSERT_EQ(m.entry_count(), 2u);
  auto text = manifest_to_jsonl(m);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 3);

  export_manifest(m, dir_ / "benchmark.jsonl");
  auto back = manifest_from_jsonl_file(dir_ / "benchmark.jsonl");
  EXPECT_EQ(back, m);
  EXPECT_EQ(manifest_to_jsonl(back), text);
}

TEST_F(Export, RoundTripOnSyntheticCorpus) {
  auto m = build_benchmark(build_profiles(testing::synthetic_records(50, 3, 9)), 2, {"a", "b"});
  export_manifest(m, dir_ / "b.jsonl");
  EXPECT_EQ(manifest_from_jsonl_file(dir_ / "b.jsonl"), m);
}

TEST(SummaryCsv, HasTableTwoColumns) {
  auto csv = manifest_summary_csv(build_benchmark({}, 2));
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "Category,#Tasks,#Samples,Sub-Category,#Tasks,#Samples");
  EXPECT_NE(csv.find("Mapping,0,0,Data Compliance,0,0"), std::string::npos);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 9);
}

TEST(Overlap, CountsMultiMembership) {
  SampleProfile p = identity_profile("A", "m1", 3);
  for (int i = 0; i < 3; ++i) p.labels.push_back(HallucinationLabel::of(Subcategory::kLogicDeviation, "output_mismatch"));
  auto m = build_benchmark({p, identity_profile("B", "m1", 3)}, 2);
  EXPECT_DOUBLE_EQ(m.overlap_rate(), 0.5);
}

}  // namespace
}  // namespace hallucheck
