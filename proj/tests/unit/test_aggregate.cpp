#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "hallucheck/aggregate.hpp"
#include "hallucheck/errors.hpp"
#include "synthetic.hpp"

namespace hallucheck {
namespace {

using testing::outcome_with;

StateRecord executed(std::string task, std::string model, int test, int tests,
                     ExecutionStatus s, std::string exc = {}) {
  StateRecord r;
  r.task_id = std::move(task);
  r.model_id = std::move(model);
  r.test_index = test;
  r.test_count = tests;
  r.outcome = outcome_with(s, std::move(exc));
  r.classification = classify(r.verdict, &*r.outcome, ClassificationTable::defaults());
  return r;
}

StateRecord degenerate(std::string task, std::string model, int tests) {
  StateRecord r;
  r.task_id = std::move(task);
  r.model_id = std::move(model);
  r.test_count = tests;
  r.verdict = {DegenerationKind::kInfiniteEnumeration, "f(_)", 1.0};
  r.classification = classify(r.verdict, nullptr, ClassificationTable::defaults());
  return r;
}

SampleProfile profile_with(std::string task, std::vector<Subcategory> subs,
                           std::string model = "m") {
  SampleProfile p;
  p.task_id = std::move(task);
  p.model_id = std::move(model);
  for (auto s : subs) p.labels.push_back(HallucinationLabel::of(s, "x"));
  p.test_count = static_cast<int>(subs.size());
  return p;
}

TEST(BuildProfiles, SpecExamples) {
  std::vector<StateRecord> recs = {
      executed("a", "m", 0, 4, ExecutionStatus::kPass),
      executed("a", "m", 1, 4, ExecutionStatus::kPass),
      executed("a", "m", 2, 4, ExecutionStatus::kRuntimeFailure, "NameError"),
      executed("a", "m", 3, 4, ExecutionStatus::kRuntimeFailure, "NameError"),
      degenerate("b", "m", 3),
      executed("c", "m", 0, 2, ExecutionStatus::kPass),
      executed("c", "m", 1, 2, ExecutionStatus::kPass),
  };
  auto profiles = build_profiles(recs);
  ASSERT_EQ(profiles.size(), 3u);

  EXPECT_EQ(profiles[0].count(Subcategory::kIdentity), 2);
  EXPECT_EQ(profiles[0].labels.size(), 2u);
  EXPECT_EQ(profiles[0].pass_count, 2);
  EXPECT_EQ(profiles[0].test_count, 4);

  EXPECT_TRUE(profiles[1].degenerate);
  EXPECT_EQ(profiles[1].labels.size(), 1u);
  EXPECT_EQ(profiles[1].count(Subcategory::kLogicBreakdown), 1);
  EXPECT_EQ(profiles[1].pass_count, 0);
  EXPECT_EQ(profiles[1].test_count, 3);

  EXPECT_TRUE(profiles[2].labels.empty());
  EXPECT_EQ(profiles[2].pass_count, profiles[2].test_count);
}

TEST(BuildProfiles, ConservesExecutedCounts) {
  auto recs = testing::synthetic_records(40, 3, 11);
  for (const auto& p : build_profiles(recs)) {
    if (p.degenerate) continue;
    EXPECT_EQ(static_cast<int>(p.labels.size()) + p.pass_count + p.fault_count +
                  p.unmapped_count,
              p.test_count);
  }
}

TEST(BuildProfiles, PermutationInvariant) {
  auto recs = testing::synthetic_records(30, 3, 5);
  auto expected = build_profiles(recs);
  std::mt19937 rng(99);
  for (int i = 0; i < 5; ++i) {
    std::shuffle(recs.begin(), recs.end(), rng);
    EXPECT_EQ(build_profiles(recs), expected);
  }
}

TEST(FrequencyList, SpecExample) {
  SampleProfile p;
  p.task_id = "a";
  p.model_id = "m";
  for (int i = 0; i < 3; ++i) p.labels.push_back(HallucinationLabel::of(Subcategory::kDataCompliance, "TypeError"));
  p.labels.push_back(HallucinationLabel::of(Subcategory::kIdentity, "NameError"));
  auto list = frequency_list({p}, Granularity::kSubcategory);
  ASSERT_EQ(list.size(), 2u);
  EXPECT_EQ(list[0], (FrequencyEntry{"DataCompliance", 3, 0.75}));
  EXPECT_EQ(list[1], (FrequencyEntry{"Identity", 1, 0.25}));

  auto raw = frequency_list({p}, Granularity::kRawCause);
  EXPECT_EQ(raw[0].name, "TypeError");
  EXPECT_EQ(raw[1].name, "NameError");
}

TEST(FrequencyList, EmptyLabelsGiveEmptyList) {
  SampleProfile p;
  p.task_id = "a";
  p.pass_count = p.test_count = 3;
  EXPECT_TRUE(frequency_list({p}, Granularity::kSubcategory).empty());
  EXPECT_TRUE(frequency_list({}, Granularity::kRawCause).empty());
}

TEST(FrequencyList, MatchesBruteForceRecount) {
  for (unsigned seed : {1u, 2u, 3u, 4u}) {
    auto recs = testing::synthetic_records(60, 5, seed);
    auto profiles = build_profiles(recs);
    for (bool raw : {false, true}) {
      auto expected = testing::brute_counts(recs, raw);
      auto list = frequency_list(profiles, raw ? Granularity::kRawCause : Granularity::kSubcategory);
      ASSERT_EQ(list.size(), expected.size());
      long total = 0;
      for (const auto& [k, v] : expected) total += v;
      double share_sum = 0;
      for (std::size_t i = 0; i < list.size(); ++i) {
        EXPECT_EQ(list[i].count, expected.at(list[i].name));
        EXPECT_EQ(list[i].share, static_cast<double>(list[i].count) / static_cast<double>(total));
        share_sum += list[i].share;
        if (i > 0) {
          EXPECT_TRUE(list[i - 1].count > list[i].count ||
                      (list[i - 1].count == list[i].count && list[i - 1].name < list[i].name));
        }
      }
      EXPECT_NEAR(share_sum, 1.0, 1e-9);
    }
  }
}

TEST(FrequencyList, GroupingsConserveTotals) {
  auto profiles = build_profiles(testing::synthetic_records(50, 4, 21));
  auto total = [](const FrequencyList& l) {
    std::int64_t n = 0;
    for (const auto& e : l) n += e.count;
    return n;
  };
  EXPECT_EQ(total(frequency_list(profiles, Granularity::kSubcategory)),
            total(frequency_list(profiles, Granularity::kRawCause)));
}

TEST(FrequencyCounter, MergeIsOrderIndependent) {
  auto profiles = build_profiles(testing::synthetic_records(40, 3, 8));
  FrequencyCounter whole(Granularity::kSubcategory);
  for (const auto& p : profiles) whole.add(p);
  // Per-model partial counts merged in reverse.
  std::map<std::string, FrequencyCounter> parts;
  for (const auto& p : profiles) {
    parts.try_emplace(p.model_id, Granularity::kSubcategory).first->second.add(p);
  }
  FrequencyCounter merged(Granularity::kSubcategory);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) merged.merge(it->second);
  EXPECT_EQ(merged.finish(), whole.finish());
  EXPECT_THROW(merged.merge(FrequencyCounter(Granularity::kRawCause)), std::invalid_argument);
}

TEST(Cooccurrence, SpecExample) {
  auto m = cooccurrence({profile_with("A", {Subcategory::kIdentity}),
                         profile_with("B", {Subcategory::kIdentity, Subcategory::kLogicDeviation}),
                         profile_with("C", {})});
  EXPECT_DOUBLE_EQ(m.cross_task_rate, 0.5);
  EXPECT_EQ(m.hallucinating_tasks, 2);
  EXPECT_EQ(m.counts[index_of(Subcategory::kIdentity)][index_of(Subcategory::kIdentity)], 2);
  EXPECT_EQ(m.counts[index_of(Subcategory::kIdentity)][index_of(Subcategory::kLogicDeviation)], 1);
  EXPECT_EQ(m.counts[index_of(Subcategory::kLogicDeviation)][index_of(Subcategory::kIdentity)], 1);
}

TEST(Cooccurrence, SingleLabelTasksHaveNoOffDiagonal) {
  auto m = cooccurrence({profile_with("A", {Subcategory::kIdentity, Subcategory::kIdentity}),
                         profile_with("B", {Subcategory::kStructureAccess})});
  EXPECT_EQ(m.cross_task_rate, 0.0);
  for (int a = 0; a < 8; ++a) {
    for (int b = 0; b < 8; ++b) {
      if (a != b) EXPECT_EQ(m.counts[a][b], 0);
    }
  }
}

TEST(Cooccurrence, RejectsMixedModels) {
  EXPECT_THROW(cooccurrence({profile_with("A", {}, "x"), profile_with("B", {}, "y")}),
               ValidationError);
}

TEST(Cooccurrence, MatchesBruteForceAndInvariants) {
  auto recs = testing::synthetic_records(50, 3, 17);
  auto profiles = build_profiles(recs);
  for (const std::string model : {"model-a", "model-b", "model-c"}) {
    std::vector<SampleProfile> mine;
    for (const auto& p : profiles) {
      if (p.model_id == model) mine.push_back(p);
    }
    auto m = cooccurrence(mine);
    auto sets = testing::brute_task_sets(recs, model);
    int hallucinating = 0, multi = 0;
    std::array<std::array<int, 8>, 8> expected{};
    for (const auto& [task, s] : sets) {
      if (s.empty()) continue;
      ++hallucinating;
      if (s.size() > 1) ++multi;
      for (int a : s) {
        for (int b : s) ++expected[a][b];
      }
    }
    EXPECT_EQ(m.hallucinating_tasks, hallucinating);
    EXPECT_EQ(m.multi_label_tasks, multi);
    EXPECT_EQ(m.cross_task_rate, hallucinating ? static_cast<double>(multi) / hallucinating : 0.0);
    for (int a = 0; a < 8; ++a) {
      for (int b = 0; b < 8; ++b) {
        EXPECT_EQ(m.counts[a][b], expected[a][b]);
        EXPECT_EQ(m.counts[a][b], m.counts[b][a]);
        EXPECT_LE(m.counts[a][b], std::min(m.counts[a][a], m.counts[b][b]));
      }
    }
  }
}

TEST(Format, PercentAndHalfEven) {
  EXPECT_EQ(format_percent(0.0107), "1.07%");
  EXPECT_EQ(format_percent(0.0204), "2.04%");
  EXPECT_EQ(format_percent(0.5), "50.00%");
  EXPECT_EQ(format_fixed2(0.125), "0.12");
  EXPECT_EQ(format_fixed2(0.375), "0.38");
  EXPECT_EQ(format_fixed2(-0.001), "0.00");
  EXPECT_EQ(format_fixed2(33.04), "33.04");
}

TEST(TopLabels, CountThenOrder) {
  auto p = profile_with("a", {Subcategory::kLogicDeviation, Subcategory::kIdentity,
                              Subcategory::kIdentity, Subcategory::kDataCompliance,
                              Subcategory::kLogicDeviation, Subcategory::kExternalSource});
  std::sort(p.labels.begin(), p.labels.end(), [](const auto& a, const auto& b) {
    return a.subcategory < b.subcategory;
  });
  auto top = top_labels(p, 3);
  ASSERT_EQ(top.size(), 3u);
  EXPECT_EQ(top[0], std::make_pair(Subcategory::kIdentity, 2));
  EXPECT_EQ(top[1], std::make_pair(Subcategory::kLogicDeviation, 2));
  EXPECT_EQ(top[2], std::make_pair(Subcategory::kDataCompliance, 1));
}

TEST(Serialization, StatesAndProfilesRoundTrip) {
  auto recs = testing::synthetic_records(10, 2, 3);
  for (const auto& r : recs) {
    auto back = state_from_json(Json::parse(state_to_json(r, false).dump()));
    EXPECT_EQ(back.task_id, r.task_id);
    EXPECT_EQ(back.test_index, r.test_index);
    EXPECT_EQ(back.classification, r.classification);
    EXPECT_EQ(back.verdict.kind, r.verdict.kind);
  }
  for (const auto& p : build_profiles(recs)) {
    EXPECT_EQ(profile_from_json(Json::parse(profile_to_json(p, 3).dump())), p);
  }
}

}  // namespace
}  // namespace hallucheck
