#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "hallucheck/aggregate.hpp"
#include "hallucheck/bench_builder.hpp"

namespace hallucheck {

/// Whether a stray label of another subcategory counts toward a sample's
/// indicator. `kTarget` keeps the rate specific to the sample's target.
enum class IndicatorMode { kTarget, kAny };
enum class Weighting { kSamples, kUniform };

IndicatorMode indicator_mode_from_string(std::string_view s);
Weighting weighting_from_string(std::string_view s);
std::string_view to_string(IndicatorMode m);
std::string_view to_string(Weighting w);

/// 1 when the profile shows the target subcategory at least once (any
/// label at all under kAny), else 0.
int indicator(const SampleProfile& profile, Subcategory target,
              IndicatorMode mode = IndicatorMode::kTarget);

/// Mean of 0/1 indicators. Throws ReportError on an empty list.
double hallucination_rate(std::span<const int> indicators);

struct HRCell {
  std::string model_id;
  Subcategory subcategory = Subcategory::kLogicDeviation;
  int hallucinated_samples = 0;
  int total_samples = 0;

  double rate() const;  // full precision, in [0, 1]
  bool operator==(const HRCell&) const = default;
};

/// Input to render_report: a percentage and the weight (sample count) it
/// carries in the averages. Evaluation produces these from HRCells;
/// externally computed tables can be fed in directly.
struct RateCell {
  std::string model_id;
  Subcategory subcategory = Subcategory::kLogicDeviation;
  double hr_percent = 0.0;
  double weight = 0.0;
};

RateCell to_rate_cell(const HRCell& cell);

struct ModelRow {
  std::string model_id;
  std::array<double, kSubcategoryCount> hr_percent{};
  std::array<double, kSubcategoryCount> weight{};
  std::array<double, kCategoryCount> category_avg{};  // per chosen weighting
  double overall = 0.0;
  std::array<double, kCategoryCount> category_uniform{};
  double overall_uniform = 0.0;
};

struct HRReport {
  Weighting weighting = Weighting::kSamples;
  std::vector<ModelRow> rows;  // overall ascending, then model_id
};

/// Computes category and overall averages. Every model needs all eight
/// subcategories, else ReportError. Under sample weighting a category
/// average is sum(weight * hr) / sum(weight).
HRReport render_report(const std::vector<RateCell>& cells,
                       Weighting weighting = Weighting::kSamples);

std::string report_markdown(const HRReport& report);
std::string report_csv(const HRReport& report);
OrderedJson report_json(const HRReport& report);

/// Off-target labels per (model, target): how often a benchmark sample of
/// one subcategory showed another.
struct CrossHit {
  std::string model_id;
  Subcategory target = Subcategory::kLogicDeviation;
  Subcategory observed = Subcategory::kLogicDeviation;
  int samples = 0;
};

struct Evaluation {
  IndicatorMode mode = IndicatorMode::kTarget;
  std::vector<HRCell> cells;  // ordered by model_id, then subcategory
  std::vector<CrossHit> cross_hits;
  std::vector<std::string> warnings;
};

/// Scores every model that has profiles for benchmark tasks. A benchmark
/// sample without a profile for a model counts as not evaluated and is
/// reported in `warnings`.
Evaluation evaluate(const BenchmarkManifest& manifest,
                    const std::vector<SampleProfile>& profiles,
                    IndicatorMode mode = IndicatorMode::kTarget);

OrderedJson evaluation_to_json(const Evaluation& e);
Evaluation evaluation_from_json(const Json& j);
std::vector<RateCell> rate_cells(const Evaluation& e);

}  // namespace hallucheck
