#include "hallucheck/evalreport.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "hallucheck/errors.hpp"

namespace hallucheck {

IndicatorMode indicator_mode_from_string(std::string_view s) {
  if (s == "target") return IndicatorMode::kTarget;
  if (s == "any") return IndicatorMode::kAny;
  throw ConfigError("indicator must be 'target' or 'any', got '" +
                    std::string(s) + "'");
}

Weighting weighting_from_string(std::string_view s) {
  if (s == "samples") return Weighting::kSamples;
  if (s == "uniform") return Weighting::kUniform;
  throw ConfigError("weighting must be 'samples' or 'uniform', got '" +
                    std::string(s) + "'");
}

std::string_view to_string(IndicatorMode m) {
  return m == IndicatorMode::kTarget ? "target" : "any";
}

std::string_view to_string(Weighting w) {
  return w == Weighting::kSamples ? "samples" : "uniform";
}

int indicator(const SampleProfile& profile, Subcategory target,
              IndicatorMode mode) {
  if (mode == IndicatorMode::kAny) return profile.labels.empty() ? 0 : 1;
  return profile.count(target) > 0 ? 1 : 0;
}

double hallucination_rate(std::span<const int> indicators) {
  if (indicators.empty()) {
    throw ReportError("hallucination rate is undefined for zero samples");
  }
  std::int64_t hits = 0;
  for (int v : indicators) hits += v;
  return static_cast<double>(hits) / static_cast<double>(indicators.size());
}

double HRCell::rate() const {
  if (total_samples <= 0) {
    throw ReportError("no samples for " + model_id + "/" +
                      std::string(to_string(subcategory)));
  }
  return static_cast<double>(hallucinated_samples) /
         static_cast<double>(total_samples);
}

RateCell to_rate_cell(const HRCell& cell) {
  return {cell.model_id, cell.subcategory, 100.0 * cell.rate(),
          static_cast<double>(cell.total_samples)};
}

HRReport render_report(const std::vector<RateCell>& cells, Weighting weighting) {
  std::map<std::string, ModelRow> rows;
  std::map<std::string, std::array<bool, kSubcategoryCount>> seen;
  for (const auto& c : cells) {
    auto& row = rows[c.model_id];
    row.model_id = c.model_id;
    auto& flags = seen[c.model_id];
    if (flags[index_of(c.subcategory)]) {
      throw ReportError("duplicate cell for " + c.model_id + "/" +
                        std::string(to_string(c.subcategory)));
    }
    if (c.weight <= 0.0) {
      throw ReportError("non-positive sample weight for " + c.model_id + "/" +
                        std::string(to_string(c.subcategory)));
    }
    flags[index_of(c.subcategory)] = true;
    row.hr_percent[index_of(c.subcategory)] = c.hr_percent;
    row.weight[index_of(c.subcategory)] = c.weight;
  }
  if (rows.empty()) throw ReportError("no cells to report");

  HRReport report;
  report.weighting = weighting;
  for (auto& [model, row] : rows) {
    for (auto s : kAllSubcategories) {
      if (!seen[model][index_of(s)]) {
        throw ReportError("model " + model + " lacks subcategory " +
                          std::string(to_string(s)));
      }
    }
    double weighted_sum = 0.0, weight_total = 0.0, plain_sum = 0.0;
    for (auto c : kAllCategories) {
      auto [a, b] = subcategories_of(c);
      const auto ia = index_of(a), ib = index_of(b);
      const double ws = row.weight[ia] * row.hr_percent[ia] +
                        row.weight[ib] * row.hr_percent[ib];
      const double wt = row.weight[ia] + row.weight[ib];
      const double uniform = (row.hr_percent[ia] + row.hr_percent[ib]) / 2.0;
      const auto ic = static_cast<std::size_t>(c);
      row.category_uniform[ic] = uniform;
      row.category_avg[ic] = weighting == Weighting::kSamples ? ws / wt : uniform;
      weighted_sum += ws;
      weight_total += wt;
      plain_sum += row.hr_percent[ia] + row.hr_percent[ib];
    }
    row.overall_uniform = plain_sum / static_cast<double>(kSubcategoryCount);
    row.overall = weighting == Weighting::kSamples ? weighted_sum / weight_total
                                                   : row.overall_uniform;
    report.rows.push_back(row);
  }
  std::stable_sort(report.rows.begin(), report.rows.end(),
                   [](const ModelRow& a, const ModelRow& b) {
                     return a.overall < b.overall;
                   });
  return report;
}

std::string report_markdown(const HRReport& report) {
  std::string out = "| Model";
  for (auto c : kAllCategories) {
    for (auto s : subcategories_of(c)) out += " | " + std::string(short_code(s));
    out += " | " + std::string(to_string(c)) + " Avg.";
  }
  out += " | Average | Uniform Avg. |\n|---";
  for (std::size_t i = 0; i < kCategoryCount * 3 + 2; ++i) out += "|---:";
  out += "|\n";
  for (const auto& row : report.rows) {
    out += "| " + row.model_id;
    for (auto c : kAllCategories) {
      for (auto s : subcategories_of(c)) {
        out += " | " + format_fixed2(row.hr_percent[index_of(s)]);
      }
      out += " | " + format_fixed2(row.category_avg[static_cast<std::size_t>(c)]);
    }
    out += " | " + format_fixed2(row.overall) + " | " +
           format_fixed2(row.overall_uniform) + " |\n";
  }
  out += "\nHallucination rates in percent (lower is better); averages are ";
  out += report.weighting == Weighting::kSamples ? "sample-weighted"
                                                 : "unweighted means";
  out += ". \"Uniform Avg.\" is the unweighted mean of the eight subcategories.\n";
  return out;
}

std::string report_csv(const HRReport& report) {
  std::string out = "model";
  for (auto c : kAllCategories) {
    for (auto s : subcategories_of(c)) out += "," + std::string(short_code(s));
    out += "," + std::string(to_string(c)) + "_avg";
  }
  out += ",average,";
  for (auto c : kAllCategories) out += std::string(to_string(c)) + "_uniform_avg,";
  out += "uniform_average,weighting\n";
  for (const auto& row : report.rows) {
    out += row.model_id;
    for (auto c : kAllCategories) {
      for (auto s : subcategories_of(c)) {
        out += "," + format_fixed2(row.hr_percent[index_of(s)]);
      }
      out += "," + format_fixed2(row.category_avg[static_cast<std::size_t>(c)]);
    }
    out += "," + format_fixed2(row.overall) + ",";
    for (auto c : kAllCategories) {
      out += format_fixed2(row.category_uniform[static_cast<std::size_t>(c)]) + ",";
    }
    out += format_fixed2(row.overall_uniform) + "," +
           std::string(to_string(report.weighting)) + "\n";
  }
  return out;
}

OrderedJson report_json(const HRReport& report) {
  OrderedJson j;
  j["weighting"] = to_string(report.weighting);
  j["rows"] = OrderedJson::array();
  for (const auto& row : report.rows) {
    OrderedJson r;
    r["model_id"] = row.model_id;
    OrderedJson subs = OrderedJson::object();
    for (auto s : kAllSubcategories) {
      subs[std::string(to_string(s))] = {
          {"hr_percent", format_fixed2(row.hr_percent[index_of(s)])},
          {"weight", row.weight[index_of(s)]}};
    }
    r["subcategories"] = subs;
    OrderedJson cats = OrderedJson::object();
    for (auto c : kAllCategories) {
      cats[std::string(to_string(c))] = {
          {"avg", format_fixed2(row.category_avg[static_cast<std::size_t>(c)])},
          {"uniform_avg",
           format_fixed2(row.category_uniform[static_cast<std::size_t>(c)])}};
    }
    r["categories"] = cats;
    r["average"] = format_fixed2(row.overall);
    r["uniform_average"] = format_fixed2(row.overall_uniform);
    j["rows"].push_back(r);
  }
  return j;
}

Evaluation evaluate(const BenchmarkManifest& manifest,
                    const std::vector<SampleProfile>& profiles,
                    IndicatorMode mode) {
  if (manifest.empty()) {
    throw ReportError("benchmark manifest has no entries");
  }
  std::map<std::pair<std::string, std::string>, const SampleProfile*> index;
  std::set<std::string> models;
  for (const auto& p : profiles) {
    index[{p.model_id, p.task_id}] = &p;
    models.insert(p.model_id);
  }
  if (models.empty()) throw ReportError("no profiles to evaluate");

  Evaluation eval;
  eval.mode = mode;
  for (const auto& model : models) {
    for (auto target : kAllSubcategories) {
      HRCell cell{model, target, 0, 0};
      std::array<int, kSubcategoryCount> off_target{};
      for (const auto& entry : manifest.of(target)) {
        auto it = index.find({model, entry.task_id});
        if (it == index.end()) {
          eval.warnings.push_back("model " + model + " has no profile for " +
                                  entry.task_id);
          continue;
        }
        const auto& profile = *it->second;
        ++cell.total_samples;
        cell.hallucinated_samples += indicator(profile, target, mode);
        for (auto s : profile.distinct_subcategories()) {
          if (s != target) ++off_target[index_of(s)];
        }
      }
      eval.cells.push_back(cell);
      for (auto s : kAllSubcategories) {
        if (off_target[index_of(s)] > 0) {
          eval.cross_hits.push_back({model, target, s, off_target[index_of(s)]});
        }
      }
    }
  }
  return eval;
}

OrderedJson evaluation_to_json(const Evaluation& e) {
  OrderedJson j;
  j["indicator"] = to_string(e.mode);
  j["cells"] = OrderedJson::array();
  for (const auto& c : e.cells) {
    OrderedJson cell = {{"model_id", c.model_id},
                        {"subcategory", to_string(c.subcategory)},
                        {"hallucinated_samples", c.hallucinated_samples},
                        {"total_samples", c.total_samples}};
    cell["hr_percent"] =
        c.total_samples > 0 ? OrderedJson(format_fixed2(100.0 * c.rate()))
                            : OrderedJson(nullptr);
    j["cells"].push_back(cell);
  }
  j["cross_hits"] = OrderedJson::array();
  for (const auto& h : e.cross_hits) {
    j["cross_hits"].push_back({{"model_id", h.model_id},
                               {"target", to_string(h.target)},
                               {"observed", to_string(h.observed)},
                               {"samples", h.samples}});
  }
  j["warnings"] = e.warnings;
  return j;
}

Evaluation evaluation_from_json(const Json& j) {
  Evaluation e;
  e.mode = indicator_mode_from_string(j.value("indicator", "target"));
  for (const auto& c : j.at("cells")) {
    e.cells.push_back(
        {c.at("model_id").get<std::string>(),
         subcategory_from_string(c.at("subcategory").get<std::string>()),
         c.at("hallucinated_samples").get<int>(), c.at("total_samples").get<int>()});
  }
  for (const auto& h : j.value("cross_hits", Json::array())) {
    e.cross_hits.push_back(
        {h.at("model_id").get<std::string>(),
         subcategory_from_string(h.at("target").get<std::string>()),
         subcategory_from_string(h.at("observed").get<std::string>()),
         h.at("samples").get<int>()});
  }
  e.warnings = j.value("warnings", std::vector<std::string>{});
  return e;
}

std::vector<RateCell> rate_cells(const Evaluation& e) {
  std::vector<RateCell> out;
  for (const auto& c : e.cells) {
    if (c.total_samples > 0) out.push_back(to_rate_cell(c));
  }
  return out;
}

}  // namespace hallucheck
