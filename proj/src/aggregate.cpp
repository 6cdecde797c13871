#include "hallucheck/aggregate.hpp"

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <cstdio>
#include <tuple>

#include "hallucheck/errors.hpp"

namespace hallucheck {

namespace {

bool label_less(const HallucinationLabel& a, const HallucinationLabel& b) {
  return std::tie(a.subcategory, a.cause) < std::tie(b.subcategory, b.cause);
}

}  // namespace

OrderedJson state_to_json(const StateRecord& r, bool with_measurements) {
  OrderedJson j;
  j["task_id"] = r.task_id;
  j["model_id"] = r.model_id;
  if (r.sample_index) j["sample_index"] = *r.sample_index;
  j["test_index"] = r.test_index ? OrderedJson(*r.test_index) : OrderedJson(nullptr);
  j["test_count"] = r.test_count;
  j["degeneration"] = {{"kind", to_string(r.verdict.kind)},
                       {"evidence", r.verdict.evidence},
                       {"score", r.verdict.score}};
  j["outcome"] = r.outcome ? outcome_to_json(*r.outcome, with_measurements)
                           : OrderedJson(nullptr);
  j["classification"] = to_string(r.classification.kind);
  if (r.classification.label) {
    j["category"] = to_string(r.classification.label->category);
    j["subcategory"] = to_string(r.classification.label->subcategory);
  }
  j["cause"] = r.classification.cause;
  return j;
}

StateRecord state_from_json(const Json& j) {
  StateRecord r;
  r.task_id = j.at("task_id").get<std::string>();
  r.model_id = j.at("model_id").get<std::string>();
  if (j.contains("sample_index") && !j["sample_index"].is_null()) {
    r.sample_index = j["sample_index"].get<std::int64_t>();
  }
  if (j.contains("test_index") && !j["test_index"].is_null()) {
    r.test_index = j["test_index"].get<int>();
  }
  r.test_count = j.value("test_count", 0);
  if (j.contains("degeneration") && j["degeneration"].is_object()) {
    const auto& d = j["degeneration"];
    r.verdict.kind = degeneration_kind_from_string(d.value("kind", "None"));
    r.verdict.evidence = d.value("evidence", "");
    r.verdict.score = d.value("score", 0.0);
  }
  if (j.contains("outcome") && !j["outcome"].is_null()) {
    r.outcome = outcome_from_json(j["outcome"]);
  }
  r.classification.kind =
      classification_kind_from_string(j.at("classification").get<std::string>());
  r.classification.cause = j.value("cause", "");
  if (r.classification.kind == ClassificationKind::kHallucination) {
    r.classification.label = HallucinationLabel::of(
        subcategory_from_string(j.at("subcategory").get<std::string>()),
        r.classification.cause);
  }
  return r;
}

std::vector<StateRecord> load_states(const std::filesystem::path& path) {
  std::vector<StateRecord> out;
  for_each_jsonl(path, [&](const Json& j, std::size_t) {
    out.push_back(state_from_json(j));
  });
  return out;
}

int SampleProfile::count(Subcategory s) const {
  return static_cast<int>(std::count_if(
      labels.begin(), labels.end(),
      [s](const HallucinationLabel& l) { return l.subcategory == s; }));
}

std::set<Subcategory> SampleProfile::distinct_subcategories() const {
  std::set<Subcategory> out;
  for (const auto& l : labels) out.insert(l.subcategory);
  return out;
}

std::vector<std::pair<Subcategory, int>> top_labels(const SampleProfile& p,
                                                    int m) {
  std::vector<std::pair<Subcategory, int>> counts;
  for (auto s : kAllSubcategories) {
    if (int c = p.count(s); c > 0) counts.emplace_back(s, c);
  }
  std::stable_sort(counts.begin(), counts.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (m >= 0 && counts.size() > static_cast<std::size_t>(m)) {
    counts.resize(static_cast<std::size_t>(m));
  }
  return counts;
}

OrderedJson profile_to_json(const SampleProfile& p, int top_m) {
  OrderedJson j;
  j["task_id"] = p.task_id;
  j["model_id"] = p.model_id;
  // Run-length encoding of the sorted label multiset.
  OrderedJson labels = OrderedJson::array();
  for (std::size_t i = 0; i < p.labels.size();) {
    std::size_t k = i;
    while (k < p.labels.size() && p.labels[k] == p.labels[i]) ++k;
    labels.push_back({{"subcategory", to_string(p.labels[i].subcategory)},
                      {"cause", p.labels[i].cause},
                      {"count", k - i}});
    i = k;
  }
  j["labels"] = labels;
  OrderedJson top = OrderedJson::array();
  for (auto [s, c] : top_labels(p, top_m)) {
    top.push_back({{"subcategory", to_string(s)}, {"count", c}});
  }
  j["top"] = top;
  j["pass_count"] = p.pass_count;
  j["fault_count"] = p.fault_count;
  j["unmapped_count"] = p.unmapped_count;
  j["unmapped_causes"] = p.unmapped_causes;
  j["test_count"] = p.test_count;
  j["degenerate"] = p.degenerate;
  return j;
}

SampleProfile profile_from_json(const Json& j) {
  SampleProfile p;
  p.task_id = j.at("task_id").get<std::string>();
  p.model_id = j.at("model_id").get<std::string>();
  for (const auto& l : j.at("labels")) {
    auto label = HallucinationLabel::of(
        subcategory_from_string(l.at("subcategory").get<std::string>()),
        l.value("cause", ""));
    int n = l.value("count", 1);
    for (int i = 0; i < n; ++i) p.labels.push_back(label);
  }
  std::sort(p.labels.begin(), p.labels.end(), label_less);
  p.pass_count = j.value("pass_count", 0);
  p.fault_count = j.value("fault_count", 0);
  p.unmapped_count = j.value("unmapped_count", 0);
  p.unmapped_causes = j.value("unmapped_causes", std::vector<std::string>{});
  p.test_count = j.value("test_count", 0);
  p.degenerate = j.value("degenerate", false);
  return p;
}

std::vector<SampleProfile> load_profiles(const std::filesystem::path& path) {
  std::vector<SampleProfile> out;
  for_each_jsonl(path, [&](const Json& j, std::size_t) {
    out.push_back(profile_from_json(j));
  });
  return out;
}

std::vector<SampleProfile> build_profiles(const std::vector<StateRecord>& records) {
  std::map<std::pair<std::string, std::string>, SampleProfile> grouped;
  for (const auto& r : records) {
    auto& p = grouped[{r.task_id, r.model_id}];
    p.task_id = r.task_id;
    p.model_id = r.model_id;
    if (!r.test_index) {
      // Pre-execution verdict: the task's tests were all skipped.
      p.degenerate = true;
      p.test_count += r.test_count;
    } else {
      ++p.test_count;
    }
    switch (r.classification.kind) {
      case ClassificationKind::kPass:
        ++p.pass_count;
        break;
      case ClassificationKind::kHallucination:
        p.labels.push_back(*r.classification.label);
        break;
      case ClassificationKind::kUnmapped:
        ++p.unmapped_count;
        p.unmapped_causes.push_back(r.classification.cause);
        break;
      case ClassificationKind::kHarnessFault:
        ++p.fault_count;
        break;
    }
  }
  std::vector<SampleProfile> out;
  out.reserve(grouped.size());
  for (auto& [key, p] : grouped) {
    std::sort(p.labels.begin(), p.labels.end(), label_less);
    std::sort(p.unmapped_causes.begin(), p.unmapped_causes.end());
    out.push_back(std::move(p));
  }
  return out;
}

void FrequencyCounter::add(const SampleProfile& p) {
  for (const auto& l : p.labels) {
    const auto key = granularity_ == Granularity::kSubcategory
                         ? std::string(to_string(l.subcategory))
                         : l.cause;
    ++counts_[key];
  }
}

void FrequencyCounter::merge(const FrequencyCounter& other) {
  if (other.granularity_ != granularity_) {
    throw std::invalid_argument("cannot merge counters of different granularity");
  }
  for (const auto& [k, v] : other.counts_) counts_[k] += v;
}

FrequencyList FrequencyCounter::finish() const {
  FrequencyList out;
  std::int64_t total = 0;
  for (const auto& [k, v] : counts_) total += v;
  for (const auto& [k, v] : counts_) {
    if (v > 0) {
      out.push_back({k, v, static_cast<double>(v) / static_cast<double>(total)});
    }
  }
  // counts_ iterates by name, so a stable sort keeps the name tie-break.
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.count > b.count;
  });
  return out;
}

FrequencyList frequency_list(const std::vector<SampleProfile>& profiles,
                             Granularity granularity) {
  FrequencyCounter counter(granularity);
  for (const auto& p : profiles) counter.add(p);
  return counter.finish();
}

CooccurrenceMatrix cooccurrence(const std::vector<SampleProfile>& profiles) {
  CooccurrenceMatrix m;
  if (!profiles.empty()) m.model_id = profiles.front().model_id;
  for (const auto& p : profiles) {
    if (p.model_id != m.model_id) {
      throw ValidationError("cooccurrence expects a single model, got '" +
                            m.model_id + "' and '" + p.model_id + "'");
    }
    auto present = p.distinct_subcategories();
    if (present.empty()) continue;
    ++m.hallucinating_tasks;
    if (present.size() >= 2) ++m.multi_label_tasks;
    for (auto a : present) {
      for (auto b : present) ++m.counts[index_of(a)][index_of(b)];
    }
  }
  m.cross_task_rate = m.hallucinating_tasks == 0
                          ? 0.0
                          : static_cast<double>(m.multi_label_tasks) /
                                static_cast<double>(m.hallucinating_tasks);
  return m;
}

OrderedJson cooccurrence_to_json(const CooccurrenceMatrix& m) {
  OrderedJson j;
  j["model_id"] = m.model_id;
  j["subcategories"] = OrderedJson::array();
  for (auto s : kAllSubcategories) j["subcategories"].push_back(to_string(s));
  j["matrix"] = m.counts;
  j["hallucinating_tasks"] = m.hallucinating_tasks;
  j["multi_label_tasks"] = m.multi_label_tasks;
  j["cross_task_rate"] = m.cross_task_rate;
  j["cross_task_rate_text"] = format_percent(m.cross_task_rate);
  return j;
}

std::string format_fixed2(double value) {
  const int saved = std::fegetround();
  std::fesetround(FE_TONEAREST);
  double rounded = std::nearbyint(value * 100.0) / 100.0;
  std::fesetround(saved);
  if (rounded == 0.0) rounded = 0.0;  // no "-0.00"
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", rounded);
  return buf;
}

std::string format_percent(double fraction) {
  return format_fixed2(fraction * 100.0) + "%";
}

}  // namespace hallucheck
