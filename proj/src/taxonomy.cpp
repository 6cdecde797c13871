#include "hallucheck/taxonomy.hpp"

#include "hallucheck/errors.hpp"

namespace hallucheck {

namespace {

constexpr std::array<std::string_view, kCategoryCount> kCategoryNames = {
    "Mapping", "Naming", "Resource", "Logic"};

constexpr std::array<std::string_view, kSubcategoryCount> kSubcategoryNames = {
    "DataCompliance",     "StructureAccess",       "Identity",
    "ExternalSource",     "PhysicalConstraint",    "ComputationalBoundary",
    "LogicDeviation",     "LogicBreakdown"};

constexpr std::array<std::string_view, kSubcategoryCount> kDisplayNames = {
    "Data Compliance",     "Structure Access",       "Identity",
    "External Source",     "Physical Constraint",    "Computational Boundary",
    "Logic Deviation",     "Logic Breakdown"};

constexpr std::array<std::string_view, kSubcategoryCount> kShortCodes = {
    "DC", "SA", "ID", "ES", "PC", "CB", "LD", "LB"};

constexpr std::array<std::string_view, 4> kClassificationNames = {
    "Pass", "Hallucination", "Unmapped", "HarnessFault"};

std::string_view policy_name(UnmappedPolicy p) {
  return p == UnmappedPolicy::kReport ? "Unmapped-report"
                                      : "Unmapped-as-LogicDeviation";
}

}  // namespace

std::string_view to_string(Category c) {
  return kCategoryNames[static_cast<std::size_t>(c)];
}
std::string_view to_string(Subcategory s) { return kSubcategoryNames[index_of(s)]; }
std::string_view display_name(Subcategory s) { return kDisplayNames[index_of(s)]; }
std::string_view short_code(Subcategory s) { return kShortCodes[index_of(s)]; }

Subcategory subcategory_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kSubcategoryCount; ++i) {
    if (kSubcategoryNames[i] == s || kShortCodes[i] == s || kDisplayNames[i] == s) {
      return static_cast<Subcategory>(i);
    }
  }
  throw ValidationError("unknown subcategory '" + std::string(s) + "'");
}

Category category_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kCategoryCount; ++i) {
    if (kCategoryNames[i] == s) return static_cast<Category>(i);
  }
  throw ValidationError("unknown category '" + std::string(s) + "'");
}

std::string_view to_string(ClassificationKind k) {
  return kClassificationNames[static_cast<std::size_t>(k)];
}

ClassificationKind classification_kind_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kClassificationNames.size(); ++i) {
    if (kClassificationNames[i] == s) return static_cast<ClassificationKind>(i);
  }
  throw IngestError("unknown classification '" + std::string(s) + "'");
}

ClassificationTable ClassificationTable::defaults() {
  using S = Subcategory;
  ClassificationTable t;
  t.exception_map = {
      // type-mismatched or rule-violating operations
      {"TypeError", S::kDataCompliance},
      {"ValueError", S::kDataCompliance},
      {"ZeroDivisionError", S::kDataCompliance},
      // missing indices or keys
      {"IndexError", S::kStructureAccess},
      {"KeyError", S::kStructureAccess},
      // undefined names and attributes
      {"NameError", S::kIdentity},
      {"AttributeError", S::kIdentity},
      {"UnboundLocalError", S::kIdentity},
      // modules that do not exist or cannot be loaded
      {"ImportError", S::kExternalSource},
      {"ModuleNotFoundError", S::kExternalSource},
      // memory and stack depth
      {"MemoryError", S::kPhysicalConstraint},
      {"RecursionError", S::kPhysicalConstraint},
      // numeric limits
      {"OverflowError", S::kComputationalBoundary},
      {"FloatingPointError", S::kComputationalBoundary},
  };
  t.fallback = UnmappedPolicy::kReport;
  return t;
}

ClassificationTable ClassificationTable::from_json(const Json& j) {
  ClassificationTable t;
  if (!j.is_object() || !j.contains("exception_map") ||
      !j["exception_map"].is_object()) {
    throw ConfigError("classification table needs an 'exception_map' object");
  }
  for (const auto& [name, sub] : j["exception_map"].items()) {
    if (!sub.is_string()) {
      throw ConfigError("exception_map['" + name + "'] must be a string");
    }
    try {
      t.exception_map.emplace(name, subcategory_from_string(sub.get<std::string>()));
    } catch (const ValidationError& e) {
      throw ConfigError(std::string("exception_map['") + name + "']: " + e.what());
    }
  }
  const auto fallback = j.value("fallback", std::string("Unmapped-report"));
  if (fallback == policy_name(UnmappedPolicy::kReport)) {
    t.fallback = UnmappedPolicy::kReport;
  } else if (fallback == policy_name(UnmappedPolicy::kAsLogicDeviation)) {
    t.fallback = UnmappedPolicy::kAsLogicDeviation;
  } else {
    throw ConfigError("unknown fallback policy '" + fallback + "'");
  }
  return t;
}

ClassificationTable ClassificationTable::load(const std::filesystem::path& path) {
  Json j;
  try {
    j = Json::parse(read_text_file(path));
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return from_json(j);
}

OrderedJson ClassificationTable::to_json() const {
  OrderedJson map = OrderedJson::object();
  for (const auto& [name, sub] : exception_map) map[name] = to_string(sub);
  return {{"exception_map", map}, {"fallback", policy_name(fallback)}};
}

Classification classify(const DegenerationVerdict& verdict,
                        const ExecutionOutcome* outcome,
                        const ClassificationTable& table) {
  const bool degenerate = verdict.kind != DegenerationKind::kNone;
  if (degenerate == (outcome != nullptr)) {
    throw std::invalid_argument(
        "classify: an outcome must be given exactly for non-degenerate code");
  }
  auto hallucination = [](Subcategory s, std::string cause) {
    Classification c;
    c.kind = ClassificationKind::kHallucination;
    c.label = HallucinationLabel::of(s, cause);
    c.cause = std::move(cause);
    return c;
  };
  if (degenerate) {
    return hallucination(Subcategory::kLogicBreakdown,
                         std::string(to_string(verdict.kind)));
  }
  switch (outcome->status) {
    case ExecutionStatus::kSandboxError:
      return {ClassificationKind::kHarnessFault, std::nullopt, "SandboxError"};
    case ExecutionStatus::kSyntaxFailure:
      return hallucination(Subcategory::kLogicBreakdown, "syntactic");
    case ExecutionStatus::kMemoryLimitExceeded:
      return hallucination(Subcategory::kPhysicalConstraint, "memory_limit");
    case ExecutionStatus::kTimeLimitExceeded:
      return hallucination(Subcategory::kComputationalBoundary, "time_limit");
    case ExecutionStatus::kRuntimeFailure: {
      const auto& name = outcome->exception_name;
      if (auto it = table.exception_map.find(name);
          it != table.exception_map.end()) {
        return hallucination(it->second, name);
      }
      if (table.fallback == UnmappedPolicy::kAsLogicDeviation) {
        return hallucination(Subcategory::kLogicDeviation, name);
      }
      return {ClassificationKind::kUnmapped, std::nullopt, name};
    }
    case ExecutionStatus::kWrongOutput:
      return hallucination(Subcategory::kLogicDeviation, "output_mismatch");
    case ExecutionStatus::kPass:
      return {};
  }
  return {ClassificationKind::kHarnessFault, std::nullopt, "unknown status"};
}

}  // namespace hallucheck
