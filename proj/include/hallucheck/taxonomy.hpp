#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "hallucheck/degeneration.hpp"
#include "hallucheck/jsonl.hpp"
#include "hallucheck/sandbox.hpp"

namespace hallucheck {

enum class Category { kMapping, kNaming, kResource, kLogic };

enum class Subcategory {
  kDataCompliance,
  kStructureAccess,
  kIdentity,
  kExternalSource,
  kPhysicalConstraint,
  kComputationalBoundary,
  kLogicDeviation,
  kLogicBreakdown,
};

inline constexpr std::size_t kSubcategoryCount = 8;
inline constexpr std::size_t kCategoryCount = 4;

inline constexpr std::array<Subcategory, kSubcategoryCount> kAllSubcategories = {
    Subcategory::kDataCompliance,     Subcategory::kStructureAccess,
    Subcategory::kIdentity,           Subcategory::kExternalSource,
    Subcategory::kPhysicalConstraint, Subcategory::kComputationalBoundary,
    Subcategory::kLogicDeviation,     Subcategory::kLogicBreakdown};

inline constexpr std::array<Category, kCategoryCount> kAllCategories = {
    Category::kMapping, Category::kNaming, Category::kResource, Category::kLogic};

/// Each category owns exactly two subcategories, stored adjacently.
constexpr Category category_of(Subcategory s) {
  return static_cast<Category>(static_cast<int>(s) / 2);
}

constexpr std::array<Subcategory, 2> subcategories_of(Category c) {
  const int first = static_cast<int>(c) * 2;
  return {static_cast<Subcategory>(first), static_cast<Subcategory>(first + 1)};
}

constexpr std::size_t index_of(Subcategory s) { return static_cast<std::size_t>(s); }

std::string_view to_string(Category c);        // "Mapping"
std::string_view to_string(Subcategory s);     // "DataCompliance"
std::string_view display_name(Subcategory s);  // "Data Compliance"
std::string_view short_code(Subcategory s);    // "DC"
Subcategory subcategory_from_string(std::string_view s);
Category category_from_string(std::string_view s);

struct HallucinationLabel {
  Category category = Category::kLogic;
  Subcategory subcategory = Subcategory::kLogicDeviation;
  std::string cause;  // exception name, "output_mismatch", degeneration kind...

  static HallucinationLabel of(Subcategory s, std::string cause) {
    return {category_of(s), s, std::move(cause)};
  }
  bool operator==(const HallucinationLabel&) const = default;
};

enum class UnmappedPolicy { kReport, kAsLogicDeviation };

/// Exception-name to subcategory bins. Shipped with a default table that is
/// the harness's own reading of the subcategory definitions; users can
/// re-bin via classification_table.json.
struct ClassificationTable {
  std::map<std::string, Subcategory, std::less<>> exception_map;
  UnmappedPolicy fallback = UnmappedPolicy::kReport;

  static ClassificationTable defaults();
  static ClassificationTable from_json(const Json& j);
  static ClassificationTable load(const std::filesystem::path& path);
  OrderedJson to_json() const;
};

enum class ClassificationKind { kPass, kHallucination, kUnmapped, kHarnessFault };

std::string_view to_string(ClassificationKind k);
ClassificationKind classification_kind_from_string(std::string_view s);

struct Classification {
  ClassificationKind kind = ClassificationKind::kPass;
  std::optional<HallucinationLabel> label;  // set iff kind == kHallucination
  std::string cause;                        // raw state, empty for Pass

  bool operator==(const Classification&) const = default;
};

/// Maps one observable state to Pass, a hallucination label, Unmapped or
/// HarnessFault. `outcome` must be null exactly when the verdict flags a
/// degeneration (degenerate completions are never executed).
Classification classify(const DegenerationVerdict& verdict,
                        const ExecutionOutcome* outcome,
                        const ClassificationTable& table);

}  // namespace hallucheck
