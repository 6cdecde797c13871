#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hallucheck/jsonl.hpp"

namespace hallucheck {

/// Structural thresholds for the pre-execution degeneration gate. Nothing
/// here is model-based; the defaults are harness choices exposed as
/// configuration keys under "degeneration.".
struct DegenerationThresholds {
  int repeat_count = 5;           // consecutive copies that make a stutter
  int block_size = 3;             // largest repeated block, in lines
  int enum_count = 20;            // consecutive same-shape statements
  double parse_valid_frac = 0.3;  // below this, unparseable text is gibberish
  double window_frac = 0.6;       // stutter search covers this trailing share

  void validate() const;
};

DegenerationThresholds thresholds_from_json(const Json& j,
                                            DegenerationThresholds base = {});
OrderedJson thresholds_to_json(const DegenerationThresholds& t);

enum class DegenerationKind { kNone, kStuttering, kInfiniteEnumeration, kGibberish };

std::string_view to_string(DegenerationKind k);
DegenerationKind degeneration_kind_from_string(std::string_view s);

struct DegenerationVerdict {
  DegenerationKind kind = DegenerationKind::kNone;
  std::string evidence;  // repeated block, statement shape or offending line
  /// Flagged verdicts: share of the examined lines covered by the repeated
  /// run, or the parse-validity deficit for gibberish. For kNone: the
  /// largest fraction of any threshold reached, always below 1.
  double score = 0.0;
};

/// Strips surrounding whitespace and collapses interior runs of spaces and
/// tabs to one space. Comments are kept.
std::string normalize_line(std::string_view line);

/// Non-blank lines of `text`, normalized.
std::vector<std::string> normalized_nonblank_lines(std::string_view text);

/// 1 - distinct/total over non-blank normalized lines; 0 for empty input.
double repetition_ratio(std::string_view source_code);

/// Replaces numeric and string literals with placeholders, so statements
/// that differ only in literals share a shape.
std::string statement_shape(std::string_view normalized_line);

/// Heuristic: could this (normalized, non-blank) line be Python code?
bool is_program_like_line(std::string_view normalized_line);

/// Cheap lexical stand-in for a real parse: brackets balance, strings
/// terminate, no stray non-code characters.
bool looks_parseable(std::string_view source_code);

/// Stuttering, then infinite enumeration, then gibberish. `parses` is the
/// interpreter's verdict when available; otherwise looks_parseable decides.
DegenerationVerdict detect(std::string_view source_code, bool truncated_at_limit,
                           const DegenerationThresholds& thresholds = {},
                           std::optional<bool> parses = std::nullopt);

}  // namespace hallucheck
