#include "hallucheck/degeneration.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <functional>
#include <set>

#include "hallucheck/errors.hpp"

namespace hallucheck {

namespace {

constexpr std::array<std::string_view, 4> kKindNames = {
    "None", "Stuttering", "InfiniteEnumeration", "Gibberish"};

constexpr std::array<std::string_view, 39> kKeywords = {
    "False", "None",   "True",     "and",    "as",     "assert", "async",
    "await", "break",  "class",    "continue", "def",  "del",    "elif",
    "else",  "except", "finally",  "for",    "from",   "global", "if",
    "import", "in",    "is",       "lambda", "nonlocal", "not",  "or",
    "pass",  "raise",  "return",   "try",    "while",  "with",   "yield",
    "match", "case",   "type",     "_"};

bool is_keyword(std::string_view word) {
  return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}
bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Length of the string literal starting at `i` (at a quote), or npos if it
// does not terminate on this line.
std::size_t string_literal_length(std::string_view s, std::size_t i) {
  const char q = s[i];
  const bool triple = s.substr(i, 3) == std::string(3, q);
  std::size_t j = i + (triple ? 3 : 1);
  while (j < s.size()) {
    if (s[j] == '\\') {
      j += 2;
      continue;
    }
    if (triple) {
      if (s.substr(j, 3) == std::string(3, q)) return j + 3 - i;
    } else if (s[j] == q) {
      return j + 1 - i;
    }
    ++j;
  }
  return std::string_view::npos;
}

struct Run {
  std::size_t start = 0;
  int period = 0;
  int reps = 0;
};

// Finds periodic runs in seq[lo, n) with period 1..max_period. Returns the
// first run (smallest period, earliest start) whose repetition count reaches
// `need` and which satisfies `accept`; `best` receives the largest accepted
// repetition count seen.
std::optional<Run> find_run(const std::vector<std::string>& seq, std::size_t lo,
                            int max_period, int need,
                            const std::function<bool(const Run&)>& accept,
                            int& best) {
  const std::size_t n = seq.size();
  for (int b = 1; b <= max_period; ++b) {
    const auto period = static_cast<std::size_t>(b);
    std::size_t i = lo;
    while (i + period <= n) {
      std::size_t matched = 0;
      while (i + matched + period < n &&
             seq[i + matched] == seq[i + matched + period]) {
        ++matched;
      }
      Run run{i, b, static_cast<int>((matched + period) / period)};
      if (run.reps >= 2 && accept(run)) {
        best = std::max(best, run.reps);
        if (run.reps >= need) return run;
      }
      // Later starts inside this periodic stretch cannot repeat more often.
      i += matched + 1;
    }
  }
  return std::nullopt;
}

std::string join_block(const std::vector<std::string>& lines, const Run& run) {
  std::string out;
  for (int k = 0; k < run.period; ++k) {
    if (k) out += '\n';
    out += lines[run.start + static_cast<std::size_t>(k)];
  }
  return out;
}

}  // namespace

void DegenerationThresholds::validate() const {
  if (repeat_count < 2) throw ConfigError("degeneration.repeat_count must be >= 2");
  if (block_size < 1) throw ConfigError("degeneration.block_size must be >= 1");
  if (enum_count < 2) throw ConfigError("degeneration.enum_count must be >= 2");
  if (!(parse_valid_frac >= 0.0 && parse_valid_frac <= 1.0)) {
    throw ConfigError("degeneration.parse_valid_frac must be within [0, 1]");
  }
  if (!(window_frac > 0.0 && window_frac <= 1.0)) {
    throw ConfigError("degeneration.window_frac must be within (0, 1]");
  }
}

DegenerationThresholds thresholds_from_json(const Json& j,
                                            DegenerationThresholds t) {
  t.repeat_count = j.value("repeat_count", t.repeat_count);
  t.block_size = j.value("block_size", t.block_size);
  t.enum_count = j.value("enum_count", t.enum_count);
  t.parse_valid_frac = j.value("parse_valid_frac", t.parse_valid_frac);
  t.window_frac = j.value("window_frac", t.window_frac);
  t.validate();
  return t;
}

OrderedJson thresholds_to_json(const DegenerationThresholds& t) {
  return {{"repeat_count", t.repeat_count},
          {"block_size", t.block_size},
          {"enum_count", t.enum_count},
          {"parse_valid_frac", t.parse_valid_frac},
          {"window_frac", t.window_frac}};
}

std::string_view to_string(DegenerationKind k) {
  return kKindNames[static_cast<std::size_t>(k)];
}

DegenerationKind degeneration_kind_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kKindNames.size(); ++i) {
    if (kKindNames[i] == s) return static_cast<DegenerationKind>(i);
  }
  throw IngestError("unknown degeneration kind '" + std::string(s) + "'");
}

std::string normalize_line(std::string_view line) {
  std::string out;
  bool pending_space = false;
  for (char c : line) {
    if (c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += c;
  }
  return out;
}

std::vector<std::string> normalized_nonblank_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto eol = text.find('\n', pos);
    auto raw = text.substr(pos, eol == std::string_view::npos
                                    ? std::string_view::npos
                                    : eol - pos);
    auto norm = normalize_line(raw);
    if (!norm.empty()) lines.push_back(std::move(norm));
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }
  return lines;
}

double repetition_ratio(std::string_view source_code) {
  auto lines = normalized_nonblank_lines(source_code);
  if (lines.empty()) return 0.0;
  std::set<std::string_view> distinct(lines.begin(), lines.end());
  return 1.0 - static_cast<double>(distinct.size()) /
                   static_cast<double>(lines.size());
}

std::string statement_shape(std::string_view s) {
  std::string out;
  std::size_t i = 0;
  while (i < s.size()) {
    char c = s[i];
    if (c == '#') {  // comments keep their text
      out.append(s.substr(i));
      break;
    }
    if (c == '"' || c == '\'') {
      auto len = string_literal_length(s, i);
      if (len == std::string_view::npos) len = s.size() - i;
      out += "\"$\"";
      i += len;
      continue;
    }
    if (ident_start(c)) {
      std::size_t j = i;
      while (j < s.size() && ident_char(s[j])) ++j;
      out.append(s.substr(i, j - i));
      i = j;
      continue;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < s.size() &&
         std::isdigit(static_cast<unsigned char>(s[i + 1])))) {
      std::size_t j = i;
      while (j < s.size() &&
             (ident_char(s[j]) || s[j] == '.' ||
              ((s[j] == '+' || s[j] == '-') && j > i &&
               (s[j - 1] == 'e' || s[j - 1] == 'E')))) {
        ++j;
      }
      out += '#';
      out += '0';
      i = j;
      continue;
    }
    out += c;
    ++i;
  }
  return out;
}

bool is_program_like_line(std::string_view line) {
  if (line.empty()) return false;
  if (line[0] == '#') return true;
  bool prev_plain_ident = false;
  std::size_t i = 0;
  while (i < line.size()) {
    char c = line[i];
    auto uc = static_cast<unsigned char>(c);
    if (c == '#') return true;  // trailing comment
    if (c == '"' || c == '\'') {
      auto len = string_literal_length(line, i);
      if (len == std::string_view::npos) {
        // An open triple quote may continue on the next line.
        return line.substr(i, 3) == std::string(3, c);
      }
      i += len;
      prev_plain_ident = false;
      continue;
    }
    if (uc >= 0x80 || !std::isprint(uc)) return false;
    if (c == '`' || c == '$' || c == '?') return false;
    if (ident_start(c)) {
      std::size_t j = i;
      while (j < line.size() && ident_char(line[j])) ++j;
      auto word = line.substr(i, j - i);
      // A string prefix such as f"..." or rb'...'.
      if (j < line.size() && (line[j] == '"' || line[j] == '\'') &&
          word.size() <= 2) {
        i = j;
        continue;
      }
      bool plain = !is_keyword(word);
      if (plain && prev_plain_ident) return false;
      prev_plain_ident = plain;
      i = j;
      continue;
    }
    if (c != ' ') prev_plain_ident = false;
    ++i;
  }
  return true;
}

bool looks_parseable(std::string_view source_code) {
  std::vector<char> stack;
  std::size_t i = 0;
  const auto n = source_code.size();
  bool line_continues = false;  // last significant char of a line
  char last_significant = '\n';
  while (i < n) {
    char c = source_code[i];
    auto uc = static_cast<unsigned char>(c);
    if (c == '#') {
      while (i < n && source_code[i] != '\n') ++i;
      continue;
    }
    if (c == '"' || c == '\'') {
      auto len = string_literal_length(source_code, i);
      if (len == std::string_view::npos) return false;
      // Single-quoted strings may not span lines.
      auto literal = source_code.substr(i, len);
      bool triple = len >= 6 && literal.substr(0, 3) == std::string(3, c);
      if (!triple && literal.find('\n') != std::string_view::npos) return false;
      i += len;
      last_significant = c;
      continue;
    }
    if (uc >= 0x80 || (!std::isprint(uc) && !std::isspace(uc))) return false;
    if (c == '`' || c == '$' || c == '?') return false;
    if (c == '(' || c == '[' || c == '{') stack.push_back(c);
    if (c == ')' || c == ']' || c == '}') {
      char open = c == ')' ? '(' : c == ']' ? '[' : '{';
      if (stack.empty() || stack.back() != open) return false;
      stack.pop_back();
    }
    if (!std::isspace(uc)) last_significant = c;
    ++i;
  }
  line_continues = last_significant == ':' || last_significant == '\\' ||
                   last_significant == ',' || last_significant == '=' ||
                   last_significant == '+' || last_significant == '-' ||
                   last_significant == '*' || last_significant == '/' ||
                   last_significant == '.';
  return stack.empty() && !line_continues;
}

DegenerationVerdict detect(std::string_view source_code, bool truncated_at_limit,
                           const DegenerationThresholds& t,
                           std::optional<bool> parses) {
  const auto lines = normalized_nonblank_lines(source_code);
  const std::size_t n = lines.size();
  DegenerationVerdict v;

  // Stuttering: a block of up to block_size lines repeated back to back
  // inside the trailing window.
  const auto window = static_cast<std::size_t>(
      std::ceil(t.window_frac * static_cast<double>(n)));
  const std::size_t window_start = n - std::min(window, n);
  int best_stutter = 0;
  auto stutter = find_run(lines, window_start, t.block_size, t.repeat_count,
                          [](const Run&) { return true; }, best_stutter);
  if (stutter) {
    v.kind = DegenerationKind::kStuttering;
    v.evidence = join_block(lines, *stutter);
    v.score = static_cast<double>(stutter->reps * stutter->period) /
              static_cast<double>(n - window_start);
    return v;
  }

  // Infinite enumeration: the same statement shape over and over, with the
  // literals changing between copies.
  std::vector<std::string> shapes;
  shapes.reserve(n);
  for (const auto& l : lines) shapes.push_back(statement_shape(l));
  auto literals_vary = [&](const Run& run) {
    const auto p = static_cast<std::size_t>(run.period);
    const auto span = static_cast<std::size_t>(run.reps) * p;
    for (std::size_t k = run.start; k + p < run.start + span; ++k) {
      if (lines[k] != lines[k + p]) return true;
    }
    return false;
  };
  int best_enum = 0;
  auto enumeration = find_run(shapes, 0, t.block_size, t.enum_count,
                              literals_vary, best_enum);
  if (enumeration) {
    v.kind = DegenerationKind::kInfiniteEnumeration;
    v.evidence = join_block(shapes, *enumeration);
    v.score = static_cast<double>(enumeration->reps * enumeration->period) /
              static_cast<double>(n);
    return v;
  }

  // Gibberish: does not parse, and is either cut off or mostly not code.
  std::size_t valid = 0;
  std::string first_invalid;
  for (const auto& l : lines) {
    if (is_program_like_line(l)) {
      ++valid;
    } else if (first_invalid.empty()) {
      first_invalid = l;
    }
  }
  const double valid_frac =
      n == 0 ? 1.0 : static_cast<double>(valid) / static_cast<double>(n);
  const bool parsed = parses.value_or(looks_parseable(source_code));
  if (!parsed && (truncated_at_limit || valid_frac < t.parse_valid_frac)) {
    v.kind = DegenerationKind::kGibberish;
    v.evidence = !first_invalid.empty()
                     ? first_invalid
                     : (n ? lines.back() : std::string("<empty>"));
    v.score = 1.0 - valid_frac;
    return v;
  }

  v.score = std::max(
      static_cast<double>(best_stutter) / static_cast<double>(t.repeat_count),
      static_cast<double>(best_enum) / static_cast<double>(t.enum_count));
  return v;
}

}  // namespace hallucheck
