#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>

#include "hallucheck/corpus.hpp"

namespace hallucheck {

/// Harness-defined default generation instruction. It states the task's
/// time and memory budget next to the problem text. Override it with
/// --template.
inline constexpr std::string_view kDefaultInstructionTemplate =
    "Write a complete Python 3 program that solves the problem below. "
    "The program reads from standard input and writes to standard output.\n"
    "It must finish within {wall_time_ms} ms and use at most {memory_bytes} "
    "bytes of memory.\n"
    "Return only the code in a single fenced code block.\n\n"
    "Problem:\n{question}\n";

struct GenerationInstruction {
  std::string template_text;
  std::string rendered;
};

/// Substitutes {question}, {wall_time_ms} and {memory_bytes}. "{{" and "}}"
/// produce literal braces. Any other placeholder, or an unclosed '{',
/// throws TemplateError naming it.
GenerationInstruction render_instruction(std::string_view question,
                                         const ResourceLimits& limits,
                                         std::string_view template_text);

/// Returns the interior of the first fenced code block, or the input
/// unchanged when there is none. An unclosed fence (a truncated response)
/// yields everything after the opening fence line.
std::string extract_code(std::string_view raw_response);

struct ProviderConfig {
  /// "file" selects the file provider; anything else is an http(s) URL.
  std::string endpoint = "file";
  std::string model_id;
  /// File provider source: a completions JSON-lines file or a response
  /// cache directory.
  std::filesystem::path path;
  std::string auth_token_env;  // empty: no Authorization header
  std::int64_t request_timeout_ms = 60000;
  int max_retries = 2;
  std::int64_t backoff_ms = 250;  // doubled after each failed attempt
  /// Optional cache: one JSON file per (task_id, model_id).
  std::filesystem::path cache_dir;
  /// Provider-side sampling parameters, merged into each request body and
  /// recorded verbatim in run metadata.
  Json extra = Json::object();

  bool is_file() const { return endpoint == "file"; }
  void validate() const;
};

ProviderConfig provider_from_json(const Json& j);
OrderedJson provider_to_json(const ProviderConfig& p);

/// Path of the cache file for one (task_id, model_id) pair.
std::filesystem::path cache_file(const std::filesystem::path& dir,
                                 std::string_view task_id,
                                 std::string_view model_id);

/// Obtains completions from a file or an HTTP endpoint speaking the
/// minimal contract POST {"model", "prompt", ...extra} -> {"text"}.
/// A response with "finish_reason": "length" or "truncated": true marks the
/// completion as truncated. Safe to share across threads.
class CompletionSource {
 public:
  explicit CompletionSource(ProviderConfig config);
  ~CompletionSource();
  CompletionSource(const CompletionSource&) = delete;
  CompletionSource& operator=(const CompletionSource&) = delete;

  Completion fetch(const Task& task,
                   const GenerationInstruction& instruction) const;

  const ProviderConfig& config() const { return config_; }

 private:
  Completion fetch_file(const Task& task) const;
  Completion fetch_http(const Task& task,
                        const GenerationInstruction& instruction) const;

  ProviderConfig config_;
  // (task_id, model_id) -> stored response for JSON-lines file providers.
  std::map<std::pair<std::string, std::string>, Completion> stored_;
};

Completion fetch_completion(const Task& task, const ProviderConfig& provider,
                            const GenerationInstruction& instruction);

}  // namespace hallucheck
