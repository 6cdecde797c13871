#include "hallucheck/gateway.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "hallucheck/errors.hpp"

namespace hallucheck {

namespace {

bool is_identifier(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) {
      return false;
    }
  }
  return true;
}

bool is_fence(std::string_view line) {
  std::size_t i = 0;
  while (i < line.size() && i < 3 && line[i] == ' ') ++i;
  return line.substr(i, 3) == "```";
}

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ConfigError("endpoint '" + url + "' is not an http(s) URL");
  }
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string sanitize(std::string_view s) {
  std::string out;
  for (char c : s) {
    bool keep = std::isalnum(static_cast<unsigned char>(c)) || c == '-' ||
                c == '_' || c == '.';
    out += keep ? c : '_';
  }
  return out;
}

// FNV-1a; only used to keep sanitized cache names collision-free.
std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

Completion completion_from_response(const Task& task,
                                     const std::string& model_id,
                                     const Json& body) {
  auto text = body.find("text");
  if (text == body.end() || !text->is_string()) {
    throw ProviderError("response lacks a string 'text' field");
  }
  Completion c;
  c.task_id = task.task_id;
  c.model_id = model_id;
  c.raw_response = text->get<std::string>();
  c.source_code = extract_code(c.raw_response);
  if (auto fr = body.find("finish_reason");
      fr != body.end() && fr->is_string()) {
    c.truncated = fr->get<std::string>() == "length";
  }
  if (auto tr = body.find("truncated"); tr != body.end() && tr->is_boolean()) {
    c.truncated = c.truncated || tr->get<bool>();
  }
  return c;
}

}  // namespace

GenerationInstruction render_instruction(std::string_view question,
                                         const ResourceLimits& limits,
                                         std::string_view template_text) {
  GenerationInstruction gi;
  gi.template_text = std::string(template_text);
  std::string& out = gi.rendered;
  for (std::size_t i = 0; i < template_text.size(); ++i) {
    char c = template_text[i];
    if (c == '{' && i + 1 < template_text.size() && template_text[i + 1] == '{') {
      out += '{';
      ++i;
      continue;
    }
    if (c == '}' && i + 1 < template_text.size() && template_text[i + 1] == '}') {
      out += '}';
      ++i;
      continue;
    }
    if (c != '{') {
      out += c;
      continue;
    }
    auto close = template_text.find('}', i + 1);
    if (close == std::string_view::npos) {
      throw TemplateError("unclosed '{' at offset " + std::to_string(i));
    }
    auto name = template_text.substr(i + 1, close - i - 1);
    if (name == "question") {
      out += question;
    } else if (name == "wall_time_ms") {
      out += std::to_string(limits.wall_time_ms);
    } else if (name == "memory_bytes") {
      out += std::to_string(limits.memory_bytes);
    } else {
      throw TemplateError("unknown placeholder '{" + std::string(name) + "}'" +
                          (is_identifier(name) ? "" : " (malformed)"));
    }
    i = close;
  }
  return gi;
}

std::string extract_code(std::string_view raw) {
  std::size_t pos = 0;
  std::size_t body_start = std::string_view::npos;
  while (pos <= raw.size()) {
    auto eol = raw.find('\n', pos);
    auto line = raw.substr(pos, eol == std::string_view::npos ? raw.size() - pos
                                                              : eol - pos);
    if (is_fence(line)) {
      if (body_start == std::string_view::npos) {
        if (eol == std::string_view::npos) return {};
        body_start = eol + 1;
      } else {
        // Drop the newline that precedes the closing fence.
        auto end = pos > body_start ? pos - 1 : body_start;
        return std::string(raw.substr(body_start, end - body_start));
      }
    }
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }
  if (body_start != std::string_view::npos) {
    return std::string(raw.substr(body_start));
  }
  return std::string(raw);
}

void ProviderConfig::validate() const {
  if (model_id.empty()) throw ConfigError("provider model_id is required");
  if (is_file()) {
    if (path.empty()) throw ConfigError("file provider requires a path");
  } else {
    split_url(endpoint);
  }
  if (request_timeout_ms <= 0) {
    throw ConfigError("request_timeout_ms must be positive");
  }
  if (max_retries < 0 || max_retries > 10) {
    throw ConfigError("max_retries must be within [0, 10]");
  }
}

ProviderConfig provider_from_json(const Json& j) {
  ProviderConfig p;
  p.endpoint = j.value("endpoint", p.endpoint);
  p.model_id = j.value("model_id", p.model_id);
  p.path = j.value("path", std::string{});
  p.auth_token_env = j.value("auth_token_env", p.auth_token_env);
  p.request_timeout_ms = j.value("request_timeout_ms", p.request_timeout_ms);
  p.max_retries = j.value("max_retries", p.max_retries);
  p.backoff_ms = j.value("backoff_ms", p.backoff_ms);
  p.cache_dir = j.value("cache_dir", std::string{});
  if (j.contains("extra")) p.extra = j["extra"];
  return p;
}

OrderedJson provider_to_json(const ProviderConfig& p) {
  return {{"endpoint", p.endpoint},
          {"model_id", p.model_id},
          {"path", p.path.string()},
          {"auth_token_env", p.auth_token_env},
          {"request_timeout_ms", p.request_timeout_ms},
          {"max_retries", p.max_retries},
          {"cache_dir", p.cache_dir.string()},
          {"extra", p.extra}};
}

std::filesystem::path cache_file(const std::filesystem::path& dir,
                                 std::string_view task_id,
                                 std::string_view model_id) {
  std::string key = std::string(task_id) + '\0' + std::string(model_id);
  char hash[17];
  std::snprintf(hash, sizeof hash, "%016llx",
                static_cast<unsigned long long>(fnv1a(key)));
  return dir / (sanitize(task_id) + "__" + sanitize(model_id) + "__" + hash +
                ".json");
}

CompletionSource::CompletionSource(ProviderConfig config)
    : config_(std::move(config)) {
  config_.validate();
  if (config_.is_file() && !std::filesystem::is_directory(config_.path)) {
    auto loaded = load_completions(config_.path);
    for (auto& c : loaded.items) {
      auto key = std::make_pair(c.task_id, c.model_id);
      stored_.emplace(std::move(key), std::move(c));
    }
  }
}

CompletionSource::~CompletionSource() = default;

Completion CompletionSource::fetch(
    const Task& task, const GenerationInstruction& instruction) const {
  if (config_.is_file()) return fetch_file(task);
  if (!config_.cache_dir.empty()) {
    auto cached = cache_file(config_.cache_dir, task.task_id, config_.model_id);
    if (std::filesystem::exists(cached)) {
      return completion_from_json(Json::parse(read_text_file(cached)));
    }
  }
  Completion c = fetch_http(task, instruction);
  if (!config_.cache_dir.empty()) {
    write_file_atomic(
        cache_file(config_.cache_dir, task.task_id, config_.model_id),
        completion_to_json(c).dump(2) + "\n");
  }
  return c;
}

Completion CompletionSource::fetch_file(const Task& task) const {
  if (std::filesystem::is_directory(config_.path)) {
    auto file = cache_file(config_.path, task.task_id, config_.model_id);
    if (!std::filesystem::exists(file)) {
      throw ProviderError("no stored response for task '" + task.task_id +
                          "' in " + config_.path.string());
    }
    return completion_from_json(Json::parse(read_text_file(file)));
  }
  auto it = stored_.find({task.task_id, config_.model_id});
  if (it == stored_.end()) {
    throw ProviderError("no stored response for task '" + task.task_id +
                        "' and model '" + config_.model_id + "'");
  }
  return it->second;
}

Completion CompletionSource::fetch_http(
    const Task& task, const GenerationInstruction& instruction) const {
  httplib::Headers headers;
  if (!config_.auth_token_env.empty()) {
    const char* token = std::getenv(config_.auth_token_env.c_str());
    if (token == nullptr) {
      throw ConfigError("environment variable " + config_.auth_token_env +
                        " is not set");
    }
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }
  Json request = config_.extra.is_object() ? config_.extra : Json::object();
  request["model"] = config_.model_id;
  request["prompt"] = instruction.rendered;
  const std::string body = request.dump();

  auto [origin, path] = split_url(config_.endpoint);
  const auto timeout = std::chrono::milliseconds(config_.request_timeout_ms);
  std::string last_failure;
  int last_status = 0;
  auto backoff = std::chrono::milliseconds(config_.backoff_ms);
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    httplib::Client client(origin);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    auto res = client.Post(path, headers, body, "application/json");
    if (!res) {
      last_failure = "transport failure: " + httplib::to_string(res.error());
      last_status = 0;
      continue;
    }
    if (res->status >= 500 || res->status == 429) {
      last_failure = "HTTP " + std::to_string(res->status);
      last_status = res->status;
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      throw ProviderError("HTTP " + std::to_string(res->status) + " from " +
                              config_.endpoint,
                          res->status);
    }
    Json parsed;
    try {
      parsed = Json::parse(res->body);
    } catch (const Json::parse_error&) {
      throw ProviderError("response body is not JSON", res->status);
    }
    return completion_from_response(task, config_.model_id, parsed);
  }
  throw ProviderError("retries exhausted for task '" + task.task_id +
                          "': " + last_failure,
                      last_status);
}

Completion fetch_completion(const Task& task, const ProviderConfig& provider,
                            const GenerationInstruction& instruction) {
  return CompletionSource(provider).fetch(task, instruction);
}

}  // namespace hallucheck
