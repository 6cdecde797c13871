#pragma once

#include <stdexcept>
#include <string>

namespace hallucheck {

/// Process exit codes used by the command-line tool.
enum class ExitCode : int {
  kOk = 0,
  kUsage = 1,       // usage or configuration problem
  kValidation = 2,  // input data failed validation
  kHarnessFault = 3,
};

/// Base of every error the library throws. `kind()` is a stable,
/// machine-readable tag that ends up in the CLI's JSON error record.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message, ExitCode code)
      : std::runtime_error(message), kind_(std::move(kind)), code_(code) {}

  const std::string& kind() const noexcept { return kind_; }
  ExitCode exit_code() const noexcept { return code_; }

 private:
  std::string kind_;
  ExitCode code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message)
      : Error("config", message, ExitCode::kUsage) {}
};

class TemplateError : public Error {
 public:
  explicit TemplateError(const std::string& message)
      : Error("template", message, ExitCode::kUsage) {}
};

/// Malformed input file (bad JSON, wrong field types). Carries the 1-based
/// line number when the failure is tied to a line.
class IngestError : public Error {
 public:
  IngestError(const std::string& message, std::size_t line = 0)
      : Error("ingest",
              line == 0 ? message
                        : "line " + std::to_string(line) + ": " + message,
              ExitCode::kValidation),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message)
      : Error("validation", message, ExitCode::kValidation) {}
};

class ProviderError : public Error {
 public:
  ProviderError(const std::string& message, int http_status = 0)
      : Error("provider", message, ExitCode::kHarnessFault),
        http_status_(http_status) {}

  int http_status() const noexcept { return http_status_; }

 private:
  int http_status_;
};

class ReportError : public Error {
 public:
  explicit ReportError(const std::string& message)
      : Error("report", message, ExitCode::kValidation) {}
};

class HarnessError : public Error {
 public:
  explicit HarnessError(const std::string& message)
      : Error("harness", message, ExitCode::kHarnessFault) {}
};

}  // namespace hallucheck
