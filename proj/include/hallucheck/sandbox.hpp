#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hallucheck/corpus.hpp"

namespace hallucheck {

enum class ExecutionStatus {
  kPass,
  kWrongOutput,
  kRuntimeFailure,
  kTimeLimitExceeded,
  kMemoryLimitExceeded,
  kSyntaxFailure,
  kSandboxError,
};

std::string_view to_string(ExecutionStatus s);
ExecutionStatus execution_status_from_string(std::string_view s);

struct ExecutionOutcome {
  ExecutionStatus status = ExecutionStatus::kSandboxError;
  std::string actual_output;      // set for Pass and WrongOutput
  std::string exception_name;     // set iff status is RuntimeFailure
  std::string exception_message;  // also carries the diagnostic for
                                  // SyntaxFailure / MemoryLimitExceeded
  std::string traceback;
  std::int64_t wall_time_ms = 0;
  std::optional<std::int64_t> peak_memory_bytes;
  std::string harness_error;  // set iff status is SandboxError
};

OrderedJson outcome_to_json(const ExecutionOutcome& o, bool with_measurements);
ExecutionOutcome outcome_from_json(const Json& j);

/// How to run (and optionally syntax-check) a program. The literal
/// argument "{file}" is replaced by the program path; when absent the path
/// is appended.
struct InterpreterSpec {
  std::vector<std::string> run_argv = {"python3", "-s", "{file}"};
  /// Compile-only check run before any input is fed. Empty disables it.
  std::vector<std::string> check_argv = {
      "python3", "-s", "-c",
      "import sys\n"
      "with open(sys.argv[1], 'rb') as f:\n"
      "    compile(f.read(), 'main.py', 'exec')\n",
      "{file}"};
  std::string source_file_name = "main.py";

  static InterpreterSpec from_command_line(std::string_view command);
};

/// Tolerant comparison of program output against the expectation.
/// Trailing whitespace of every line and trailing blank lines are ignored;
/// interior whitespace is significant unless `numeric` is set, in which
/// case lines are compared token by token and decimal tokens match within
/// an absolute tolerance of 1e-6.
bool compare_output(std::string_view actual, std::string_view expected,
                    bool numeric = false);

/// What the harness observed about a terminated child.
struct ProcessExit {
  enum class Stage { kCompile, kRun };
  Stage stage = Stage::kRun;
  std::optional<int> exit_code;    // normal exit
  std::optional<int> term_signal;  // killed by a signal
  bool killed_by_timer = false;
  std::optional<std::int64_t> peak_memory_bytes;
  std::int64_t memory_limit_bytes = 0;
};

struct Termination {
  /// kPass here only means "exited normally"; the caller still has to
  /// compare output.
  ExecutionStatus status = ExecutionStatus::kPass;
  std::string exception_name;
  std::string exception_message;
  std::string traceback;
};

/// Maps a process exit record and its stderr to a status. The last
/// exception line of the last traceback block wins. Memory evidence beats
/// timer evidence, which beats a plain runtime failure.
Termination classify_termination(const ProcessExit& raw,
                                 std::string_view stderr_text);

struct SandboxOptions {
  bool numeric_compare = false;
  /// Fail with SandboxError instead of running without a private network
  /// namespace when the platform refuses one.
  bool require_network_isolation = false;
  /// Skip the compile-only check (the caller already ran check_syntax).
  bool skip_syntax_check = false;
  std::int64_t stdout_cap_bytes = 64LL << 20;
  std::int64_t stderr_cap_bytes = 1LL << 20;
  /// When set, stdin/stdout/stderr/outcome.json are kept here.
  std::filesystem::path artifact_dir;
};

/// Runs `source_code` on one test case in a fresh temporary directory with
/// the given limits. Never throws; harness faults become SandboxError.
ExecutionOutcome execute(std::string_view source_code, const TestCase& test,
                         const ResourceLimits& limits,
                         const InterpreterSpec& interpreter,
                         const SandboxOptions& options = {});

/// Compile-only check of `source_code` with the interpreter's check
/// command. Returns nullopt when the source compiles (or no check is
/// configured), otherwise the SyntaxFailure outcome.
std::optional<ExecutionOutcome> check_syntax(std::string_view source_code,
                                             const ResourceLimits& limits,
                                             const InterpreterSpec& interpreter);

/// True when the process may create a private network namespace.
bool network_isolation_available();

}  // namespace hallucheck
