#include "hallucheck/sandbox.hpp"

#include <fcntl.h>
#include <poll.h>
#include <sched.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/stat.h>
#include <sys/syscall.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <mutex>
#include <sstream>

#include "hallucheck/errors.hpp"

namespace hallucheck {

namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

constexpr std::string_view kStatusNames[] = {
    "Pass",          "WrongOutput",         "RuntimeFailure", "TimeLimitExceeded",
    "MemoryLimitExceeded", "SyntaxFailure", "SandboxError"};

// Substrings of stderr that show the allocator gave up.
constexpr std::string_view kMemoryMarkers[] = {
    "MemoryError", "Cannot allocate memory", "std::bad_alloc",
    "out of memory"};

constexpr std::string_view kSyntaxNames[] = {"SyntaxError", "IndentationError",
                                             "TabError"};

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Fd& operator=(Fd&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  ~Fd() { reset(); }

  int get() const { return fd_; }
  explicit operator bool() const { return fd_ >= 0; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

struct Pipe {
  Fd read;
  Fd write;
};

Pipe make_pipe() {
  int fds[2];
  if (::pipe2(fds, O_CLOEXEC) != 0) {
    throw HarnessError(std::string("pipe2: ") + std::strerror(errno));
  }
  return {Fd(fds[0]), Fd(fds[1])};
}

class TempDir {
 public:
  TempDir() {
    auto templ = (fs::temp_directory_path() / "hallucheck-XXXXXX").string();
    if (::mkdtemp(templ.data()) == nullptr) {
      throw HarnessError(std::string("mkdtemp: ") + std::strerror(errno));
    }
    path_ = templ;
    ::chmod(path_.c_str(), 0777);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

void ignore_sigpipe_once() {
  static std::once_flag flag;
  std::call_once(flag, [] { ::signal(SIGPIPE, SIG_IGN); });
}

std::string resolve_executable(const std::string& name) {
  if (name.find('/') != std::string::npos) {
    return ::access(name.c_str(), X_OK) == 0 ? name : std::string{};
  }
  const char* path_env = std::getenv("PATH");
  std::string_view path = path_env ? path_env : "/usr/local/bin:/usr/bin:/bin";
  while (!path.empty()) {
    auto sep = path.find(':');
    auto dir = path.substr(0, sep);
    if (!dir.empty()) {
      auto candidate = std::string(dir) + "/" + name;
      if (::access(candidate.c_str(), X_OK) == 0) return candidate;
    }
    if (sep == std::string_view::npos) break;
    path.remove_prefix(sep + 1);
  }
  return {};
}

std::vector<std::string> substitute_file(const std::vector<std::string>& argv,
                                         const std::string& file) {
  std::vector<std::string> out;
  bool used = false;
  for (const auto& a : argv) {
    if (a == "{file}") {
      out.push_back(file);
      used = true;
    } else {
      out.push_back(a);
    }
  }
  if (!used) out.push_back(file);
  return out;
}

bool try_unshare_network() {
  if (::unshare(CLONE_NEWNET) == 0) return true;
  return ::unshare(CLONE_NEWUSER | CLONE_NEWNET) == 0;
}

struct ChildReport {
  int stage;
  int err;
};

enum ChildStage : int { kStageChdir = 1, kStageNetwork, kStageRlimit, kStageExec };

struct SpawnResult {
  ProcessExit exit;
  std::string out;
  std::string err;
  std::int64_t wall_ms = 0;
  std::string fault;  // non-empty on harness failure
};

void append_capped(std::string& buf, const char* data, std::size_t n,
                   std::int64_t cap, bool keep_tail) {
  buf.append(data, n);
  auto limit = static_cast<std::size_t>(cap);
  if (buf.size() > limit) {
    if (keep_tail) {
      buf.erase(0, buf.size() - limit);
    } else {
      buf.resize(limit);
    }
  }
}

SpawnResult spawn(const std::vector<std::string>& argv, const fs::path& workdir,
                  std::string_view input, std::int64_t wall_ms,
                  std::int64_t memory_bytes, const SandboxOptions& options,
                  ProcessExit::Stage stage) {
  SpawnResult result;
  result.exit.stage = stage;
  result.exit.memory_limit_bytes = memory_bytes;

  const std::string exe = resolve_executable(argv.at(0));
  if (exe.empty()) {
    result.fault = "interpreter not found: " + argv[0];
    return result;
  }

  // Everything the child touches is prepared before fork: the parent may be
  // multi-threaded, so the child only issues system calls.
  std::vector<std::string> env_storage = {
      std::string("PATH=") +
          (std::getenv("PATH") ? std::getenv("PATH")
                               : "/usr/local/bin:/usr/bin:/bin"),
      "LANG=C.UTF-8",
      "LC_ALL=C.UTF-8",
      "HOME=" + workdir.string(),
      "TMPDIR=" + workdir.string(),
      "PYTHONHASHSEED=0",
      "PYTHONDONTWRITEBYTECODE=1",
      "PYTHONIOENCODING=utf-8",
  };
  std::vector<char*> envp;
  for (auto& e : env_storage) envp.push_back(e.data());
  envp.push_back(nullptr);
  std::vector<std::string> argv_storage = argv;
  std::vector<char*> argvp;
  for (auto& a : argv_storage) argvp.push_back(a.data());
  argvp.push_back(nullptr);
  const std::string workdir_str = workdir.string();

  const auto cpu_seconds =
      static_cast<rlim_t>((wall_ms + 999) / 1000 + 1);
  const bool require_netns = options.require_network_isolation;

  Pipe in = make_pipe();
  Pipe out = make_pipe();
  Pipe err = make_pipe();
  Pipe report = make_pipe();

  const auto start = Clock::now();
  pid_t pid = ::fork();
  if (pid < 0) {
    result.fault = std::string("fork: ") + std::strerror(errno);
    return result;
  }
  if (pid == 0) {
    auto fail = [&](int st) {
      ChildReport r{st, errno};
      [[maybe_unused]] auto n = ::write(report.write.get(), &r, sizeof r);
      ::_exit(127);
    };
    ::setpgid(0, 0);
    ::signal(SIGPIPE, SIG_DFL);
    ::dup2(in.read.get(), STDIN_FILENO);
    ::dup2(out.write.get(), STDOUT_FILENO);
    ::dup2(err.write.get(), STDERR_FILENO);
    if (::chdir(workdir_str.c_str()) != 0) fail(kStageChdir);
    if (!try_unshare_network() && require_netns) fail(kStageNetwork);
    struct rlimit as_limit{static_cast<rlim_t>(memory_bytes),
                           static_cast<rlim_t>(memory_bytes)};
    struct rlimit cpu_limit{cpu_seconds, cpu_seconds + 1};
    struct rlimit no_core{0, 0};
    struct rlimit fsize{64u << 20, 64u << 20};
    if (::setrlimit(RLIMIT_AS, &as_limit) != 0 ||
        ::setrlimit(RLIMIT_CPU, &cpu_limit) != 0 ||
        ::setrlimit(RLIMIT_CORE, &no_core) != 0 ||
        ::setrlimit(RLIMIT_FSIZE, &fsize) != 0) {
      fail(kStageRlimit);
    }
    ::execve(exe.c_str(), argvp.data(), envp.data());
    fail(kStageExec);
  }

  ::setpgid(pid, pid);  // races the child's own call; either one wins
  in.read.reset();
  out.write.reset();
  err.write.reset();
  report.write.reset();

  ChildReport child_report{};
  ssize_t got;
  do {
    got = ::read(report.read.get(), &child_report, sizeof child_report);
  } while (got < 0 && errno == EINTR);
  if (got == static_cast<ssize_t>(sizeof child_report)) {
    int status = 0;
    ::waitpid(pid, &status, 0);
    static constexpr const char* kStageNames[] = {"", "chdir", "network namespace",
                                                  "setrlimit", "exec"};
    result.fault = std::string(kStageNames[child_report.stage]) + ": " +
                   std::strerror(child_report.err);
    return result;
  }

  ::fcntl(in.write.get(), F_SETFL, O_NONBLOCK);
  std::size_t written = 0;
  if (input.empty()) in.write.reset();

  const auto deadline = start + std::chrono::milliseconds(wall_ms);
  // pidfd turns child exit into a poll event; without it, poll in short
  // slices and check with WNOHANG.
  Fd pidfd(static_cast<int>(::syscall(SYS_pidfd_open, pid, 0)));
  bool timed_out = false;
  bool reaped = false;
  int status = 0;
  struct rusage usage{};
  Clock::time_point drain_deadline = deadline;
  char buf[65536];

  auto try_reap = [&] {
    pid_t r;
    do {
      r = ::wait4(pid, &status, WNOHANG, &usage);
    } while (r < 0 && errno == EINTR);
    if (r == pid) {
      reaped = true;
      // Descendants may still hold the output pipes open.
      ::kill(-pid, SIGKILL);
      drain_deadline = std::min(deadline, Clock::now() + std::chrono::milliseconds(200));
    }
  };

  while (true) {
    if (!reaped) try_reap();
    if (reaped && !out.read && !err.read) break;
    auto now = Clock::now();
    if (now >= (reaped ? drain_deadline : deadline)) {
      if (!reaped) timed_out = true;
      break;
    }
    auto remaining =
        std::chrono::duration_cast<std::chrono::milliseconds>(
            (reaped ? drain_deadline : deadline) - now)
            .count() +
        1;
    if (!reaped && !pidfd) remaining = std::min<std::int64_t>(remaining, 10);
    pollfd fds[4];
    int nfds = 0;
    int out_idx = -1, err_idx = -1, in_idx = -1, pid_idx = -1;
    if (out.read) {
      out_idx = nfds;
      fds[nfds++] = {out.read.get(), POLLIN, 0};
    }
    if (err.read) {
      err_idx = nfds;
      fds[nfds++] = {err.read.get(), POLLIN, 0};
    }
    if (in.write) {
      in_idx = nfds;
      fds[nfds++] = {in.write.get(), POLLOUT, 0};
    }
    if (!reaped && pidfd) {
      pid_idx = nfds;
      fds[nfds++] = {pidfd.get(), POLLIN, 0};
    }
    int rc = ::poll(fds, static_cast<nfds_t>(nfds), static_cast<int>(remaining));
    if (rc < 0) {
      if (errno == EINTR) continue;
      result.fault = std::string("poll: ") + std::strerror(errno);
      break;
    }
    if (out_idx >= 0 && fds[out_idx].revents) {
      ssize_t n = ::read(out.read.get(), buf, sizeof buf);
      if (n > 0) {
        append_capped(result.out, buf, static_cast<std::size_t>(n),
                      options.stdout_cap_bytes, false);
      } else if (n == 0 || errno != EINTR) {
        out.read.reset();
      }
    }
    if (err_idx >= 0 && fds[err_idx].revents) {
      ssize_t n = ::read(err.read.get(), buf, sizeof buf);
      if (n > 0) {
        append_capped(result.err, buf, static_cast<std::size_t>(n),
                      options.stderr_cap_bytes, true);
      } else if (n == 0 || errno != EINTR) {
        err.read.reset();
      }
    }
    if (in_idx >= 0 && fds[in_idx].revents) {
      if (fds[in_idx].revents & (POLLERR | POLLHUP)) {
        in.write.reset();
      } else {
        ssize_t n = ::write(in.write.get(), input.data() + written,
                            input.size() - written);
        if (n > 0) written += static_cast<std::size_t>(n);
        if ((n < 0 && errno != EAGAIN && errno != EINTR) ||
            written == input.size()) {
          in.write.reset();
        }
      }
    }
    if (pid_idx >= 0 && fds[pid_idx].revents) try_reap();
  }
  in.write.reset();

  if (!reaped) {
    ::kill(-pid, SIGKILL);
    ::kill(pid, SIGKILL);
    while (::wait4(pid, &status, 0, &usage) < 0 && errno == EINTR) {
    }
  }
  // Stray descendants share the process group.
  ::kill(-pid, SIGKILL);
  const auto end = Clock::now();
  result.wall_ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(end - start).count();

  result.exit.killed_by_timer = timed_out;
  if (WIFEXITED(status)) {
    result.exit.exit_code = WEXITSTATUS(status);
  } else if (WIFSIGNALED(status)) {
    result.exit.term_signal = WTERMSIG(status);
    if (WTERMSIG(status) == SIGXCPU) result.exit.killed_by_timer = true;
  }
  result.exit.peak_memory_bytes = static_cast<std::int64_t>(usage.ru_maxrss) * 1024;
  return result;
}

std::string_view rstrip(std::string_view s) {
  auto end = s.find_last_not_of(" \t\r\n\v\f");
  return end == std::string_view::npos ? std::string_view{} : s.substr(0, end + 1);
}

std::vector<std::string_view> normalized_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (true) {
    auto eol = text.find('\n', pos);
    lines.push_back(rstrip(text.substr(
        pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos)));
    if (eol == std::string_view::npos) break;
    pos = eol + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

std::vector<std::string_view> tokens(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

std::optional<double> parse_decimal(std::string_view tok) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

bool numeric_line_equal(std::string_view a, std::string_view b) {
  auto ta = tokens(a);
  auto tb = tokens(b);
  if (ta.size() != tb.size()) return false;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    if (ta[i] == tb[i]) continue;
    auto va = parse_decimal(ta[i]);
    auto vb = parse_decimal(tb[i]);
    if (!va || !vb || std::fabs(*va - *vb) > 1e-6) return false;
  }
  return true;
}

bool is_exception_line(std::string_view line) {
  if (line.empty() || std::isspace(static_cast<unsigned char>(line[0]))) {
    return false;
  }
  auto colon = line.find(':');
  auto name = line.substr(0, colon);
  if (name.empty() || !(std::isalpha(static_cast<unsigned char>(name[0])) ||
                        name[0] == '_')) {
    return false;
  }
  for (char c : name) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.')) {
      return false;
    }
  }
  return colon == std::string_view::npos || line.substr(colon, 2) == ": " ||
         colon + 1 == line.size();
}

bool contains(std::string_view hay, std::string_view needle) {
  return hay.find(needle) != std::string_view::npos;
}

void write_text(const fs::path& p, std::string_view text) {
  std::ofstream f(p, std::ios::binary);
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
}

// Tracebacks name the temporary directory; drop it so outcomes do not
// depend on where the program ran.
void strip_prefix(std::string& text, const std::string& prefix) {
  for (auto pos = text.find(prefix); pos != std::string::npos;
       pos = text.find(prefix, pos)) {
    text.erase(pos, prefix.size());
  }
}

ExecutionOutcome fault(std::string message, std::int64_t wall_ms = 0) {
  ExecutionOutcome o;
  o.status = ExecutionStatus::kSandboxError;
  o.harness_error = std::move(message);
  o.wall_time_ms = wall_ms;
  return o;
}

std::optional<ExecutionOutcome> run_check(const fs::path& dir,
                                          const ResourceLimits& limits,
                                          const InterpreterSpec& interpreter) {
  if (interpreter.check_argv.empty()) return std::nullopt;
  SandboxOptions opts;
  auto spawned = spawn(substitute_file(interpreter.check_argv,
                                       interpreter.source_file_name),
                       dir, {}, limits.wall_time_ms + 5000, limits.memory_bytes,
                       opts, ProcessExit::Stage::kCompile);
  if (!spawned.fault.empty()) return fault("syntax check: " + spawned.fault);
  strip_prefix(spawned.err, dir.string() + "/");
  auto term = classify_termination(spawned.exit, spawned.err);
  if (term.status != ExecutionStatus::kSyntaxFailure) return std::nullopt;
  ExecutionOutcome o;
  o.status = ExecutionStatus::kSyntaxFailure;
  o.exception_message = std::move(term.exception_message);
  o.traceback = std::move(term.traceback);
  o.wall_time_ms = spawned.wall_ms;
  o.peak_memory_bytes = spawned.exit.peak_memory_bytes;
  return o;
}

}  // namespace

std::string_view to_string(ExecutionStatus s) {
  return kStatusNames[static_cast<int>(s)];
}

ExecutionStatus execution_status_from_string(std::string_view s) {
  for (std::size_t i = 0; i < std::size(kStatusNames); ++i) {
    if (kStatusNames[i] == s) return static_cast<ExecutionStatus>(i);
  }
  throw IngestError("unknown execution status '" + std::string(s) + "'");
}

OrderedJson outcome_to_json(const ExecutionOutcome& o, bool with_measurements) {
  OrderedJson j;
  j["status"] = to_string(o.status);
  if (o.status == ExecutionStatus::kPass ||
      o.status == ExecutionStatus::kWrongOutput) {
    j["actual_output"] = o.actual_output;
  }
  if (!o.exception_name.empty()) j["exception_name"] = o.exception_name;
  if (!o.exception_message.empty()) j["exception_message"] = o.exception_message;
  if (!o.traceback.empty()) j["traceback"] = o.traceback;
  if (!o.harness_error.empty()) j["harness_error"] = o.harness_error;
  if (with_measurements) {
    j["wall_time_ms"] = o.wall_time_ms;
    if (o.peak_memory_bytes) {
      j["peak_memory_bytes"] = *o.peak_memory_bytes;
    } else {
      j["peak_memory_bytes"] = nullptr;
    }
  }
  return j;
}

ExecutionOutcome outcome_from_json(const Json& j) {
  ExecutionOutcome o;
  o.status = execution_status_from_string(j.at("status").get<std::string>());
  o.actual_output = j.value("actual_output", "");
  o.exception_name = j.value("exception_name", "");
  o.exception_message = j.value("exception_message", "");
  o.traceback = j.value("traceback", "");
  o.harness_error = j.value("harness_error", "");
  o.wall_time_ms = j.value("wall_time_ms", std::int64_t{0});
  if (j.contains("peak_memory_bytes") && j["peak_memory_bytes"].is_number()) {
    o.peak_memory_bytes = j["peak_memory_bytes"].get<std::int64_t>();
  }
  return o;
}

InterpreterSpec InterpreterSpec::from_command_line(std::string_view command) {
  InterpreterSpec spec;
  std::istringstream in{std::string(command)};
  std::vector<std::string> argv;
  for (std::string word; in >> word;) argv.push_back(word);
  if (argv.empty()) throw ConfigError("empty interpreter command");
  spec.run_argv = argv;
  // The default compile check is Python-specific; keep it only when the
  // interpreter is recognisably Python.
  auto base = fs::path(argv[0]).filename().string();
  if (base.rfind("python", 0) == 0) {
    spec.check_argv.front() = argv[0];
  } else {
    spec.check_argv.clear();
  }
  return spec;
}

bool compare_output(std::string_view actual, std::string_view expected,
                    bool numeric) {
  auto a = normalized_lines(actual);
  auto e = normalized_lines(expected);
  if (a.size() != e.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == e[i]) continue;
    if (!numeric || !numeric_line_equal(a[i], e[i])) return false;
  }
  return true;
}

Termination classify_termination(const ProcessExit& raw,
                                 std::string_view stderr_text) {
  Termination t;

  // Locate the final exception line. Python prints it unindented after the
  // last traceback block; only trust it when some traceback context exists.
  std::string exception_line;
  if (contains(stderr_text, "Traceback (most recent call last)") ||
      contains(stderr_text, "File \"")) {
    auto lines = normalized_lines(stderr_text);
    for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
      if (is_exception_line(*it)) {
        exception_line = std::string(*it);
        break;
      }
    }
  }
  std::string name;
  std::string message;
  if (!exception_line.empty()) {
    auto colon = exception_line.find(':');
    name = exception_line.substr(0, colon);
    if (auto dot = name.rfind('.'); dot != std::string::npos) {
      name = name.substr(dot + 1);
    }
    if (colon != std::string::npos && colon + 2 <= exception_line.size()) {
      message = exception_line.substr(std::min(colon + 2, exception_line.size()));
    }
  }
  if (auto tb = stderr_text.find("Traceback (most recent call last)");
      tb != std::string_view::npos) {
    t.traceback = std::string(stderr_text.substr(tb));
  } else if (!exception_line.empty()) {
    t.traceback = std::string(stderr_text);
  }

  const bool exited_cleanly = raw.exit_code && *raw.exit_code == 0;
  if (exited_cleanly && !raw.killed_by_timer) return t;

  bool memory_evidence = name == "MemoryError";
  for (auto marker : kMemoryMarkers) {
    if (contains(stderr_text, marker)) memory_evidence = true;
  }
  if (!raw.killed_by_timer && raw.term_signal && raw.peak_memory_bytes &&
      raw.memory_limit_bytes > 0 &&
      *raw.peak_memory_bytes * 10 >= raw.memory_limit_bytes * 9) {
    memory_evidence = true;  // OOM kill or allocator abort near the cap
  }

  const bool syntax_name =
      std::find(std::begin(kSyntaxNames), std::end(kSyntaxNames), name) !=
      std::end(kSyntaxNames);
  // A syntax error raised while compiling the program itself carries no
  // "Traceback" header; one raised by eval()/compile() at run time does.
  const bool compile_stage =
      raw.stage == ProcessExit::Stage::kCompile ||
      !contains(stderr_text, "Traceback (most recent call last)");
  if (syntax_name && compile_stage && !raw.killed_by_timer) {
    t.status = ExecutionStatus::kSyntaxFailure;
    t.exception_message = exception_line;
    return t;
  }
  if (memory_evidence) {
    t.status = ExecutionStatus::kMemoryLimitExceeded;
    t.exception_message = exception_line.empty() ? "memory limit reached"
                                                 : exception_line;
    return t;
  }
  if (raw.killed_by_timer) {
    t.status = ExecutionStatus::kTimeLimitExceeded;
    return t;
  }
  t.status = ExecutionStatus::kRuntimeFailure;
  if (name.empty()) {
    t.exception_name = "UnknownError";
    t.exception_message =
        raw.term_signal
            ? "terminated by signal " + std::to_string(*raw.term_signal)
            : "exit status " + std::to_string(raw.exit_code.value_or(-1));
  } else {
    t.exception_name = name;
    t.exception_message = message;
  }
  return t;
}

std::optional<ExecutionOutcome> check_syntax(std::string_view source_code,
                                             const ResourceLimits& limits,
                                             const InterpreterSpec& interpreter) {
  if (interpreter.check_argv.empty()) return std::nullopt;
  ignore_sigpipe_once();
  try {
    TempDir dir;
    write_text(dir.path() / interpreter.source_file_name, source_code);
    return run_check(dir.path(), limits, interpreter);
  } catch (const std::exception& e) {
    return fault(e.what());
  }
}

ExecutionOutcome execute(std::string_view source_code, const TestCase& test,
                         const ResourceLimits& limits,
                         const InterpreterSpec& interpreter,
                         const SandboxOptions& options) {
  ignore_sigpipe_once();
  ExecutionOutcome outcome;
  std::string stderr_text;
  try {
    limits.validate();
    if (interpreter.run_argv.empty()) return fault("empty interpreter command");
    TempDir dir;
    const auto program = dir.path() / interpreter.source_file_name;
    write_text(program, source_code);
    ::chmod(program.c_str(), 0644);

    std::optional<ExecutionOutcome> syntax;
    if (!options.skip_syntax_check) {
      syntax = run_check(dir.path(), limits, interpreter);
    }
    if (syntax) {
      outcome = std::move(*syntax);
    } else {
      auto spawned = spawn(
          substitute_file(interpreter.run_argv, interpreter.source_file_name),
          dir.path(), test.input, limits.wall_time_ms, limits.memory_bytes,
          options, ProcessExit::Stage::kRun);
      if (!spawned.fault.empty()) {
        outcome = fault(spawned.fault, spawned.wall_ms);
      } else {
        strip_prefix(spawned.err, dir.path().string() + "/");
        auto term = classify_termination(spawned.exit, spawned.err);
        outcome.status = term.status;
        outcome.exception_name = std::move(term.exception_name);
        outcome.exception_message = std::move(term.exception_message);
        outcome.traceback = std::move(term.traceback);
        outcome.wall_time_ms = spawned.wall_ms;
        outcome.peak_memory_bytes = spawned.exit.peak_memory_bytes;
        if (term.status == ExecutionStatus::kPass) {
          outcome.status = compare_output(spawned.out, test.expected_output,
                                          options.numeric_compare)
                               ? ExecutionStatus::kPass
                               : ExecutionStatus::kWrongOutput;
          outcome.actual_output = std::move(spawned.out);
        }
        stderr_text = std::move(spawned.err);
      }
    }
  } catch (const std::exception& e) {
    outcome = fault(e.what());
  }

  if (!options.artifact_dir.empty()) {
    std::error_code ec;
    fs::create_directories(options.artifact_dir, ec);
    if (!ec) {
      write_text(options.artifact_dir / "stdin", test.input);
      write_text(options.artifact_dir / "stdout", outcome.actual_output);
      write_text(options.artifact_dir / "stderr", stderr_text);
      write_text(options.artifact_dir / "outcome.json",
                 outcome_to_json(outcome, true).dump(2) + "\n");
    }
  }
  return outcome;
}

bool network_isolation_available() {
  static const bool available = [] {
    pid_t pid = ::fork();
    if (pid == 0) ::_exit(try_unshare_network() ? 0 : 1);
    if (pid < 0) return false;
    int status = 0;
    ::waitpid(pid, &status, 0);
    return WIFEXITED(status) && WEXITSTATUS(status) == 0;
  }();
  return available;
}

}  // namespace hallucheck
