#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include "hallucheck/errors.hpp"
#include "hallucheck/gateway.hpp"
#include "httplib.h"

namespace hallucheck {
namespace {

namespace fs = std::filesystem;

Task sample_task() {
  Task t;
  t.task_id = "t1";
  t.question = "Add two numbers.";
  t.test_cases = {{"1 2\n", "3\n"}};
  return t;
}

TEST(RenderInstruction, Substitutes) {
  ResourceLimits limits{2000, 64LL << 20};
  auto gi = render_instruction("Q", limits, "Solve: {question} (time {wall_time_ms} ms)");
  EXPECT_EQ(gi.rendered, "Solve: Q (time 2000 ms)");
  EXPECT_EQ(render_instruction("Q", limits, "mem={memory_bytes}").rendered, "mem=67108864");
}

TEST(RenderInstruction, NoPlaceholdersIsIdentity) {
  EXPECT_EQ(render_instruction("Q", {}, "just text").rendered, "just text");
  EXPECT_EQ(render_instruction("Q", {}, "a {{literal}} b").rendered, "a {literal} b");
}

TEST(RenderInstruction, UnknownPlaceholderIsNamed) {
  try {
    render_instruction("Q", {}, "time {walltime}");
    FAIL();
  } catch (const TemplateError& e) {
    EXPECT_NE(std::string(e.what()).find("walltime"), std::string::npos);
  }
  EXPECT_THROW(render_instruction("Q", {}, "open {question"), TemplateError);
}

TEST(RenderInstruction, DefaultTemplateResolves) {
  auto gi = render_instruction("Count pairs.", {}, kDefaultInstructionTemplate);
  EXPECT_EQ(gi.rendered.find('{'), std::string::npos);
  EXPECT_NE(gi.rendered.find("5000 ms"), std::string::npos);
  EXPECT_NE(gi.rendered.find("Count pairs."), std::string::npos);
  EXPECT_EQ(gi.rendered, render_instruction("Count pairs.", {}, kDefaultInstructionTemplate).rendered);
}

TEST(ExtractCode, SpecExamples) {
  EXPECT_EQ(extract_code("Here is code:\n```\nprint(1)\n```"), "print(1)");
  EXPECT_EQ(extract_code("print(1)"), "print(1)");
  EXPECT_EQ(extract_code("a\n```python\nfirst()\n```\nb\n```\nsecond()\n```\n"), "first()");
}

TEST(ExtractCode, KeepsTrailingWhitespaceAndHandlesTruncation) {
  EXPECT_EQ(extract_code("```\nx = 1   \ny = 2\t\n```"), "x = 1   \ny = 2\t");
  EXPECT_EQ(extract_code("```python\nf(1)\nf(2)\nf("), "f(1)\nf(2)\nf(");
}

TEST(ExtractCode, Idempotent) {
  const char* inputs[] = {
      "plain", "```\nprint(1)\n```", "text\n```py\na\nb\n```\nmore", "```\nunclosed\n",
      "", "``` not a fence start", "x\n```\n\n```",
  };
  for (const char* in : inputs) {
    auto once = extract_code(in);
    if (once.find("```") == std::string::npos) EXPECT_EQ(extract_code(once), once) << in;
  }
}

class Providers : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("hallucheck-gw-" +
            std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  fs::path dir_;
};

TEST_F(Providers, FileProviderLooksUpStoredResponse) {
  std::ofstream(dir_ / "c.jsonl")
      << R"j({"task_id": "t1", "model_id": "m", "raw_response": "```\nprint(3)\n```"})j" "\n";
  ProviderConfig cfg;
  cfg.model_id = "m";
  cfg.path = dir_ / "c.jsonl";
  auto task = sample_task();
  const auto before = task;
  auto gi = render_instruction(task.question, task.limits, kDefaultInstructionTemplate);
  auto c = fetch_completion(task, cfg, gi);
  EXPECT_EQ(c.raw_response, "```\nprint(3)\n```");
  EXPECT_EQ(c.source_code, "print(3)");
  EXPECT_EQ(c.model_id, "m");
  EXPECT_EQ(task, before);

  Task other = task;
  other.task_id = "missing";
  EXPECT_THROW(fetch_completion(other, cfg, gi), ProviderError);
}

TEST_F(Providers, ConfigValidation) {
  ProviderConfig file;
  file.model_id = "m";
  EXPECT_THROW(file.validate(), ConfigError);  // no path
  ProviderConfig http;
  http.endpoint = "http://127.0.0.1:1/x";
  EXPECT_THROW(http.validate(), ConfigError);  // no model
  http.model_id = "m";
  http.max_retries = -1;
  EXPECT_THROW(http.validate(), ConfigError);
}

class FakeServer {
 public:
  explicit FakeServer(std::function<void(const httplib::Request&, httplib::Response&)> h) {
    server_.Post("/v1/complete", std::move(h));
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeServer() {
    server_.stop();
    thread_.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1/complete"; }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

ProviderConfig http_config(const std::string& url) {
  ProviderConfig cfg;
  cfg.endpoint = url;
  cfg.model_id = "fake-model";
  cfg.backoff_ms = 1;
  cfg.request_timeout_ms = 5000;
  return cfg;
}

TEST_F(Providers, HttpReturnsTextVerbatim) {
  std::string seen_body, seen_auth;
  FakeServer server([&](const httplib::Request& req, httplib::Response& res) {
    seen_body = req.body;
    seen_auth = req.get_header_value("Authorization");
    res.set_content(R"j({"text": "print(1)"})j", "application/json");
  });
  ::setenv("HALLUCHECK_TEST_TOKEN", "secret", 1);
  auto cfg = http_config(server.url());
  cfg.auth_token_env = "HALLUCHECK_TEST_TOKEN";
  cfg.extra = {{"temperature", 0}};
  auto task = sample_task();
  auto c = fetch_completion(task, cfg, render_instruction(task.question, task.limits, "{question}"));
  EXPECT_EQ(c.raw_response, "print(1)");
  EXPECT_FALSE(c.truncated);
  EXPECT_EQ(seen_auth, "Bearer secret");
  auto body = Json::parse(seen_body);
  EXPECT_EQ(body["model"], "fake-model");
  EXPECT_EQ(body["prompt"], "Add two numbers.");
  EXPECT_EQ(body["temperature"], 0);
}

TEST_F(Providers, RetriesServerErrorsThenSucceeds) {
  std::atomic<int> calls{0};
  FakeServer server([&](const httplib::Request&, httplib::Response& res) {
    if (++calls <= 2) {
      res.status = 500;
      return;
    }
    res.set_content(R"j({"text": "ok", "finish_reason": "length"})j", "application/json");
  });
  auto cfg = http_config(server.url());
  cfg.max_retries = 2;
  auto task = sample_task();
  auto c = fetch_completion(task, cfg, render_instruction("", {}, "x"));
  EXPECT_EQ(calls.load(), 3);
  EXPECT_EQ(c.raw_response, "ok");
  EXPECT_TRUE(c.truncated);

  calls = 0;
  cfg.max_retries = 1;
  EXPECT_THROW(fetch_completion(task, cfg, render_instruction("", {}, "x")), ProviderError);
  EXPECT_EQ(calls.load(), 2);
}

TEST_F(Providers, ClientErrorCarriesStatusWithoutRetry) {
  std::atomic<int> calls{0};
  FakeServer server([&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.status = 404;
  });
  auto cfg = http_config(server.url());
  try {
    fetch_completion(sample_task(), cfg, render_instruction("", {}, "x"));
    FAIL();
  } catch (const ProviderError& e) {
    EXPECT_EQ(e.http_status(), 404);
  }
  EXPECT_EQ(calls.load(), 1);
}

TEST_F(Providers, UnsetAuthVariableIsConfigError) {
  ::unsetenv("HALLUCHECK_TEST_UNSET");
  auto cfg = http_config("http://127.0.0.1:9/none");
  cfg.auth_token_env = "HALLUCHECK_TEST_UNSET";
  EXPECT_THROW(fetch_completion(sample_task(), cfg, render_instruction("", {}, "x")), ConfigError);
}

TEST_F(Providers, UnreachableEndpointExhaustsRetries) {
  auto cfg = http_config("http://127.0.0.1:9/none");
  cfg.max_retries = 1;
  cfg.request_timeout_ms = 500;
  EXPECT_THROW(fetch_completion(sample_task(), cfg, render_instruction("", {}, "x")), ProviderError);
}

TEST_F(Providers, CacheServesRepeatRequests) {
  std::atomic<int> calls{0};
  FakeServer server([&](const httplib::Request&, httplib::Response& res) {
    ++calls;
    res.set_content(R"j({"text": "print(7)"})j", "application/json");
  });
  auto cfg = http_config(server.url());
  cfg.cache_dir = dir_ / "cache";
  auto task = sample_task();
  auto gi = render_instruction("", {}, "x");
  auto first = fetch_completion(task, cfg, gi);
  auto second = fetch_completion(task, cfg, gi);
  EXPECT_EQ(first, second);
  EXPECT_EQ(calls.load(), 1);
  EXPECT_TRUE(fs::exists(cache_file(cfg.cache_dir, task.task_id, cfg.model_id)));

  // The cache directory also works as a file provider.
  ProviderConfig offline;
  offline.model_id = cfg.model_id;
  offline.path = cfg.cache_dir;
  EXPECT_EQ(fetch_completion(task, offline, gi).raw_response, "print(7)");
}

}  // namespace
}  // namespace hallucheck
