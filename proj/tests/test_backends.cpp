#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <fstream>
#include <numeric>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "emrc/backend.hpp"
#include "emrc/concurrency.hpp"
#include "emrc/errors.hpp"
#include "support/helpers.hpp"

using namespace emrc;
using emrc::testing::TempDir;
using emrc::testing::make_scripted;
using nlohmann::json;

namespace {

RenderedPrompt prompt_for(const std::string& tmpl, const std::string& query) {
  return RenderedPrompt{tmpl, query, "prompt text"};
}

}  // namespace

TEST_CASE("backend kind ids round-trip and reject unknowns") {
  CHECK(backend_kind_id(BackendKind::Http) == "http");
  CHECK(backend_kind_id(BackendKind::Scripted) == "scripted");
  CHECK(parse_backend_kind("http") == BackendKind::Http);
  CHECK(parse_backend_kind("scripted") == BackendKind::Scripted);
  CHECK_THROWS_AS(parse_backend_kind("grpc"), ConfigError);
}

TEST_CASE("backend spec validation catches bad fields") {
  BackendSpec spec;
  spec.id = "m1";
  spec.kind = BackendKind::Scripted;
  CHECK_NOTHROW(spec.validate());

  SUBCASE("empty id") {
    spec.id.clear();
    CHECK_THROWS_AS(spec.validate(), ConfigError);
  }
  SUBCASE("http without endpoint") {
    spec.kind = BackendKind::Http;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
  }
  SUBCASE("non-positive timeout") {
    spec.timeout_ms = 0;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
  }
  SUBCASE("negative retries") {
    spec.max_retries = -1;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
  }
  SUBCASE("zero in-flight cap") {
    spec.max_in_flight = 0;
    CHECK_THROWS_AS(spec.validate(), ConfigError);
  }
}

TEST_CASE("backend spec json round-trips and applies defaults") {
  json value = {{"id", "gpt-x"},
                {"kind", "http"},
                {"endpoint", "http://localhost:9000/v1/chat/completions"},
                {"model", "gpt-x-large"},
                {"auth_env", "GPTX_TOKEN"}};
  BackendSpec spec = backend_spec_from_json(value);
  CHECK(spec.id == "gpt-x");
  CHECK(spec.kind == BackendKind::Http);
  CHECK(spec.timeout_ms == 60000);
  CHECK(spec.max_retries == 2);
  CHECK(spec.max_in_flight == 4);
  CHECK(spec.temperature == 0.0);
  CHECK(spec.retry_backoff_ms == 250);

  BackendSpec again = backend_spec_from_json(backend_spec_to_json(spec));
  CHECK(again.id == spec.id);
  CHECK(again.kind == spec.kind);
  CHECK(again.endpoint == spec.endpoint);
  CHECK(again.auth_env == spec.auth_env);
}

TEST_CASE("inline credentials in a backend spec are rejected") {
  for (const char* key : {"auth_token", "api_key", "token"}) {
    json value = {{"id", "m1"},
                  {"kind", "http"},
                  {"endpoint", "http://localhost:9000/v1"},
                  {key, "sk-secret"}};
    CAPTURE(key);
    CHECK_THROWS_WITH_AS(backend_spec_from_json(value),
                         doctest::Contains("auth_env"), ConfigError);
  }
}

TEST_CASE("scripted steps are consumed in order per key") {
  auto backend = make_scripted("m1");
  backend->add_reply("classify", "q1", "first");
  backend->add_reply("classify", "q1", "second");
  CHECK(backend->complete(prompt_for("classify", "q1")) == "first");
  CHECK(backend->complete(prompt_for("classify", "q1")) == "second");
  CHECK_THROWS_AS(backend->complete(prompt_for("classify", "q1")),
                  ScenarioExhaustedError);
}

TEST_CASE("sticky steps repeat forever") {
  auto backend = make_scripted("m1");
  backend->add_reply("answer_l1", "*", "Answer: B", /*sticky=*/true);
  for (int i = 0; i < 5; ++i) {
    CHECK(backend->complete(prompt_for("answer_l1", "q" + std::to_string(i))) ==
          "Answer: B");
  }
}

TEST_CASE("scripted lookup prefers the most specific key") {
  auto backend = make_scripted("m1");
  backend->add_reply("*", "*", "wild", true);
  backend->add_reply("classify", "*", "classify-any", true);
  backend->add_reply("classify", "q1", "classify-q1", true);
  backend->add_reply("*", "q1", "any-q1", true);

  CHECK(backend->complete(prompt_for("classify", "q1")) == "classify-q1");
  CHECK(backend->complete(prompt_for("classify", "q2")) == "classify-any");
  CHECK(backend->complete(prompt_for("judge", "q1")) == "any-q1");
  CHECK(backend->complete(prompt_for("judge", "q2")) == "wild");
}

TEST_CASE("exhausted specific keys fall through to wildcards") {
  auto backend = make_scripted("m1");
  backend->add_reply("classify", "q1", "specific");
  backend->add_reply("classify", "*", "fallback", true);
  CHECK(backend->complete(prompt_for("classify", "q1")) == "specific");
  CHECK(backend->complete(prompt_for("classify", "q1")) == "fallback");
}

TEST_CASE("scripted errors raise the matching exception type") {
  auto backend = make_scripted("m1");
  backend->add_error("classify", "q1", "timeout");
  backend->add_error("classify", "q1", "transport");
  CHECK_THROWS_AS(backend->complete(prompt_for("classify", "q1")), TimeoutError);
  CHECK_THROWS_AS(backend->complete(prompt_for("classify", "q1")), TransportError);
}

TEST_CASE("scenario files load as bare lists or step objects") {
  TempDir dir;
  json scenario = {
      {"steps",
       {{{"match", {{"template", "classify"}, {"query_id", "q1"}}},
         {"reply", "Department: Surgery\nDifficulty: low"}},
        {{"match", {{"template", "answer_l1"}}},
         {"reply", "Answer: A"},
         {"sticky", true}},
        {{"error", "timeout"}}}}};
  std::ofstream(dir.file("scenario.json")) << scenario.dump();

  BackendSpec spec;
  spec.id = "m1";
  spec.kind = BackendKind::Scripted;
  spec.script = dir.file("scenario.json");
  ScriptedBackend backend(spec);

  CHECK(backend.complete(prompt_for("classify", "q1")) ==
        "Department: Surgery\nDifficulty: low");
  CHECK(backend.complete(prompt_for("answer_l1", "q7")) == "Answer: A");
  CHECK(backend.complete(prompt_for("answer_l1", "q8")) == "Answer: A");
  // The bare error step matched (*, *).
  CHECK_THROWS_AS(backend.complete(prompt_for("judge", "q1")), TimeoutError);

  SUBCASE("steps without reply or error are rejected") {
    auto bad = make_scripted("m2");
    CHECK_THROWS_AS(bad->load_scenario(json::array({json::object()})), ConfigError);
    CHECK_THROWS_AS(bad->load_scenario(json{{"steps", "nope"}}), ConfigError);
  }
}

TEST_CASE("complete_parsed re-asks on parse failures up to the retry budget") {
  auto backend = make_scripted("m1", /*max_retries=*/2);
  backend->add_reply("answer_l1", "q1", "garbled");
  backend->add_reply("answer_l1", "q1", "still garbled");
  backend->add_reply("answer_l1", "q1", "Answer: C");

  int calls = 0;
  char answer = complete_parsed(*backend, prompt_for("answer_l1", "q1"),
                                [&](const std::string& raw) {
                                  ++calls;
                                  if (raw.rfind("Answer: ", 0) != 0) {
                                    throw ParseFailure("no answer in: " + raw);
                                  }
                                  return raw.back();
                                });
  CHECK(answer == 'C');
  CHECK(calls == 3);

  SUBCASE("budget exhausted propagates the last failure") {
    auto stubborn = make_scripted("m2", /*max_retries=*/1);
    stubborn->add_reply("answer_l1", "q1", "junk", true);
    CHECK_THROWS_AS(complete_parsed(*stubborn, prompt_for("answer_l1", "q1"),
                                    [](const std::string&) -> int {
                                      throw ParseFailure("junk");
                                    }),
                    ParseFailure);
  }

  SUBCASE("transport errors are not retried here") {
    auto flaky = make_scripted("m3", /*max_retries=*/2);
    flaky->add_error("answer_l1", "q1", "transport");
    flaky->add_reply("answer_l1", "q1", "Answer: A");
    CHECK_THROWS_AS(complete_parsed(*flaky, prompt_for("answer_l1", "q1"),
                                    [](const std::string& raw) { return raw; }),
                    TransportError);
  }
}

TEST_CASE("pool loads from json with unique ids in file order") {
  json config = {{"backends",
                  {{{"id", "m1"}, {"kind", "scripted"}},
                   {{"id", "m2"}, {"kind", "scripted"}},
                   {{"id", "m3"}, {"kind", "scripted"}}}}};
  BackendPool pool = BackendPool::from_json(config);
  CHECK(pool.size() == 3);
  CHECK(pool.ids() == std::vector<std::string>{"m1", "m2", "m3"});
  CHECK(pool.contains("m2"));
  CHECK_FALSE(pool.contains("m9"));
  CHECK(pool.get("m2").id() == "m2");
  CHECK(pool.at(0).id() == "m1");
  CHECK_THROWS_AS(pool.get("m9"), BackendUnavailableError);

  SUBCASE("duplicate ids are rejected") {
    json dup = {{"backends",
                 {{{"id", "m1"}, {"kind", "scripted"}},
                  {{"id", "m1"}, {"kind", "scripted"}}}}};
    CHECK_THROWS_WITH_AS(BackendPool::from_json(dup), doctest::Contains("duplicate"),
                         ConfigError);
  }
  SUBCASE("missing or empty backends list is rejected") {
    CHECK_THROWS_AS(BackendPool::from_json(json::object()), ConfigError);
    CHECK_THROWS_AS(BackendPool::from_json(json{{"backends", json::array()}}),
                    ConfigError);
    CHECK_THROWS_AS(BackendPool::from_json(json::array()), ConfigError);
  }
}

TEST_CASE("pool load reads the file and surfaces parse errors as config errors") {
  TempDir dir;
  std::ofstream(dir.file("pool.json"))
      << R"({"backends": [{"id": "m1", "kind": "scripted"}]})";
  BackendPool pool = BackendPool::load(dir.file("pool.json"));
  CHECK(pool.size() == 1);

  std::ofstream(dir.file("broken.json")) << "{ not json";
  CHECK_THROWS_AS(BackendPool::load(dir.file("broken.json")), ConfigError);
  CHECK_THROWS_AS(BackendPool::load(dir.file("missing.json")), ConfigError);
}

TEST_CASE("inflight limiter caps concurrent holders") {
  InflightLimiter limiter(3);
  CHECK(limiter.limit() == 3);
  CHECK(InflightLimiter(0).limit() == 1);

  std::atomic<int> active{0};
  std::atomic<int> peak{0};
  std::vector<std::thread> threads;
  for (int i = 0; i < 16; ++i) {
    threads.emplace_back([&] {
      InflightLimiter::Permit permit(limiter);
      int now = ++active;
      int prev = peak.load();
      while (prev < now && !peak.compare_exchange_weak(prev, now)) {
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(2));
      --active;
    });
  }
  for (auto& thread : threads) thread.join();
  CHECK(peak.load() <= 3);
  CHECK(active.load() == 0);
}

TEST_CASE("parallel_for covers every index exactly once") {
  for (std::size_t parallel : {std::size_t{1}, std::size_t{4}, std::size_t{32}}) {
    CAPTURE(parallel);
    std::vector<std::atomic<int>> hits(100);
    parallel_for(100, parallel, [&](std::size_t i) { ++hits[i]; });
    for (const auto& hit : hits) CHECK(hit.load() == 1);
  }
  // Zero items is a no-op.
  parallel_for(0, 4, [](std::size_t) { FAIL("should not run"); });
}

TEST_CASE("parallel_for rethrows the first worker exception") {
  std::atomic<int> ran{0};
  CHECK_THROWS_AS(parallel_for(64, 8,
                               [&](std::size_t i) {
                                 ++ran;
                                 if (i == 5) throw TransportError("boom");
                               }),
                  TransportError);
  // Workers stop picking up new work after a failure.
  CHECK(ran.load() <= 64);
}
