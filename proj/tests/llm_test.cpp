#include <doctest.h>

#include <filesystem>

#include <json.hpp>

#include "pathtest/errors.hpp"
#include "pathtest/llm.hpp"
#include "pathtest/util.hpp"

namespace fs = std::filesystem;
using namespace pathtest;
using llm::ChatRequest;
using llm::Message;
using llm::Stage;

namespace {

ChatRequest req(Stage stage, const std::string& user_text,
                const std::string& fn = "f") {
  return ChatRequest(stage, {{"user", user_text}}, fn);
}

}  // namespace

TEST_CASE("stage names round trip") {
  for (auto s : {Stage::Describe, Stage::Opmap, Stage::Synth, Stage::Repair}) {
    auto back = llm::stage_from_name(llm::stage_name(s));
    REQUIRE(back.has_value());
    CHECK(*back == s);
  }
  CHECK_FALSE(llm::stage_from_name("bogus").has_value());
}

TEST_CASE("request temperature is fixed by stage at construction") {
  CHECK(req(Stage::Describe, "x").temperature() == 0.0);
  CHECK(req(Stage::Opmap, "x").temperature() == 0.0);
  CHECK(req(Stage::Synth, "x").temperature() == 0.0);
  CHECK(req(Stage::Repair, "x").temperature() == 0.1);

  llm::TemperaturePolicy hot{0.3, 0.9};
  ChatRequest r(Stage::Synth, {{"user", "x"}}, "f", hot);
  CHECK(r.temperature() == 0.3);
  ChatRequest fix(Stage::Repair, {{"user", "x"}}, "f", hot);
  CHECK(fix.temperature() == 0.9);
}

TEST_CASE("fingerprints ignore whitespace churn but respect stage and text") {
  auto a = llm::request_fingerprint(req(Stage::Synth, "write  a\ntest"));
  auto b = llm::request_fingerprint(req(Stage::Synth, "write a test"));
  auto c = llm::request_fingerprint(req(Stage::Repair, "write a test"));
  auto d = llm::request_fingerprint(req(Stage::Synth, "write another test"));
  CHECK(a == b);
  CHECK(a != c);
  CHECK(a != d);
}

TEST_CASE("usage ledger conserves tokens across both groupings") {
  llm::UsageLedger ledger;
  ledger.record(Stage::Describe, "insert", {100, 20});
  ledger.record(Stage::Synth, "insert", {200, 150});
  ledger.record(Stage::Synth, "search", {180, 140});
  ledger.record(Stage::Repair, "search", {220, 90});

  CHECK(ledger.conserved());
  auto total = ledger.total();
  CHECK(total.requests == 4);
  CHECK(total.prompt_tokens == 700);
  CHECK(total.completion_tokens == 400);

  auto by_stage = ledger.per_stage();
  CHECK(by_stage["synth"].requests == 2);
  CHECK(by_stage["synth"].prompt_tokens == 380);
  auto by_fn = ledger.per_function();
  CHECK(by_fn["insert"].requests == 2);
  CHECK(by_fn["search"].completion_tokens == 230);

  auto parsed = nlohmann::json::parse(ledger.to_json());
  CHECK(parsed.contains("per_stage"));
  CHECK(parsed.contains("per_function"));
  CHECK(parsed.contains("total"));
}

TEST_CASE("scripted client match precedence: fingerprint, contains, queue, default") {
  llm::ScriptedLlmClient client;
  auto r = req(Stage::Synth, "please synthesize the insert test");
  auto fp = llm::request_fingerprint(r);

  client.set_default_response(Stage::Synth, "default");
  client.push_queue_response(Stage::Synth, "queued");
  client.add_contains_response(Stage::Synth, {"insert"}, "by-contains");
  client.add_fingerprint_response(Stage::Synth, fp, "by-fingerprint");

  CHECK(client.chat(r).text == "by-fingerprint");

  auto other = req(Stage::Synth, "synthesize the insert test please");
  CHECK(client.chat(other).text == "by-contains");

  auto neither = req(Stage::Synth, "unrelated prompt");
  CHECK(client.chat(neither).text == "queued");
  CHECK(client.chat(neither).text == "default");  // queue exhausted
}

TEST_CASE("contains requires every needle and respects the stage") {
  llm::ScriptedLlmClient client;
  client.add_contains_response(Stage::Opmap, {"alpha", "beta"}, "both");
  CHECK_THROWS_AS(client.chat(req(Stage::Opmap, "only alpha here")), ScriptMiss);
  CHECK(client.chat(req(Stage::Opmap, "beta then alpha")).text == "both");
  // same text at a different stage misses
  CHECK_THROWS_AS(client.chat(req(Stage::Synth, "beta then alpha")), ScriptMiss);
}

TEST_CASE("script misses name the stage") {
  llm::ScriptedLlmClient client;
  try {
    client.chat(req(Stage::Describe, "hello"));
    FAIL("expected ScriptMiss");
  } catch (const ScriptMiss& e) {
    CHECK(std::string(e.what()).find("describe") != std::string::npos);
  }
}

TEST_CASE("every request lands in history with its temperature") {
  llm::ScriptedLlmClient client;
  client.set_default_response(Stage::Synth, "s");
  client.set_default_response(Stage::Repair, "r");
  client.chat(req(Stage::Synth, "one"));
  client.chat(req(Stage::Repair, "two"));

  auto h = client.history();
  REQUIRE(h.size() == 2);
  CHECK(h[0].stage == Stage::Synth);
  CHECK(h[0].temperature == 0.0);
  CHECK(h[1].stage == Stage::Repair);
  CHECK(h[1].temperature == 0.1);
  CHECK_FALSE(h[0].fingerprint.empty());
}

TEST_CASE("scripted responses feed the usage ledger") {
  llm::ScriptedLlmClient client;
  client.set_default_response(Stage::Describe, "something");
  client.chat(req(Stage::Describe, "describe insert", "insert"));
  auto total = client.ledger().total();
  CHECK(total.requests == 1);
  CHECK(total.prompt_tokens > 0);  // estimated when the script gives none
  CHECK(client.ledger().conserved());
}

TEST_CASE("script files load entries, queues and defaults") {
  auto dir = util::make_temp_dir("llmscript");
  util::atomic_write(dir / "reply.txt", "file-based reply");
  util::atomic_write(dir / "script.json", R"({
    "responses": [
      {"stage": "synth", "contains": ["needle"], "response_file": "reply.txt",
       "prompt_tokens": 11, "completion_tokens": 7}
    ],
    "queues": {"repair": [{"text": "first fix"}, {"text": "second fix"}]},
    "defaults": {"describe": {"text": "a description"}}
  })");

  llm::ScriptedLlmClient client(dir / "script.json");
  auto resp = client.chat(req(Stage::Synth, "contains the needle here"));
  CHECK(resp.text == "file-based reply");
  CHECK(resp.usage.prompt_tokens == 11);
  CHECK(resp.usage.completion_tokens == 7);
  CHECK(client.chat(req(Stage::Repair, "x")).text == "first fix");
  CHECK(client.chat(req(Stage::Repair, "x")).text == "second fix");
  CHECK(client.chat(req(Stage::Describe, "x")).text == "a description");
  fs::remove_all(dir);
}

TEST_CASE("malformed scripts are rejected loudly") {
  auto dir = util::make_temp_dir("llmbad");
  util::atomic_write(dir / "notjson.json", "{nope");
  CHECK_THROWS_AS(llm::ScriptedLlmClient(dir / "notjson.json"), MalformedScript);

  util::atomic_write(dir / "badstage.json",
                     R"({"responses": [{"stage": "paint", "contains": ["x"], "text": "y"}]})");
  CHECK_THROWS_AS(llm::ScriptedLlmClient(dir / "badstage.json"), MalformedScript);

  util::atomic_write(dir / "nomatcher.json",
                     R"({"responses": [{"stage": "synth", "text": "y"}]})");
  CHECK_THROWS_AS(llm::ScriptedLlmClient(dir / "nomatcher.json"), MalformedScript);

  util::atomic_write(dir / "notext.json",
                     R"({"responses": [{"stage": "synth", "contains": ["x"]}]})");
  CHECK_THROWS_AS(llm::ScriptedLlmClient(dir / "notext.json"), MalformedScript);
  fs::remove_all(dir);
}
