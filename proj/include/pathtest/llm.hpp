#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace pathtest::llm {

enum class Stage { Describe, Opmap, Synth, Repair };

std::string stage_name(Stage s);
std::optional<Stage> stage_from_name(const std::string& name);

struct Message {
  std::string role;  // "system" | "user" | "assistant"
  std::string text;
};

// Temperatures per request class. Generation covers describe/opmap/synth.
struct TemperaturePolicy {
  double generation = 0.0;
  double repair = 0.1;
};

// Temperature is derived from the stage at construction and not assignable,
// so a request with the wrong temperature for its stage cannot be built.
class ChatRequest {
 public:
  ChatRequest(Stage stage, std::vector<Message> messages,
              std::string function_name,
              const TemperaturePolicy& temps = {},
              int max_output_tokens = 8192, std::string model_id = {})
      : stage(stage),
        messages(std::move(messages)),
        function_name(std::move(function_name)),
        max_output_tokens(max_output_tokens),
        model_id(std::move(model_id)),
        temperature_(stage == Stage::Repair ? temps.repair : temps.generation) {}

  double temperature() const { return temperature_; }

  Stage stage;
  std::vector<Message> messages;
  std::string function_name;  // accounting key; empty for project-level calls
  int max_output_tokens = 8192;
  std::string model_id;

 private:
  double temperature_;
};

struct Usage {
  long prompt_tokens = 0;
  long completion_tokens = 0;
};

struct ChatResponse {
  std::string text;
  Usage usage;
};

// Hash key a script uses to recognize a request: stable across
// whitespace-level prompt churn, sensitive to stage and message content.
std::string request_fingerprint(const ChatRequest& req);

struct StageTotals {
  long requests = 0;
  long prompt_tokens = 0;
  long completion_tokens = 0;
};

class UsageLedger {
 public:
  void record(Stage stage, const std::string& function_name, const Usage& u);
  std::map<std::string, StageTotals> per_stage() const;
  std::map<std::string, StageTotals> per_function() const;
  StageTotals total() const;
  // Conservation check: totals equal the per-stage sum and the per-function sum.
  bool conserved() const;
  std::string to_json() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, StageTotals> per_stage_;
  std::map<std::string, StageTotals> per_function_;
  StageTotals total_;
};

struct RecordedRequest {
  Stage stage;
  double temperature = 0.0;
  std::string function_name;
  std::string fingerprint;
  std::vector<Message> messages;
};

class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual ChatResponse chat(const ChatRequest& req) = 0;

  UsageLedger& ledger() { return ledger_; }
  const UsageLedger& ledger() const { return ledger_; }

  // Every request passes through here; kept for temperature audits.
  std::vector<RecordedRequest> history() const;

 protected:
  void record_request(const ChatRequest& req);
  UsageLedger ledger_;

 private:
  mutable std::mutex history_mu_;
  std::vector<RecordedRequest> history_;
};

// Deterministic mock driven by a JSON script file:
//   {
//     "responses": [
//       {"stage": "synth", "fingerprint": "<hex>", "text": "..."},
//       {"stage": "opmap", "contains": ["insert", "struct node"],
//        "response_file": "replies/opmap_insert.json",
//        "prompt_tokens": 120, "completion_tokens": 80}
//     ],
//     "queues":   {"repair": [{"text": "first"}, {"text": "second"}]},
//     "defaults": {"describe": {"text": "stub description"}}
//   }
// Match order: exact fingerprint, then first entry whose "contains" strings
// all appear in the request text, then the stage queue, then the stage
// default. Anything else raises ScriptMiss so fixture gaps stay loud.
class ScriptedLlmClient : public LlmClient {
 public:
  ScriptedLlmClient() = default;
  explicit ScriptedLlmClient(const std::filesystem::path& script_path);

  ChatResponse chat(const ChatRequest& req) override;

  // Programmatic scripting for unit tests.
  void add_fingerprint_response(Stage stage, const std::string& fingerprint,
                                std::string text, Usage usage = {});
  void add_contains_response(Stage stage, std::vector<std::string> needles,
                             std::string text, Usage usage = {});
  void push_queue_response(Stage stage, std::string text, Usage usage = {});
  void set_default_response(Stage stage, std::string text, Usage usage = {});

 private:
  struct Entry {
    Stage stage;
    std::string fingerprint;            // empty when a contains matcher
    std::vector<std::string> needles;   // all must occur in the request text
    std::string text;
    Usage usage;
    bool has_usage = false;
  };

  std::mutex mu_;
  std::vector<Entry> entries_;
  std::map<std::string, std::vector<Entry>> queues_;    // keyed by stage name
  std::map<std::string, Entry> defaults_;
};

struct HttpLlmOptions {
  std::string base_url;                // e.g. "https://api.example.com"
  std::string path = "/v1/chat/completions";
  std::string api_key_env = "PATHTEST_API_KEY";
  std::string model_id;
  int max_retries = 3;
  std::chrono::seconds timeout{120};
  double requests_per_minute = 60.0;   // token-bucket refill rate
};

class HttpLlmClient : public LlmClient {
 public:
  explicit HttpLlmClient(HttpLlmOptions opts);
  ChatResponse chat(const ChatRequest& req) override;

 private:
  void rate_limit();

  HttpLlmOptions opts_;
  std::string api_key_;
  std::mutex bucket_mu_;
  double tokens_;
  std::chrono::steady_clock::time_point last_refill_;
};

}  // namespace pathtest::llm
