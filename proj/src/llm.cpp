#include "pathtest/llm.hpp"

#include <json.hpp>

#include <cmath>
#include <thread>

#include "pathtest/errors.hpp"
#include "pathtest/http.hpp"
#include "pathtest/util.hpp"

namespace pathtest::llm {

using nlohmann::json;

std::string stage_name(Stage s) {
  switch (s) {
    case Stage::Describe: return "describe";
    case Stage::Opmap: return "opmap";
    case Stage::Synth: return "synth";
    case Stage::Repair: return "repair";
  }
  return "unknown";
}

std::optional<Stage> stage_from_name(const std::string& name) {
  if (name == "describe") return Stage::Describe;
  if (name == "opmap") return Stage::Opmap;
  if (name == "synth") return Stage::Synth;
  if (name == "repair") return Stage::Repair;
  return std::nullopt;
}

std::string request_fingerprint(const ChatRequest& req) {
  std::string all = stage_name(req.stage);
  for (const auto& m : req.messages) {
    all += '\n';
    all += m.role;
    all += ':';
    all += m.text;
  }
  return util::fingerprint(all);
}

// ---------------------------------------------------------------------------
// UsageLedger
// ---------------------------------------------------------------------------

void UsageLedger::record(Stage stage, const std::string& function_name,
                         const Usage& u) {
  std::lock_guard lock(mu_);
  auto& s = per_stage_[stage_name(stage)];
  s.requests += 1;
  s.prompt_tokens += u.prompt_tokens;
  s.completion_tokens += u.completion_tokens;
  auto& f = per_function_[function_name.empty() ? "<project>" : function_name];
  f.requests += 1;
  f.prompt_tokens += u.prompt_tokens;
  f.completion_tokens += u.completion_tokens;
  total_.requests += 1;
  total_.prompt_tokens += u.prompt_tokens;
  total_.completion_tokens += u.completion_tokens;
}

std::map<std::string, StageTotals> UsageLedger::per_stage() const {
  std::lock_guard lock(mu_);
  return per_stage_;
}

std::map<std::string, StageTotals> UsageLedger::per_function() const {
  std::lock_guard lock(mu_);
  return per_function_;
}

StageTotals UsageLedger::total() const {
  std::lock_guard lock(mu_);
  return total_;
}

bool UsageLedger::conserved() const {
  std::lock_guard lock(mu_);
  StageTotals by_stage, by_fn;
  for (const auto& [_, t] : per_stage_) {
    by_stage.requests += t.requests;
    by_stage.prompt_tokens += t.prompt_tokens;
    by_stage.completion_tokens += t.completion_tokens;
  }
  for (const auto& [_, t] : per_function_) {
    by_fn.requests += t.requests;
    by_fn.prompt_tokens += t.prompt_tokens;
    by_fn.completion_tokens += t.completion_tokens;
  }
  auto eq = [](const StageTotals& a, const StageTotals& b) {
    return a.requests == b.requests && a.prompt_tokens == b.prompt_tokens &&
           a.completion_tokens == b.completion_tokens;
  };
  return eq(by_stage, total_) && eq(by_fn, total_);
}

std::string UsageLedger::to_json() const {
  std::lock_guard lock(mu_);
  json j;
  auto dump = [](const std::map<std::string, StageTotals>& m) {
    json out = json::object();
    for (const auto& [k, t] : m) {
      out[k] = {{"requests", t.requests},
                {"prompt_tokens", t.prompt_tokens},
                {"completion_tokens", t.completion_tokens}};
    }
    return out;
  };
  j["per_stage"] = dump(per_stage_);
  j["per_function"] = dump(per_function_);
  j["total"] = {{"requests", total_.requests},
                {"prompt_tokens", total_.prompt_tokens},
                {"completion_tokens", total_.completion_tokens}};
  return j.dump(2);
}

// ---------------------------------------------------------------------------
// LlmClient base
// ---------------------------------------------------------------------------

void LlmClient::record_request(const ChatRequest& req) {
  RecordedRequest r;
  r.stage = req.stage;
  r.temperature = req.temperature();
  r.function_name = req.function_name;
  r.fingerprint = request_fingerprint(req);
  r.messages = req.messages;
  std::lock_guard lock(history_mu_);
  history_.push_back(std::move(r));
}

std::vector<RecordedRequest> LlmClient::history() const {
  std::lock_guard lock(history_mu_);
  return history_;
}

// ---------------------------------------------------------------------------
// ScriptedLlmClient
// ---------------------------------------------------------------------------

namespace {

Usage estimate_usage(const ChatRequest& req, const std::string& reply) {
  std::size_t prompt_chars = 0;
  for (const auto& m : req.messages) prompt_chars += m.text.size();
  return {static_cast<long>(prompt_chars / 4 + 1),
          static_cast<long>(reply.size() / 4 + 1)};
}

}  // namespace

ScriptedLlmClient::ScriptedLlmClient(const std::filesystem::path& script_path) {
  std::string raw = util::read_file(script_path);
  json j;
  try {
    j = json::parse(raw);
  } catch (const json::parse_error& e) {
    throw MalformedScript(script_path.string() + ": " + e.what());
  }

  auto parse_entry = [&](const json& e, bool need_stage) {
    Entry entry;
    if (need_stage) {
      auto st = stage_from_name(e.value("stage", ""));
      if (!st) throw MalformedScript("entry missing or unknown stage: " + e.dump());
      entry.stage = *st;
    }
    if (e.contains("fingerprint")) entry.fingerprint = e["fingerprint"].get<std::string>();
    if (e.contains("contains")) {
      if (e["contains"].is_string()) {
        entry.needles.push_back(e["contains"].get<std::string>());
      } else {
        for (const auto& n : e["contains"]) entry.needles.push_back(n.get<std::string>());
      }
    }
    if (e.contains("response_file")) {
      entry.text = util::read_file(script_path.parent_path() /
                                   e["response_file"].get<std::string>());
    } else if (e.contains("text")) {
      entry.text = e["text"].get<std::string>();
    } else {
      throw MalformedScript("entry has neither text nor response_file: " + e.dump());
    }
    if (e.contains("prompt_tokens") || e.contains("completion_tokens")) {
      entry.usage.prompt_tokens = e.value("prompt_tokens", 0);
      entry.usage.completion_tokens = e.value("completion_tokens", 0);
      entry.has_usage = true;
    }
    return entry;
  };

  try {
    for (const auto& e : j.value("responses", json::array())) {
      Entry entry = parse_entry(e, true);
      if (entry.fingerprint.empty() && entry.needles.empty()) {
        throw MalformedScript("response entry needs fingerprint or contains: " + e.dump());
      }
      entries_.push_back(std::move(entry));
    }
    // .items() on a temporary would dangle; keep the objects alive
    json queues = j.value("queues", json::object());
    for (const auto& [stage, items] : queues.items()) {
      if (!stage_from_name(stage)) throw MalformedScript("unknown queue stage: " + stage);
      for (const auto& e : items) {
        Entry entry = parse_entry(e, false);
        entry.stage = *stage_from_name(stage);
        queues_[stage].push_back(std::move(entry));
      }
    }
    json defaults = j.value("defaults", json::object());
    for (const auto& [stage, e] : defaults.items()) {
      if (!stage_from_name(stage)) throw MalformedScript("unknown default stage: " + stage);
      Entry entry = parse_entry(e, false);
      entry.stage = *stage_from_name(stage);
      defaults_[stage] = std::move(entry);
    }
  } catch (const json::exception& e) {
    throw MalformedScript(script_path.string() + ": " + e.what());
  }
}

ChatResponse ScriptedLlmClient::chat(const ChatRequest& req) {
  record_request(req);
  std::string fp = request_fingerprint(req);
  std::string full_text;
  for (const auto& m : req.messages) {
    full_text += m.text;
    full_text += '\n';
  }

  Entry hit;
  bool found = false;
  {
    std::lock_guard lock(mu_);
    for (const auto& e : entries_) {
      if (e.stage == req.stage && !e.fingerprint.empty() && e.fingerprint == fp) {
        hit = e;
        found = true;
        break;
      }
    }
    if (!found) {
      for (const auto& e : entries_) {
        if (e.stage != req.stage || e.needles.empty()) continue;
        bool all = true;
        for (const auto& n : e.needles) {
          if (!util::contains(full_text, n)) {
            all = false;
            break;
          }
        }
        if (all) {
          hit = e;
          found = true;
          break;
        }
      }
    }
    if (!found) {
      auto q = queues_.find(stage_name(req.stage));
      if (q != queues_.end() && !q->second.empty()) {
        hit = q->second.front();
        q->second.erase(q->second.begin());
        found = true;
      }
    }
    if (!found) {
      auto d = defaults_.find(stage_name(req.stage));
      if (d != defaults_.end()) {
        hit = d->second;
        found = true;
      }
    }
  }
  if (!found) throw ScriptMiss(stage_name(req.stage), fp);

  ChatResponse resp;
  resp.text = hit.text;
  resp.usage = hit.has_usage ? hit.usage : estimate_usage(req, hit.text);
  ledger_.record(req.stage, req.function_name, resp.usage);
  return resp;
}

void ScriptedLlmClient::add_fingerprint_response(Stage stage,
                                                 const std::string& fingerprint,
                                                 std::string text, Usage usage) {
  std::lock_guard lock(mu_);
  Entry e;
  e.stage = stage;
  e.fingerprint = fingerprint;
  e.text = std::move(text);
  if (usage.prompt_tokens || usage.completion_tokens) {
    e.usage = usage;
    e.has_usage = true;
  }
  entries_.push_back(std::move(e));
}

void ScriptedLlmClient::add_contains_response(Stage stage,
                                              std::vector<std::string> needles,
                                              std::string text, Usage usage) {
  std::lock_guard lock(mu_);
  Entry e;
  e.stage = stage;
  e.needles = std::move(needles);
  e.text = std::move(text);
  if (usage.prompt_tokens || usage.completion_tokens) {
    e.usage = usage;
    e.has_usage = true;
  }
  entries_.push_back(std::move(e));
}

void ScriptedLlmClient::push_queue_response(Stage stage, std::string text,
                                            Usage usage) {
  std::lock_guard lock(mu_);
  Entry e;
  e.stage = stage;
  e.text = std::move(text);
  if (usage.prompt_tokens || usage.completion_tokens) {
    e.usage = usage;
    e.has_usage = true;
  }
  queues_[stage_name(stage)].push_back(std::move(e));
}

void ScriptedLlmClient::set_default_response(Stage stage, std::string text,
                                             Usage usage) {
  std::lock_guard lock(mu_);
  Entry e;
  e.stage = stage;
  e.text = std::move(text);
  if (usage.prompt_tokens || usage.completion_tokens) {
    e.usage = usage;
    e.has_usage = true;
  }
  defaults_[stage_name(stage)] = std::move(e);
}

// ---------------------------------------------------------------------------
// HttpLlmClient
// ---------------------------------------------------------------------------

HttpLlmClient::HttpLlmClient(HttpLlmOptions opts)
    : opts_(std::move(opts)),
      api_key_(util::env_or(opts_.api_key_env, "")),
      tokens_(opts_.requests_per_minute),
      last_refill_(std::chrono::steady_clock::now()) {}

void HttpLlmClient::rate_limit() {
  using namespace std::chrono;
  for (;;) {
    {
      std::lock_guard lock(bucket_mu_);
      auto now = steady_clock::now();
      double elapsed = duration_cast<duration<double>>(now - last_refill_).count();
      tokens_ = std::min(opts_.requests_per_minute,
                         tokens_ + elapsed * opts_.requests_per_minute / 60.0);
      last_refill_ = now;
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
    }
    std::this_thread::sleep_for(milliseconds(100));
  }
}

ChatResponse HttpLlmClient::chat(const ChatRequest& req) {
  record_request(req);

  json body;
  body["model"] = req.model_id.empty() ? opts_.model_id : req.model_id;
  body["messages"] = json::array();
  for (const auto& m : req.messages) {
    body["messages"].push_back({{"role", m.role}, {"content", m.text}});
  }
  body["temperature"] = req.temperature();
  body["max_tokens"] = req.max_output_tokens;

  std::vector<std::pair<std::string, std::string>> headers;
  if (!api_key_.empty()) headers.emplace_back("Authorization", "Bearer " + api_key_);

  std::string last_error;
  for (int attempt = 0; attempt <= opts_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(
          std::chrono::milliseconds(500 * (1L << (attempt - 1))));
    }
    rate_limit();
    http::HttpResult res =
        http::post_json(opts_.base_url, opts_.path, headers, body.dump(), opts_.timeout);
    if (!res.error.empty()) {
      last_error = res.error;
      continue;  // transport failure: retry
    }
    if (res.status == 429 || res.status >= 500) {
      last_error = "HTTP " + std::to_string(res.status);
      continue;
    }
    if (res.status != 200) throw ProviderError(res.status, res.body);

    json j;
    try {
      j = json::parse(res.body);
    } catch (const json::parse_error&) {
      throw MalformedResponse("response is not JSON: " + res.body.substr(0, 200));
    }
    if (!j.contains("choices") || j["choices"].empty() ||
        !j["choices"][0].contains("message") ||
        !j["choices"][0]["message"].contains("content")) {
      throw MalformedResponse("missing choices[0].message.content");
    }
    ChatResponse resp;
    resp.text = j["choices"][0]["message"]["content"].get<std::string>();
    if (j.contains("usage")) {
      resp.usage.prompt_tokens = j["usage"].value("prompt_tokens", 0);
      resp.usage.completion_tokens = j["usage"].value("completion_tokens", 0);
    }
    ledger_.record(req.stage, req.function_name, resp.usage);
    return resp;
  }
  throw LlmUnavailable("retries exhausted: " + last_error);
}

}  // namespace pathtest::llm
