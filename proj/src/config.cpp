#include "pathtest/config.hpp"

#include <set>

#include <json.hpp>

#include "pathtest/errors.hpp"
#include "pathtest/util.hpp"

namespace pathtest::config {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& known,
                    const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!known.count(it.key()))
      throw ConfigError("unknown key '" + it.key() + "' in " + where);
}

template <typename T>
T get_or(const json& obj, const std::string& key, T fallback) {
  if (!obj.contains(key)) return fallback;
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad value for '" + key + "': " + e.what());
  }
}

}  // namespace

PipelineConfig parse_config(const std::string& json_text) {
  auto doc = json::parse(util::interpolate_env(json_text), nullptr, false);
  if (!doc.is_object()) throw ConfigError("config is not a JSON object");

  reject_unknown(doc,
                 {"project", "artifacts", "pool", "runtime", "toolchain",
                  "llm", "embedder", "theta", "loop_bound", "max_paths",
                  "repair", "parallelism", "exclude_patterns",
                  "exclude_io_only", "from", "mutation_command"},
                 "config");

  PipelineConfig cfg;
  cfg.project_root = get_or<std::string>(doc, "project", "");
  cfg.artifacts_dir = get_or<std::string>(doc, "artifacts",
                                          cfg.artifacts_dir.string());
  cfg.pool_dir = get_or<std::string>(doc, "pool", cfg.pool_dir.string());
  cfg.runtime_dir = get_or<std::string>(doc, "runtime",
                                        cfg.runtime_dir.string());
  cfg.theta = get_or<double>(doc, "theta", cfg.theta);
  cfg.loop_bound = get_or<int>(doc, "loop_bound", cfg.loop_bound);
  cfg.max_paths = get_or<int>(doc, "max_paths", cfg.max_paths);
  cfg.parallelism = get_or<int>(doc, "parallelism", cfg.parallelism);
  cfg.exclude_patterns = get_or<std::vector<std::string>>(
      doc, "exclude_patterns", cfg.exclude_patterns);
  cfg.exclude_io_only = get_or<bool>(doc, "exclude_io_only",
                                     cfg.exclude_io_only);
  cfg.from_stage = get_or<std::string>(doc, "from", "");
  cfg.mutation_command = get_or<std::string>(doc, "mutation_command", "");

  if (doc.contains("repair")) {
    const auto& r = doc.at("repair");
    if (!r.is_object()) throw ConfigError("repair must be an object");
    reject_unknown(r,
                   {"max_iterations", "repair_temperature",
                    "generation_temperature", "per_test_timeout_seconds"},
                   "repair");
    cfg.repair.max_iterations =
        get_or<int>(r, "max_iterations", cfg.repair.max_iterations);
    cfg.repair.repair_temperature =
        get_or<double>(r, "repair_temperature", cfg.repair.repair_temperature);
    cfg.repair.generation_temperature = get_or<double>(
        r, "generation_temperature", cfg.repair.generation_temperature);
    cfg.repair.per_test_timeout = std::chrono::seconds(get_or<int>(
        r, "per_test_timeout_seconds",
        static_cast<int>(cfg.repair.per_test_timeout.count())));
  }

  if (doc.contains("toolchain")) {
    const auto& t = doc.at("toolchain");
    if (!t.is_object()) throw ConfigError("toolchain must be an object");
    reject_unknown(t, {"mode", "compiler", "base_flags", "script"},
                   "toolchain");
    cfg.toolchain.mode = get_or<std::string>(t, "mode", cfg.toolchain.mode);
    cfg.toolchain.compiler =
        get_or<std::string>(t, "compiler", cfg.toolchain.compiler);
    cfg.toolchain.base_flags = get_or<std::vector<std::string>>(
        t, "base_flags", cfg.toolchain.base_flags);
    cfg.toolchain.script_path = get_or<std::string>(t, "script", "");
  }

  if (doc.contains("llm")) {
    const auto& l = doc.at("llm");
    if (!l.is_object()) throw ConfigError("llm must be an object");
    reject_unknown(l,
                   {"mode", "script", "base_url", "api_path", "api_key_env",
                    "model", "requests_per_minute", "max_retries",
                    "timeout_seconds"},
                   "llm");
    cfg.llm.mode = get_or<std::string>(l, "mode", cfg.llm.mode);
    cfg.llm.script_path = get_or<std::string>(l, "script", "");
    cfg.llm.base_url = get_or<std::string>(l, "base_url", "");
    cfg.llm.api_path = get_or<std::string>(l, "api_path", cfg.llm.api_path);
    cfg.llm.api_key_env =
        get_or<std::string>(l, "api_key_env", cfg.llm.api_key_env);
    cfg.llm.model_id = get_or<std::string>(l, "model", "");
    cfg.llm.requests_per_minute =
        get_or<double>(l, "requests_per_minute", cfg.llm.requests_per_minute);
    cfg.llm.max_retries = get_or<int>(l, "max_retries", cfg.llm.max_retries);
    cfg.llm.timeout_seconds =
        get_or<int>(l, "timeout_seconds", cfg.llm.timeout_seconds);
  }

  if (doc.contains("embedder")) {
    const auto& e = doc.at("embedder");
    if (!e.is_object()) throw ConfigError("embedder must be an object");
    reject_unknown(e, {"dim"}, "embedder");
    cfg.embedder.dim = get_or<int>(e, "dim", cfg.embedder.dim);
  }

  check_config(cfg);
  return cfg;
}

PipelineConfig load_config(const fs::path& file) {
  auto text = util::read_file_if_exists(file);
  if (!text) throw ConfigError("config file not found: " + file.string());
  return parse_config(*text);
}

void check_config(const PipelineConfig& cfg) {
  if (cfg.theta < -1.0 || cfg.theta > 1.0)
    throw ConfigError("theta must be in [-1, 1]");
  if (cfg.loop_bound < 0) throw ConfigError("loop_bound must be >= 0");
  if (cfg.max_paths < 1) throw ConfigError("max_paths must be >= 1");
  if (cfg.parallelism < 1) throw ConfigError("parallelism must be >= 1");
  if (cfg.repair.max_iterations < 0)
    throw ConfigError("repair.max_iterations must be >= 0");
  if (cfg.repair.repair_temperature < 0.0 ||
      cfg.repair.generation_temperature < 0.0)
    throw ConfigError("temperatures must be >= 0");
  if (cfg.repair.per_test_timeout.count() <= 0)
    throw ConfigError("repair.per_test_timeout_seconds must be > 0");
  if (cfg.embedder.dim < 1) throw ConfigError("embedder.dim must be >= 1");
  if (cfg.llm.mode != "scripted" && cfg.llm.mode != "http")
    throw ConfigError("llm.mode must be 'scripted' or 'http'");
  if (cfg.llm.mode == "http" && cfg.llm.base_url.empty())
    throw ConfigError("llm.mode 'http' requires base_url");
  if (cfg.llm.requests_per_minute <= 0.0)
    throw ConfigError("llm.requests_per_minute must be > 0");
  if (cfg.toolchain.mode != "gcc" && cfg.toolchain.mode != "scripted")
    throw ConfigError("toolchain.mode must be 'gcc' or 'scripted'");
}

}  // namespace pathtest::config
