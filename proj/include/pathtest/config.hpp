#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pathtest/errorreport.hpp"

namespace pathtest::config {

namespace fs = std::filesystem;

struct LlmEndpointConfig {
  std::string mode = "scripted";  // "scripted" | "http"
  fs::path script_path;           // scripted mode
  std::string base_url;           // http mode
  std::string api_path = "/v1/chat/completions";
  std::string api_key_env = "PATHTEST_API_KEY";
  std::string model_id;
  double requests_per_minute = 60.0;
  int max_retries = 3;
  int timeout_seconds = 120;
};

struct EmbedderConfig {
  int dim = 256;
};

struct ToolchainConfig {
  std::string mode = "gcc";  // "gcc" | "scripted"
  std::string compiler = "gcc";
  std::vector<std::string> base_flags = {"-Wall", "-g", "-O0"};
  fs::path script_path;  // scripted replay steps
};

struct PipelineConfig {
  fs::path project_root;
  fs::path artifacts_dir = "artifacts";
  fs::path pool_dir = "pool";
  fs::path runtime_dir = "runtime";  // test-framework shim sources
  ToolchainConfig toolchain;
  LlmEndpointConfig llm;
  EmbedderConfig embedder;
  double theta = 0.35;
  int loop_bound = 1;
  int max_paths = 256;
  validate::RepairPolicy repair;
  int parallelism = 1;
  std::vector<std::string> exclude_patterns = {"^main$", "^test_"};
  bool exclude_io_only = true;
  std::string from_stage;  // resume point; empty = run everything
  std::string mutation_command;  // optional shell hook, output archived as-is
};

// Parses a config JSON document after ${VAR} environment interpolation.
// Unknown keys are ConfigError (typos should not silently no-op).
PipelineConfig parse_config(const std::string& json_text);

PipelineConfig load_config(const fs::path& file);

// Range checks for every numeric field plus mode enums; throws ConfigError.
void check_config(const PipelineConfig& cfg);

}  // namespace pathtest::config
