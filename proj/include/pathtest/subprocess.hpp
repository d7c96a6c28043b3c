#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pathtest::util {

struct RunResult {
  int exit_code = -1;               // meaningful when !signal
  std::optional<int> signal;        // set when killed by a signal
  bool timed_out = false;
  std::string output;               // stdout and stderr, interleaved
};

struct RunSpec {
  std::vector<std::string> argv;    // argv[0] is the program
  std::filesystem::path cwd;        // empty = inherit
  std::map<std::string, std::string> env;  // appended to the inherited env
  std::chrono::milliseconds timeout{0};    // 0 = unlimited
};

// Runs the command, captures combined stdout/stderr, enforces the wall-clock
// timeout (the process group is killed when it expires).
RunResult run_process(const RunSpec& spec);

// Convenience wrapper for PATH lookups.
bool program_exists(const std::string& name);

}  // namespace pathtest::util
