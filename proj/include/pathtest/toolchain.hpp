#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace pathtest::toolchain {

namespace fs = std::filesystem;

struct CompileJob {
  std::vector<fs::path> sources;
  fs::path output;                      // binary, or object file when compile_only
  std::vector<fs::path> include_dirs;
  std::vector<std::string> extra_flags;
  bool compile_only = false;            // -c
  bool asan = false;
  bool coverage = false;
  std::string tag;  // "<function>/path<id>" routing key for scripted toolchains
};

struct CompileResult {
  bool ok = false;
  std::string diagnostics;  // combined compiler stdout+stderr
};

struct RunJob {
  fs::path binary;
  fs::path cwd;
  std::chrono::seconds timeout{10};
  std::map<std::string, std::string> env;
  std::string tag;
};

struct RunOutcome {
  int exit_code = 0;
  std::optional<int> signal;
  bool timed_out = false;
  std::string output;  // combined stdout+stderr
};

class Toolchain {
 public:
  virtual ~Toolchain() = default;
  virtual CompileResult compile(const CompileJob& job) = 0;
  virtual RunOutcome run(const RunJob& job) = 0;
};

// Real compiler invocation. Throws ToolchainMissing from the constructor when
// the compiler is not on PATH.
class GccToolchain : public Toolchain {
 public:
  explicit GccToolchain(std::string compiler = "gcc",
                        std::vector<std::string> base_flags = {"-Wall", "-g",
                                                               "-O0"});
  CompileResult compile(const CompileJob& job) override;
  RunOutcome run(const RunJob& job) override;

  const std::string& compiler() const { return compiler_; }

 private:
  std::string compiler_;
  std::vector<std::string> base_flags_;
};

// Replays canned outcomes keyed by job tag; each compile+run cycle for a tag
// consumes the next scripted step. Lets validation-loop behavior (including
// the published retention table) be reproduced without a compiler.
class ScriptedToolchain : public Toolchain {
 public:
  struct Step {
    bool compile_ok = true;
    std::string compile_diagnostics;
    bool run_ok = true;
    std::string run_output;
    int exit_code = 0;
    std::optional<int> signal;
    bool timed_out = false;
  };

  void script(const std::string& tag, std::vector<Step> steps);

  CompileResult compile(const CompileJob& job) override;
  RunOutcome run(const RunJob& job) override;

 private:
  // Peeks the current step for a tag; compile consumes on failure (the run
  // never happens), run always consumes.
  Step& current(const std::string& tag);
  void advance(const std::string& tag);

  std::mutex mu_;
  std::map<std::string, std::vector<Step>> steps_;
  std::map<std::string, std::size_t> cursor_;
};

}  // namespace pathtest::toolchain
