#include "pathtest/toolchain.hpp"

#include "pathtest/errors.hpp"
#include "pathtest/subprocess.hpp"

namespace pathtest::toolchain {

GccToolchain::GccToolchain(std::string compiler, std::vector<std::string> base_flags)
    : compiler_(std::move(compiler)), base_flags_(std::move(base_flags)) {
  if (!util::program_exists(compiler_)) throw ToolchainMissing(compiler_);
}

CompileResult GccToolchain::compile(const CompileJob& job) {
  util::RunSpec spec;
  spec.argv.push_back(compiler_);
  for (const auto& f : base_flags_) spec.argv.push_back(f);
  if (job.compile_only) spec.argv.push_back("-c");
  if (job.asan) {
    spec.argv.push_back("-fsanitize=address");
    spec.argv.push_back("-fno-omit-frame-pointer");
  }
  if (job.coverage) spec.argv.push_back("--coverage");
  for (const auto& d : job.include_dirs) spec.argv.push_back("-I" + d.string());
  for (const auto& f : job.extra_flags) spec.argv.push_back(f);
  for (const auto& s : job.sources) spec.argv.push_back(s.string());
  spec.argv.push_back("-o");
  spec.argv.push_back(job.output.string());
  if (!job.compile_only) spec.argv.push_back("-lm");
  spec.timeout = std::chrono::minutes(2);

  util::RunResult res = util::run_process(spec);
  CompileResult out;
  out.ok = res.exit_code == 0 && !res.timed_out;
  out.diagnostics = res.output;
  return out;
}

RunOutcome GccToolchain::run(const RunJob& job) {
  util::RunSpec spec;
  spec.argv.push_back(job.binary.string());
  spec.cwd = job.cwd;
  spec.env = job.env;
  spec.timeout = std::chrono::duration_cast<std::chrono::milliseconds>(job.timeout);

  util::RunResult res = util::run_process(spec);
  RunOutcome out;
  out.exit_code = res.exit_code;
  out.signal = res.signal;
  out.timed_out = res.timed_out;
  out.output = res.output;
  return out;
}

void ScriptedToolchain::script(const std::string& tag, std::vector<Step> steps) {
  std::lock_guard lock(mu_);
  steps_[tag] = std::move(steps);
  cursor_[tag] = 0;
}

ScriptedToolchain::Step& ScriptedToolchain::current(const std::string& tag) {
  auto it = steps_.find(tag);
  if (it == steps_.end() || cursor_[tag] >= it->second.size())
    throw ToolchainMissing("no scripted step for tag '" + tag + "'");
  return it->second[cursor_[tag]];
}

void ScriptedToolchain::advance(const std::string& tag) { ++cursor_[tag]; }

CompileResult ScriptedToolchain::compile(const CompileJob& job) {
  std::lock_guard lock(mu_);
  Step& step = current(job.tag);
  CompileResult out;
  out.ok = step.compile_ok;
  out.diagnostics = step.compile_diagnostics;
  if (!step.compile_ok) advance(job.tag);  // cycle ends here; run is skipped
  return out;
}

RunOutcome ScriptedToolchain::run(const RunJob& job) {
  std::lock_guard lock(mu_);
  Step& step = current(job.tag);
  RunOutcome out;
  out.output = step.run_output;
  out.timed_out = step.timed_out;
  if (step.run_ok) {
    out.exit_code = 0;
  } else {
    out.exit_code = step.exit_code != 0 ? step.exit_code : 1;
    out.signal = step.signal;
  }
  advance(job.tag);
  return out;
}

}  // namespace pathtest::toolchain
