#include "pathtest/validate.hpp"

#include <algorithm>
#include <csignal>

#include <json.hpp>

#include "pathtest/errors.hpp"
#include "pathtest/util.hpp"

namespace pathtest::validate {

using nlohmann::json;

std::string phase_name(Phase p) {
  return p == Phase::Compile ? "compile" : "run";
}

std::string category_name(Category c) {
  switch (c) {
    case Category::Compilation: return "compilation";
    case Category::Memory: return "memory";
    case Category::Crash: return "crash";
    case Category::Assertion: return "assertion";
    case Category::Misc: return "misc";
  }
  return "misc";
}

std::string root_cause_name(RootCause r) {
  switch (r) {
    case RootCause::HelperApiHallucination: return "helper-api-hallucination";
    case RootCause::MallocCounterMiscount: return "malloc-counter-miscount";
    case RootCause::MemoryOwnershipConfusion: return "memory-ownership-confusion";
    case RootCause::UnreachablePathCondition: return "unreachable-path-condition";
    case RootCause::SourceApiNameHallucination: return "source-api-name-hallucination";
    case RootCause::StdoutCaptureTypeMismatch: return "stdout-capture-type-mismatch";
    case RootCause::UnityMacroMisuse: return "unity-macro-misuse";
  }
  return "unknown";
}

namespace {

bool has_memory_marker(const std::string& text) {
  static const char* kMarkers[] = {
      "LeakSanitizer",         "detected memory leaks", "heap-buffer-overflow",
      "heap-use-after-free",   "use-after-free",        "double-free",
      "stack-buffer-overflow", "global-buffer-overflow", "stack-use-after-return",
      "stack-use-after-scope", "alloc-dealloc-mismatch", "memory leaks",
  };
  for (const char* m : kMarkers)
    if (util::contains(text, m)) return true;
  return false;
}

bool has_crash_marker(const std::string& text) {
  static const char* kMarkers[] = {
      "SEGV", "DEADLYSIGNAL", "Segmentation fault", "stack-overflow",
      "illegal instruction", "Floating point exception",
  };
  for (const char* m : kMarkers)
    if (util::contains(text, m)) return true;
  return false;
}

bool is_crash_signal(int sig) {
  return sig == SIGSEGV || sig == SIGBUS || sig == SIGILL || sig == SIGFPE ||
         sig == SIGABRT;
}

}  // namespace

Category classify_error(const std::string& diagnostic_text, int exit_code,
                        std::optional<int> signal) {
  (void)exit_code;
  if (has_memory_marker(diagnostic_text)) return Category::Memory;
  if (has_crash_marker(diagnostic_text)) return Category::Crash;
  if (signal && is_crash_signal(*signal)) return Category::Crash;
  if (util::contains(diagnostic_text, ":FAIL")) return Category::Assertion;
  return Category::Misc;
}

namespace {

std::string runner_source(const std::string& test_name) {
  std::string s;
  s += "#include \"unity.h\"\n\n";
  s += "extern void " + test_name + "(void);\n\n";
  s += "int main(void) {\n";
  s += "    UNITY_BEGIN();\n";
  s += "    RUN_TEST(" + test_name + ");\n";
  s += "    return UNITY_END();\n";
  s += "}\n";
  return s;
}

}  // namespace

void write_unit_files(const synth::AtomicTestUnit& unit, const UnitContext& ctx) {
  util::ensure_dir(ctx.unit_dir);
  util::atomic_write(ctx.unit_dir / "test.c", unit.test_source);
  util::atomic_write(ctx.unit_dir / "helpers.c", unit.helpers.source_text);
  util::atomic_write(ctx.unit_dir / "runner.c", runner_source(unit.test_name));
}

std::optional<ErrorReport> compile_unit(const synth::AtomicTestUnit& unit,
                                        const UnitContext& ctx,
                                        toolchain::Toolchain& tc) {
  (void)unit;
  toolchain::CompileJob job;
  // helpers.c is #included by test.c, so the two form one translation unit.
  job.sources = {ctx.unit_dir / "test.c", ctx.unit_dir / "runner.c"};
  job.sources.insert(job.sources.end(), ctx.support_sources.begin(),
                     ctx.support_sources.end());
  job.output = ctx.scratch_dir / "unit_bin";
  job.include_dirs = ctx.include_dirs;
  job.include_dirs.push_back(ctx.unit_dir);
  job.asan = true;
  job.tag = ctx.tag;
  util::ensure_dir(ctx.scratch_dir);
  auto res = tc.compile(job);
  if (res.ok) return std::nullopt;
  ErrorReport err;
  err.phase = Phase::Compile;
  err.category = Category::Compilation;
  err.diagnostic_text = res.diagnostics;
  err.exit_code = 1;
  return err;
}

std::optional<ErrorReport> run_unit(const synth::AtomicTestUnit& unit,
                                    const UnitContext& ctx,
                                    toolchain::Toolchain& tc,
                                    const RepairPolicy& policy) {
  (void)unit;
  toolchain::RunJob job;
  job.binary = ctx.scratch_dir / "unit_bin";
  job.cwd = ctx.scratch_dir;
  job.timeout = policy.per_test_timeout;
  job.env["ASAN_OPTIONS"] = "detect_leaks=1:abort_on_error=0";
  job.tag = ctx.tag;
  auto out = tc.run(job);

  if (out.timed_out) {
    ErrorReport err;
    err.phase = Phase::Run;
    err.category = Category::Misc;  // timeouts never reclassify on output
    err.diagnostic_text = "test run timed out after " +
                          std::to_string(policy.per_test_timeout.count()) +
                          "s\n" + out.output;
    err.exit_code = out.exit_code;
    err.signal = out.signal;
    return err;
  }

  bool clean = out.exit_code == 0 && !out.signal;
  if (clean && !has_memory_marker(out.output)) return std::nullopt;

  ErrorReport err;
  err.phase = Phase::Run;
  err.category = classify_error(out.output, out.exit_code, out.signal);
  err.diagnostic_text = out.output;
  err.exit_code = out.exit_code;
  err.signal = out.signal;
  return err;
}

namespace {

// First '{' to last '}', or the whole string if no braces.
std::string extract_json_blob(const std::string& text) {
  auto b = text.find('{');
  auto e = text.rfind('}');
  if (b == std::string::npos || e == std::string::npos || e < b) return text;
  return text.substr(b, e - b + 1);
}

std::optional<std::string> first_fenced_block(const std::string& text) {
  auto open = text.find("```");
  if (open == std::string::npos) return std::nullopt;
  auto nl = text.find('\n', open);
  if (nl == std::string::npos) return std::nullopt;
  auto close = text.find("```", nl + 1);
  if (close == std::string::npos) return std::nullopt;
  return text.substr(nl + 1, close - nl - 1);
}

std::string repair_prompt(const synth::AtomicTestUnit& unit,
                          const ErrorReport& err) {
  std::string p;
  p += "A generated C unit test failed validation. Fix it.\n\n";
  p += "Function under test: " + unit.function_name + "\n";
  p += "Test: " + unit.test_name + " (path " + std::to_string(unit.path_id) +
       ")\n";
  p += "Failure phase: " + phase_name(err.phase) + "\n";
  p += "Failure category: " + category_name(err.category) + "\n";
  if (err.signal)
    p += "Signal: " + std::to_string(*err.signal) + "\n";
  p += "\nDiagnostics:\n```\n";
  // Diagnostics can be ASan novels; keep the prompt bounded.
  if (err.diagnostic_text.size() > 6000)
    p += err.diagnostic_text.substr(0, 6000) + "\n...[truncated]";
  else
    p += err.diagnostic_text;
  p += "\n```\n";
  p += "\nCurrent test source (test.c):\n```c\n" + unit.test_source + "\n```\n";
  p += "\nCurrent helpers (helpers.c, included by test.c):\n```c\n" +
       unit.helpers.source_text + "\n```\n";
  if (!unit.scan_violations.empty()) {
    p += "\nUnresolved identifier-scan violations (calls outside the allowed "
         "set): " + util::join(unit.scan_violations, ", ") + "\n";
  }
  p += "\nRespond with strict JSON only:\n";
  p += "{\n";
  p += "  \"test_source\": \"<full corrected test.c>\",\n";
  p += "  \"helpers_source\": \"<full corrected helpers.c>\",\n";
  p += "  \"verdict\": \"fixed\" | \"path_unreachable\",\n";
  p += "  \"note\": \"<one line on what changed>\"\n";
  p += "}\n";
  p += "Use verdict \"path_unreachable\" only when the targeted execution "
       "path cannot be taken for any input, in which case the sources may be "
       "returned unchanged.\n";
  return p;
}

}  // namespace

synth::AtomicTestUnit repair(synth::AtomicTestUnit unit, const ErrorReport& err,
                             llm::LlmClient& client,
                             const RepairPolicy& policy) {
  std::vector<llm::Message> messages;
  messages.push_back(
      {"system",
       "You are a C unit-test repair assistant. You receive a failing test, "
       "its helper file and the failure diagnostics, and you return corrected "
       "sources as strict JSON. Keep the test focused on its original "
       "execution path and free every allocation."});
  messages.push_back({"user", repair_prompt(unit, err)});

  llm::TemperaturePolicy temps;
  temps.generation = policy.generation_temperature;
  temps.repair = policy.repair_temperature;
  llm::ChatRequest req(llm::Stage::Repair, std::move(messages),
                       unit.function_name, temps);
  auto resp = client.chat(req);

  unit.error_history.push_back(err);
  unit.iterations_used += 1;

  bool parsed = false;
  auto blob = extract_json_blob(resp.text);
  auto doc = json::parse(blob, nullptr, false);
  if (doc.is_object()) {
    parsed = true;
    std::string verdict = doc.value("verdict", "fixed");
    if (doc.contains("test_source") && doc["test_source"].is_string())
      unit.test_source = doc["test_source"].get<std::string>();
    if (doc.contains("helpers_source") && doc["helpers_source"].is_string())
      unit.helpers.source_text = doc["helpers_source"].get<std::string>();
    if (doc.contains("note") && doc["note"].is_string())
      unit.notes.push_back("repair " + std::to_string(unit.iterations_used) +
                           ": " + doc["note"].get<std::string>());
    if (verdict == "path_unreachable") unit.drop_hint = "unreachable path";
  }
  if (!parsed) {
    // Tolerate sloppy responses: unreachable verdicts in prose, or a lone
    // fenced code block standing in for the corrected test.
    if (util::contains(resp.text, "path_unreachable")) {
      unit.drop_hint = "unreachable path";
    } else if (auto block = first_fenced_block(resp.text)) {
      unit.test_source = *block;
      unit.notes.push_back("repair " + std::to_string(unit.iterations_used) +
                           ": response was not JSON, took fenced block as "
                           "test source");
    } else {
      unit.notes.push_back("repair " + std::to_string(unit.iterations_used) +
                           ": unparsable response, sources unchanged");
    }
  }
  return unit;
}

synth::AtomicTestUnit validate_loop(synth::AtomicTestUnit unit,
                                    const UnitContext& ctx,
                                    toolchain::Toolchain& tc,
                                    llm::LlmClient& client,
                                    const RepairPolicy& policy) {
  util::ensure_dir(ctx.log_dir);
  for (;;) {
    int iter = unit.iterations_used;
    write_unit_files(unit, ctx);

    auto err = compile_unit(unit, ctx, tc);
    util::atomic_write(ctx.log_dir / ("iter" + std::to_string(iter) +
                                      ".compile.log"),
                       err ? err->diagnostic_text : std::string("OK\n"));
    if (!err) {
      err = run_unit(unit, ctx, tc, policy);
      util::atomic_write(ctx.log_dir / ("iter" + std::to_string(iter) +
                                        ".run.log"),
                         err ? err->diagnostic_text : std::string("OK\n"));
    }

    if (!err) {
      if (iter == 0) {
        unit.status = synth::UnitStatus::Pass0;
      } else {
        unit.status = synth::UnitStatus::Repaired;
        unit.repaired_n = iter;
      }
      return unit;
    }

    if (unit.iterations_used >= policy.max_iterations) {
      unit.error_history.push_back(*err);
      unit.status = synth::UnitStatus::Dropped;
      return unit;
    }

    try {
      unit = repair(std::move(unit), *err, client, policy);
    } catch (const LlmUnavailable&) {
      // Leave the unit pending so the whole stage can be retried later.
      return unit;
    }
    if (!unit.drop_hint.empty()) {
      unit.status = synth::UnitStatus::Dropped;
      return unit;
    }
  }
}

void ValidationReport::add_unit(const synth::AtomicTestUnit& unit) {
  if (unit.status == synth::UnitStatus::Pending)
    throw ConstraintViolation("pending unit in validation report: " +
                              unit.test_name);
  auto it = std::find_if(rows_.begin(), rows_.end(), [&](const FunctionRow& r) {
    return r.function == unit.function_name;
  });
  if (it == rows_.end()) {
    FunctionRow row;
    row.function = unit.function_name;
    rows_.push_back(row);
    it = std::prev(rows_.end());
  }
  FunctionRow& r = *it;
  r.generated += 1;
  switch (unit.status) {
    case synth::UnitStatus::Pass0:
      r.pass0 += 1;
      break;
    case synth::UnitStatus::Repaired:
      r.failed += 1;
      if (unit.repaired_n == 1) r.fixed1 += 1;
      else if (unit.repaired_n == 2) r.fixed2 += 1;
      else if (unit.repaired_n == 3) r.fixed3 += 1;
      else
        throw ConstraintViolation("repaired count out of range for " +
                                  unit.test_name);
      break;
    case synth::UnitStatus::Dropped:
      r.failed += 1;
      r.dropped += 1;
      break;
    case synth::UnitStatus::Pending:
      break;  // unreachable, handled above
  }
}

void ValidationReport::check_identities(const FunctionRow& row) {
  long fixed = row.fixed1 + row.fixed2 + row.fixed3;
  if (row.generated != row.pass0 + row.failed)
    throw ConstraintViolation("accounting identity broken for " + row.function +
                              ": generated != pass0 + failed");
  if (row.final_count != row.pass0 + fixed)
    throw ConstraintViolation("accounting identity broken for " + row.function +
                              ": final != pass0 + fixed");
  if (row.dropped != row.failed - fixed)
    throw ConstraintViolation("accounting identity broken for " + row.function +
                              ": dropped != failed - fixed");
}

void ValidationReport::finalize() {
  totals_ = FunctionRow{};
  totals_.function = "TOTAL";
  for (auto& row : rows_) {
    row.final_count = row.pass0 + row.fixed1 + row.fixed2 + row.fixed3;
    check_identities(row);
    totals_.generated += row.generated;
    totals_.pass0 += row.pass0;
    totals_.failed += row.failed;
    totals_.fixed1 += row.fixed1;
    totals_.fixed2 += row.fixed2;
    totals_.fixed3 += row.fixed3;
    totals_.dropped += row.dropped;
    totals_.final_count += row.final_count;
  }
  check_identities(totals_);
  finalized_ = true;
}

double ValidationReport::retention_pct() const {
  if (totals_.generated == 0) return 0.0;
  return 100.0 * static_cast<double>(totals_.final_count) /
         static_cast<double>(totals_.generated);
}

std::string ValidationReport::to_json() const {
  auto row_json = [](const FunctionRow& r) {
    json j;
    j["function"] = r.function;
    j["generated"] = r.generated;
    j["pass0"] = r.pass0;
    j["failed"] = r.failed;
    j["fixed1"] = r.fixed1;
    j["fixed2"] = r.fixed2;
    j["fixed3"] = r.fixed3;
    j["dropped"] = r.dropped;
    j["final"] = r.final_count;
    return j;
  };
  json j;
  j["rows"] = json::array();
  for (const auto& r : rows_) j["rows"].push_back(row_json(r));
  j["totals"] = row_json(totals_);
  j["retention_pct"] = util::format_pct(retention_pct());
  j["finalized"] = finalized_;
  return j.dump(2) + "\n";
}

}  // namespace pathtest::validate
