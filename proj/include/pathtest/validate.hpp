#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pathtest/errorreport.hpp"
#include "pathtest/llm.hpp"
#include "pathtest/synth.hpp"
#include "pathtest/toolchain.hpp"

namespace pathtest::validate {

namespace fs = std::filesystem;

// Everything one unit's compile/run cycle needs to know about its
// surroundings. support_sources are linked into every unit binary (extracted
// function units, globals, the test runtime).
struct UnitContext {
  fs::path unit_dir;     // holds test.c and helpers.c
  fs::path scratch_dir;  // binaries and coverage droppings
  fs::path log_dir;      // iter<n>.{compile,run}.log
  std::vector<fs::path> support_sources;
  std::vector<fs::path> include_dirs;
  std::string tag;  // "<function>/path<id>"
};

// Deterministic marker rules, checked in precedence order:
// sanitizer memory markers, then fatal signals / sanitizer crash banners,
// then Unity ":FAIL" lines, then misc.
Category classify_error(const std::string& diagnostic_text, int exit_code,
                        std::optional<int> signal);

// Writes test.c, helpers.c and a generated runner.c into unit_dir.
void write_unit_files(const synth::AtomicTestUnit& unit, const UnitContext& ctx);

// Absent result = compiled and linked clean (ASan instrumented).
std::optional<ErrorReport> compile_unit(const synth::AtomicTestUnit& unit,
                                        const UnitContext& ctx,
                                        toolchain::Toolchain& tc);

// Absent result = exit 0, no sanitizer report, under the timeout.
std::optional<ErrorReport> run_unit(const synth::AtomicTestUnit& unit,
                                    const UnitContext& ctx,
                                    toolchain::Toolchain& tc,
                                    const RepairPolicy& policy);

// One repair round-trip at repair temperature: sends sources + error,
// expects {"test_source", "helpers_source", "verdict"} JSON back, rewrites
// the unit and bumps iterations_used. A "path_unreachable" verdict sets
// drop_hint so the loop can drop the unit early.
synth::AtomicTestUnit repair(synth::AtomicTestUnit unit, const ErrorReport& err,
                             llm::LlmClient& client, const RepairPolicy& policy);

// compile → run → repair cycles until clean or the budget is spent.
// Terminal statuses: pass0 (clean first cycle), repaired(n), dropped.
// LlmUnavailable leaves the unit pending so the stage can be retried.
synth::AtomicTestUnit validate_loop(synth::AtomicTestUnit unit,
                                    const UnitContext& ctx,
                                    toolchain::Toolchain& tc,
                                    llm::LlmClient& client,
                                    const RepairPolicy& policy);

// One retention-table row (the per-function schema of the published table).
struct FunctionRow {
  std::string function;
  long generated = 0;
  long pass0 = 0;
  long failed = 0;
  long fixed1 = 0;
  long fixed2 = 0;
  long fixed3 = 0;
  long dropped = 0;
  long final_count = 0;
};

class ValidationReport {
 public:
  // Aggregates a terminal unit; pending units are a caller bug.
  void add_unit(const synth::AtomicTestUnit& unit);
  // Computes totals and enforces the accounting identities
  // (generated = pass0 + failed; final = pass0 + Σ fixed;
  //  dropped = failed − Σ fixed) on every row. Throws Error on violation.
  void finalize();

  const std::vector<FunctionRow>& rows() const { return rows_; }
  const FunctionRow& totals() const { return totals_; }
  double retention_pct() const;
  std::string to_json() const;

 private:
  static void check_identities(const FunctionRow& row);

  std::vector<FunctionRow> rows_;
  FunctionRow totals_;
  bool finalized_ = false;
};

}  // namespace pathtest::validate
