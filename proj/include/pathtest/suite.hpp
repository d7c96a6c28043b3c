#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pathtest/synth.hpp"
#include "pathtest/toolchain.hpp"

namespace pathtest::suite {

namespace fs = std::filesystem;

struct IncludedTest {
  std::string function;
  int path_id = 0;
  std::string test_name;
};

struct MergedSuite {
  std::string source_text;
  std::vector<IncludedTest> included_tests;
  std::map<std::string, std::string> helper_definitions;  // name -> chosen text
  std::vector<std::string> warnings;
};

// Deduplicates includes, macros, types, globals and helper definitions across
// the validated units by (name, normalized token stream), keeps the earliest
// unit's version on a divergence (with a warning), concatenates the test
// bodies and appends a runner main. Deterministic: same unit set in,
// byte-identical text out. Dropped units are excluded; pending units are a
// caller bug.
MergedSuite merge_suite(const std::vector<synth::AtomicTestUnit>& units);

// Compile-checks the merged text against the project support sources.
// Throws MergeCompileFailure (with the divergence warnings attached, since
// those name the likely conflicts).
void verify_suite_compiles(const MergedSuite& suite,
                           const std::vector<fs::path>& support_sources,
                           const std::vector<fs::path>& include_dirs,
                           toolchain::Toolchain& tc);

struct FunctionCoverage {
  std::string name;
  std::optional<double> line_pct;    // absent when the function has no lines
  std::optional<double> branch_pct;  // "taken at least once"; absent when 0 branches
  long lines_total = 0;
  long branches_total = 0;
};

struct FileCoverage {
  std::string file;
  std::optional<double> function_pct;  // share of functions with any executed line
  std::optional<double> line_pct;
  std::optional<double> branch_pct;
  long lines_total = 0;
  long branches_total = 0;
  std::vector<FunctionCoverage> functions;
};

struct CoverageReport {
  std::vector<FileCoverage> per_file;
  FileCoverage project;  // line/branch-count weighted aggregate, file = "TOTAL"
  std::string to_json() const;
};

// gcov -b -f summary text -> per-file records (functions attached to the
// file block that follows them). Zero-denominator percentages become absent
// rather than 100. Throws UnrecognizedFormat on lines that match no known
// gcov shape.
std::vector<FileCoverage> parse_gcov(const std::string& raw);

struct CoverageJob {
  fs::path suite_source;                  // merged test_suite.c
  std::vector<fs::path> project_sources;  // measured .c files
  std::vector<fs::path> extra_sources;    // runtime etc., never measured
  std::vector<fs::path> include_dirs;
  fs::path work_dir;
  std::chrono::seconds timeout{60};
};

// Compiles every source to an object (instrumenting only project_sources),
// links, runs the suite once, then parses gcov output per project source.
// The merged suite must pass: a nonzero exit is SuiteRunFailure (everything
// in it was individually validated, so a failure here is merge-induced).
CoverageReport measure_coverage(const CoverageJob& job,
                                toolchain::Toolchain& tc);

}  // namespace pathtest::suite
