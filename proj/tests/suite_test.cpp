#include <doctest.h>

#include <algorithm>
#include <filesystem>

#include <json.hpp>

#include "pathtest/errors.hpp"
#include "pathtest/suite.hpp"
#include "pathtest/toolchain.hpp"
#include "pathtest/util.hpp"

namespace fs = std::filesystem;
using namespace pathtest;

#ifndef PATHTEST_SOURCE_DIR
#error "PATHTEST_SOURCE_DIR must be defined"
#endif

namespace {

synth::AtomicTestUnit unit(const std::string& fn, int path,
                           const std::string& test_source,
                           synth::UnitStatus status = synth::UnitStatus::Pass0) {
  synth::AtomicTestUnit u;
  u.function_name = fn;
  u.path_id = path;
  u.test_name = "test_" + fn + "_path" + std::to_string(path) + "_case";
  u.test_source = test_source;
  u.helpers.source_text = "#include \"header.h\"\n";
  u.status = status;
  return u;
}

const char* kPrologue =
    "#include \"unity.h\"\n#include \"header.h\"\n#include \"helpers.c\"\n";

std::string alpha1_src() {
  return std::string(kPrologue) +
         "#include <string.h>\n\n"
         "#define LIMIT 4\n\n"
         "typedef struct pair { int a; int b; } pair;\n\n"
         "int shared_counter = 0;\n\n"
         "void setUp(void) {}\n"
         "void tearDown(void) {}\n\n"
         "static int helper_sum(int a, int b)\n{\n    return a + b;\n}\n\n"
         "void test_alpha_path1_case(void)\n{\n"
         "    pair p = {1, 2};\n"
         "    shared_counter = helper_sum(p.a, p.b);\n"
         "    TEST_ASSERT_EQUAL_INT(3, shared_counter);\n"
         "    TEST_ASSERT_TRUE(LIMIT > 0);\n}\n";
}

std::string alpha2_src() {
  // helper_sum differs only in whitespace: same token stream, silent dedup
  return std::string(kPrologue) +
         "\nvoid setUp(void) {}\n"
         "void tearDown(void) {}\n\n"
         "static int helper_sum(int a,int b) { return a+b; }\n\n"
         "void test_alpha_path2_case(void)\n{\n"
         "    TEST_ASSERT_EQUAL_INT(5, helper_sum(2, 3));\n}\n";
}

std::string beta1_src() {
  // helper_sum with a genuinely different token stream -> divergence warning;
  // also smuggles in a main(), which the merge must drop
  return std::string(kPrologue) +
         "#include <string.h>\n#include <stdlib.h>\n\n"
         "void setUp(void) {}\n"
         "void tearDown(void) {}\n\n"
         "static int helper_sum(int a, int b)\n{\n    return b + a;\n}\n\n"
         "void test_beta_path1_case(void)\n{\n"
         "    TEST_ASSERT_EQUAL_INT(0, helper_sum(0, 0));\n}\n\n"
         "int main(void)\n{\n    return 0;\n}\n";
}

std::vector<synth::AtomicTestUnit> sample_units() {
  return {unit("beta", 1, beta1_src()),
          unit("alpha", 2, alpha2_src(), synth::UnitStatus::Repaired),
          unit("alpha", 1, alpha1_src()),
          unit("gone", 1, "void test_gone_path1_case(void) {}\n",
               synth::UnitStatus::Dropped)};
}

}  // namespace

TEST_CASE("merge orders by function then path and skips dropped units") {
  auto units = sample_units();
  units[1].repaired_n = 1;
  auto merged = suite::merge_suite(units);

  REQUIRE(merged.included_tests.size() == 3);
  CHECK(merged.included_tests[0].function == "alpha");
  CHECK(merged.included_tests[0].path_id == 1);
  CHECK(merged.included_tests[1].path_id == 2);
  CHECK(merged.included_tests[2].function == "beta");
  CHECK(merged.source_text.find("test_gone") == std::string::npos);

  // forced includes first, then the units' own, first-seen order, no .c
  auto lines = util::split_lines(merged.source_text);
  REQUIRE(lines.size() > 4);
  CHECK(lines[0] == "#include \"unity.h\"");
  CHECK(lines[1] == "#include \"header.h\"");
  CHECK(lines[2] == "#include <string.h>");
  CHECK(lines[3] == "#include <stdlib.h>");
  CHECK(merged.source_text.find("helpers.c") == std::string::npos);

  // macro/type/global emitted once each
  auto count = [&](const std::string& needle) {
    size_t n = 0;
    for (size_t at = merged.source_text.find(needle); at != std::string::npos;
         at = merged.source_text.find(needle, at + 1))
      ++n;
    return n;
  };
  CHECK(count("#define LIMIT 4") == 1);
  CHECK(count("typedef struct pair") == 1);
  CHECK(count("int shared_counter = 0;") == 1);
  CHECK(count("void setUp(void)") == 1);
  CHECK(count("static int helper_sum") == 1);
  // alpha/path1's spelling won
  CHECK(merged.source_text.find("return a + b;") != std::string::npos);
  CHECK(merged.source_text.find("return b + a;") == std::string::npos);
  CHECK(merged.helper_definitions.count("helper_sum") == 1);
  CHECK(merged.helper_definitions.count("shared_counter") == 1);

  // runner calls every kept test in order
  auto r1 = merged.source_text.find("RUN_TEST(test_alpha_path1_case)");
  auto r2 = merged.source_text.find("RUN_TEST(test_alpha_path2_case)");
  auto r3 = merged.source_text.find("RUN_TEST(test_beta_path1_case)");
  REQUIRE(r1 != std::string::npos);
  REQUIRE(r2 != std::string::npos);
  REQUIRE(r3 != std::string::npos);
  CHECK(r1 < r2);
  CHECK(r2 < r3);

  // exactly the divergence and the dropped main are warned about
  REQUIRE(merged.warnings.size() == 2);
  bool saw_divergence = false, saw_main = false;
  for (const auto& w : merged.warnings) {
    if (w.find("helper_sum") != std::string::npos &&
        w.find("kept alpha/path1") != std::string::npos)
      saw_divergence = true;
    if (w.find("dropped main() from beta/path1") != std::string::npos)
      saw_main = true;
  }
  CHECK(saw_divergence);
  CHECK(saw_main);
}

TEST_CASE("merge output is byte-identical regardless of input order") {
  auto units = sample_units();
  auto a = suite::merge_suite(units);
  std::reverse(units.begin(), units.end());
  auto b = suite::merge_suite(units);
  CHECK(a.source_text == b.source_text);
}

TEST_CASE("pending units are rejected by merge") {
  auto u = unit("late", 1, "void test_late_path1_case(void) {}\n",
                synth::UnitStatus::Pending);
  CHECK_THROWS_AS(suite::merge_suite({u}), ConstraintViolation);
}

TEST_CASE("the merged sample suite compiles and links against unity") {
  auto merged = suite::merge_suite(sample_units());
  fs::path dir = util::make_temp_dir("suitehdr");
  util::atomic_write(dir / "header.h", "/* project header */\n");
  fs::path runtime = fs::path(PATHTEST_SOURCE_DIR) / "runtime";
  toolchain::GccToolchain tc;
  CHECK_NOTHROW(suite::verify_suite_compiles(merged, {runtime / "unity.c"},
                                             {runtime, dir}, tc));
  fs::remove_all(dir);
}

TEST_CASE("a broken merge reports diagnostics plus the divergence warnings") {
  suite::MergedSuite bad;
  bad.source_text = "int main(void) { return syntax error; }\n";
  bad.warnings = {"definition of 'x' differs between a/path1 and b/path1"};
  toolchain::GccToolchain tc;
  try {
    suite::verify_suite_compiles(bad, {}, {}, tc);
    FAIL("expected MergeCompileFailure");
  } catch (const MergeCompileFailure& e) {
    std::string msg = e.what();
    CHECK(msg.find("merge divergences") != std::string::npos);
    CHECK(msg.find("definition of 'x' differs") != std::string::npos);
  }
}

TEST_CASE("gcov summaries parse into per-file and per-function records") {
  std::string raw =
      "Function 'insert'\n"
      "Lines executed:100.00% of 10\n"
      "Branches executed:100.00% of 6\n"
      "Taken at least once:83.33% of 6\n"
      "Calls executed:100.00% of 2\n"
      "\n"
      "Function 'leaf_count'\n"
      "Lines executed:0.00% of 4\n"
      "No branches\n"
      "No calls\n"
      "\n"
      "File 'bst.c'\n"
      "Lines executed:90.00% of 14\n"
      "Branches executed:100.00% of 6\n"
      "Taken at least once:83.33% of 6\n"
      "Calls executed:70.00% of 2\n"
      "Creating 'bst.c.gcov'\n"
      "\n"
      "Lines executed:90.00% of 14\n";  // cross-file trailer, ignored

  auto files = suite::parse_gcov(raw);
  REQUIRE(files.size() == 1);
  const auto& f = files[0];
  CHECK(f.file == "bst.c");
  CHECK(f.line_pct == doctest::Approx(90.0));
  CHECK(f.lines_total == 14);
  // "taken at least once" is the branch metric, not "branches executed"
  CHECK(f.branch_pct == doctest::Approx(83.33));
  CHECK(f.branches_total == 6);
  REQUIRE(f.functions.size() == 2);
  CHECK(f.functions[0].name == "insert");
  CHECK(f.functions[0].line_pct == doctest::Approx(100.0));
  CHECK(f.functions[0].branch_pct == doctest::Approx(83.33));
  CHECK(f.functions[1].name == "leaf_count");
  CHECK(f.functions[1].line_pct == doctest::Approx(0.0));
  CHECK_FALSE(f.functions[1].branch_pct.has_value());
  CHECK(f.functions[1].branches_total == 0);
}

TEST_CASE("zero-denominator gcov stats are absent, not 100") {
  std::string raw =
      "Function 'empty_fn'\n"
      "Lines executed:0.00% of 0\n"
      "File 'empty.c'\n"
      "Lines executed:0.00% of 0\n";
  auto files = suite::parse_gcov(raw);
  REQUIRE(files.size() == 1);
  CHECK_FALSE(files[0].line_pct.has_value());
  CHECK(files[0].lines_total == 0);
  REQUIRE(files[0].functions.size() == 1);
  CHECK_FALSE(files[0].functions[0].line_pct.has_value());
}

TEST_CASE("unknown gcov shapes are rejected") {
  CHECK_THROWS_AS(suite::parse_gcov("some random text\n"), UnrecognizedFormat);
  CHECK_THROWS_AS(suite::parse_gcov("File bst.c\n"), UnrecognizedFormat);
  CHECK_THROWS_AS(
      suite::parse_gcov("File 'a.c'\nLines executed:nonsense\n"),
      UnrecognizedFormat);
  // only ignorable noise and no file block at all
  CHECK_THROWS_AS(suite::parse_gcov("Calls executed:10.00% of 2\n"),
                  UnrecognizedFormat);
}

TEST_CASE("coverage of a small project measures real gcov numbers") {
  fs::path dir = util::make_temp_dir("covmini");
  util::atomic_write(dir / "lib.c",
                     "int twice(int x) { return x * 2; }\n"
                     "int sign(int x)\n{\n"
                     "    if (x < 0) {\n        return -1;\n    }\n"
                     "    return 1;\n}\n"
                     "int never_called(int x)\n{\n    return x + 1;\n}\n");
  util::atomic_write(dir / "suite.c",
                     "extern int twice(int);\nextern int sign(int);\n"
                     "int main(void)\n{\n"
                     "    if (twice(2) != 4) return 1;\n"
                     "    if (sign(5) != 1) return 1;\n"
                     "    if (sign(-3) != -1) return 1;\n"
                     "    return 0;\n}\n");
  suite::CoverageJob job;
  job.suite_source = dir / "suite.c";
  job.project_sources = {dir / "lib.c"};
  job.work_dir = dir / "work";
  toolchain::GccToolchain tc;
  auto rep = suite::measure_coverage(job, tc);

  REQUIRE(rep.per_file.size() == 1);
  const auto& f = rep.per_file[0];
  CHECK(f.file == "lib.c");
  REQUIRE(f.functions.size() == 3);

  auto find_fn = [&](const std::string& name) {
    auto it = std::find_if(f.functions.begin(), f.functions.end(),
                           [&](const auto& fn) { return fn.name == name; });
    REQUIRE(it != f.functions.end());
    return *it;
  };
  auto twice = find_fn("twice");
  CHECK(twice.line_pct == doctest::Approx(100.0));
  auto sign = find_fn("sign");
  CHECK(sign.line_pct == doctest::Approx(100.0));
  auto never = find_fn("never_called");
  CHECK(never.line_pct == doctest::Approx(0.0));

  // branch data comes at file granularity; both arms of sign were driven
  REQUIRE(f.branch_pct.has_value());
  CHECK(*f.branch_pct == doctest::Approx(100.0));
  CHECK(f.branches_total == 2);

  // two of three functions executed
  REQUIRE(f.function_pct.has_value());
  CHECK(*f.function_pct == doctest::Approx(100.0 * 2 / 3));

  // oracle: recompute the weighted project aggregate from the per-file rows
  double want_lines = 0;
  long tot_lines = 0;
  for (const auto& pf : rep.per_file) {
    if (!pf.line_pct) continue;
    want_lines += *pf.line_pct / 100.0 * static_cast<double>(pf.lines_total);
    tot_lines += pf.lines_total;
  }
  REQUIRE(tot_lines > 0);
  REQUIRE(rep.project.line_pct.has_value());
  CHECK(*rep.project.line_pct ==
        doctest::Approx(100.0 * want_lines / static_cast<double>(tot_lines)));
  CHECK(rep.project.file == "TOTAL");

  auto j = nlohmann::json::parse(rep.to_json());
  CHECK(j["per_file"].size() == 1);
  CHECK(j["project"]["file"] == "TOTAL");
  CHECK(j["per_file"][0]["functions"].size() == 3);
  fs::remove_all(dir);
}

TEST_CASE("a failing merged suite is fatal for coverage") {
  fs::path dir = util::make_temp_dir("covfail");
  util::atomic_write(dir / "lib.c", "int id(int x) { return x; }\n");
  util::atomic_write(dir / "suite.c", "int main(void)\n{\n    return 2;\n}\n");
  suite::CoverageJob job;
  job.suite_source = dir / "suite.c";
  job.project_sources = {dir / "lib.c"};
  job.work_dir = dir / "work";
  toolchain::GccToolchain tc;
  try {
    suite::measure_coverage(job, tc);
    FAIL("expected SuiteRunFailure");
  } catch (const SuiteRunFailure& e) {
    CHECK(std::string(e.what()).find("exit 2") != std::string::npos);
  }
  fs::remove_all(dir);
}
