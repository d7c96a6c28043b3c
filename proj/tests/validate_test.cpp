#include <doctest.h>

#include <csignal>
#include <filesystem>

#include <json.hpp>

#include "pathtest/errors.hpp"
#include "pathtest/util.hpp"
#include "pathtest/validate.hpp"

namespace fs = std::filesystem;
using namespace pathtest;
using toolchain::ScriptedToolchain;
using validate::Category;

namespace {

synth::AtomicTestUnit make_unit() {
  synth::AtomicTestUnit unit;
  unit.path_id = 1;
  unit.function_name = "f";
  unit.test_name = "test_f_path1_basic";
  unit.test_source = "#include \"unity.h\"\n#include \"header.h\"\n"
                     "#include \"helpers.c\"\n\nvoid setUp(void) {}\n"
                     "void tearDown(void) {}\n\n"
                     "void test_f_path1_basic(void)\n{\n"
                     "    TEST_ASSERT_EQUAL_INT(1, 1);\n}\n";
  unit.helpers.source_text = "#include \"header.h\"\n";
  return unit;
}

struct Ctx {
  fs::path root;
  validate::UnitContext ctx;

  Ctx() {
    root = util::make_temp_dir("valloop");
    ctx.unit_dir = root / "unit";
    ctx.scratch_dir = root / "scratch";
    ctx.log_dir = root / "logs";
    util::ensure_dir(ctx.unit_dir);
    util::ensure_dir(ctx.scratch_dir);
    ctx.tag = "f/path1";
  }
  ~Ctx() { fs::remove_all(root); }
};

ScriptedToolchain::Step clean_step() { return {}; }

ScriptedToolchain::Step run_fail(const std::string& output, int exit_code = 1) {
  ScriptedToolchain::Step s;
  s.run_ok = false;
  s.run_output = output;
  s.exit_code = exit_code;
  return s;
}

ScriptedToolchain::Step compile_fail(const std::string& diag) {
  ScriptedToolchain::Step s;
  s.compile_ok = false;
  s.compile_diagnostics = diag;
  return s;
}

std::string fixed_json() {
  nlohmann::json j;
  j["test_source"] = make_unit().test_source + "/* repaired */\n";
  j["helpers_source"] = "#include \"header.h\"\n/* fixed */\n";
  j["verdict"] = "fixed";
  j["note"] = "adjusted the expectation";
  return j.dump();
}

}  // namespace

TEST_CASE("classifier precedence: memory beats crash beats assertion") {
  using validate::classify_error;
  CHECK(classify_error("bst.c:10:test:FAIL: expected 1", 1, {}) ==
        Category::Assertion);
  CHECK(classify_error("==123==ERROR: LeakSanitizer: detected memory leaks", 1,
                       {}) == Category::Memory);
  // a leak report that also prints a FAIL line is still a memory error
  CHECK(classify_error("t:FAIL\nLeakSanitizer: detected memory leaks", 1, {}) ==
        Category::Memory);
  CHECK(classify_error("heap-buffer-overflow on address", 1, {}) ==
        Category::Memory);
  CHECK(classify_error("heap-use-after-free READ of size 4", 1, {}) ==
        Category::Memory);
  CHECK(classify_error("AddressSanitizer:DEADLYSIGNAL", 1, {}) ==
        Category::Crash);
  CHECK(classify_error("SEGV on unknown address", 1, {}) == Category::Crash);
  CHECK(classify_error("stack-overflow detected", 1, {}) == Category::Crash);
  CHECK(classify_error("", 0, SIGSEGV) == Category::Crash);
  CHECK(classify_error("", 0, SIGABRT) == Category::Crash);
  CHECK(classify_error("mysterious output", 3, {}) == Category::Misc);
  // crash signal plus memory text: the memory marker wins
  CHECK(classify_error("stack-buffer-overflow write", 1, SIGSEGV) ==
        Category::Memory);
}

TEST_CASE("category and phase names are stable") {
  CHECK(validate::phase_name(validate::Phase::Compile) == "compile");
  CHECK(validate::phase_name(validate::Phase::Run) == "run");
  CHECK(validate::category_name(Category::Compilation) == "compilation");
  CHECK(validate::category_name(Category::Memory) == "memory");
  CHECK(validate::category_name(Category::Crash) == "crash");
  CHECK(validate::category_name(Category::Assertion) == "assertion");
  CHECK(validate::category_name(Category::Misc) == "misc");
  CHECK(validate::root_cause_name(
            validate::RootCause::HelperApiHallucination) ==
        "helper-api-hallucination");
}

TEST_CASE("write_unit_files lays down test, helpers and runner") {
  Ctx c;
  auto unit = make_unit();
  validate::write_unit_files(unit, c.ctx);
  CHECK(util::read_file(c.ctx.unit_dir / "test.c") == unit.test_source);
  CHECK(util::read_file(c.ctx.unit_dir / "helpers.c") ==
        unit.helpers.source_text);
  auto runner = util::read_file(c.ctx.unit_dir / "runner.c");
  CHECK(runner.find("RUN_TEST(test_f_path1_basic)") != std::string::npos);
  CHECK(runner.find("UNITY_BEGIN") != std::string::npos);
  CHECK(runner.find("UNITY_END") != std::string::npos);
}

TEST_CASE("clean first cycle is pass0 with OK logs") {
  Ctx c;
  ScriptedToolchain tc;
  tc.script("f/path1", {clean_step()});
  llm::ScriptedLlmClient client;  // never consulted

  auto unit = validate::validate_loop(make_unit(), c.ctx, tc, client, {});
  CHECK(unit.status == synth::UnitStatus::Pass0);
  CHECK(unit.repaired_n == 0);
  CHECK(unit.iterations_used == 0);
  CHECK(unit.error_history.empty());
  CHECK(util::read_file(c.ctx.log_dir / "iter0.compile.log") == "OK\n");
  CHECK(util::read_file(c.ctx.log_dir / "iter0.run.log") == "OK\n");
}

TEST_CASE("an assertion failure is repaired on the next cycle") {
  Ctx c;
  ScriptedToolchain tc;
  tc.script("f/path1",
            {run_fail("prog.c:9:test_f_path1_basic:FAIL: expected 2 was 1"),
             clean_step()});
  llm::ScriptedLlmClient client;
  client.set_default_response(llm::Stage::Repair, fixed_json());

  auto unit = validate::validate_loop(make_unit(), c.ctx, tc, client, {});
  CHECK(unit.status == synth::UnitStatus::Repaired);
  CHECK(unit.repaired_n == 1);
  CHECK(unit.iterations_used == 1);
  REQUIRE(unit.error_history.size() == 1);
  CHECK(unit.error_history[0].phase == validate::Phase::Run);
  CHECK(unit.error_history[0].category == Category::Assertion);
  CHECK(unit.test_source.find("/* repaired */") != std::string::npos);
  CHECK(unit.helpers.source_text.find("/* fixed */") != std::string::npos);
  REQUIRE(!unit.notes.empty());
  CHECK(unit.notes[0].find("adjusted the expectation") != std::string::npos);
  // the repair request ran at repair temperature
  auto h = client.history();
  REQUIRE(h.size() == 1);
  CHECK(h[0].stage == llm::Stage::Repair);
  CHECK(h[0].temperature == doctest::Approx(0.1));
  // failing first cycle logged, clean second cycle logged
  CHECK(util::read_file(c.ctx.log_dir / "iter0.run.log").find(":FAIL") !=
        std::string::npos);
  CHECK(util::read_file(c.ctx.log_dir / "iter1.compile.log") == "OK\n");
}

TEST_CASE("compile failures count as compilation errors") {
  Ctx c;
  ScriptedToolchain tc;
  tc.script("f/path1", {compile_fail("test.c:4: error: nope"), clean_step()});
  llm::ScriptedLlmClient client;
  client.set_default_response(llm::Stage::Repair, fixed_json());

  auto unit = validate::validate_loop(make_unit(), c.ctx, tc, client, {});
  CHECK(unit.status == synth::UnitStatus::Repaired);
  REQUIRE(unit.error_history.size() == 1);
  CHECK(unit.error_history[0].phase == validate::Phase::Compile);
  CHECK(unit.error_history[0].category == Category::Compilation);
  CHECK(util::read_file(c.ctx.log_dir / "iter0.compile.log").find("error: nope") !=
        std::string::npos);
}

TEST_CASE("the budget exhausts into dropped with the final error kept") {
  Ctx c;
  ScriptedToolchain tc;
  tc.script("f/path1", {run_fail("a:FAIL"), run_fail("b:FAIL"),
                        run_fail("c:FAIL"), run_fail("d:FAIL")});
  llm::ScriptedLlmClient client;
  client.set_default_response(llm::Stage::Repair, fixed_json());

  auto unit = validate::validate_loop(make_unit(), c.ctx, tc, client, {});
  CHECK(unit.status == synth::UnitStatus::Dropped);
  CHECK(unit.iterations_used == 3);
  // three repaired attempts plus the final failure
  CHECK(unit.error_history.size() == 4);
  CHECK(fs::exists(c.ctx.log_dir / "iter3.run.log"));
}

TEST_CASE("a path_unreachable verdict drops the unit early") {
  Ctx c;
  ScriptedToolchain tc;
  tc.script("f/path1", {run_fail("t:FAIL: impossible precondition")});
  llm::ScriptedLlmClient client;
  client.set_default_response(llm::Stage::Repair,
                              R"({"verdict": "path_unreachable",
                                  "note": "condition cannot be satisfied"})");

  auto unit = validate::validate_loop(make_unit(), c.ctx, tc, client, {});
  CHECK(unit.status == synth::UnitStatus::Dropped);
  CHECK(unit.drop_hint == "unreachable path");
  CHECK(unit.iterations_used == 1);
}

TEST_CASE("llm outage leaves the unit pending for a stage retry") {
  struct DownClient : llm::LlmClient {
    llm::ChatResponse chat(const llm::ChatRequest& req) override {
      record_request(req);
      throw LlmUnavailable("socket closed");
    }
  };
  Ctx c;
  ScriptedToolchain tc;
  tc.script("f/path1", {run_fail("x:FAIL")});
  DownClient client;

  auto unit = validate::validate_loop(make_unit(), c.ctx, tc, client, {});
  CHECK(unit.status == synth::UnitStatus::Pending);
}

TEST_CASE("timeouts classify as misc and leaks as memory even on exit 0") {
  Ctx c;
  ScriptedToolchain tc;
  ScriptedToolchain::Step timeout;
  timeout.run_ok = false;
  timeout.timed_out = true;
  timeout.run_output = "partial output";
  ScriptedToolchain::Step leaky;
  leaky.run_ok = true;  // exit 0
  leaky.run_output = "==7==ERROR: LeakSanitizer: detected memory leaks";
  tc.script("f/path1", {timeout, leaky});
  llm::ScriptedLlmClient client;
  client.set_default_response(llm::Stage::Repair, fixed_json());

  validate::RepairPolicy policy;
  policy.max_iterations = 1;  // one repair: both scripted cycles get used
  auto unit = validate::validate_loop(make_unit(), c.ctx, tc, client, policy);
  CHECK(unit.status == synth::UnitStatus::Dropped);
  REQUIRE(unit.error_history.size() == 2);
  CHECK(unit.error_history[0].category == Category::Misc);   // the timeout
  CHECK(unit.error_history[1].category == Category::Memory); // the leak
}

TEST_CASE("non-JSON repair with a fenced block swaps the test source") {
  auto unit = make_unit();
  validate::ErrorReport err;
  err.phase = validate::Phase::Run;
  err.category = Category::Assertion;
  err.diagnostic_text = "t:FAIL";

  llm::ScriptedLlmClient client;
  client.set_default_response(llm::Stage::Repair,
                              "Here is the fix:\n```c\nvoid test_f_path1_basic"
                              "(void)\n{\n}\n```\nGood luck!");
  auto out = validate::repair(unit, err, client, {});
  CHECK(out.iterations_used == 1);
  CHECK(out.test_source.find("Good luck") == std::string::npos);
  CHECK(out.test_source.find("void test_f_path1_basic") != std::string::npos);
  REQUIRE(out.error_history.size() == 1);

  llm::ScriptedLlmClient prose;
  prose.set_default_response(llm::Stage::Repair,
                             "I believe this is a path_unreachable case.");
  auto dropped = validate::repair(unit, err, prose, {});
  CHECK(dropped.drop_hint == "unreachable path");
}

TEST_CASE("validation report aggregates rows and enforces the identities") {
  validate::ValidationReport report;

  auto add = [&](const std::string& fn, int path, synth::UnitStatus st,
                 int repaired = 0) {
    auto u = make_unit();
    u.function_name = fn;
    u.path_id = path;
    u.status = st;
    u.repaired_n = repaired;
    report.add_unit(u);
  };

  add("alpha", 1, synth::UnitStatus::Pass0);
  add("alpha", 2, synth::UnitStatus::Pass0);
  add("alpha", 3, synth::UnitStatus::Repaired, 2);
  add("alpha", 4, synth::UnitStatus::Dropped);
  add("beta", 1, synth::UnitStatus::Pass0);
  report.finalize();

  REQUIRE(report.rows().size() == 2);
  const auto* alpha = &report.rows()[0];
  if (alpha->function != "alpha") alpha = &report.rows()[1];
  CHECK(alpha->generated == 4);
  CHECK(alpha->pass0 == 2);
  CHECK(alpha->failed == 2);
  CHECK(alpha->fixed2 == 1);
  CHECK(alpha->dropped == 1);
  CHECK(alpha->final_count == 3);

  CHECK(report.totals().generated == 5);
  CHECK(report.totals().final_count == 4);
  // oracle: 4 of 5 kept
  CHECK(report.retention_pct() == doctest::Approx(80.0));

  auto j = nlohmann::json::parse(report.to_json());
  CHECK(j["rows"].size() == 2);
  CHECK(j["totals"]["generated"] == 5);
  CHECK(j["retention_pct"] == "80.00");
}

TEST_CASE("the report rejects pending or malformed units") {
  validate::ValidationReport report;
  auto pending = make_unit();
  CHECK_THROWS_AS(report.add_unit(pending), ConstraintViolation);

  auto weird = make_unit();
  weird.status = synth::UnitStatus::Repaired;
  weird.repaired_n = 4;  // outside 1..3
  CHECK_THROWS_AS(report.add_unit(weird), ConstraintViolation);

  auto zero = make_unit();
  zero.status = synth::UnitStatus::Repaired;
  zero.repaired_n = 0;
  CHECK_THROWS_AS(report.add_unit(zero), ConstraintViolation);
}
