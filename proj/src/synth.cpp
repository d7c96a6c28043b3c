#include "pathtest/synth.hpp"

#include <algorithm>
#include <regex>
#include <set>

#include "pathtest/cparse.hpp"
#include "pathtest/errors.hpp"
#include "pathtest/util.hpp"

namespace pathtest::synth {

std::string status_name(UnitStatus s, int repaired_n) {
  switch (s) {
    case UnitStatus::Pending: return "pending";
    case UnitStatus::Pass0: return "pass0";
    case UnitStatus::Repaired: return "repaired(" + std::to_string(repaired_n) + ")";
    case UnitStatus::Dropped: return "dropped";
  }
  return "unknown";
}

namespace {

bool is_framework_name(const std::string& name) {
  static const std::set<std::string> kExact = {
      "UNITY_BEGIN", "UNITY_END", "RUN_TEST",   "TEST_FAIL",
      "TEST_IGNORE", "TEST_PASS", "TEST_ABORT", "TEST_MESSAGE",
      "setUp",       "tearDown",  "main",
  };
  return util::starts_with(name, "TEST_ASSERT") || kExact.count(name) > 0;
}

std::string strip_code_fence(const std::string& raw) {
  auto open = raw.find("```");
  if (open == std::string::npos) return raw;
  auto line_end = raw.find('\n', open);
  if (line_end == std::string::npos) return raw;
  auto close = raw.find("```", line_end);
  if (close == std::string::npos) return raw.substr(line_end + 1);
  return raw.substr(line_end + 1, close - line_end - 1);
}

std::optional<std::string> first_test_function(const std::string& source) {
  static const std::regex kTestFn(R"(void\s+(test_\w+)\s*\()");
  std::smatch m;
  if (std::regex_search(source, m, kTestFn)) return m[1].str();
  return std::nullopt;
}

}  // namespace

std::vector<std::string> scan_test_source(
    const std::string& source, const std::vector<std::string>& allowed_calls) {
  std::set<std::string> allowed(allowed_calls.begin(), allowed_calls.end());

  cparse::ParsedFile pf;
  try {
    pf = cparse::parse_file("test.c", source);
  } catch (const std::exception&) {
    return {};  // unparsable text is the compiler's problem, not the scan's
  }
  for (const auto& fn : pf.functions) allowed.insert(fn.name);
  for (const auto& m : pf.macros) allowed.insert(m.name);

  auto calls = cparse::call_positions(pf.tokens, 0, pf.tokens.size());
  std::vector<std::string> violations;
  for (const auto& c : calls) {
    if (allowed.count(c) || is_framework_name(c)) continue;
    if (std::find(violations.begin(), violations.end(), c) == violations.end())
      violations.push_back(c);
  }
  return violations;
}

std::optional<std::pair<std::string, int>> parse_test_name(
    const std::string& test_name) {
  if (!util::starts_with(test_name, "test_")) return std::nullopt;
  // last "_path<digits>_" marks the function/path-id boundary
  static const std::regex kMarker(R"(_path(\d+)_)");
  auto begin = std::sregex_iterator(test_name.begin(), test_name.end(), kMarker);
  auto end = std::sregex_iterator();
  std::smatch last;
  for (auto it = begin; it != end; ++it) last = *it;
  if (last.empty()) return std::nullopt;
  std::string function = test_name.substr(5, last.position(0) - 5);
  if (function.empty()) return std::nullopt;
  return std::make_pair(function, std::stoi(last[1].str()));
}

namespace {

struct Review {
  std::vector<std::string> problems;       // reprompt-worthy issues
  std::vector<std::string> scan_hits;
  std::optional<std::string> found_name;
};

Review review_source(const std::string& source, const csource::FunctionUnit& fn,
                     const opmap::PathSlice& slice,
                     const std::string& expected_prefix) {
  Review r;
  r.found_name = first_test_function(source);
  if (!r.found_name) {
    r.problems.push_back("no test function of the form void test_...(void) found");
  } else if (!util::starts_with(*r.found_name, expected_prefix) ||
             r.found_name->size() <= expected_prefix.size()) {
    r.problems.push_back("test must be named " + expected_prefix +
                         "<shortdesc>, got '" + *r.found_name + "'");
  }

  cparse::ParsedFile pf;
  bool parsed = true;
  try {
    pf = cparse::parse_file("test.c", source);
  } catch (const std::exception&) {
    parsed = false;
  }
  if (parsed) {
    auto calls = cparse::call_positions(pf.tokens, 0, pf.tokens.size());
    if (std::find(calls.begin(), calls.end(), fn.name) == calls.end())
      r.problems.push_back("the test never calls " + fn.name);
    bool asserts = std::any_of(calls.begin(), calls.end(), [](const std::string& c) {
      return util::starts_with(c, "TEST_ASSERT") || c == "TEST_FAIL";
    });
    if (!asserts) r.problems.push_back("the test contains no Unity assertion");
  }

  r.scan_hits = scan_test_source(source, slice.allowed_calls);
  for (const auto& v : r.scan_hits)
    r.problems.push_back("call to '" + v + "' which is not in the allowed list");
  return r;
}

std::vector<llm::Message> build_prompt(const csource::FunctionUnit& fn,
                                       const opmap::PathSlice& slice,
                                       const std::string& header,
                                       const opmap::HelpersFile& helpers,
                                       const std::string& expected_prefix) {
  std::string user;
  user += "Write one Unity test that drives this C function down one specific "
          "execution path.\n\n";
  user += "Function under test:\n```c\n" + fn.body + "\n```\n";
  if (!fn.desc.empty()) user += "\nDescription: " + fn.desc + "\n";
  user += "\nExecution path to cover ([T]/[F] mark taken branches):\n  " +
          slice.linearized + "\n";
  user += "\nProject header (already available as header.h):\n```c\n" + header +
          "\n```\n";
  if (!helpers.provided_names.empty()) {
    user += "\nHelpers defined in helpers.c: " +
            util::join(helpers.provided_names, ", ") + "\n";
  }
  user += "\nAllowed function calls: " + util::join(slice.allowed_calls, ", ") +
          " (plus Unity assertion macros). Call nothing else.\n";
  user +=
      "\nRequirements:\n"
      "  - name the test function exactly " + expected_prefix +
      "<shortdesc> (lowercase shortdesc, no further constraints)\n"
      "  - start with: #include \"unity.h\", #include \"header.h\", "
      "#include \"helpers.c\"\n"
      "  - define void setUp(void) and void tearDown(void) (may be empty)\n"
      "  - define exactly one test function; no main\n"
      "  - use at least one TEST_ASSERT macro\n"
      "  - free every allocation the test or the function makes\n"
      "Reply with the complete C file only.";

  return {{"system",
           "You write minimal, deterministic C unit tests with the Unity "
           "framework. You reply with a single complete C file and no prose."},
          {"user", user}};
}

}  // namespace

AtomicTestUnit generate_test(const csource::FunctionUnit& fn,
                             const cfg::ExecutionPath& path,
                             const opmap::PathSlice& slice,
                             const std::string& header,
                             const opmap::HelpersFile& helpers,
                             llm::LlmClient& client) {
  std::string expected_prefix =
      "test_" + fn.name + "_path" + std::to_string(path.path_id) + "_";

  auto messages = build_prompt(fn, slice, header, helpers, expected_prefix);
  llm::ChatRequest req(llm::Stage::Synth, messages, fn.name);
  llm::ChatResponse resp = client.chat(req);

  std::string source = util::trim(strip_code_fence(resp.text));
  if (source.empty()) throw EmptyResponse();

  Review review = review_source(source, fn, slice, expected_prefix);
  if (!review.problems.empty()) {
    auto retry_messages = messages;
    retry_messages.push_back({"assistant", resp.text});
    retry_messages.push_back(
        {"user", "Your test was rejected:\n  - " +
                     util::join(review.problems, "\n  - ") +
                     "\nReply with the corrected complete C file only."});
    llm::ChatRequest retry(llm::Stage::Synth, retry_messages, fn.name);
    llm::ChatResponse second = client.chat(retry);
    std::string corrected = util::trim(strip_code_fence(second.text));
    if (!corrected.empty()) {
      source = corrected;
      review = review_source(source, fn, slice, expected_prefix);
    }
  }

  AtomicTestUnit unit;
  unit.path_id = path.path_id;
  unit.function_name = fn.name;
  unit.test_source = source;
  unit.helpers = helpers;
  unit.scan_violations = review.scan_hits;  // repair may still clear these

  // the name invariant is load-bearing (merge + reporting parse it back),
  // so a still-misnamed test gets rewritten rather than rejected
  std::string canonical = expected_prefix + "auto";
  if (review.found_name && util::starts_with(*review.found_name, expected_prefix) &&
      review.found_name->size() > expected_prefix.size()) {
    unit.test_name = *review.found_name;
  } else if (review.found_name) {
    static const std::regex kRename(R"(void\s+test_\w+)");
    unit.test_source =
        std::regex_replace(unit.test_source, kRename, "void " + canonical,
                           std::regex_constants::format_first_only);
    unit.test_name = canonical;
    unit.notes.push_back("test renamed from '" + *review.found_name + "' to '" +
                         canonical + "'");
  } else {
    unit.test_name = canonical;
    unit.notes.push_back("no test function found; unit will fail compilation");
  }
  return unit;
}

}  // namespace pathtest::synth
