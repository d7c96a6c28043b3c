#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pathtest/cfg.hpp"
#include "pathtest/errorreport.hpp"
#include "pathtest/llm.hpp"
#include "pathtest/opmap.hpp"

namespace pathtest::synth {

enum class UnitStatus { Pending, Pass0, Repaired, Dropped };

std::string status_name(UnitStatus s, int repaired_n = 0);

// One per-path test file plus its private helpers copy, tracked through the
// validation loop.
struct AtomicTestUnit {
  int path_id = 0;
  std::string function_name;
  std::string test_name;
  std::string test_source;
  opmap::HelpersFile helpers;
  UnitStatus status = UnitStatus::Pending;
  int repaired_n = 0;      // meaningful when status == Repaired (1..3)
  int iterations_used = 0; // repair attempts consumed
  std::vector<validate::ErrorReport> error_history;
  std::vector<std::string> scan_violations;  // unresolved after the reprompt
  std::vector<std::string> notes;            // e.g. forced test renames
  std::string drop_hint;   // e.g. "unreachable path" for early drops
};

// Identifiers called in `source` that are neither allowed, locally defined,
// nor test-framework vocabulary. Comments and string literals never trigger
// it (the scan runs on the token stream).
std::vector<std::string> scan_test_source(
    const std::string& source, const std::vector<std::string>& allowed_calls);

// "test_<function>_path<id>_<shortdesc>" -> (function, path_id). Uses the
// last "_path<digits>_" occurrence so function names containing "_path"
// still round-trip.
std::optional<std::pair<std::string, int>> parse_test_name(
    const std::string& test_name);

// One synthesis request (plus at most one corrective reprompt) yielding a
// pending unit. The reprompt fires on naming violations, missing assertions,
// a missing call to the function under test, or identifier-scan hits; scan
// hits that survive the reprompt are recorded on the unit and left for the
// repair loop. A blank response raises EmptyResponse.
AtomicTestUnit generate_test(const csource::FunctionUnit& fn,
                             const cfg::ExecutionPath& path,
                             const opmap::PathSlice& slice,
                             const std::string& header,
                             const opmap::HelpersFile& helpers,
                             llm::LlmClient& client);

}  // namespace pathtest::synth
