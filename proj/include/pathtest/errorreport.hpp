#pragma once

#include <chrono>
#include <optional>
#include <string>

namespace pathtest::validate {

enum class Phase { Compile, Run };

enum class Category { Compilation, Memory, Crash, Assertion, Misc };

// Root-cause taxonomy for failed units. Assigned by a human reviewer during
// triage, never by the pipeline itself.
enum class RootCause {
  HelperApiHallucination,
  MallocCounterMiscount,
  MemoryOwnershipConfusion,
  UnreachablePathCondition,
  SourceApiNameHallucination,
  StdoutCaptureTypeMismatch,
  UnityMacroMisuse,
};

std::string phase_name(Phase p);
std::string category_name(Category c);
std::string root_cause_name(RootCause r);

struct ErrorReport {
  Phase phase = Phase::Compile;
  Category category = Category::Compilation;
  std::optional<RootCause> root_cause_label;  // human-assigned
  std::string diagnostic_text;
  int exit_code = 0;
  std::optional<int> signal;
};

struct RepairPolicy {
  int max_iterations = 3;
  double repair_temperature = 0.1;
  double generation_temperature = 0.0;
  std::chrono::seconds per_test_timeout{10};
};

}  // namespace pathtest::validate
