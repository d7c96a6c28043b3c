#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pathtest/config.hpp"
#include "pathtest/llm.hpp"
#include "pathtest/retrieval.hpp"
#include "pathtest/suite.hpp"
#include "pathtest/toolchain.hpp"
#include "pathtest/validate.hpp"

namespace pathtest::pipeline {

// Stage names in execution order: ingest, paths, describe, retrieve, opmap,
// synth, validate, merge, coverage.
const std::vector<std::string>& stage_order();
// Index into stage_order(); throws ConfigError on an unknown name.
int stage_index(const std::string& name);

struct FunctionReport {
  std::string function;
  int path_count = 0;
  bool truncated = false;
  validate::FunctionRow row;
  std::vector<std::string> errors;  // stage failures, isolated per function
};

struct RunReport {
  std::string project;
  std::vector<FunctionReport> functions;
  validate::FunctionRow totals;
  suite::CoverageReport coverage;
  bool coverage_measured = false;
  std::string usage_json;  // ledger snapshot
  std::vector<std::string> warnings;
  std::vector<std::string> errors;  // project-fatal failures

  long generated_total() const { return totals.generated; }
  double retention_pct() const;
  std::string to_json() const;
};

RunReport report_from_json(const std::string& json_text);

// format: "text" renders the per-function retention table and the coverage
// table; "json" is the canonical machine artifact.
std::string report_summary(const RunReport& report, const std::string& format);

// Injected collaborators; any left null is built from the config.
struct PipelineServices {
  llm::LlmClient* client = nullptr;
  retrieval::Embedder* embedder = nullptr;
  toolchain::Toolchain* toolchain = nullptr;
};

// Runs stages in order, persisting every intermediate artifact under
// artifacts/<project>/ and stamping each stage with a content hash of its
// inputs so unchanged stages are loaded from cache. cfg.from_stage forces
// loading everything before it; stop_after ends the run early (partial CLI
// commands). Function-level failures never abort sibling functions; a fully
// failed project yields a zeroed report.
RunReport run_pipeline(const config::PipelineConfig& cfg,
                       PipelineServices services = {},
                       const std::string& stop_after = {});

}  // namespace pathtest::pipeline
