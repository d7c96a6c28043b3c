#pragma once

#include <map>
#include <string>
#include <vector>

#include "pathtest/cfg.hpp"
#include "pathtest/llm.hpp"
#include "pathtest/retrieval.hpp"
#include "pathtest/toolchain.hpp"

namespace pathtest::opmap {

// What one execution path's test is allowed to touch.
struct PathSlice {
  int path_id = 0;
  std::string linearized;
  std::vector<std::string> allowed_calls;  // sorted, unique, includes the FUT
};

struct DepNote {
  std::string callee;
  std::string note;
};

struct OperationMap {
  std::string function_name;
  std::vector<std::string> reuse;              // names from the retrieved catalog
  std::vector<retrieval::Helper> created;      // origin Created, full impl
  std::vector<DepNote> deps_analysis;
  std::map<int, PathSlice> per_path;           // filled by merge_path_info
  std::vector<std::string> warnings;
};

struct HelpersFile {
  std::string source_text;
  std::vector<std::string> provided_names;
  std::vector<std::string> warnings;
};

// Library calls every generated test may use without declaring them.
const std::vector<std::string>& standard_allow_list();

// One planning request (plus at most one reprompt) asking the model which
// catalog helpers to reuse, what to create, and how dependencies are used.
// Path information is deliberately absent from the prompt. Responses must
// match {reuse:[names], created:[{name,signature,impl,desc}], deps:[{callee,
// note}]}; reuse names outside the catalog raise HallucinatedReuse, other
// schema breaks raise SchemaViolation.
OperationMap build_operation_map(const csource::FunctionUnit& fn,
                                 const std::string& header,
                                 const retrieval::HelperCatalog& catalog,
                                 llm::LlmClient& client);

// Populates per_path: one slice per enumerated path whose allowed_calls is
// reuse ∪ created ∪ analyzed deps ∪ standard allow-list ∪ {fn itself}.
OperationMap merge_path_info(OperationMap map,
                             const std::vector<cfg::ExecutionPath>& paths);

// Resolves reuse impls from the pool, appends created impls, dedupes by name
// (created wins, with a warning), and compile-checks the result against the
// project header.
HelpersFile assemble_helpers(const OperationMap& map,
                             const std::vector<retrieval::Helper>& pool,
                             const std::string& header,
                             toolchain::Toolchain& tc);

// Independent byte-identical copy per path so repair can mutate one path's
// helpers without touching another's.
std::map<int, HelpersFile> replicate_helpers(
    const HelpersFile& file, const std::vector<cfg::ExecutionPath>& paths);

std::string opmap_to_json(const OperationMap& map);

}  // namespace pathtest::opmap
