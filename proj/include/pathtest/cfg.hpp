#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pathtest/csource.hpp"

namespace pathtest::cfg {

enum class NodeKind { Entry, Exit, Statement, Condition, Return };
enum class EdgeLabel { True, False, Unconditional };

std::string node_kind_name(NodeKind k);
std::string edge_label_name(EdgeLabel l);

struct CfgNode {
  int id = 0;
  NodeKind kind = NodeKind::Statement;
  std::string source_text;  // empty iff entry or exit
  int line = 0;
};

struct CfgEdge {
  int src = 0;
  int dst = 0;
  EdgeLabel label = EdgeLabel::Unconditional;
};

struct Cfg {
  std::string function_name;
  std::vector<CfgNode> nodes;  // node ids are indexes into this vector
  std::vector<CfgEdge> edges;
  int entry_id = 0;
  int exit_id = 0;

  // Outgoing edges in deterministic traversal order: true before false,
  // otherwise edge insertion order.
  std::vector<std::pair<int, EdgeLabel>> successors(int id) const;
  const CfgNode& node(int id) const { return nodes[static_cast<std::size_t>(id)]; }
  // Checks every structural invariant; throws InvalidCfg naming the first hole.
  void validate() const;
};

struct ExecutionPath {
  int path_id = 0;  // 1-based discovery order
  std::vector<int> node_ids;
  std::vector<std::pair<int, EdgeLabel>> branch_decisions;
  std::string linearized;
};

struct PathEnumeration {
  std::vector<ExecutionPath> paths;
  bool truncated = false;  // true when max_paths cut the search short
};

// Statement-level CFG for one function body. if/else, loops, switch (cascade
// of equality conditions), && and || (nested conditions), goto, break and
// continue are all represented; computed goto and inline assembly throw
// UnsupportedConstruct. Unreachable statements are pruned; a function whose
// exit is unreachable (e.g. `while(1){}` with no break) throws InvalidCfg.
Cfg build_cfg(const csource::FunctionUnit& fn);
Cfg build_cfg_from_source(const std::string& name, const std::string& definition);

// All entry-to-exit paths traversing each back edge at most loop_bound times,
// in DFS order with true edges first, truncated at max_paths.
PathEnumeration enumerate_paths(const Cfg& cfg, int loop_bound, int max_paths);

// "START → (cond)[T] → stmt; → RETURN" rendering. Return nodes print as
// RETURN; paths that fall off the end print a final EXIT instead.
std::string linearize(const ExecutionPath& path, const Cfg& cfg);

// Artifact payload for paths/<function>.json.
std::string paths_to_json(const Cfg& cfg, const PathEnumeration& enumeration);

}  // namespace pathtest::cfg
