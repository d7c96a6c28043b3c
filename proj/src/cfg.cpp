#include "pathtest/cfg.hpp"

#include <json.hpp>

#include <functional>
#include <map>
#include <set>

#include "pathtest/errors.hpp"
#include "pathtest/util.hpp"

namespace pathtest::cfg {

using cparse::BoolExpr;
using cparse::Stmt;
using cparse::StmtPtr;

std::string node_kind_name(NodeKind k) {
  switch (k) {
    case NodeKind::Entry: return "entry";
    case NodeKind::Exit: return "exit";
    case NodeKind::Statement: return "statement";
    case NodeKind::Condition: return "condition";
    case NodeKind::Return: return "return";
  }
  return "unknown";
}

std::string edge_label_name(EdgeLabel l) {
  switch (l) {
    case EdgeLabel::True: return "true";
    case EdgeLabel::False: return "false";
    case EdgeLabel::Unconditional: return "unconditional";
  }
  return "unknown";
}

std::vector<std::pair<int, EdgeLabel>> Cfg::successors(int id) const {
  std::vector<std::pair<int, EdgeLabel>> out;
  for (const auto& e : edges) {
    if (e.src == id) out.emplace_back(e.dst, e.label);
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return static_cast<int>(a.second) < static_cast<int>(b.second);
  });
  return out;
}

void Cfg::validate() const {
  if (nodes.empty()) throw InvalidCfg("no nodes");
  auto in_range = [&](int id) {
    return id >= 0 && id < static_cast<int>(nodes.size());
  };
  if (!in_range(entry_id) || nodes[entry_id].kind != NodeKind::Entry)
    throw InvalidCfg("entry_id does not name an entry node");
  if (!in_range(exit_id) || nodes[exit_id].kind != NodeKind::Exit)
    throw InvalidCfg("exit_id does not name an exit node");

  int entries = 0, exits = 0;
  for (const auto& n : nodes) {
    if (n.kind == NodeKind::Entry) ++entries;
    if (n.kind == NodeKind::Exit) ++exits;
    bool structural = n.kind == NodeKind::Entry || n.kind == NodeKind::Exit;
    if (structural != n.source_text.empty())
      throw InvalidCfg("node " + std::to_string(n.id) +
                       ": source_text emptiness disagrees with kind");
  }
  if (entries != 1) throw InvalidCfg("expected exactly one entry node");
  if (exits != 1) throw InvalidCfg("expected exactly one exit node");

  for (const auto& e : edges) {
    if (!in_range(e.src) || !in_range(e.dst)) throw InvalidCfg("edge out of range");
    if (e.dst == entry_id) throw InvalidCfg("entry node has an incoming edge");
    if (e.src == exit_id) throw InvalidCfg("exit node has an outgoing edge");
  }

  for (const auto& n : nodes) {
    auto succ = successors(n.id);
    if (n.kind == NodeKind::Condition) {
      if (succ.size() != 2 || succ[0].second != EdgeLabel::True ||
          succ[1].second != EdgeLabel::False)
        throw InvalidCfg("condition node " + std::to_string(n.id) +
                         " lacks a true/false edge pair");
    } else if (n.kind != NodeKind::Exit) {
      if (succ.size() > 1)
        throw InvalidCfg("non-condition node " + std::to_string(n.id) +
                         " has multiple successors");
      if (succ.size() == 1 && succ[0].second != EdgeLabel::Unconditional)
        throw InvalidCfg("non-condition node " + std::to_string(n.id) +
                         " has a labeled edge");
      if (n.kind == NodeKind::Return && (succ.empty() || succ[0].first != exit_id))
        throw InvalidCfg("return node " + std::to_string(n.id) +
                         " does not flow to exit");
    }
  }

  std::vector<bool> seen(nodes.size(), false);
  std::vector<int> work{entry_id};
  seen[entry_id] = true;
  while (!work.empty()) {
    int u = work.back();
    work.pop_back();
    for (auto [v, _] : successors(u)) {
      if (!seen[v]) {
        seen[v] = true;
        work.push_back(v);
      }
    }
  }
  for (const auto& n : nodes) {
    if (!seen[n.id])
      throw InvalidCfg("node " + std::to_string(n.id) + " unreachable from entry");
  }
}

// ---------------------------------------------------------------------------
// builder
// ---------------------------------------------------------------------------

namespace {

struct Hang {
  int src;
  EdgeLabel label;
};

struct FlowCtx {
  bool is_switch = false;
  std::vector<Hang> breaks;
  std::vector<Hang> continues;
};

class Builder {
 public:
  Builder(const cparse::ParsedFile& pf, const cparse::FunctionDecl& fn)
      : pf_(pf), fn_(fn) {}

  Cfg build() {
    cfg_.function_name = fn_.name;
    int entry = add_node(NodeKind::Entry, "", fn_.start_line);
    int exit = add_node(NodeKind::Exit, "", fn_.end_line);
    cfg_.entry_id = entry;
    cfg_.exit_id = exit;

    auto stmts = cparse::parse_statements(pf_.tokens, fn_.body_lbrace + 1,
                                          fn_.body_rbrace, pf_.source);
    auto out = build_seq(stmts, {{entry, EdgeLabel::Unconditional}});
    connect(out, exit);

    for (const auto& [src, label] : pending_gotos_) {
      auto it = labels_.find(label);
      if (it == labels_.end())
        throw InvalidCfg("goto targets undefined label '" + label + "'");
      cfg_.edges.push_back({src, it->second, EdgeLabel::Unconditional});
    }

    prune_unreachable();
    cfg_.validate();
    return std::move(cfg_);
  }

 private:
  int add_node(NodeKind kind, std::string text, int line) {
    int id = static_cast<int>(cfg_.nodes.size());
    cfg_.nodes.push_back({id, kind, std::move(text), line});
    return id;
  }

  void connect(const std::vector<Hang>& hangs, int dst) {
    for (const auto& h : hangs) cfg_.edges.push_back({h.src, dst, h.label});
  }

  static std::vector<Hang> merged(std::vector<Hang> a, const std::vector<Hang>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
  }

  struct CondResult {
    std::vector<Hang> true_h;
    std::vector<Hang> false_h;
    int first = -1;
  };

  enum class ConstCond { No, True, False };

  // while(1)/do-while(0) style constants get no condition node: their fixed
  // arm would otherwise enumerate as a feasible-looking branch.
  static ConstCond classify_const(const BoolExpr& e) {
    if (e.kind != BoolExpr::Kind::Atom) return ConstCond::No;
    std::string t = util::trim(e.atom_text);
    if (t == "true") return ConstCond::True;
    if (t == "false") return ConstCond::False;
    if (t.empty() || t.find_first_not_of("0123456789") != std::string::npos)
      return ConstCond::No;
    return t.find_first_not_of('0') == std::string::npos ? ConstCond::False
                                                         : ConstCond::True;
  }

  CondResult build_cond(const BoolExpr& e, const std::vector<Hang>& in) {
    if (e.kind == BoolExpr::Kind::Atom) {
      int n = add_node(NodeKind::Condition, e.atom_text, e.line);
      connect(in, n);
      return {{{n, EdgeLabel::True}}, {{n, EdgeLabel::False}}, n};
    }
    bool is_and = e.kind == BoolExpr::Kind::And;
    CondResult left = build_cond(e.kids[0], in);
    CondResult acc = left;
    for (std::size_t i = 1; i < e.kids.size(); ++i) {
      // && chains on the true edge, || chains on the false edge
      CondResult next = build_cond(e.kids[i], is_and ? acc.true_h : acc.false_h);
      if (is_and) {
        acc.true_h = next.true_h;
        acc.false_h = merged(acc.false_h, next.false_h);
      } else {
        acc.false_h = next.false_h;
        acc.true_h = merged(acc.true_h, next.true_h);
      }
    }
    acc.first = left.first;
    return acc;
  }

  std::vector<Hang> build_seq(const std::vector<StmtPtr>& stmts,
                              std::vector<Hang> in) {
    for (const auto& s : stmts) in = build_stmt(*s, std::move(in));
    return in;
  }

  FlowCtx* enclosing_loop() {
    for (auto it = ctx_stack_.rbegin(); it != ctx_stack_.rend(); ++it) {
      if (!(*it)->is_switch) return *it;
    }
    return nullptr;
  }

  std::vector<Hang> build_stmt(const Stmt& s, std::vector<Hang> in) {
    switch (s.kind) {
      case Stmt::Kind::Expr:
      case Stmt::Kind::Decl: {
        if (util::starts_with(s.text, "asm") || util::starts_with(s.text, "__asm"))
          throw UnsupportedConstruct("inline assembly", s.line);
        int n = add_node(NodeKind::Statement, s.text, s.line);
        connect(in, n);
        return {{n, EdgeLabel::Unconditional}};
      }
      case Stmt::Kind::Return: {
        int n = add_node(NodeKind::Return, s.text, s.line);
        connect(in, n);
        cfg_.edges.push_back({n, cfg_.exit_id, EdgeLabel::Unconditional});
        return {};
      }
      case Stmt::Kind::Block:
        return build_seq(s.body, std::move(in));
      case Stmt::Kind::If: {
        CondResult c = build_cond(s.cond, in);
        auto then_out = build_seq(s.body, c.true_h);
        auto else_out = s.else_body.empty() ? c.false_h
                                            : build_seq(s.else_body, c.false_h);
        return merged(std::move(then_out), else_out);
      }
      case Stmt::Kind::While: {
        ConstCond cc = classify_const(s.cond);
        if (cc == ConstCond::True) {
          FlowCtx ctx;
          ctx_stack_.push_back(&ctx);
          int first_body = static_cast<int>(cfg_.nodes.size());
          auto body_out = build_seq(s.body, std::move(in));
          ctx_stack_.pop_back();
          auto back = merged(std::move(body_out), ctx.continues);
          if (first_body < static_cast<int>(cfg_.nodes.size()))
            connect(back, first_body);
          // no break and nothing after -> exit unreachable, caught in prune
          return ctx.breaks;
        }
        if (cc == ConstCond::False) {
          FlowCtx ctx;
          ctx_stack_.push_back(&ctx);
          build_seq(s.body, {});  // dead, kept only as a goto target
          ctx_stack_.pop_back();
          return in;
        }
        CondResult c = build_cond(s.cond, in);
        FlowCtx ctx;
        ctx_stack_.push_back(&ctx);
        auto body_out = build_seq(s.body, c.true_h);
        ctx_stack_.pop_back();
        connect(body_out, c.first);       // loop back edge
        connect(ctx.continues, c.first);
        return merged(std::move(c.false_h), ctx.breaks);
      }
      case Stmt::Kind::DoWhile: {
        FlowCtx ctx;
        ctx_stack_.push_back(&ctx);
        int first_body = static_cast<int>(cfg_.nodes.size());
        auto body_out = build_seq(s.body, std::move(in));
        ctx_stack_.pop_back();
        bool body_has_nodes = first_body < static_cast<int>(cfg_.nodes.size());
        if (!s.has_cond) return merged(std::move(body_out), ctx.breaks);
        ConstCond cc = classify_const(s.cond);
        if (cc == ConstCond::True) {
          auto back = merged(std::move(body_out), ctx.continues);
          if (body_has_nodes) connect(back, first_body);
          return ctx.breaks;
        }
        if (cc == ConstCond::False) {  // the do { } while (0) macro idiom
          return merged(merged(std::move(body_out), ctx.continues), ctx.breaks);
        }
        CondResult c = build_cond(s.cond, merged(body_out, ctx.continues));
        connect(c.true_h, body_has_nodes ? first_body : c.first);
        return merged(std::move(c.false_h), ctx.breaks);
      }
      case Stmt::Kind::For: {
        if (!s.init_text.empty()) {
          int n = add_node(NodeKind::Statement, s.init_text, s.line);
          connect(in, n);
          in = {{n, EdgeLabel::Unconditional}};
        }
        CondResult c;
        std::vector<Hang> loop_in = in;
        std::vector<Hang> exit_h;
        bool has_cond =
            s.has_cond && classify_const(s.cond) != ConstCond::True;
        if (has_cond) {
          c = build_cond(s.cond, in);
          loop_in = c.true_h;
          exit_h = c.false_h;
        }
        FlowCtx ctx;
        ctx_stack_.push_back(&ctx);
        int first_body = static_cast<int>(cfg_.nodes.size());
        auto body_out = build_seq(s.body, loop_in);
        ctx_stack_.pop_back();

        std::vector<Hang> back_from = merged(std::move(body_out), ctx.continues);
        if (!s.advance_text.empty()) {
          int a = add_node(NodeKind::Statement, s.advance_text, s.line);
          connect(back_from, a);
          back_from = {{a, EdgeLabel::Unconditional}};
        }
        int back_target = has_cond ? c.first
                          : first_body < static_cast<int>(cfg_.nodes.size())
                              ? first_body
                              : -1;
        if (back_target >= 0) connect(back_from, back_target);
        return merged(std::move(exit_h), ctx.breaks);
      }
      case Stmt::Kind::Switch:
        return build_switch(s, std::move(in));
      case Stmt::Kind::Break: {
        if (ctx_stack_.empty())
          throw InvalidCfg("break outside loop or switch at line " +
                           std::to_string(s.line));
        int n = add_node(NodeKind::Statement, s.text, s.line);
        connect(in, n);
        ctx_stack_.back()->breaks.push_back({n, EdgeLabel::Unconditional});
        return {};
      }
      case Stmt::Kind::Continue: {
        FlowCtx* loop = enclosing_loop();
        if (!loop)
          throw InvalidCfg("continue outside loop at line " + std::to_string(s.line));
        int n = add_node(NodeKind::Statement, s.text, s.line);
        connect(in, n);
        loop->continues.push_back({n, EdgeLabel::Unconditional});
        return {};
      }
      case Stmt::Kind::Goto: {
        if (s.label_name.empty() || s.label_name == "*")
          throw UnsupportedConstruct("computed goto", s.line);
        int n = add_node(NodeKind::Statement, s.text, s.line);
        connect(in, n);
        pending_gotos_.emplace_back(n, s.label_name);
        return {};
      }
      case Stmt::Kind::Label: {
        int n = add_node(NodeKind::Statement, s.label_name + ":", s.line);
        connect(in, n);
        labels_[s.label_name] = n;
        std::vector<Hang> out{{n, EdgeLabel::Unconditional}};
        if (!s.body.empty()) out = build_stmt(*s.body[0], std::move(out));
        return out;
      }
    }
    return in;
  }

  std::vector<Hang> build_switch(const Stmt& s, std::vector<Hang> in) {
    FlowCtx ctx;
    ctx.is_switch = true;

    // cascade of equality conditions in case-label source order
    std::vector<std::vector<Hang>> section_preds(s.sections.size());
    std::vector<Hang> chain = std::move(in);
    int default_idx = -1;
    for (std::size_t i = 0; i < s.sections.size(); ++i) {
      if (s.sections[i].is_default) default_idx = static_cast<int>(i);
      for (const auto& expr : s.sections[i].case_exprs) {
        int c = add_node(NodeKind::Condition,
                         util::collapse_ws(s.switch_expr + " == " + expr),
                         s.sections[i].line);
        connect(chain, c);
        section_preds[i].push_back({c, EdgeLabel::True});
        chain = {{c, EdgeLabel::False}};
      }
    }
    // no matching label: fall to default's body, else past the switch
    std::vector<Hang> no_match;
    if (default_idx >= 0) {
      section_preds[default_idx] = merged(section_preds[default_idx], chain);
    } else {
      no_match = chain;
    }

    ctx_stack_.push_back(&ctx);
    std::vector<Hang> carry;  // fallthrough from the previous section body
    for (std::size_t i = 0; i < s.sections.size(); ++i) {
      auto preds = merged(section_preds[i], carry);
      carry = build_seq(s.sections[i].body, std::move(preds));
    }
    ctx_stack_.pop_back();

    return merged(merged(std::move(carry), ctx.breaks), no_match);
  }

  void prune_unreachable() {
    std::vector<bool> seen(cfg_.nodes.size(), false);
    std::vector<int> work{cfg_.entry_id};
    seen[cfg_.entry_id] = true;
    while (!work.empty()) {
      int u = work.back();
      work.pop_back();
      for (const auto& e : cfg_.edges) {
        if (e.src == u && !seen[e.dst]) {
          seen[e.dst] = true;
          work.push_back(e.dst);
        }
      }
    }
    if (!seen[cfg_.exit_id])
      throw InvalidCfg("exit unreachable: '" + cfg_.function_name +
                       "' never terminates");

    std::vector<int> remap(cfg_.nodes.size(), -1);
    std::vector<CfgNode> nodes;
    for (const auto& n : cfg_.nodes) {
      if (!seen[n.id]) continue;
      remap[n.id] = static_cast<int>(nodes.size());
      CfgNode copy = n;
      copy.id = remap[n.id];
      nodes.push_back(std::move(copy));
    }
    std::vector<CfgEdge> edges;
    for (const auto& e : cfg_.edges) {
      if (remap[e.src] < 0) continue;  // dst is reachable whenever src is
      edges.push_back({remap[e.src], remap[e.dst], e.label});
    }
    cfg_.nodes = std::move(nodes);
    cfg_.edges = std::move(edges);
    cfg_.entry_id = remap[cfg_.entry_id];
    cfg_.exit_id = remap[cfg_.exit_id];
  }

  const cparse::ParsedFile& pf_;
  const cparse::FunctionDecl& fn_;
  Cfg cfg_;
  std::vector<FlowCtx*> ctx_stack_;
  std::map<std::string, int> labels_;
  std::vector<std::pair<int, std::string>> pending_gotos_;
};

}  // namespace

Cfg build_cfg_from_source(const std::string& name, const std::string& definition) {
  cparse::ParsedFile pf;
  try {
    pf = cparse::parse_file(name + ".c", definition);
  } catch (const std::exception& e) {
    throw ParseFailure(name, e.what());
  }
  const cparse::FunctionDecl* decl = nullptr;
  for (const auto& fn : pf.functions) {
    if (fn.name == name) decl = &fn;
  }
  if (!decl && !pf.functions.empty()) decl = &pf.functions.front();
  if (!decl) throw ParseFailure(name, "no function definition found");
  return Builder(pf, *decl).build();
}

Cfg build_cfg(const csource::FunctionUnit& fn) {
  return build_cfg_from_source(fn.name, fn.body);
}

// ---------------------------------------------------------------------------
// path enumeration
// ---------------------------------------------------------------------------

namespace {

long edge_key(int src, int dst, EdgeLabel label) {
  return (static_cast<long>(src) << 34) | (static_cast<long>(dst) << 2) |
         static_cast<long>(label);
}

std::set<long> find_back_edges(const Cfg& cfg) {
  std::set<long> back;
  std::vector<int> state(cfg.nodes.size(), 0);  // 0 new, 1 on stack, 2 done
  std::function<void(int)> visit = [&](int u) {
    state[u] = 1;
    for (auto [v, label] : cfg.successors(u)) {
      if (state[v] == 1) back.insert(edge_key(u, v, label));
      else if (state[v] == 0) visit(v);
    }
    state[u] = 2;
  };
  visit(cfg.entry_id);
  return back;
}

}  // namespace

PathEnumeration enumerate_paths(const Cfg& cfg, int loop_bound, int max_paths) {
  cfg.validate();
  auto back = find_back_edges(cfg);

  PathEnumeration result;
  std::vector<int> cur{cfg.entry_id};
  std::vector<std::pair<int, EdgeLabel>> decisions;
  std::map<long, int> used;

  // enumerate one past the budget so truncation is detected exactly
  std::function<bool(int)> go = [&](int u) -> bool {
    if (u == cfg.exit_id) {
      ExecutionPath p;
      p.node_ids = cur;
      p.branch_decisions = decisions;
      result.paths.push_back(std::move(p));
      return static_cast<int>(result.paths.size()) <= max_paths;
    }
    for (auto [v, label] : cfg.successors(u)) {
      long k = edge_key(u, v, label);
      bool is_back = back.count(k) > 0;
      if (is_back && used[k] >= loop_bound) continue;
      if (is_back) ++used[k];
      cur.push_back(v);
      bool is_cond = cfg.node(u).kind == NodeKind::Condition;
      if (is_cond) decisions.emplace_back(u, label);
      bool keep_going = go(v);
      if (is_cond) decisions.pop_back();
      cur.pop_back();
      if (is_back) --used[k];
      if (!keep_going) return false;
    }
    return true;
  };
  go(cfg.entry_id);

  if (static_cast<int>(result.paths.size()) > max_paths) {
    result.truncated = true;
    result.paths.pop_back();
  }
  for (std::size_t i = 0; i < result.paths.size(); ++i) {
    result.paths[i].path_id = static_cast<int>(i) + 1;
    result.paths[i].linearized = linearize(result.paths[i], cfg);
  }
  return result;
}

std::string linearize(const ExecutionPath& path, const Cfg& cfg) {
  std::vector<std::string> parts{"START"};
  std::size_t decision = 0;
  for (std::size_t i = 1; i < path.node_ids.size(); ++i) {
    const CfgNode& n = cfg.node(path.node_ids[i]);
    switch (n.kind) {
      case NodeKind::Entry:
        break;
      case NodeKind::Exit: {
        const CfgNode& prev = cfg.node(path.node_ids[i - 1]);
        if (prev.kind != NodeKind::Return) parts.push_back("EXIT");
        break;
      }
      case NodeKind::Return:
        parts.push_back("RETURN");
        break;
      case NodeKind::Condition: {
        std::string label = "[T]";
        if (decision < path.branch_decisions.size() &&
            path.branch_decisions[decision].first == n.id) {
          label = path.branch_decisions[decision].second == EdgeLabel::True
                      ? "[T]"
                      : "[F]";
          ++decision;
        }
        parts.push_back("(" + n.source_text + ")" + label);
        break;
      }
      case NodeKind::Statement:
        parts.push_back(n.source_text);
        break;
    }
  }
  return util::join(parts, " → ");
}

std::string paths_to_json(const Cfg& cfg, const PathEnumeration& enumeration) {
  nlohmann::json j;
  j["function"] = cfg.function_name;
  j["entry_id"] = cfg.entry_id;
  j["exit_id"] = cfg.exit_id;
  j["truncated"] = enumeration.truncated;
  j["nodes"] = nlohmann::json::array();
  for (const auto& n : cfg.nodes) {
    j["nodes"].push_back({{"id", n.id},
                          {"kind", node_kind_name(n.kind)},
                          {"text", n.source_text},
                          {"line", n.line}});
  }
  j["edges"] = nlohmann::json::array();
  for (const auto& e : cfg.edges) {
    j["edges"].push_back({e.src, e.dst, edge_label_name(e.label)});
  }
  j["paths"] = nlohmann::json::array();
  for (const auto& p : enumeration.paths) {
    nlohmann::json decisions = nlohmann::json::array();
    for (const auto& [id, label] : p.branch_decisions) {
      decisions.push_back({id, edge_label_name(label)});
    }
    j["paths"].push_back({{"path_id", p.path_id},
                          {"node_ids", p.node_ids},
                          {"branch_decisions", decisions},
                          {"linearized", p.linearized}});
  }
  return j.dump(2);
}

}  // namespace pathtest::cfg
