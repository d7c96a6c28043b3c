#include "pathtest/cparse.hpp"

#include <algorithm>
#include <cctype>

#include "pathtest/errors.hpp"
#include "pathtest/util.hpp"

namespace pathtest::cparse {

using clex::TokKind;
using clex::Token;

namespace {

bool is_punct(const Token& t, std::string_view p) {
  return t.kind == TokKind::Punct && t.text == p;
}

bool is_kw(const Token& t, std::string_view k) {
  return t.kind == TokKind::Keyword && t.text == k;
}

std::string slice_ws(const std::vector<Token>& toks, std::string_view src,
                     std::size_t first, std::size_t last) {
  if (first > last || last >= toks.size()) return {};
  return util::collapse_ws(clex::slice(src, toks[first], toks[last]));
}

// First directive word, e.g. "include" for "#  include <x>".
std::string directive_name(const std::string& text) {
  std::size_t i = 0;
  while (i < text.size() && (text[i] == '#' || std::isspace(static_cast<unsigned char>(text[i])))) ++i;
  std::size_t b = i;
  while (i < text.size() && std::isalpha(static_cast<unsigned char>(text[i]))) ++i;
  return text.substr(b, i - b);
}

MacroDecl parse_define(const std::string& text, int line) {
  MacroDecl m;
  m.text = text;
  m.line = line;
  std::size_t i = text.find("define");
  i += 6;
  while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  std::size_t b = i;
  while (i < text.size() &&
         (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_')) ++i;
  m.name = text.substr(b, i - b);
  m.function_like = i < text.size() && text[i] == '(';
  return m;
}

}  // namespace

std::size_t match_delim(const std::vector<Token>& toks, std::size_t open) {
  const std::string& o = toks[open].text;
  std::string close = o == "(" ? ")" : o == "[" ? "]" : "}";
  int depth = 0;
  for (std::size_t i = open; i < toks.size(); ++i) {
    if (toks[i].kind != TokKind::Punct) continue;
    if (toks[i].text == o) ++depth;
    else if (toks[i].text == close && --depth == 0) return i;
  }
  return toks.size() - 1;  // points at Eof when unbalanced
}

std::vector<std::string> call_positions(const std::vector<Token>& toks,
                                        std::size_t begin, std::size_t end) {
  std::vector<std::string> out;
  for (std::size_t i = begin; i + 1 < end; ++i) {
    if (toks[i].kind == TokKind::Identifier && is_punct(toks[i + 1], "(")) {
      // skip declarator-style parens: "(*fp)(...)" yields no call name here
      out.push_back(toks[i].text);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// declaration chunker
// ---------------------------------------------------------------------------

namespace {

struct Chunk {
  std::size_t first = 0;
  std::size_t last = 0;  // inclusive
  bool has_body = false;
  std::size_t lbrace = 0;
  std::size_t rbrace = 0;
};

// Extracts the declarator name from a parameter token range [b, e).
// Handles "struct node *n", "int a[SIZE]" and "void (*cb)(int)".
ParamDecl parse_param(const std::vector<Token>& toks, std::size_t b,
                      std::size_t e, std::string_view src) {
  ParamDecl p;
  std::size_t name_idx = toks.size();
  int bracket = 0;
  for (std::size_t i = b; i < e; ++i) {
    if (is_punct(toks[i], "[")) ++bracket;
    else if (is_punct(toks[i], "]")) --bracket;
    if (bracket > 0) continue;
    if (toks[i].kind != TokKind::Identifier) continue;
    // function-pointer declarator: identifier preceded by '(' '*'* sequence
    bool in_declarator_parens = false;
    for (std::size_t j = i; j > b;) {
      --j;
      if (is_punct(toks[j], "*")) continue;
      if (is_punct(toks[j], "(")) in_declarator_parens = true;
      break;
    }
    // paren depth 0 identifiers are name candidates; the last one wins
    // ("struct node *n" -> n). Inside declarator parens the first wins.
    if (in_declarator_parens) {
      name_idx = i;
      break;
    }
    name_idx = i;
  }
  p.text = slice_ws(toks, src, b, e ? e - 1 : 0);
  if (name_idx < toks.size()) {
    p.name = toks[name_idx].text;
    std::string type;
    for (std::size_t i = b; i < e; ++i) {
      if (i == name_idx) continue;
      if (!type.empty()) type += ' ';
      type += toks[i].text;
    }
    p.type = util::collapse_ws(type);
  } else {
    p.type = p.text;
  }
  return p;
}

void parse_param_list(const std::vector<Token>& toks, std::size_t lparen,
                      std::size_t rparen, std::string_view src,
                      FunctionDecl& fn) {
  std::size_t b = lparen + 1;
  if (b >= rparen) return;  // "()"
  if (rparen - b == 1 && is_kw(toks[b], "void")) return;
  int depth = 0;
  std::size_t part = b;
  for (std::size_t i = b; i <= rparen; ++i) {
    bool at_end = i == rparen;
    if (!at_end) {
      if (is_punct(toks[i], "(") || is_punct(toks[i], "[")) ++depth;
      else if (is_punct(toks[i], ")") || is_punct(toks[i], "]")) --depth;
    }
    if (at_end || (depth == 0 && is_punct(toks[i], ","))) {
      if (part < i) {
        if (is_punct(toks[part], "...")) {
          fn.variadic = true;
        } else {
          fn.params.push_back(parse_param(toks, part, i, src));
        }
      }
      part = i + 1;
    }
  }
}

// Name of the declarator in a chunk known to be a function definition or
// prototype: the identifier directly before the first depth-0 '('.
std::size_t function_name_index(const std::vector<Token>& toks, std::size_t first,
                                std::size_t last) {
  for (std::size_t i = first; i <= last; ++i) {
    if (is_punct(toks[i], "(")) {
      if (i > first && toks[i - 1].kind == TokKind::Identifier) return i - 1;
      return toks.size();
    }
  }
  return toks.size();
}

void classify_chunk(ParsedFile& pf, const Chunk& ck) {
  const auto& toks = pf.tokens;
  const std::string_view src = pf.source;

  std::size_t i = ck.first;
  bool is_static = false, is_extern = false, is_typedef = false;
  std::size_t static_tok = static_cast<std::size_t>(-1);
  for (std::size_t j = ck.first; j <= ck.last; ++j) {
    if (is_kw(toks[j], "static")) {
      is_static = true;
      static_tok = j;
    } else if (is_kw(toks[j], "extern")) {
      is_extern = true;
    } else if (is_kw(toks[j], "typedef")) {
      is_typedef = true;
    } else if (toks[j].kind != TokKind::Keyword) {
      break;
    }
  }

  if (ck.has_body) {
    // '{' preceded by ')' means a function definition
    std::size_t before = ck.lbrace;
    if (before > ck.first && is_punct(toks[before - 1], ")")) {
      FunctionDecl fn;
      fn.first_tok = ck.first;
      fn.last_tok = ck.last;
      fn.body_lbrace = ck.lbrace;
      fn.body_rbrace = ck.rbrace;
      fn.is_static = is_static;
      fn.static_tok = static_tok;
      fn.start_line = toks[ck.first].line;
      fn.end_line = toks[ck.last].line;
      fn.text = clex::slice(src, toks[ck.first], toks[ck.last]);

      // the parameter list is the paren group that closes right before '{'
      std::size_t rparen = before - 1;
      int depth = 0;
      std::size_t lparen = rparen;
      for (std::size_t j = rparen + 1; j-- > ck.first;) {
        if (is_punct(toks[j], ")")) ++depth;
        else if (is_punct(toks[j], "(") && --depth == 0) {
          lparen = j;
          break;
        }
      }
      std::size_t name_idx =
          lparen > ck.first && toks[lparen - 1].kind == TokKind::Identifier
              ? lparen - 1
              : toks.size();
      if (name_idx == toks.size()) return;  // unsupported declarator shape
      fn.name = toks[name_idx].text;
      std::string ret;
      for (std::size_t j = ck.first; j < name_idx; ++j) {
        if (is_kw(toks[j], "static") || is_kw(toks[j], "extern") ||
            is_kw(toks[j], "inline"))
          continue;
        if (!ret.empty()) ret += ' ';
        ret += toks[j].text;
      }
      fn.return_type = ret.empty() ? "int" : util::collapse_ws(ret);
      parse_param_list(toks, lparen, rparen, src, fn);
      pf.functions.push_back(std::move(fn));
      return;
    }
  }

  std::string text = clex::slice(src, toks[ck.first], toks[ck.last]);

  if (is_typedef) {
    TypeDecl td;
    td.text = text;
    td.line = toks[ck.first].line;
    // typedef name: last identifier before the final ';' at depth 0, except
    // for function-pointer typedefs where it sits inside '(' '*' ... ')'
    std::size_t name_idx = toks.size();
    int depth = 0;
    for (std::size_t j = ck.first; j <= ck.last; ++j) {
      if (is_punct(toks[j], "{") || is_punct(toks[j], "(") || is_punct(toks[j], "[")) ++depth;
      else if (is_punct(toks[j], "}") || is_punct(toks[j], ")") || is_punct(toks[j], "]")) --depth;
      else if (toks[j].kind == TokKind::Identifier && depth == 0) name_idx = j;
    }
    if (name_idx == toks.size()) {
      // typedef ... (*name)(...);  -- take the identifier after "(*"
      for (std::size_t j = ck.first; j + 1 <= ck.last; ++j) {
        if (is_punct(toks[j], "*") && toks[j + 1].kind == TokKind::Identifier) {
          name_idx = j + 1;
          break;
        }
      }
    }
    if (name_idx < toks.size()) td.name = toks[name_idx].text;
    td.defined_names.push_back(td.name);
    // struct/union/enum tag defined inside the typedef
    for (std::size_t j = ck.first; j + 1 <= ck.last; ++j) {
      if ((is_kw(toks[j], "struct") || is_kw(toks[j], "union") ||
           is_kw(toks[j], "enum")) &&
          toks[j + 1].kind == TokKind::Identifier) {
        if (j + 2 <= ck.last && is_punct(toks[j + 2], "{"))
          td.defined_names.push_back(toks[j + 1].text);
      }
    }
    pf.types.push_back(std::move(td));
    return;
  }

  // bare struct/union/enum definition
  if (ck.has_body && i <= ck.last &&
      (is_kw(toks[i], "struct") || is_kw(toks[i], "union") ||
       is_kw(toks[i], "enum"))) {
    TypeDecl td;
    td.text = text;
    td.line = toks[ck.first].line;
    if (toks[i + 1].kind == TokKind::Identifier) td.name = toks[i + 1].text;
    td.defined_names.push_back(td.name);
    pf.types.push_back(std::move(td));
    return;
  }

  // prototype: has a depth-0 '(' preceded by an identifier, no body
  if (!ck.has_body) {
    std::size_t name_idx = function_name_index(toks, ck.first, ck.last);
    if (name_idx < toks.size()) {
      pf.prototypes.push_back(text);
      return;
    }
  }

  // everything else is a global declaration
  GlobalDecl g;
  g.text = text;
  g.line = toks[ck.first].line;
  g.is_static = is_static;
  g.is_extern = is_extern;
  g.static_tok = static_tok;
  g.first_tok = ck.first;
  g.last_tok = ck.last;
  // name: first identifier at depth 0 after any type keywords, before '=' / '[' / ';'
  int depth = 0;
  for (std::size_t j = ck.first; j <= ck.last; ++j) {
    if (is_punct(toks[j], "{") || is_punct(toks[j], "(")) ++depth;
    else if (is_punct(toks[j], "}") || is_punct(toks[j], ")")) --depth;
    else if (depth == 0 && is_punct(toks[j], "=")) break;
    else if (depth == 0 && toks[j].kind == TokKind::Identifier) g.name = toks[j].text;
    else if (depth == 0 && is_punct(toks[j], "[")) break;
  }
  pf.globals.push_back(std::move(g));
}

}  // namespace

ParsedFile parse_file(const std::filesystem::path& path, std::string source) {
  ParsedFile pf;
  pf.path = path;
  pf.source = std::move(source);
  pf.tokens = clex::tokenize(pf.source);
  const auto& toks = pf.tokens;

  std::size_t i = 0;
  while (toks[i].kind != TokKind::Eof) {
    if (toks[i].kind == TokKind::Directive) {
      std::string d = directive_name(toks[i].text);
      if (d == "include") pf.includes.push_back(util::trim(toks[i].text));
      else if (d == "define") pf.macros.push_back(parse_define(toks[i].text, toks[i].line));
      ++i;
      continue;
    }
    if (is_punct(toks[i], ";")) {  // stray semicolon
      ++i;
      continue;
    }

    Chunk ck;
    ck.first = i;
    std::size_t j = i;
    bool done = false;
    while (!done && toks[j].kind != TokKind::Eof) {
      if (toks[j].kind == TokKind::Directive) {
        ++j;  // a directive inside a declaration: tolerated, skipped over
        continue;
      }
      if (is_punct(toks[j], ";")) {
        ck.last = j;
        done = true;
        break;
      }
      if (is_punct(toks[j], "(") || is_punct(toks[j], "[")) {
        j = match_delim(toks, j) + 1;
        continue;
      }
      if (is_punct(toks[j], "{")) {
        std::size_t close = match_delim(toks, j);
        bool saw_assign = false;
        int d = 0;
        for (std::size_t k = ck.first; k < j; ++k) {
          if (is_punct(toks[k], "(") || is_punct(toks[k], "[")) ++d;
          else if (is_punct(toks[k], ")") || is_punct(toks[k], "]")) --d;
          else if (d == 0 && is_punct(toks[k], "=")) saw_assign = true;
        }
        bool function_body = !saw_assign && j > ck.first && is_punct(toks[j - 1], ")");
        if (function_body) {
          ck.has_body = true;
          ck.lbrace = j;
          ck.rbrace = close;
          ck.last = close;
          done = true;
          break;
        }
        // struct body or brace initializer: may still end with ';'
        if (!saw_assign && !ck.has_body) {
          ck.has_body = true;  // records that a type body was present
          ck.lbrace = j;
          ck.rbrace = close;
        }
        j = close + 1;
        continue;
      }
      ++j;
    }
    if (!done) {
      if (toks[j].kind == TokKind::Eof) break;  // trailing garbage: ignore
    }
    classify_chunk(pf, ck);
    i = ck.last + 1;
  }
  return pf;
}

// ---------------------------------------------------------------------------
// bool-expression skeleton
// ---------------------------------------------------------------------------

BoolExpr parse_bool_expr(const std::vector<Token>& toks, std::size_t begin,
                         std::size_t end, std::string_view src) {
  // strip redundant outer parens
  while (end - begin >= 2 && is_punct(toks[begin], "(") &&
         match_delim(toks, begin) == end - 1) {
    ++begin;
    --end;
  }

  auto split_on = [&](std::string_view op) {
    std::vector<std::pair<std::size_t, std::size_t>> parts;
    int depth = 0, tern = 0;
    std::size_t part = begin;
    for (std::size_t i = begin; i < end; ++i) {
      if (is_punct(toks[i], "(") || is_punct(toks[i], "[")) ++depth;
      else if (is_punct(toks[i], ")") || is_punct(toks[i], "]")) --depth;
      else if (depth == 0 && is_punct(toks[i], "?")) ++tern;
      else if (depth == 0 && tern > 0 && is_punct(toks[i], ":")) --tern;
      else if (depth == 0 && tern == 0 && is_punct(toks[i], op)) {
        parts.emplace_back(part, i);
        part = i + 1;
      }
    }
    parts.emplace_back(part, end);
    return parts;
  };

  for (std::string_view op : {"||", "&&"}) {
    auto parts = split_on(op);
    if (parts.size() > 1) {
      BoolExpr e;
      e.kind = op == "||" ? BoolExpr::Kind::Or : BoolExpr::Kind::And;
      e.line = toks[begin].line;
      for (auto [b, ee] : parts) {
        e.kids.push_back(parse_bool_expr(toks, b, ee, src));
      }
      return e;
    }
  }

  BoolExpr atom;
  atom.kind = BoolExpr::Kind::Atom;
  atom.line = begin < end ? toks[begin].line : 0;
  atom.atom_text = begin < end ? slice_ws(toks, src, begin, end - 1) : "";
  return atom;
}

// ---------------------------------------------------------------------------
// statement parser
// ---------------------------------------------------------------------------

namespace {

class StmtParser {
 public:
  StmtParser(const std::vector<Token>& toks, std::string_view src)
      : toks_(toks), src_(src) {}

  std::vector<StmtPtr> parse_list(std::size_t begin, std::size_t end) {
    std::vector<StmtPtr> out;
    std::size_t i = begin;
    while (i < end) {
      if (is_punct(toks_[i], ";")) {
        ++i;
        continue;
      }
      out.push_back(parse_stmt(i, end));
    }
    return out;
  }

 private:
  StmtPtr parse_stmt(std::size_t& i, std::size_t end) {
    const Token& t = toks_[i];
    auto stmt = std::make_unique<Stmt>();
    stmt->line = t.line;

    if (t.kind == TokKind::Directive) {
      stmt->kind = Stmt::Kind::Decl;
      stmt->text = util::trim(t.text);
      ++i;
      return stmt;
    }

    if (is_punct(t, "{")) {
      std::size_t close = match_delim(toks_, i);
      stmt->kind = Stmt::Kind::Block;
      stmt->body = parse_list(i + 1, close);
      i = close + 1;
      return stmt;
    }

    if (is_kw(t, "if")) return parse_if(i, end, std::move(stmt));
    if (is_kw(t, "while")) return parse_while(i, end, std::move(stmt));
    if (is_kw(t, "do")) return parse_do(i, end, std::move(stmt));
    if (is_kw(t, "for")) return parse_for(i, end, std::move(stmt));
    if (is_kw(t, "switch")) return parse_switch(i, end, std::move(stmt));

    if (is_kw(t, "return")) {
      std::size_t semi = find_semi(i, end);
      stmt->kind = Stmt::Kind::Return;
      stmt->text = slice_ws(toks_, src_, i, semi);
      i = semi + 1;
      return stmt;
    }
    if (is_kw(t, "break") || is_kw(t, "continue")) {
      stmt->kind = t.text == "break" ? Stmt::Kind::Break : Stmt::Kind::Continue;
      stmt->text = t.text + ";";
      i = find_semi(i, end) + 1;
      return stmt;
    }
    if (is_kw(t, "goto")) {
      stmt->kind = Stmt::Kind::Goto;
      if (i + 1 < end) stmt->label_name = toks_[i + 1].text;
      stmt->text = "goto " + stmt->label_name + ";";
      i = find_semi(i, end) + 1;
      return stmt;
    }

    // label: identifier ':' not part of a ternary
    if (t.kind == TokKind::Identifier && i + 1 < end && is_punct(toks_[i + 1], ":")) {
      stmt->kind = Stmt::Kind::Label;
      stmt->label_name = t.text;
      stmt->text = t.text + ":";
      i += 2;
      if (i < end && !is_punct(toks_[i], "}")) {
        std::size_t j = i;
        stmt->body.push_back(parse_stmt(j, end));
        i = j;
      }
      return stmt;
    }

    // declaration or expression statement: runs to the next depth-0 ';'
    std::size_t semi = find_semi(i, end);
    bool is_decl = t.kind == TokKind::Keyword && !is_kw(t, "sizeof");
    stmt->kind = is_decl ? Stmt::Kind::Decl : Stmt::Kind::Expr;
    stmt->text = slice_ws(toks_, src_, i, semi);
    i = semi + 1;
    return stmt;
  }

  StmtPtr parse_if(std::size_t& i, std::size_t end, StmtPtr stmt) {
    stmt->kind = Stmt::Kind::If;
    std::size_t lp = i + 1;
    std::size_t rp = match_delim(toks_, lp);
    stmt->cond = parse_bool_expr(toks_, lp + 1, rp, src_);
    stmt->has_cond = true;
    std::size_t j = rp + 1;
    stmt->body = parse_single(j, end);
    if (j < end && is_kw(toks_[j], "else")) {
      ++j;
      stmt->else_body = parse_single(j, end);
    }
    i = j;
    return stmt;
  }

  StmtPtr parse_while(std::size_t& i, std::size_t end, StmtPtr stmt) {
    stmt->kind = Stmt::Kind::While;
    std::size_t lp = i + 1;
    std::size_t rp = match_delim(toks_, lp);
    stmt->cond = parse_bool_expr(toks_, lp + 1, rp, src_);
    stmt->has_cond = true;
    std::size_t j = rp + 1;
    stmt->body = parse_single(j, end);
    i = j;
    return stmt;
  }

  StmtPtr parse_do(std::size_t& i, std::size_t end, StmtPtr stmt) {
    stmt->kind = Stmt::Kind::DoWhile;
    std::size_t j = i + 1;
    stmt->body = parse_single(j, end);
    if (j < end && is_kw(toks_[j], "while")) {
      std::size_t lp = j + 1;
      std::size_t rp = match_delim(toks_, lp);
      stmt->cond = parse_bool_expr(toks_, lp + 1, rp, src_);
      stmt->has_cond = true;
      j = find_semi(rp + 1, end) + 1;
    }
    i = j;
    return stmt;
  }

  StmtPtr parse_for(std::size_t& i, std::size_t end, StmtPtr stmt) {
    stmt->kind = Stmt::Kind::For;
    std::size_t lp = i + 1;
    std::size_t rp = match_delim(toks_, lp);
    // split header on depth-0 ';'
    std::vector<std::size_t> semis;
    int depth = 0;
    for (std::size_t k = lp + 1; k < rp; ++k) {
      if (is_punct(toks_[k], "(") || is_punct(toks_[k], "[")) ++depth;
      else if (is_punct(toks_[k], ")") || is_punct(toks_[k], "]")) --depth;
      else if (depth == 0 && is_punct(toks_[k], ";")) semis.push_back(k);
    }
    if (semis.size() == 2) {
      if (lp + 1 < semis[0])
        stmt->init_text = slice_ws(toks_, src_, lp + 1, semis[0] - 1) + ";";
      if (semis[0] + 1 < semis[1]) {
        stmt->cond = parse_bool_expr(toks_, semis[0] + 1, semis[1], src_);
        stmt->has_cond = true;
      }
      if (semis[1] + 1 < rp)
        stmt->advance_text = slice_ws(toks_, src_, semis[1] + 1, rp - 1) + ";";
    }
    std::size_t j = rp + 1;
    stmt->body = parse_single(j, end);
    i = j;
    return stmt;
  }

  StmtPtr parse_switch(std::size_t& i, std::size_t end, StmtPtr stmt) {
    stmt->kind = Stmt::Kind::Switch;
    std::size_t lp = i + 1;
    std::size_t rp = match_delim(toks_, lp);
    stmt->switch_expr = slice_ws(toks_, src_, lp + 1, rp - 1);
    std::size_t lb = rp + 1;
    if (lb >= end || !is_punct(toks_[lb], "{")) {  // switch with non-block body
      std::size_t j = lb;
      stmt->body = parse_single(j, end);
      i = j;
      return stmt;
    }
    std::size_t rb = match_delim(toks_, lb);
    std::size_t j = lb + 1;
    SwitchSection* cur = nullptr;
    while (j < rb) {
      if (is_kw(toks_[j], "case")) {
        std::size_t colon = find_case_colon(j + 1, rb);
        bool new_section = cur == nullptr || !cur->body.empty();
        if (new_section) {
          stmt->sections.emplace_back();
          cur = &stmt->sections.back();
          cur->line = toks_[j].line;
        }
        cur->case_exprs.push_back(slice_ws(toks_, src_, j + 1, colon - 1));
        j = colon + 1;
        continue;
      }
      if (is_kw(toks_[j], "default")) {
        std::size_t colon = j + 1;  // default ':'
        bool new_section = cur == nullptr || !cur->body.empty();
        if (new_section) {
          stmt->sections.emplace_back();
          cur = &stmt->sections.back();
          cur->line = toks_[j].line;
        }
        cur->is_default = true;
        j = colon + 1;
        continue;
      }
      if (is_punct(toks_[j], ";")) {
        ++j;
        continue;
      }
      if (cur == nullptr) {  // statements before any label: unreachable in C
        stmt->sections.emplace_back();
        cur = &stmt->sections.back();
        cur->line = toks_[j].line;
      }
      cur->body.push_back(parse_stmt(j, rb));
    }
    i = rb + 1;
    return stmt;
  }

  std::vector<StmtPtr> parse_single(std::size_t& i, std::size_t end) {
    std::vector<StmtPtr> out;
    if (i >= end) return out;
    if (is_punct(toks_[i], ";")) {
      ++i;
      return out;
    }
    if (is_punct(toks_[i], "{")) {
      std::size_t close = match_delim(toks_, i);
      out = parse_list(i + 1, close);
      i = close + 1;
      return out;
    }
    out.push_back(parse_stmt(i, end));
    return out;
  }

  std::size_t find_semi(std::size_t i, std::size_t end) {
    int depth = 0;
    for (std::size_t j = i; j < end; ++j) {
      if (is_punct(toks_[j], "(") || is_punct(toks_[j], "[") || is_punct(toks_[j], "{")) ++depth;
      else if (is_punct(toks_[j], ")") || is_punct(toks_[j], "]") || is_punct(toks_[j], "}")) --depth;
      else if (depth == 0 && is_punct(toks_[j], ";")) return j;
    }
    return end - 1;
  }

  // ':' ending a case label, skipping over ternaries in the constant expr
  std::size_t find_case_colon(std::size_t i, std::size_t end) {
    int tern = 0;
    for (std::size_t j = i; j < end; ++j) {
      if (is_punct(toks_[j], "?")) ++tern;
      else if (is_punct(toks_[j], ":")) {
        if (tern == 0) return j;
        --tern;
      }
    }
    return end;
  }

  const std::vector<Token>& toks_;
  std::string_view src_;
};

}  // namespace

std::vector<StmtPtr> parse_statements(const std::vector<Token>& toks,
                                      std::size_t begin, std::size_t end,
                                      std::string_view src) {
  StmtParser parser(toks, src);
  return parser.parse_list(begin, end);
}

}  // namespace pathtest::cparse
