#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "pathtest/clex.hpp"

namespace pathtest::cparse {

// --- top-level declarations ---

struct ParamDecl {
  std::string type;  // spelling without the name, e.g. "struct node *"
  std::string name;  // may be empty for unnamed parameters
  std::string text;  // spelling as written, e.g. "struct node *n"
};

struct FunctionDecl {
  std::string name;
  std::string return_type;
  std::vector<ParamDecl> params;
  bool variadic = false;
  bool is_static = false;
  std::string text;  // full definition as written
  int start_line = 0;
  int end_line = 0;
  std::size_t first_tok = 0;
  std::size_t last_tok = 0;       // inclusive
  std::size_t body_lbrace = 0;    // token index of '{'
  std::size_t body_rbrace = 0;    // token index of matching '}'
  std::size_t static_tok = static_cast<std::size_t>(-1);
};

struct MacroDecl {
  std::string name;
  std::string text;  // the whole #define line
  bool function_like = false;
  int line = 0;
};

struct TypeDecl {
  std::string name;  // primary defined name (tag or typedef name)
  std::vector<std::string> defined_names;  // tag plus typedef aliases
  std::string text;
  int line = 0;
};

struct GlobalDecl {
  std::string name;
  std::string text;  // full declaration including any initializer
  int line = 0;
  bool is_static = false;
  bool is_extern = false;
  std::size_t static_tok = static_cast<std::size_t>(-1);
  std::size_t first_tok = 0;
  std::size_t last_tok = 0;
};

struct ParsedFile {
  std::filesystem::path path;
  std::string source;
  std::vector<clex::Token> tokens;
  std::vector<std::string> includes;  // raw directive text
  std::vector<MacroDecl> macros;
  std::vector<TypeDecl> types;
  std::vector<GlobalDecl> globals;
  std::vector<FunctionDecl> functions;
  std::vector<std::string> prototypes;
};

// Parses one translation unit without preprocessing it. Tolerant by design:
// anything it cannot classify is kept as a global declaration.
ParsedFile parse_file(const std::filesystem::path& path, std::string source);

// --- statement AST (used for CFG construction) ---

struct BoolExpr {
  enum class Kind { Atom, And, Or };
  Kind kind = Kind::Atom;
  std::string atom_text;  // Atom only, whitespace-collapsed
  int line = 0;
  std::vector<BoolExpr> kids;  // And/Or: two or more operands in source order
};

struct Stmt;
using StmtPtr = std::unique_ptr<Stmt>;

struct SwitchSection {
  std::vector<std::string> case_exprs;  // one entry per case label on this body
  bool is_default = false;
  std::vector<StmtPtr> body;
  int line = 0;
};

struct Stmt {
  enum class Kind {
    Expr,
    Decl,
    If,
    While,
    DoWhile,
    For,
    Switch,
    Return,
    Break,
    Continue,
    Goto,
    Label,
    Block,
  };
  Kind kind = Kind::Expr;
  int line = 0;
  std::string text;          // whitespace-collapsed statement text
  BoolExpr cond;             // If / While / DoWhile / For (when has_cond)
  bool has_cond = false;
  std::string init_text;     // For
  std::string advance_text;  // For
  std::string switch_expr;   // Switch
  std::string label_name;    // Goto / Label
  std::vector<StmtPtr> body;       // then-branch, loop body, block items,
                                   // labeled statement
  std::vector<StmtPtr> else_body;  // If
  std::vector<SwitchSection> sections;  // Switch
};

// Parses the token range between a function body's braces (exclusive) into a
// statement list. Token indexes refer to `toks`; `src` is the file source.
std::vector<StmtPtr> parse_statements(const std::vector<clex::Token>& toks,
                                      std::size_t begin, std::size_t end,
                                      std::string_view src);

// Splits a condition's token range [begin, end) into its &&/|| skeleton.
BoolExpr parse_bool_expr(const std::vector<clex::Token>& toks, std::size_t begin,
                         std::size_t end, std::string_view src);

// Index of the token matching the opener at `open` ('(' '[' '{').
std::size_t match_delim(const std::vector<clex::Token>& toks, std::size_t open);

// Identifiers appearing in call position (name directly followed by '(').
std::vector<std::string> call_positions(const std::vector<clex::Token>& toks,
                                        std::size_t begin, std::size_t end);

}  // namespace pathtest::cparse
