#include <doctest.h>

#include "pathtest/cparse.hpp"
#include "pathtest/util.hpp"

using namespace pathtest;

namespace {

const char* kSample = R"(#include <stdlib.h>
#include "local.h"

#define LIMIT 64
#define SQ(x) ((x) * (x))

struct point {
    int x;
    int y;
};

typedef struct point point_t;

static int counter = 0;
int visible = 3;

int add(int a, int b);

static int add(int a, int b)
{
    return a + b;
}

int apply(int (*fn)(int, int), int seed)
{
    counter = counter + 1;
    return fn(seed, LIMIT);
}

int fmt(const char *pattern, ...)
{
    return 0;
}
)";

}  // namespace

TEST_CASE("parse_file classifies top-level declarations") {
  auto pf = cparse::parse_file("sample.c", kSample);

  REQUIRE(pf.includes.size() == 2);
  CHECK(pf.includes[0].find("<stdlib.h>") != std::string::npos);
  CHECK(pf.includes[1].find("\"local.h\"") != std::string::npos);

  REQUIRE(pf.macros.size() == 2);
  CHECK(pf.macros[0].name == "LIMIT");
  CHECK_FALSE(pf.macros[0].function_like);
  CHECK(pf.macros[1].name == "SQ");
  CHECK(pf.macros[1].function_like);

  REQUIRE(pf.types.size() >= 2);
  CHECK(pf.types[0].name == "point");
  bool saw_typedef = false;
  for (const auto& t : pf.types)
    for (const auto& n : t.defined_names)
      if (n == "point_t") saw_typedef = true;
  CHECK(saw_typedef);

  REQUIRE(pf.globals.size() == 2);
  CHECK(pf.globals[0].name == "counter");
  CHECK(pf.globals[0].is_static);
  CHECK(pf.globals[1].name == "visible");
  CHECK_FALSE(pf.globals[1].is_static);

  REQUIRE(pf.functions.size() == 3);
  CHECK(pf.functions[0].name == "add");
  CHECK(pf.functions[0].is_static);
  CHECK(pf.functions[1].name == "apply");
  CHECK(pf.functions[2].name == "fmt");
  CHECK(pf.functions[2].variadic);

  REQUIRE(pf.prototypes.size() == 1);
  CHECK(pf.prototypes[0].find("add") != std::string::npos);
}

TEST_CASE("function params keep their spellings") {
  auto pf = cparse::parse_file("sample.c", kSample);
  const auto& add = pf.functions[0];
  REQUIRE(add.params.size() == 2);
  CHECK(add.params[0].type == "int");
  CHECK(add.params[0].name == "a");
  CHECK(add.params[0].text == "int a");
  CHECK(add.return_type == "int");

  const auto& apply = pf.functions[1];
  REQUIRE(apply.params.size() == 2);
  CHECK(apply.params[0].name == "fn");
  CHECK(apply.params[1].text == "int seed");
}

TEST_CASE("body brace token indexes bracket the body") {
  auto pf = cparse::parse_file("sample.c", kSample);
  const auto& add = pf.functions[0];
  CHECK(pf.tokens[add.body_lbrace].text == "{");
  CHECK(pf.tokens[add.body_rbrace].text == "}");
  CHECK(add.body_lbrace < add.body_rbrace);
  CHECK(pf.tokens[add.static_tok].text == "static");
}

TEST_CASE("match_delim pairs nested delimiters") {
  auto toks = clex::tokenize("f(a, g(b, c[1]), d)");
  REQUIRE(toks[1].text == "(");
  auto close = cparse::match_delim(toks, 1);
  CHECK(toks[close].text == ")");
  // the matched close is the last paren, not g's
  for (std::size_t i = close + 1; i < toks.size(); ++i)
    CHECK(toks[i].kind != clex::TokKind::Punct);
}

TEST_CASE("call_positions finds names directly before parens") {
  auto toks = clex::tokenize("x = add(1, mul(2, 3)); if (y) free(p);");
  auto calls = cparse::call_positions(toks, 0, toks.size());
  CHECK(std::find(calls.begin(), calls.end(), "add") != calls.end());
  CHECK(std::find(calls.begin(), calls.end(), "mul") != calls.end());
  CHECK(std::find(calls.begin(), calls.end(), "free") != calls.end());
  // 'if (y)' is a keyword, not a call
  CHECK(std::find(calls.begin(), calls.end(), "if") == calls.end());
}

TEST_CASE("parse_statements builds the statement tree") {
  std::string src = R"(void f(int n)
{
    int i = 0;
    if (n > 0) {
        i = 1;
    } else {
        i = 2;
    }
    while (i < n)
        i++;
    for (i = 0; i < 3; i++)
        n--;
    switch (n) {
    case 0:
    case 1:
        i = 3;
        break;
    default:
        i = 4;
    }
    do {
        n--;
    } while (n > 9);
    return;
}
)";
  auto pf = cparse::parse_file("f.c", src);
  REQUIRE(pf.functions.size() == 1);
  const auto& fn = pf.functions[0];
  auto stmts = cparse::parse_statements(pf.tokens, fn.body_lbrace + 1,
                                        fn.body_rbrace, pf.source);
  REQUIRE(stmts.size() == 7);
  CHECK(stmts[0]->kind == cparse::Stmt::Kind::Decl);
  CHECK(stmts[1]->kind == cparse::Stmt::Kind::If);
  CHECK(stmts[1]->has_cond);
  CHECK(stmts[1]->body.size() == 1);
  CHECK(stmts[1]->else_body.size() == 1);
  CHECK(stmts[2]->kind == cparse::Stmt::Kind::While);
  CHECK(stmts[3]->kind == cparse::Stmt::Kind::For);
  CHECK(util::collapse_ws(stmts[3]->init_text).find("i = 0") != std::string::npos);
  CHECK(stmts[4]->kind == cparse::Stmt::Kind::Switch);
  REQUIRE(stmts[4]->sections.size() == 2);
  CHECK(stmts[4]->sections[0].case_exprs.size() == 2);
  CHECK_FALSE(stmts[4]->sections[0].is_default);
  CHECK(stmts[4]->sections[1].is_default);
  CHECK(stmts[5]->kind == cparse::Stmt::Kind::DoWhile);
  CHECK(stmts[6]->kind == cparse::Stmt::Kind::Return);
}

TEST_CASE("goto and labels parse into dedicated nodes") {
  std::string src = R"(void g(int n)
{
    if (n < 0)
        goto out;
    n = n * 2;
out:
    n = 0;
}
)";
  auto pf = cparse::parse_file("g.c", src);
  auto stmts = cparse::parse_statements(pf.tokens, pf.functions[0].body_lbrace + 1,
                                        pf.functions[0].body_rbrace, pf.source);
  bool saw_goto = false, saw_label = false;
  for (const auto& s : stmts) {
    if (s->kind == cparse::Stmt::Kind::Goto) {
      saw_goto = s->label_name == "out";
    }
    if (s->kind == cparse::Stmt::Kind::Label) {
      saw_label = s->label_name == "out";
    }
    for (const auto& inner : s->body) {
      if (inner->kind == cparse::Stmt::Kind::Goto && inner->label_name == "out")
        saw_goto = true;
    }
  }
  CHECK(saw_goto);
  CHECK(saw_label);
}

TEST_CASE("parse_bool_expr splits on && and || with C precedence") {
  std::string src = "a > 0 && b < 2 || c == 3";
  auto toks = clex::tokenize(src);
  auto expr = cparse::parse_bool_expr(toks, 0, toks.size() - 1, src);
  // || binds loosest: Or(And(a>0, b<2), c==3)
  REQUIRE(expr.kind == cparse::BoolExpr::Kind::Or);
  REQUIRE(expr.kids.size() == 2);
  CHECK(expr.kids[0].kind == cparse::BoolExpr::Kind::And);
  REQUIRE(expr.kids[0].kids.size() == 2);
  CHECK(expr.kids[0].kids[0].atom_text == "a > 0");
  CHECK(expr.kids[0].kids[1].atom_text == "b < 2");
  CHECK(expr.kids[1].atom_text == "c == 3");
}

TEST_CASE("parenthesized bool exprs stay atomic unless they split") {
  std::string src = "(a && b)";
  auto toks = clex::tokenize(src);
  auto expr = cparse::parse_bool_expr(toks, 0, toks.size() - 1, src);
  // outer parens peeled, the && still splits
  REQUIRE(expr.kind == cparse::BoolExpr::Kind::And);
  CHECK(expr.kids[0].atom_text == "a");

  std::string src2 = "f(a && b)";
  auto toks2 = clex::tokenize(src2);
  auto expr2 = cparse::parse_bool_expr(toks2, 0, toks2.size() - 1, src2);
  // && inside a call argument list must not split
  CHECK(expr2.kind == cparse::BoolExpr::Kind::Atom);
  CHECK(expr2.atom_text == "f(a && b)");
}
