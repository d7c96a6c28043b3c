#include <doctest.h>

#include "pathtest/clex.hpp"

using namespace pathtest;
using clex::TokKind;

TEST_CASE("tokenize classifies the basic kinds") {
  auto toks = clex::tokenize("int x = 42; // comment\nchar *s = \"hi\";");
  REQUIRE(toks.size() >= 10);
  CHECK(toks[0].kind == TokKind::Keyword);
  CHECK(toks[0].text == "int");
  CHECK(toks[1].kind == TokKind::Identifier);
  CHECK(toks[1].text == "x");
  CHECK(toks[2].kind == TokKind::Punct);
  CHECK(toks[3].kind == TokKind::Number);
  CHECK(toks[3].text == "42");
  bool saw_string = false;
  for (const auto& t : toks)
    if (t.kind == TokKind::String && t.text == "\"hi\"") saw_string = true;
  CHECK(saw_string);
}

TEST_CASE("comments never produce tokens") {
  auto toks = clex::tokenize("a /* b c */ d // e\nf");
  std::vector<std::string> ids;
  for (const auto& t : toks)
    if (t.kind == TokKind::Identifier) ids.push_back(t.text);
  CHECK(ids == std::vector<std::string>{"a", "d", "f"});
}

TEST_CASE("strings and char literals keep escapes intact") {
  auto toks = clex::tokenize(R"(x = "a\"b"; c = '\n';)");
  bool saw_str = false, saw_char = false;
  for (const auto& t : toks) {
    if (t.kind == TokKind::String) {
      CHECK(t.text == R"("a\"b")");
      saw_str = true;
    }
    if (t.kind == TokKind::CharLit) {
      CHECK(t.text == R"('\n')");
      saw_char = true;
    }
  }
  CHECK(saw_str);
  CHECK(saw_char);
}

TEST_CASE("a directive is one token spanning continuations") {
  auto toks = clex::tokenize("#define MAX(a, b) \\\n  ((a) > (b) ? (a) : (b))\nint y;");
  REQUIRE(!toks.empty());
  CHECK(toks[0].kind == TokKind::Directive);
  CHECK(toks[0].text.find("MAX") != std::string::npos);
  CHECK(toks[0].text.find("(b) ? (a)") != std::string::npos);
  CHECK(toks[1].kind == TokKind::Keyword);  // the int after the directive
}

TEST_CASE("token offsets point back into the source") {
  std::string src = "while (n > 0) { n--; }";
  auto toks = clex::tokenize(src);
  for (const auto& t : toks) {
    if (t.kind == TokKind::Eof) continue;
    CHECK(src.substr(t.offset, t.length) == t.text);
  }
}

TEST_CASE("line numbers are 1-based and track newlines") {
  auto toks = clex::tokenize("a\nb\n\nc");
  REQUIRE(toks.size() >= 3);
  CHECK(toks[0].line == 1);
  CHECK(toks[1].line == 2);
  CHECK(toks[2].line == 4);
}

TEST_CASE("multi-character punctuators stay glued") {
  auto toks = clex::tokenize("a->b != c && d <<= e");
  std::vector<std::string> punct;
  for (const auto& t : toks)
    if (t.kind == TokKind::Punct) punct.push_back(t.text);
  CHECK(punct == std::vector<std::string>{"->", "!=", "&&", "<<="});
}

TEST_CASE("slice reproduces the spelled source between tokens") {
  std::string src = "if (root==NULL)\n    return  new_node(data);";
  auto toks = clex::tokenize(src);
  // slice from 'root' to the closing paren of the condition
  std::size_t first = 2, last = 0;
  for (std::size_t i = 0; i < toks.size(); ++i)
    if (toks[i].text == ")") { last = i; break; }
  auto s = clex::slice(src, toks[first], toks[last]);
  CHECK(s == "root==NULL)");
}

TEST_CASE("is_keyword knows C keywords and not identifiers") {
  CHECK(clex::is_keyword("while"));
  CHECK(clex::is_keyword("struct"));
  CHECK(clex::is_keyword("return"));
  CHECK_FALSE(clex::is_keyword("node"));
  CHECK_FALSE(clex::is_keyword("main"));
}
