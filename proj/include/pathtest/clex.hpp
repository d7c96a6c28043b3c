#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace pathtest::clex {

enum class TokKind {
  Identifier,
  Keyword,
  Number,
  String,
  CharLit,
  Punct,
  Directive,  // one whole preprocessor line, continuations folded in
  Eof,
};

struct Token {
  TokKind kind = TokKind::Eof;
  std::string text;
  int line = 0;            // 1-based
  std::size_t offset = 0;  // byte offset into the original source
  std::size_t length = 0;
};

bool is_keyword(std::string_view word);

// Tokenizes C source. Comments and whitespace are skipped; strings and char
// literals are kept as single tokens with their quotes.
std::vector<Token> tokenize(std::string_view src);

// Source slice spanning tokens [first, last] inclusive.
std::string slice(std::string_view src, const Token& first, const Token& last);

}  // namespace pathtest::clex
