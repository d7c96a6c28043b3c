#include "pathtest/clex.hpp"

#include <cctype>
#include <unordered_set>

namespace pathtest::clex {

namespace {

const std::unordered_set<std::string_view> kKeywords = {
    "auto", "break", "case", "char", "const", "continue", "default", "do",
    "double", "else", "enum", "extern", "float", "for", "goto", "if",
    "inline", "int", "long", "register", "restrict", "return", "short",
    "signed", "sizeof", "static", "struct", "switch", "typedef", "union",
    "unsigned", "void", "volatile", "while", "_Bool", "_Complex", "_Noreturn",
    "_Static_assert", "_Alignas", "_Alignof", "_Atomic", "_Thread_local",
};

bool ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
}

bool ident_cont(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Multi-char punctuators, longest first within each leading char.
const char* kPuncts3[] = {"<<=", ">>=", "...", nullptr};
const char* kPuncts2[] = {"->", "++", "--", "<<", ">>", "<=", ">=", "==",
                          "!=", "&&", "||", "+=", "-=", "*=", "/=", "%=",
                          "&=", "^=", "|=", "##", nullptr};

}  // namespace

bool is_keyword(std::string_view word) { return kKeywords.count(word) > 0; }

std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> toks;
  std::size_t i = 0;
  int line = 1;
  bool at_line_start = true;

  auto push = [&](TokKind kind, std::size_t begin, std::size_t end, int tok_line) {
    toks.push_back({kind, std::string(src.substr(begin, end - begin)), tok_line,
                    begin, end - begin});
  };

  while (i < src.size()) {
    char c = src[i];

    if (c == '\n') {
      ++line;
      ++i;
      at_line_start = true;
      continue;
    }
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '/') {
      while (i < src.size() && src[i] != '\n') ++i;
      continue;
    }
    if (c == '/' && i + 1 < src.size() && src[i + 1] == '*') {
      i += 2;
      while (i + 1 < src.size() && !(src[i] == '*' && src[i + 1] == '/')) {
        if (src[i] == '\n') ++line;
        ++i;
      }
      i = (i + 1 < src.size()) ? i + 2 : src.size();
      continue;
    }

    if (c == '#' && at_line_start) {
      std::size_t begin = i;
      int tok_line = line;
      while (i < src.size()) {
        if (src[i] == '\\' && i + 1 < src.size() && src[i + 1] == '\n') {
          i += 2;
          ++line;
          continue;
        }
        if (src[i] == '\n') break;
        // strip trailing comment starts conservatively: keep text as-is
        ++i;
      }
      push(TokKind::Directive, begin, i, tok_line);
      continue;
    }
    at_line_start = false;

    if (ident_start(c)) {
      std::size_t begin = i;
      while (i < src.size() && ident_cont(src[i])) ++i;
      std::string_view word = src.substr(begin, i - begin);
      push(is_keyword(word) ? TokKind::Keyword : TokKind::Identifier, begin, i,
           line);
      continue;
    }

    if (std::isdigit(static_cast<unsigned char>(c)) ||
        (c == '.' && i + 1 < src.size() &&
         std::isdigit(static_cast<unsigned char>(src[i + 1])))) {
      std::size_t begin = i;
      while (i < src.size() &&
             (ident_cont(src[i]) || src[i] == '.' ||
              ((src[i] == '+' || src[i] == '-') && i > begin &&
               (src[i - 1] == 'e' || src[i - 1] == 'E' || src[i - 1] == 'p' ||
                src[i - 1] == 'P')))) {
        ++i;
      }
      push(TokKind::Number, begin, i, line);
      continue;
    }

    if (c == '"' || c == '\'') {
      char quote = c;
      std::size_t begin = i;
      int tok_line = line;
      ++i;
      while (i < src.size() && src[i] != quote) {
        if (src[i] == '\\' && i + 1 < src.size()) {
          i += 2;
          continue;
        }
        if (src[i] == '\n') ++line;
        ++i;
      }
      if (i < src.size()) ++i;  // closing quote
      push(quote == '"' ? TokKind::String : TokKind::CharLit, begin, i, tok_line);
      continue;
    }

    // punctuators
    {
      std::size_t begin = i;
      std::string_view rest = src.substr(i);
      std::size_t len = 1;
      for (const char** p = kPuncts3; *p; ++p) {
        if (rest.substr(0, 3) == *p) {
          len = 3;
          break;
        }
      }
      if (len == 1) {
        for (const char** p = kPuncts2; *p; ++p) {
          if (rest.substr(0, 2) == *p) {
            len = 2;
            break;
          }
        }
      }
      i += len;
      push(TokKind::Punct, begin, i, line);
    }
  }

  toks.push_back({TokKind::Eof, "", line, src.size(), 0});
  return toks;
}

std::string slice(std::string_view src, const Token& first, const Token& last) {
  std::size_t begin = first.offset;
  std::size_t end = last.offset + last.length;
  if (end < begin || end > src.size()) return {};
  return std::string(src.substr(begin, end - begin));
}

}  // namespace pathtest::clex
