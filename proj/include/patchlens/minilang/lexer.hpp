#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace patchlens::minilang {

enum class TokenKind {
  Identifier,
  Keyword,
  IntLiteral,
  FloatLiteral,
  StringLiteral,
  Punct,    // operators and punctuation
  Unknown,  // any character the grammar does not use
  End,
};

struct Token {
  TokenKind kind = TokenKind::End;
  std::string lexeme;
  int line = 1;    // 1-based
  int column = 1;  // 1-based, in bytes
  // Whitespace (and comments) immediately preceding the token.
  std::string leading;
};

bool is_keyword(std::string_view word);

// Lexes `text` completely. Never throws: characters outside the grammar become
// single-character Unknown tokens, and so does the opening quote of a string
// literal left unterminated on its line. The returned vector always ends with an End token.
std::vector<Token> lex(std::string_view text);

}  // namespace patchlens::minilang
