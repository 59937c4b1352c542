#include "patchlens/minilang/lexer.hpp"

#include <array>
#include <cctype>

namespace patchlens::minilang {
namespace {

constexpr std::array<std::string_view, 15> kKeywords = {
    "fn",   "let",  "if",  "else",  "while", "for", "return", "true",
    "false", "int", "float", "bool", "str",  "array", "void"};

// Longest operators first so greedy matching works.
constexpr std::array<std::string_view, 26> kPuncts = {
    "->", "==", "!=", "<=", ">=", "&&", "||", "(", ")", "{", "}", "[", "]",
    ",",  ";",  ":",  "=",  "<",  ">",  "+",  "-", "*", "/", "%", "!", "."};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

}  // namespace

bool is_keyword(std::string_view word) {
  for (auto k : kKeywords) {
    if (k == word) return true;
  }
  return false;
}

std::vector<Token> lex(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  int line = 1;
  int col = 1;
  std::string leading;

  auto advance = [&](std::size_t n) {
    for (std::size_t k = 0; k < n && i < text.size(); ++k, ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
  };

  while (i < text.size()) {
    char c = text[i];
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      leading.push_back(c);
      advance(1);
      continue;
    }
    if (c == '/' && i + 1 < text.size() && text[i + 1] == '/') {
      while (i < text.size() && text[i] != '\n') {
        leading.push_back(text[i]);
        advance(1);
      }
      continue;
    }

    Token tok;
    tok.line = line;
    tok.column = col;
    tok.leading = std::move(leading);
    leading.clear();
    std::size_t start = i;

    if (ident_start(c)) {
      std::size_t j = i;
      while (j < text.size() && ident_char(text[j])) ++j;
      tok.lexeme = std::string(text.substr(start, j - start));
      tok.kind = is_keyword(tok.lexeme) ? TokenKind::Keyword : TokenKind::Identifier;
      advance(j - start);
    } else if (digit(c)) {
      std::size_t j = i;
      while (j < text.size() && digit(text[j])) ++j;
      bool is_float = false;
      if (j + 1 < text.size() && text[j] == '.' && digit(text[j + 1])) {
        is_float = true;
        ++j;
        while (j < text.size() && digit(text[j])) ++j;
      }
      if (j < text.size() && (text[j] == 'e' || text[j] == 'E')) {
        std::size_t k = j + 1;
        if (k < text.size() && (text[k] == '+' || text[k] == '-')) ++k;
        if (k < text.size() && digit(text[k])) {
          is_float = true;
          j = k;
          while (j < text.size() && digit(text[j])) ++j;
        }
      }
      tok.lexeme = std::string(text.substr(start, j - start));
      tok.kind = is_float ? TokenKind::FloatLiteral : TokenKind::IntLiteral;
      advance(j - start);
    } else if (c == '"') {
      std::size_t j = i + 1;
      while (j < text.size() && text[j] != '"' && text[j] != '\n') {
        if (text[j] == '\\' && j + 1 < text.size() && text[j + 1] != '\n') ++j;
        ++j;
      }
      if (j < text.size() && text[j] == '"') {
        ++j;
        tok.lexeme = std::string(text.substr(start, j - start));
        tok.kind = TokenKind::StringLiteral;
        advance(j - start);
      } else {
        // Unterminated: the quote alone is an unknown character.
        tok.lexeme = "\"";
        tok.kind = TokenKind::Unknown;
        advance(1);
      }
    } else {
      std::string_view rest = text.substr(i);
      bool matched = false;
      for (auto p : kPuncts) {
        if (rest.substr(0, p.size()) == p) {
          tok.lexeme = std::string(p);
          tok.kind = p == "." ? TokenKind::Unknown : TokenKind::Punct;
          advance(p.size());
          matched = true;
          break;
        }
      }
      if (!matched) {
        // Keep multi-byte UTF-8 sequences together as one unknown token.
        std::size_t n = 1;
        auto uc = static_cast<unsigned char>(c);
        if (uc >= 0xC0) {
          while (i + n < text.size() && (static_cast<unsigned char>(text[i + n]) & 0xC0) == 0x80) ++n;
        }
        tok.lexeme = std::string(text.substr(i, n));
        tok.kind = TokenKind::Unknown;
        advance(n);
      }
    }
    out.push_back(std::move(tok));
  }

  Token end;
  end.kind = TokenKind::End;
  end.line = line;
  end.column = col;
  end.leading = std::move(leading);
  out.push_back(std::move(end));
  return out;
}

}  // namespace patchlens::minilang
