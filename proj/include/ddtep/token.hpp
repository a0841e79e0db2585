#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ddtep/error.hpp"

namespace ddtep {

enum class TokenKind {
    Number,      // 0.5, -30, 1e-09
    Ident,       // lowercase-initial identifier
    Var,         // uppercase- or underscore-initial identifier
    ColonColon,  // ::
    If,          // :-
    Question,    // ?
    Semicolon,   // ;
    Comma,       // ,
    Naf,         // \+
    NotEqual,    // \=
    LParen,      // (
    RParen,      // )
    LBracket,    // [
    RBracket,    // ]
    Pipe,        // |
    Dot,         // .
};

struct Token {
    TokenKind kind;
    std::string text;
    Loc loc;
    double number = 0.0; // valid when kind == Number
};

/// Splits source text into tokens. `%` starts a line comment. Throws
/// Error(ErrorKind::Lex) on any character outside the language.
std::vector<Token> tokenize(std::string_view text);

const char* token_kind_name(TokenKind kind);

} // namespace ddtep
