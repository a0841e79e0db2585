#include "ddtep/token.hpp"

#include <cctype>
#include <charconv>

namespace ddtep {

namespace {

bool is_ident_start(char c) { return std::islower(static_cast<unsigned char>(c)) != 0; }
bool is_var_start(char c) { return std::isupper(static_cast<unsigned char>(c)) != 0 || c == '_'; }
bool is_name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_';
}
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; }

} // namespace

const char* token_kind_name(TokenKind kind) {
    switch (kind) {
    case TokenKind::Number: return "number";
    case TokenKind::Ident: return "identifier";
    case TokenKind::Var: return "variable";
    case TokenKind::ColonColon: return "'::'";
    case TokenKind::If: return "':-'";
    case TokenKind::Question: return "'?'";
    case TokenKind::Semicolon: return "';'";
    case TokenKind::Comma: return "','";
    case TokenKind::Naf: return "'\\+'";
    case TokenKind::NotEqual: return "'\\='";
    case TokenKind::LParen: return "'('";
    case TokenKind::RParen: return "')'";
    case TokenKind::LBracket: return "'['";
    case TokenKind::RBracket: return "']'";
    case TokenKind::Pipe: return "'|'";
    case TokenKind::Dot: return "'.'";
    }
    return "?";
}

std::vector<Token> tokenize(std::string_view text) {
    std::vector<Token> out;
    size_t i = 0;
    int line = 1;
    int col = 1;

    auto advance = [&](size_t n) {
        for (size_t k = 0; k < n; ++k) {
            if (text[i] == '\n') {
                ++line;
                col = 1;
            } else {
                ++col;
            }
            ++i;
        }
    };
    auto push = [&](TokenKind kind, Loc at, size_t len) {
        out.push_back(Token{kind, std::string(text.substr(i, len)), at});
        advance(len);
    };

    while (i < text.size()) {
        char c = text[i];
        Loc at{line, col};
        if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            advance(1);
            continue;
        }
        if (c == '%') {
            while (i < text.size() && text[i] != '\n') advance(1);
            continue;
        }
        if (c == ':' && i + 1 < text.size() && text[i + 1] == ':') {
            push(TokenKind::ColonColon, at, 2);
            continue;
        }
        if (c == ':' && i + 1 < text.size() && text[i + 1] == '-') {
            push(TokenKind::If, at, 2);
            continue;
        }
        if (c == '\\' && i + 1 < text.size() && text[i + 1] == '+') {
            push(TokenKind::Naf, at, 2);
            continue;
        }
        if (c == '\\' && i + 1 < text.size() && text[i + 1] == '=') {
            push(TokenKind::NotEqual, at, 2);
            continue;
        }
        switch (c) {
        case '?': push(TokenKind::Question, at, 1); continue;
        case ';': push(TokenKind::Semicolon, at, 1); continue;
        case ',': push(TokenKind::Comma, at, 1); continue;
        case '(': push(TokenKind::LParen, at, 1); continue;
        case ')': push(TokenKind::RParen, at, 1); continue;
        case '[': push(TokenKind::LBracket, at, 1); continue;
        case ']': push(TokenKind::RBracket, at, 1); continue;
        case '|': push(TokenKind::Pipe, at, 1); continue;
        default: break;
        }
        // '.' is end-of-statement unless it sits inside a number like "0.5";
        // numbers are lexed as a whole below, so a bare '.' here is always Dot.
        if (c == '.') {
            push(TokenKind::Dot, at, 1);
            continue;
        }
        if (is_digit(c) || (c == '-' && i + 1 < text.size() && is_digit(text[i + 1]))) {
            size_t j = i + (c == '-' ? 1 : 0);
            while (j < text.size() && is_digit(text[j])) ++j;
            if (j + 1 < text.size() && text[j] == '.' && is_digit(text[j + 1])) {
                ++j;
                while (j < text.size() && is_digit(text[j])) ++j;
            }
            if (j < text.size() && (text[j] == 'e' || text[j] == 'E')) {
                size_t k = j + 1;
                if (k < text.size() && (text[k] == '+' || text[k] == '-')) ++k;
                if (k < text.size() && is_digit(text[k])) {
                    j = k;
                    while (j < text.size() && is_digit(text[j])) ++j;
                }
            }
            std::string lexeme(text.substr(i, j - i));
            double value = 0.0;
            auto [ptr, ec] = std::from_chars(lexeme.data(), lexeme.data() + lexeme.size(), value);
            if (ec != std::errc() || ptr != lexeme.data() + lexeme.size())
                throw Error(ErrorKind::Lex, "malformed number '" + lexeme + "'", at);
            Token tok{TokenKind::Number, lexeme, at, value};
            out.push_back(tok);
            advance(j - i);
            continue;
        }
        if (is_ident_start(c) || is_var_start(c)) {
            size_t j = i;
            while (j < text.size() && is_name_char(text[j])) ++j;
            TokenKind kind = is_ident_start(c) ? TokenKind::Ident : TokenKind::Var;
            push(kind, at, j - i);
            continue;
        }
        throw Error(ErrorKind::Lex, std::string("unrecognized character '") + c + "'", at);
    }
    return out;
}

} // namespace ddtep
