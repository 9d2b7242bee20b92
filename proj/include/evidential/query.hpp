#pragma once

#include <cctype>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "evidential/errors.hpp"

namespace evidential {

// Expression tree over atoms `var = 'value'` with AND, OR, NOT.
struct QueryExpr {
    enum class Kind { atom, conj, disj, neg };

    Kind kind = Kind::atom;
    std::string var;    // atom
    std::string value;  // atom
    std::vector<QueryExpr> children;

    static QueryExpr atom(std::string var, std::string value) {
        QueryExpr e;
        e.kind = Kind::atom;
        e.var = std::move(var);
        e.value = std::move(value);
        return e;
    }

    static QueryExpr make(Kind kind, std::vector<QueryExpr> children) {
        QueryExpr e;
        e.kind = kind;
        e.children = std::move(children);
        return e;
    }
};

// IF premise THEN conclusion-atom.
struct RuleQuery {
    QueryExpr premise;
    std::string var;
    std::string value;
};

struct ParsedQuery {
    std::optional<QueryExpr> expr;
    std::optional<RuleQuery> rule;
};

inline std::string to_string(const QueryExpr& e) {
    switch (e.kind) {
        case QueryExpr::Kind::atom:
            return e.var + "='" + e.value + "'";
        case QueryExpr::Kind::neg:
            return "not (" + to_string(e.children[0]) + ")";
        case QueryExpr::Kind::conj:
        case QueryExpr::Kind::disj: {
            std::string op = e.kind == QueryExpr::Kind::conj ? " and " : " or ";
            std::string out = "(";
            for (std::size_t i = 0; i < e.children.size(); ++i) {
                if (i) out += op;
                out += to_string(e.children[i]);
            }
            return out + ")";
        }
    }
    return {};
}

namespace detail {

struct QueryToken {
    enum class Kind { ident, value, equals, lparen, rparen, kw_and, kw_or, kw_not, kw_if, kw_then, end };
    Kind kind;
    std::string text;
    std::size_t pos;
};

inline std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

class QueryLexer {
public:
    explicit QueryLexer(std::string_view text) : text_(text) { advance(); }

    const QueryToken& peek() const { return current_; }

    QueryToken next() {
        QueryToken t = current_;
        advance();
        return t;
    }

private:
    void advance() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
        std::size_t start = pos_;
        if (pos_ >= text_.size()) {
            current_ = {QueryToken::Kind::end, "", start};
            return;
        }
        char c = text_[pos_];
        if (c == '(') { ++pos_; current_ = {QueryToken::Kind::lparen, "(", start}; return; }
        if (c == ')') { ++pos_; current_ = {QueryToken::Kind::rparen, ")", start}; return; }
        if (c == '=') { ++pos_; current_ = {QueryToken::Kind::equals, "=", start}; return; }
        if (c == '\'') {
            ++pos_;
            std::string value;
            while (pos_ < text_.size() && text_[pos_] != '\'' && text_[pos_] != '\n')
                value += text_[pos_++];
            if (pos_ >= text_.size() || text_[pos_] != '\'')
                throw ParseError("syntax error at position " + std::to_string(start) +
                                 ": unterminated quoted value");
            ++pos_;
            current_ = {QueryToken::Kind::value, value, start};
            return;
        }
        if (c == '.') {
            // .and. / .or. operator spelling
            std::size_t end = pos_ + 1;
            while (end < text_.size() && std::isalpha(static_cast<unsigned char>(text_[end]))) ++end;
            if (end < text_.size() && text_[end] == '.') {
                std::string word = lower(std::string(text_.substr(pos_ + 1, end - pos_ - 1)));
                if (word == "and") { pos_ = end + 1; current_ = {QueryToken::Kind::kw_and, ".and.", start}; return; }
                if (word == "or") { pos_ = end + 1; current_ = {QueryToken::Kind::kw_or, ".or.", start}; return; }
            }
            throw ParseError("syntax error at position " + std::to_string(start) +
                             ": unexpected '.'");
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t end = pos_;
            while (end < text_.size() &&
                   (std::isalnum(static_cast<unsigned char>(text_[end])) || text_[end] == '_'))
                ++end;
            std::string word(text_.substr(pos_, end - pos_));
            pos_ = end;
            std::string lowered = lower(word);
            if (lowered == "and") { current_ = {QueryToken::Kind::kw_and, word, start}; return; }
            if (lowered == "or") { current_ = {QueryToken::Kind::kw_or, word, start}; return; }
            if (lowered == "not") { current_ = {QueryToken::Kind::kw_not, word, start}; return; }
            if (lowered == "if") { current_ = {QueryToken::Kind::kw_if, word, start}; return; }
            if (lowered == "then") { current_ = {QueryToken::Kind::kw_then, word, start}; return; }
            current_ = {QueryToken::Kind::ident, word, start};
            return;
        }
        throw ParseError("syntax error at position " + std::to_string(start) + ": unexpected '" +
                         std::string(1, c) + "'");
    }

    std::string_view text_;
    std::size_t pos_ = 0;
    QueryToken current_{QueryToken::Kind::end, "", 0};
};

class QueryParser {
public:
    explicit QueryParser(std::string_view text) : lex_(text) {}

    ParsedQuery parse_query() {
        ParsedQuery out;
        if (lex_.peek().kind == QueryToken::Kind::kw_if) {
            lex_.next();
            QueryExpr premise = parse_expr();
            expect(QueryToken::Kind::kw_then, "'then'");
            QueryExpr conclusion = parse_atom();
            out.rule = RuleQuery{std::move(premise), conclusion.var, conclusion.value};
        } else {
            out.expr = parse_expr();
        }
        if (lex_.peek().kind != QueryToken::Kind::end)
            throw ParseError("syntax error at position " + std::to_string(lex_.peek().pos) +
                             ": unexpected '" + lex_.peek().text + "'");
        return out;
    }

    QueryExpr parse_expression_only() {
        QueryExpr e = parse_expr();
        if (lex_.peek().kind != QueryToken::Kind::end)
            throw ParseError("syntax error at position " + std::to_string(lex_.peek().pos) +
                             ": unexpected '" + lex_.peek().text + "'");
        return e;
    }

private:
    QueryExpr parse_expr() {
        std::vector<QueryExpr> terms;
        terms.push_back(parse_term());
        while (lex_.peek().kind == QueryToken::Kind::kw_or) {
            lex_.next();
            terms.push_back(parse_term());
        }
        if (terms.size() == 1) return std::move(terms[0]);
        return QueryExpr::make(QueryExpr::Kind::disj, std::move(terms));
    }

    QueryExpr parse_term() {
        std::vector<QueryExpr> factors;
        factors.push_back(parse_factor());
        while (lex_.peek().kind == QueryToken::Kind::kw_and) {
            lex_.next();
            factors.push_back(parse_factor());
        }
        if (factors.size() == 1) return std::move(factors[0]);
        return QueryExpr::make(QueryExpr::Kind::conj, std::move(factors));
    }

    QueryExpr parse_factor() {
        const auto& t = lex_.peek();
        if (t.kind == QueryToken::Kind::kw_not) {
            lex_.next();
            std::vector<QueryExpr> child;
            child.push_back(parse_factor());
            return QueryExpr::make(QueryExpr::Kind::neg, std::move(child));
        }
        if (t.kind == QueryToken::Kind::lparen) {
            lex_.next();
            QueryExpr e = parse_expr();
            expect(QueryToken::Kind::rparen, "')'");
            return e;
        }
        return parse_atom();
    }

    QueryExpr parse_atom() {
        QueryToken ident = expect(QueryToken::Kind::ident, "variable name");
        expect(QueryToken::Kind::equals, "'='");
        QueryToken value = expect(QueryToken::Kind::value, "quoted value");
        return QueryExpr::atom(ident.text, value.text);
    }

    QueryToken expect(QueryToken::Kind kind, const char* what) {
        if (lex_.peek().kind != kind) {
            const auto& t = lex_.peek();
            std::string got = t.kind == QueryToken::Kind::end ? "end of input" : "'" + t.text + "'";
            throw ParseError("syntax error at position " + std::to_string(t.pos) + ": expected " +
                             what + ", got " + got);
        }
        return lex_.next();
    }

    QueryLexer lex_;
};

}  // namespace detail

// Parses either a logical expression or an IF..THEN rule query. Variables
// and values are resolved later, at compile time against a network or scope.
inline ParsedQuery parse_query(std::string_view text) {
    if (text.empty()) throw ParseError("empty query");
    return detail::QueryParser(text).parse_query();
}

inline QueryExpr parse_expression(std::string_view text) {
    if (text.empty()) throw ParseError("empty expression");
    return detail::QueryParser(text).parse_expression_only();
}

}  // namespace evidential
