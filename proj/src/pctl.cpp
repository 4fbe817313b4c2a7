#include "gpimdp/pctl.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <vector>

namespace gpimdp {

std::string_view rel_text(Rel r) {
    switch (r) {
        case Rel::Le: return "<=";
        case Rel::Lt: return "<";
        case Rel::Ge: return ">=";
        case Rel::Gt: return ">";
    }
    return "?";
}

Rel flip(Rel r) {
    switch (r) {
        case Rel::Le: return Rel::Ge;
        case Rel::Lt: return Rel::Gt;
        case Rel::Ge: return Rel::Le;
        case Rel::Gt: return Rel::Lt;
    }
    return r;
}

bool rel_holds(Rel r, double value, double threshold) {
    switch (r) {
        case Rel::Le: return value <= threshold;
        case Rel::Lt: return value < threshold;
        case Rel::Ge: return value >= threshold;
        case Rel::Gt: return value > threshold;
    }
    return false;
}

StatePtr make_true() { return std::make_shared<const StateFormula>(); }

StatePtr make_atom(std::string name) {
    StateFormula f;
    f.kind = StateFormula::Kind::Atom;
    f.atom = std::move(name);
    return std::make_shared<const StateFormula>(std::move(f));
}

StatePtr make_not(StatePtr g) {
    StateFormula f;
    f.kind = StateFormula::Kind::Not;
    f.left = std::move(g);
    return std::make_shared<const StateFormula>(std::move(f));
}

StatePtr make_and(StatePtr a, StatePtr b) {
    StateFormula f;
    f.kind = StateFormula::Kind::And;
    f.left = std::move(a);
    f.right = std::move(b);
    return std::make_shared<const StateFormula>(std::move(f));
}

StatePtr make_prob(Rel rel, double threshold, PathPtr path) {
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw Error("probability threshold must lie in [0, 1]");
    StateFormula f;
    f.kind = StateFormula::Kind::Prob;
    f.rel = rel;
    f.threshold = threshold;
    f.path = std::move(path);
    return std::make_shared<const StateFormula>(std::move(f));
}

PathPtr make_next(StatePtr g) {
    PathFormula p;
    p.kind = PathFormula::Kind::Next;
    p.right = std::move(g);
    return std::make_shared<const PathFormula>(std::move(p));
}

PathPtr make_until(StatePtr a, StatePtr b, std::optional<int> horizon) {
    if (horizon && *horizon < 0) throw Error("until horizon must be non-negative");
    PathFormula p;
    p.kind = PathFormula::Kind::Until;
    p.left = std::move(a);
    p.right = std::move(b);
    p.horizon = horizon;
    return std::make_shared<const PathFormula>(std::move(p));
}

namespace {

bool same(const StatePtr& a, const StatePtr& b) {
    if (!a || !b) return !a && !b;
    return *a == *b;
}

}  // namespace

bool operator==(const StateFormula& a, const StateFormula& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case StateFormula::Kind::True: return true;
        case StateFormula::Kind::Atom: return a.atom == b.atom;
        case StateFormula::Kind::Not: return same(a.left, b.left);
        case StateFormula::Kind::And: return same(a.left, b.left) && same(a.right, b.right);
        case StateFormula::Kind::Prob:
            return a.rel == b.rel && a.threshold == b.threshold && a.path && b.path && *a.path == *b.path;
    }
    return false;
}

bool operator==(const PathFormula& a, const PathFormula& b) {
    return a.kind == b.kind && a.horizon == b.horizon && same(a.left, b.left) && same(a.right, b.right);
}

ParseError::ParseError(const std::string& message, std::size_t position)
    : Error(message + " at position " + std::to_string(position)), position_(position) {}

namespace {

struct Token {
    enum class Kind { Ident, Number, Op, End };
    Kind kind = Kind::End;
    std::string text;
    std::size_t pos = 0;
};

std::vector<Token> tokenize(std::string_view s) {
    std::vector<Token> out;
    std::size_t i = 0;
    auto is_ident_start = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; };
    auto is_ident = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
    auto is_digit = [](char c) { return std::isdigit(static_cast<unsigned char>(c)) != 0; };
    while (i < s.size()) {
        const char c = s[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
            continue;
        }
        const std::size_t start = i;
        if (is_ident_start(c)) {
            while (i < s.size() && is_ident(s[i])) ++i;
            out.push_back({Token::Kind::Ident, std::string(s.substr(start, i - start)), start});
        } else if (is_digit(c) || (c == '.' && i + 1 < s.size() && is_digit(s[i + 1]))) {
            while (i < s.size() && (is_digit(s[i]) || s[i] == '.')) ++i;
            if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
                std::size_t j = i + 1;
                if (j < s.size() && (s[j] == '+' || s[j] == '-')) ++j;
                if (j < s.size() && is_digit(s[j])) {
                    i = j;
                    while (i < s.size() && is_digit(s[i])) ++i;
                }
            }
            out.push_back({Token::Kind::Number, std::string(s.substr(start, i - start)), start});
        } else if ((c == '<' || c == '>') && i + 1 < s.size() && s[i + 1] == '=') {
            i += 2;
            out.push_back({Token::Kind::Op, std::string(s.substr(start, 2)), start});
        } else if (c == '<' || c == '>' || c == '!' || c == '&' || c == '(' || c == ')' || c == '[' || c == ']') {
            ++i;
            out.push_back({Token::Kind::Op, std::string(1, c), start});
        } else {
            throw ParseError(std::string("unexpected character '") + c + "'", start);
        }
    }
    out.push_back({Token::Kind::End, "", s.size()});
    return out;
}

/// 1 - p rounded to 15 significant digits, so decimal thresholds such as 0.95
/// complement to the double nearest 0.05 rather than 0.050000000000000044.
double complement(double p) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.15g", 1.0 - p);
    return std::strtod(buf, nullptr);
}

class Parser {
public:
    explicit Parser(std::string_view text) : toks_(tokenize(text)) {}

    StatePtr parse() {
        StatePtr f = state();
        if (peek().kind != Token::Kind::End) fail("unexpected '" + peek().text + "' after formula");
        return f;
    }

private:
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, peek().pos); }

    [[nodiscard]] const Token& peek(std::size_t ahead = 0) const {
        return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
    }

    [[nodiscard]] bool is_op(const Token& t, std::string_view op) const { return t.kind == Token::Kind::Op && t.text == op; }
    [[nodiscard]] bool is_ident(const Token& t, std::string_view name) const {
        return t.kind == Token::Kind::Ident && t.text == name;
    }
    [[nodiscard]] bool is_rel(const Token& t) const {
        return is_op(t, "<=") || is_op(t, "<") || is_op(t, ">=") || is_op(t, ">");
    }

    void expect_op(std::string_view op) {
        if (!is_op(peek(), op)) fail("expected '" + std::string(op) + "'");
        ++pos_;
    }

    StatePtr state() {
        StatePtr f = unary();
        while (is_op(peek(), "&")) {
            ++pos_;
            f = make_and(std::move(f), unary());
        }
        return f;
    }

    StatePtr unary() {
        const Token& t = peek();
        if (is_op(t, "!")) {
            ++pos_;
            return make_not(unary());
        }
        if (is_op(t, "(")) {
            ++pos_;
            StatePtr f = state();
            expect_op(")");
            return f;
        }
        if (t.kind == Token::Kind::Ident) {
            if (t.text == "true") {
                ++pos_;
                return make_true();
            }
            if (t.text == "P" && is_rel(peek(1))) return prob();
            if (t.text == "U") fail("unexpected 'U'");
            ++pos_;
            return make_atom(t.text);
        }
        if (t.kind == Token::Kind::End) fail("unexpected end of formula");
        fail("expected a state formula, found '" + t.text + "'");
    }

    Rel relation() {
        const Token& t = peek();
        Rel r = Rel::Ge;
        if (is_op(t, "<=")) {
            r = Rel::Le;
        } else if (is_op(t, "<")) {
            r = Rel::Lt;
        } else if (is_op(t, ">=")) {
            r = Rel::Ge;
        } else if (is_op(t, ">")) {
            r = Rel::Gt;
        } else {
            fail("expected a relation (<=, <, >=, >)");
        }
        ++pos_;
        return r;
    }

    double number() {
        const Token& t = peek();
        if (t.kind != Token::Kind::Number) fail("expected a probability threshold");
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (ec != std::errc() || ptr != t.text.data() + t.text.size()) fail("malformed number '" + t.text + "'");
        if (!(v >= 0.0 && v <= 1.0)) fail("probability threshold " + t.text + " out of range [0, 1]");
        ++pos_;
        return v;
    }

    int integer() {
        const Token& t = peek();
        int v = -1;
        if (t.kind == Token::Kind::Number) {
            auto [ptr, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
            if (ec != std::errc() || ptr != t.text.data() + t.text.size()) v = -1;
        }
        if (v < 0) fail("expected a non-negative integer step bound");
        ++pos_;
        return v;
    }

    std::optional<int> bound() {
        if (!is_op(peek(), "<=")) return std::nullopt;
        ++pos_;
        return integer();
    }

    StatePtr prob() {
        ++pos_;  // P
        Rel rel = relation();
        double threshold = number();
        expect_op("[");
        PathPtr path = path_formula(rel, threshold);
        expect_op("]");
        return make_prob(rel, threshold, std::move(path));
    }

    /// A leading X, F or G is an operator unless what follows can only continue a state formula.
    [[nodiscard]] bool is_temporal_keyword() const {
        const Token& t = peek();
        if (!(is_ident(t, "X") || is_ident(t, "F") || is_ident(t, "G"))) return false;
        const Token& next = peek(1);
        return !(is_ident(next, "U") || is_op(next, "]") || is_op(next, "&") || is_op(next, ")"));
    }

    PathPtr path_formula(Rel& rel, double& threshold) {
        if (is_temporal_keyword()) {
            const std::string op = peek().text;
            ++pos_;
            if (op == "X") return make_next(state());
            const std::optional<int> k = bound();
            StatePtr operand = state();
            if (op == "F") return make_until(make_true(), std::move(operand), k);
            rel = flip(rel);
            threshold = complement(threshold);
            return make_until(make_true(), make_not(std::move(operand)), k);
        }
        StatePtr left = state();
        if (!is_ident(peek(), "U")) fail("expected 'U' in path formula");
        ++pos_;
        const std::optional<int> k = bound();
        return make_until(std::move(left), state(), k);
    }

    std::vector<Token> toks_;
    std::size_t pos_ = 0;
};

std::string format_number(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace

StatePtr parse_pctl(std::string_view text) { return Parser(text).parse(); }

std::string to_string(const StateFormula& f) {
    switch (f.kind) {
        case StateFormula::Kind::True: return "true";
        case StateFormula::Kind::Atom: return f.atom;
        case StateFormula::Kind::Not: return "!" + to_string(*f.left);
        case StateFormula::Kind::And: return "(" + to_string(*f.left) + " & " + to_string(*f.right) + ")";
        case StateFormula::Kind::Prob:
            return "P" + std::string(rel_text(f.rel)) + format_number(f.threshold) + " [ " + to_string(*f.path) + " ]";
    }
    return "";
}

std::string to_string(const PathFormula& f) {
    if (f.kind == PathFormula::Kind::Next) return "X " + to_string(*f.right);
    std::string op = f.horizon ? " U<=" + std::to_string(*f.horizon) + " " : " U ";
    return to_string(*f.left) + op + to_string(*f.right);
}

}  // namespace gpimdp
