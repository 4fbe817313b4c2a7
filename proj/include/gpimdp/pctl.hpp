#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "gpimdp/types.hpp"

namespace gpimdp {

enum class Rel { Le, Lt, Ge, Gt };

std::string_view rel_text(Rel r);
/// Relation obtained when both sides of the comparison are complemented (>= <-> <=, > <-> <).
Rel flip(Rel r);
/// Does `value` satisfy `value rel threshold`?
bool rel_holds(Rel r, double value, double threshold);

struct PathFormula;

/// State formula node. Sugar (F, G) never appears in the tree: the parser
/// rewrites it into Until.
struct StateFormula {
    enum class Kind { True, Atom, Not, And, Prob };
    Kind kind = Kind::True;
    std::string atom;                              // Atom
    std::shared_ptr<const StateFormula> left;      // Not, And
    std::shared_ptr<const StateFormula> right;     // And
    Rel rel = Rel::Ge;                             // Prob
    double threshold = 0.0;                        // Prob
    std::shared_ptr<const PathFormula> path;       // Prob
};

struct PathFormula {
    enum class Kind { Next, Until };
    Kind kind = Kind::Next;
    std::shared_ptr<const StateFormula> left;      // Until: phi1
    std::shared_ptr<const StateFormula> right;     // Next: operand; Until: phi2
    std::optional<int> horizon;                    // Until: bound k, nullopt for unbounded
};

using StatePtr = std::shared_ptr<const StateFormula>;
using PathPtr = std::shared_ptr<const PathFormula>;

StatePtr make_true();
StatePtr make_atom(std::string name);
StatePtr make_not(StatePtr f);
StatePtr make_and(StatePtr a, StatePtr b);
StatePtr make_prob(Rel rel, double threshold, PathPtr path);
PathPtr make_next(StatePtr f);
PathPtr make_until(StatePtr a, StatePtr b, std::optional<int> horizon = std::nullopt);

bool operator==(const StateFormula& a, const StateFormula& b);
bool operator==(const PathFormula& a, const PathFormula& b);

/// Syntax error carrying the 0-based character offset of the offending token.
class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t position);
    [[nodiscard]] std::size_t position() const { return position_; }

private:
    std::size_t position_;
};

/// Parses the ASCII PCTL grammar:
///   phi := "true" | IDENT | "!" phi | phi "&" phi | "P" REL NUM "[" psi "]" | "(" phi ")"
///   psi := "X" phi | phi "U" phi | phi "U<=" INT phi | "F" phi | "F<=" INT phi | "G" phi | "G<=" INT phi
/// F phi becomes true U phi; P~p [G phi] becomes P~'(1-p) [true U !phi] with the
/// relation flipped.
StatePtr parse_pctl(std::string_view text);

/// Canonical text; parse_pctl(to_string(f)) reproduces f exactly.
std::string to_string(const StateFormula& f);
std::string to_string(const PathFormula& f);

}  // namespace gpimdp
