#pragma once

#include <string>
#include <vector>

#include "gpimdp/imdp.hpp"
#include "gpimdp/pctl.hpp"

namespace gpimdp {

enum class Verdict { Yes, No, Maybe };

std::string_view verdict_text(Verdict v);

struct SatInterval {
    double lo = 0.0;
    double hi = 1.0;

    [[nodiscard]] double width() const { return hi - lo; }
};

/// min over feasible distributions theta (lo <= theta <= hi, sum theta = 1) of
/// sum theta(s') v(s'). Greedy: every successor starts at lo, the remaining
/// mass goes to successors in ascending order of value (ties by state id).
double min_expectation(const TransitionRow& row, const std::vector<double>& values);
/// Dual of min_expectation: remaining mass goes to the highest values first.
double max_expectation(const TransitionRow& row, const std::vector<double>& values);

struct CheckOptions {
    double tol = 1e-6;          ///< unbounded until stops when no endpoint moves more than this
    int max_iterations = 100000;
};

/// Satisfaction intervals of a path formula given the states known to satisfy
/// its operands.
struct PathResult {
    std::vector<SatInterval> intervals;
    int iterations = 0;
    bool converged = true;
};

PathResult check_path(const Imdp& m, const PathFormula& psi, const std::vector<bool>& left, const std::vector<bool>& right,
                      const CheckOptions& opts = {});

struct CheckResult {
    std::vector<SatInterval> intervals;  ///< probability intervals of the top-level operator, or 0/1 for boolean formulas
    std::vector<Verdict> verdicts;
    int iterations = 0;
    bool converged = true;

    [[nodiscard]] std::size_t count(Verdict v) const;
    /// Mean interval width over all states.
    [[nodiscard]] double mean_width() const;
};

/// Evaluates a state formula bottom-up. Nested probabilistic subformulas feed
/// enclosing operators with their Yes states only.
CheckResult check(const Imdp& m, const StateFormula& phi, const CheckOptions& opts = {});

/// Verdict for `P rel threshold` given the probability interval.
Verdict classify(Rel rel, double threshold, const SatInterval& p);

}  // namespace gpimdp
