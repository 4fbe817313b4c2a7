#include "gpimdp/checker.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace gpimdp {

std::string_view verdict_text(Verdict v) {
    switch (v) {
        case Verdict::Yes: return "yes";
        case Verdict::No: return "no";
        case Verdict::Maybe: return "maybe";
    }
    return "?";
}

namespace {

double greedy_expectation(const TransitionRow& row, const std::vector<double>& values, bool maximize) {
    double sum_lo = 0.0;
    double sum_hi = 0.0;
    for (const auto& t : row) {
        sum_lo += t.lo;
        sum_hi += t.hi;
    }
    if (row.empty() || sum_lo > 1.0 + kRowTolerance || sum_hi < 1.0 - kRowTolerance) {
        throw Error("infeasible interval row (sum lo > 1 or sum hi < 1)");
    }
    std::vector<std::size_t> order(row.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto value = [&](std::size_t k) { return values[static_cast<std::size_t>(row[k].target)]; };
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double va = value(a);
        const double vb = value(b);
        if (va != vb) return maximize ? va > vb : va < vb;
        return row[a].target < row[b].target;
    });
    double remaining = 1.0 - sum_lo;
    double acc = 0.0;
    for (std::size_t k : order) {
        double theta = row[k].lo;
        if (remaining > 0.0) {
            const double add = std::min(row[k].hi - row[k].lo, remaining);
            theta += add;
            remaining -= add;
        }
        acc += theta * value(k);
    }
    return acc;
}

}  // namespace

double min_expectation(const TransitionRow& row, const std::vector<double>& values) {
    return greedy_expectation(row, values, false);
}

double max_expectation(const TransitionRow& row, const std::vector<double>& values) {
    return greedy_expectation(row, values, true);
}

Verdict classify(Rel rel, double threshold, const SatInterval& p) {
    switch (rel) {
        case Rel::Ge:
            if (p.lo >= threshold) return Verdict::Yes;
            if (p.hi < threshold) return Verdict::No;
            break;
        case Rel::Gt:
            if (p.lo > threshold) return Verdict::Yes;
            if (p.hi <= threshold) return Verdict::No;
            break;
        case Rel::Le:
            if (p.hi <= threshold) return Verdict::Yes;
            if (p.lo > threshold) return Verdict::No;
            break;
        case Rel::Lt:
            if (p.hi < threshold) return Verdict::Yes;
            if (p.lo >= threshold) return Verdict::No;
            break;
    }
    return Verdict::Maybe;
}

namespace {

/// One Bellman sweep: lower bound minimizes over actions and adversaries, upper bound maximizes.
void bellman(const Imdp& m, const std::vector<double>& lo_in, const std::vector<double>& hi_in, std::vector<double>& lo_out,
             std::vector<double>& hi_out, StateId s) {
    double lo = 1.0;
    double hi = 0.0;
    bool any = false;
    for (ActionId a = 0; a < m.num_actions(); ++a) {
        const auto& row = m.row(s, a);
        if (row.empty()) continue;
        any = true;
        lo = std::min(lo, min_expectation(row, lo_in));
        hi = std::max(hi, max_expectation(row, hi_in));
    }
    if (!any) throw Error("state " + std::to_string(s) + " has no available action");
    lo_out[static_cast<std::size_t>(s)] = std::clamp(lo, 0.0, 1.0);
    hi_out[static_cast<std::size_t>(s)] = std::clamp(hi, 0.0, 1.0);
}

}  // namespace

PathResult check_path(const Imdp& m, const PathFormula& psi, const std::vector<bool>& left, const std::vector<bool>& right,
                      const CheckOptions& opts) {
    const auto n = static_cast<std::size_t>(m.num_states());
    if (right.size() != n || (psi.kind == PathFormula::Kind::Until && left.size() != n)) {
        throw Error("operand sets do not match the IMDP size");
    }
    PathResult out;
    out.intervals.resize(n);
    std::vector<double> lo(n, 0.0);
    std::vector<double> hi(n, 0.0);
    for (std::size_t s = 0; s < n; ++s) lo[s] = hi[s] = right[s] ? 1.0 : 0.0;

    if (psi.kind == PathFormula::Kind::Next) {
        std::vector<double> lo2(n);
        std::vector<double> hi2(n);
        for (std::size_t s = 0; s < n; ++s) bellman(m, lo, hi, lo2, hi2, static_cast<StateId>(s));
        for (std::size_t s = 0; s < n; ++s) out.intervals[s] = {lo2[s], hi2[s]};
        out.iterations = 1;
        return out;
    }

    // Q1: phi2 states. Q0: states satisfying neither operand, and the unsafe
    // state unless it satisfies phi2.
    std::vector<char> fixed(n, 0);
    for (std::size_t s = 0; s < n; ++s) {
        if (right[s] || !left[s]) fixed[s] = 1;
    }
    if (const auto u = m.unsafe_state(); u && !right[static_cast<std::size_t>(*u)]) fixed[static_cast<std::size_t>(*u)] = 1;

    std::vector<double> lo2 = lo;
    std::vector<double> hi2 = hi;
    const bool bounded = psi.horizon.has_value();
    const int steps = bounded ? *psi.horizon : opts.max_iterations;
    out.converged = bounded;
    for (int k = 0; k < steps; ++k) {
        double change = 0.0;
        for (std::size_t s = 0; s < n; ++s) {
            if (fixed[s]) continue;
            bellman(m, lo, hi, lo2, hi2, static_cast<StateId>(s));
            change = std::max({change, std::abs(lo2[s] - lo[s]), std::abs(hi2[s] - hi[s])});
        }
        lo.swap(lo2);
        hi.swap(hi2);
        ++out.iterations;
        if (!bounded && change < opts.tol) {
            out.converged = true;
            break;
        }
    }
    for (std::size_t s = 0; s < n; ++s) out.intervals[s] = {lo[s], std::max(lo[s], hi[s])};
    return out;
}

std::size_t CheckResult::count(Verdict v) const { return static_cast<std::size_t>(std::count(verdicts.begin(), verdicts.end(), v)); }

double CheckResult::mean_width() const {
    if (intervals.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& p : intervals) acc += p.width();
    return acc / static_cast<double>(intervals.size());
}

namespace {

SatInterval of_verdict(Verdict v) {
    switch (v) {
        case Verdict::Yes: return {1.0, 1.0};
        case Verdict::No: return {0.0, 0.0};
        case Verdict::Maybe: return {0.0, 1.0};
    }
    return {0.0, 1.0};
}

std::vector<bool> yes_set(const CheckResult& r) {
    std::vector<bool> out(r.verdicts.size());
    for (std::size_t s = 0; s < out.size(); ++s) out[s] = r.verdicts[s] == Verdict::Yes;
    return out;
}

CheckResult eval(const Imdp& m, const StateFormula& phi, const CheckOptions& opts) {
    const auto n = static_cast<std::size_t>(m.num_states());
    CheckResult out;
    out.verdicts.assign(n, Verdict::No);
    switch (phi.kind) {
        case StateFormula::Kind::True:
            out.verdicts.assign(n, Verdict::Yes);
            break;
        case StateFormula::Kind::Atom:
            if (!m.alphabet().count(phi.atom)) throw Error("unknown atom '" + phi.atom + "' in formula");
            for (std::size_t s = 0; s < n; ++s) {
                out.verdicts[s] = m.labels(static_cast<StateId>(s)).count(phi.atom) ? Verdict::Yes : Verdict::No;
            }
            break;
        case StateFormula::Kind::Not: {
            const CheckResult inner = eval(m, *phi.left, opts);
            out.iterations = inner.iterations;
            out.converged = inner.converged;
            for (std::size_t s = 0; s < n; ++s) {
                const Verdict v = inner.verdicts[s];
                out.verdicts[s] = v == Verdict::Yes ? Verdict::No : v == Verdict::No ? Verdict::Yes : Verdict::Maybe;
            }
            break;
        }
        case StateFormula::Kind::And: {
            const CheckResult a = eval(m, *phi.left, opts);
            const CheckResult b = eval(m, *phi.right, opts);
            out.iterations = a.iterations + b.iterations;
            out.converged = a.converged && b.converged;
            for (std::size_t s = 0; s < n; ++s) {
                const Verdict va = a.verdicts[s];
                const Verdict vb = b.verdicts[s];
                if (va == Verdict::No || vb == Verdict::No) {
                    out.verdicts[s] = Verdict::No;
                } else if (va == Verdict::Yes && vb == Verdict::Yes) {
                    out.verdicts[s] = Verdict::Yes;
                } else {
                    out.verdicts[s] = Verdict::Maybe;
                }
            }
            break;
        }
        case StateFormula::Kind::Prob: {
            const PathFormula& psi = *phi.path;
            std::vector<bool> left(n, true);
            int iterations = 0;
            bool converged = true;
            if (psi.left) {
                const CheckResult l = eval(m, *psi.left, opts);
                left = yes_set(l);
                iterations += l.iterations;
                converged = converged && l.converged;
            }
            const CheckResult r = eval(m, *psi.right, opts);
            iterations += r.iterations;
            converged = converged && r.converged;
            PathResult p = check_path(m, psi, left, yes_set(r), opts);
            out.intervals = std::move(p.intervals);
            out.iterations = iterations + p.iterations;
            out.converged = converged && p.converged;
            for (std::size_t s = 0; s < n; ++s) out.verdicts[s] = classify(phi.rel, phi.threshold, out.intervals[s]);
            return out;
        }
    }
    out.intervals.resize(n);
    for (std::size_t s = 0; s < n; ++s) out.intervals[s] = of_verdict(out.verdicts[s]);
    return out;
}

}  // namespace

CheckResult check(const Imdp& m, const StateFormula& phi, const CheckOptions& opts) { return eval(m, phi, opts); }

}  // namespace gpimdp
