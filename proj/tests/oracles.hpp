#pragma once

// Independent reference implementations used only by tests. None of them
// share code with the library: dense Gaussian elimination instead of
// Cholesky, vertex enumeration instead of the greedy adversary, plain
// Markov-chain value iteration instead of the interval checker.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

/// Solves A x = b by Gaussian elimination with partial pivoting.
inline std::vector<double> solve(Matrix a, std::vector<double> b) {
    const std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        }
        std::swap(a[col], a[piv]);
        std::swap(b[col], b[piv]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double acc = b[i];
        for (std::size_t c = i + 1; c < n; ++c) acc -= a[i][c] * x[c];
        x[i] = acc / a[i][i];
    }
    return x;
}

/// log det A by elimination with partial pivoting (A positive definite).
inline double log_det(Matrix a) {
    const std::size_t n = a.size();
    double acc = 0.0;
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r) {
            if (std::abs(a[r][col]) > std::abs(a[piv][col])) piv = r;
        }
        std::swap(a[col], a[piv]);
        acc += std::log(std::abs(a[col][col]));
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
        }
    }
    return acc;
}

inline double se_kernel(const std::vector<double>& a, const std::vector<double>& b, double ell, double sf) {
    double r2 = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) r2 += (a[i] - b[i]) * (a[i] - b[i]);
    return sf * sf * std::exp(-r2 / (2.0 * ell * ell));
}

struct GpPrediction {
    double mean;
    double variance;
};

/// Posterior by explicit solves of (K + s I) w = k and (K + s I) a = y.
inline GpPrediction gp_predict(const std::vector<std::vector<double>>& xs, const std::vector<double>& ys, double ell,
                               double sf, double sigma_v_sq, const std::vector<double>& q) {
    const std::size_t d = xs.size();
    Matrix k(d, std::vector<double>(d));
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) k[i][j] = se_kernel(xs[i], xs[j], ell, sf) + (i == j ? sigma_v_sq : 0.0);
    }
    std::vector<double> kq(d);
    for (std::size_t i = 0; i < d; ++i) kq[i] = se_kernel(xs[i], q, ell, sf);
    const auto alpha = solve(k, ys);
    const auto w = solve(k, kq);
    double mean = 0.0;
    double quad = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        mean += kq[i] * alpha[i];
        quad += kq[i] * w[i];
    }
    return {mean, se_kernel(q, q, ell, sf) - quad};
}

struct Entry {
    double lo;
    double hi;
};

/// Optimum of sum theta_i v_i over {lo <= theta <= hi, sum theta = 1} by
/// enumerating every vertex: all but one coordinate at a bound, the free one
/// fixed by the equality constraint.
inline std::pair<double, double> vertex_extremes(const std::vector<Entry>& row, const std::vector<double>& values) {
    const std::size_t n = row.size();
    double best_min = std::numeric_limits<double>::infinity();
    double best_max = -std::numeric_limits<double>::infinity();
    for (std::size_t free = 0; free < n; ++free) {
        const std::size_t others = n - 1;
        for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << others); ++mask) {
            double mass = 0.0;
            double val = 0.0;
            std::size_t bit = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (i == free) continue;
                const double t = (mask >> bit++) & 1 ? row[i].hi : row[i].lo;
                mass += t;
                val += t * values[i];
            }
            const double t = 1.0 - mass;
            if (t < row[free].lo - 1e-12 || t > row[free].hi + 1e-12) continue;
            val += t * values[free];
            best_min = std::min(best_min, val);
            best_max = std::max(best_max, val);
        }
    }
    return {best_min, best_max};
}

/// Plain MDP: per state and action a dense distribution over successors.
struct Mdp {
    std::vector<std::vector<std::vector<double>>> p;  // p[s][a][s']
};

/// Until by value iteration on an ordinary MDP, min and max over actions.
inline std::pair<std::vector<double>, std::vector<double>> mdp_until(const Mdp& m, const std::vector<bool>& left,
                                                                     const std::vector<bool>& right, int steps) {
    const std::size_t n = m.p.size();
    std::vector<double> lo(n), hi(n);
    for (std::size_t s = 0; s < n; ++s) lo[s] = hi[s] = right[s] ? 1.0 : 0.0;
    for (int k = 0; k < steps; ++k) {
        std::vector<double> lo2 = lo, hi2 = hi;
        for (std::size_t s = 0; s < n; ++s) {
            if (right[s] || !left[s]) continue;
            double mn = 2.0, mx = -1.0;
            for (const auto& dist : m.p[s]) {
                double a = 0.0, b = 0.0;
                for (std::size_t t = 0; t < n; ++t) {
                    a += dist[t] * lo[t];
                    b += dist[t] * hi[t];
                }
                mn = std::min(mn, a);
                mx = std::max(mx, b);
            }
            lo2[s] = mn;
            hi2[s] = mx;
        }
        lo.swap(lo2);
        hi.swap(hi2);
    }
    return {lo, hi};
}

/// Max and min of f over a regular grid with `per_dim` points per side.
inline std::pair<double, double> grid_range(const std::vector<double>& lo, const std::vector<double>& hi, int per_dim,
                                            const std::function<double(const std::vector<double>&)>& f) {
    const std::size_t n = lo.size();
    std::vector<int> idx(n, 0);
    double mn = std::numeric_limits<double>::infinity();
    double mx = -mn;
    std::vector<double> x(n);
    while (true) {
        for (std::size_t i = 0; i < n; ++i) {
            x[i] = per_dim == 1 ? 0.5 * (lo[i] + hi[i]) : lo[i] + (hi[i] - lo[i]) * idx[i] / (per_dim - 1);
        }
        const double v = f(x);
        mn = std::min(mn, v);
        mx = std::max(mx, v);
        std::size_t i = 0;
        while (i < n && ++idx[i] == per_dim) idx[i++] = 0;
        if (i == n) break;
    }
    return {mn, mx};
}

}  // namespace oracle
