#pragma once

// Small hand-rolled generators for property tests.

#include <cstdint>
#include <string>
#include <vector>

#include "gpimdp/data.hpp"
#include "gpimdp/gp.hpp"
#include "gpimdp/imdp.hpp"
#include "gpimdp/rng.hpp"

namespace gen {

using gpimdp::Rng;
using gpimdp::Vec;

inline Vec uniform_vec(Rng& rng, int n, double lo, double hi) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = rng.uniform(lo, hi);
    return v;
}

inline int integer(Rng& rng, int lo, int hi) { return lo + static_cast<int>(rng.uniform() * (hi - lo + 1)) % (hi - lo + 1); }

/// Random dataset with one action: inputs uniform on [-2,2]^n, targets a smooth function plus noise.
inline gpimdp::Dataset smooth_dataset(Rng& rng, int n, int d, double noise = 0.05) {
    gpimdp::Dataset data(n, {"a"});
    const double w0 = rng.uniform(-1.0, 1.0);
    const double w1 = rng.uniform(-1.0, 1.0);
    for (int k = 0; k < d; ++k) {
        gpimdp::Sample s;
        s.x = uniform_vec(rng, n, -2.0, 2.0);
        s.y = Vec(n);
        for (int i = 0; i < n; ++i) {
            s.y[i] = w0 * std::sin(s.x[0] + i) + w1 * s.x[n - 1] * 0.5 + noise * rng.normal();
        }
        data.add(std::move(s));
    }
    return data;
}

inline gpimdp::Box random_box(Rng& rng, int n, double lo, double hi, double max_width) {
    Vec a(n), b(n);
    for (int i = 0; i < n; ++i) {
        const double w = rng.uniform(0.0, max_width);
        a[i] = rng.uniform(lo, hi - w);
        b[i] = a[i] + w;
    }
    return {a, b};
}

/// Feasible interval row over `successors` targets with endpoints on a 0.1 grid.
inline gpimdp::TransitionRow grid_row(Rng& rng, int successors) {
    while (true) {
        gpimdp::TransitionRow row;
        int lo_sum = 0, hi_sum = 0;
        for (int t = 0; t < successors; ++t) {
            int a = integer(rng, 0, 10), b = integer(rng, 0, 10);
            if (a > b) std::swap(a, b);
            lo_sum += a;
            hi_sum += b;
            row.push_back({t, a / 10.0, b / 10.0});
        }
        if (lo_sum <= 10 && hi_sum >= 10) return row;
    }
}

/// Dense random distribution over n successors.
inline std::vector<double> distribution(Rng& rng, int n) {
    std::vector<double> p(static_cast<std::size_t>(n));
    double total = 0.0;
    for (double& x : p) total += (x = rng.uniform() < 0.3 ? 0.0 : rng.uniform());
    if (total == 0.0) {
        p[0] = 1.0;
        return p;
    }
    for (double& x : p) x /= total;
    return p;
}

}  // namespace gen
