#pragma once

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "gpimdp/interval.hpp"
#include "gpimdp/types.hpp"

namespace gpimdp {

/// Axis-aligned hyperrectangle [lo, hi]. Zero-width faces are allowed.
struct Box {
    Vec lo;
    Vec hi;

    Box() = default;
    Box(Vec l, Vec h);

    [[nodiscard]] int dim() const { return static_cast<int>(lo.size()); }
    [[nodiscard]] Interval side(int i) const { return {lo[i], hi[i]}; }
    [[nodiscard]] Vec center() const { return 0.5 * (lo + hi); }
    [[nodiscard]] Vec widths() const { return hi - lo; }
    [[nodiscard]] int widest_dim() const;
    /// Euclidean half diagonal.
    [[nodiscard]] double radius() const { return 0.5 * (hi - lo).norm(); }
    [[nodiscard]] double diameter() const { return (hi - lo).norm(); }

    [[nodiscard]] bool contains(const Vec& x) const;
    [[nodiscard]] bool contains(const Box& other) const;
    [[nodiscard]] bool intersects(const Box& other) const;

    /// Splits along `dim` at its midpoint.
    [[nodiscard]] std::pair<Box, Box> bisect(int dim) const;

    friend bool operator==(const Box& a, const Box& b);
};

/// Box from per-dimension intervals.
Box box_of(const std::vector<Interval>& sides);

/// A discrete region: the box doubles as IMDP state identity with its label set.
struct Region {
    Box box;
    StateId id = -1;
    std::set<std::string> labels;
};

/// Expansion of `q` by the non-negative margins `c`.
Box expand(const Box& q, const Vec& c);

/// Reduction of `q` by `c`; empty when any side collapses past zero width.
std::optional<Box> reduce(const Box& q, const Vec& c);

}  // namespace gpimdp
