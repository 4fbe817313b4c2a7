#include "gpimdp/box.hpp"

namespace gpimdp {

Box::Box(Vec l, Vec h) : lo(std::move(l)), hi(std::move(h)) {
    if (lo.size() != hi.size()) throw Error("box corners have different dimensions");
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
        if (!(lo[i] <= hi[i])) throw Error("box has lo > hi in dimension " + std::to_string(i));
    }
}

int Box::widest_dim() const {
    int best = 0;
    for (int i = 1; i < dim(); ++i) {
        if (hi[i] - lo[i] > hi[best] - lo[best]) best = i;
    }
    return best;
}

bool Box::contains(const Vec& x) const {
    for (int i = 0; i < dim(); ++i) {
        if (x[i] < lo[i] || x[i] > hi[i]) return false;
    }
    return true;
}

bool Box::contains(const Box& other) const {
    for (int i = 0; i < dim(); ++i) {
        if (other.lo[i] < lo[i] || other.hi[i] > hi[i]) return false;
    }
    return true;
}

bool Box::intersects(const Box& other) const {
    for (int i = 0; i < dim(); ++i) {
        if (other.hi[i] < lo[i] || other.lo[i] > hi[i]) return false;
    }
    return true;
}

std::pair<Box, Box> Box::bisect(int d) const {
    const double m = 0.5 * (lo[d] + hi[d]);
    Box left = *this;
    Box right = *this;
    left.hi[d] = m;
    right.lo[d] = m;
    return {std::move(left), std::move(right)};
}

bool operator==(const Box& a, const Box& b) {
    return a.lo.size() == b.lo.size() && a.lo == b.lo && a.hi == b.hi;
}

Box box_of(const std::vector<Interval>& sides) {
    Vec lo(static_cast<Eigen::Index>(sides.size()));
    Vec hi(static_cast<Eigen::Index>(sides.size()));
    for (std::size_t i = 0; i < sides.size(); ++i) {
        lo[static_cast<Eigen::Index>(i)] = sides[i].lo;
        hi[static_cast<Eigen::Index>(i)] = sides[i].hi;
    }
    return {lo, hi};
}

Box expand(const Box& q, const Vec& c) {
    if ((c.array() < 0.0).any()) throw Error("expansion margin must be non-negative");
    return {q.lo - c, q.hi + c};
}

std::optional<Box> reduce(const Box& q, const Vec& c) {
    if ((c.array() < 0.0).any()) throw Error("reduction margin must be non-negative");
    Vec lo = q.lo + c;
    Vec hi = q.hi - c;
    for (Eigen::Index i = 0; i < lo.size(); ++i) {
        if (lo[i] > hi[i]) return std::nullopt;
    }
    return Box(lo, hi);
}

}  // namespace gpimdp
