#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpimdp/box.hpp"
#include "gpimdp/gp.hpp"

namespace gpimdp {

struct BnbConfig {
    int max_depth = 8;   ///< T: maximum number of bisections along any branch
    double tol = 1e-3;   ///< stop once the upper bound is within tol of the best attained value

    void validate() const;
};

/// Result of one maximization: `upper` bounds the supremum, `attained` is a
/// value actually taken by the function inside the box.
struct BnbBound {
    double upper = 0.0;
    double attained = 0.0;
    int nodes = 0;
};

/// Best-first branch and bound for the supremum of a function over a box.
/// `node` returns a (sound upper bound, attained value) pair for a sub-box.
/// Children never report a bound above their parent's, which makes the
/// result non-increasing in max_depth.
BnbBound bnb_maximize(const Box& root, const BnbConfig& cfg,
                      const std::function<std::pair<double, double>(const Box&)>& node);

/// Interval containing the posterior mean over `q`.
Interval mean_range(const GpPosterior& post, const Box& q, const BnbConfig& cfg);

/// Upper bound on sup_{x in q} sigma(x), the posterior standard deviation.
double variance_sup(const GpPosterior& post, const Box& q, const BnbConfig& cfg);

/// Per-dimension mean image and standard-deviation bound for one (q, a).
struct Enclosure {
    std::vector<Interval> image;
    std::vector<double> sigma_sup;

    friend bool operator==(const Enclosure&, const Enclosure&) = default;
};

Enclosure enclose(const PosteriorTable& table, const Box& q, ActionId a, const BnbConfig& cfg);

/// Node-level bounds, exposed for tests.
namespace detail {
/// Sound [lo, hi] for the mean over `q` without branching.
Interval mean_node_bound(const GpPosterior& post, const Box& q);
/// Sound upper bound on sigma over `q` without branching.
double sigma_node_bound(const GramFactor& factor, const Box& q);
/// The quadratic-form part of the sigma bound on its own.
double sigma_quad_form_bound(const GramFactor& factor, const Box& q);
}  // namespace detail

/// Enclosures for every (cell, action), stored with the key of the inputs
/// they were computed from so a stale cache is never reused.
struct EnclosureCache {
    std::string key;
    int num_actions = 0;
    std::vector<Enclosure> entries;  ///< cell-major: index = cell * num_actions + action

    [[nodiscard]] const Enclosure& at(StateId cell, ActionId a) const;
};

nlohmann::json to_json(const EnclosureCache& cache);
EnclosureCache enclosure_cache_from_json(const nlohmann::json& j);

}  // namespace gpimdp
