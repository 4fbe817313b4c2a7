#pragma once

#include <functional>
#include <string>
#include <vector>

#include "gpimdp/bounding.hpp"
#include "gpimdp/box.hpp"
#include "gpimdp/imdp.hpp"
#include "gpimdp/rkhs.hpp"

namespace gpimdp {

struct LabeledRegion {
    std::string label;
    Box box;
};

struct GridSpec {
    Box domain;
    double delta = 0.25;
    /// Label carried by every cell of the domain (empty for none).
    std::string domain_label;
    std::vector<LabeledRegion> regions;
};

/// Uniform grid over the domain plus the unsafe state, whose id is cells.size().
struct Partition {
    GridSpec spec;
    std::vector<int> counts;   ///< cells per dimension
    std::vector<Region> cells;
    Region unsafe;

    [[nodiscard]] int num_cells() const { return static_cast<int>(cells.size()); }
    [[nodiscard]] int num_states() const { return num_cells() + 1; }
    [[nodiscard]] StateId unsafe_id() const { return num_cells(); }
    /// Cell containing x (upper faces belong to the next cell), or the unsafe id outside the domain.
    [[nodiscard]] StateId locate(const Vec& x) const;
    [[nodiscard]] const std::set<std::string>& labels(StateId s) const;
    /// Every label the grid can assign.
    [[nodiscard]] std::set<std::string> alphabet() const;
};

/// Cells are numbered with dimension 0 varying fastest.
Partition partition(const GridSpec& spec);

/// Per-dimension minimum distance between the endpoints of the image and of q'.
Vec optimal_epsilon(const std::vector<Interval>& image, const Box& qprime);

/// Certified Pr(e_i <= eps) for dimension i of one (q, a) pair.
using ErrorProbFn = std::function<double(int dim, double eps)>;

/// Pointwise factor applied to margins so that strict containment survives
/// rounding when the image sits at exactly eps from q'.
inline constexpr double kEpsilonShrink = 1.0 - 1e-9;

/// Epsilon giving the tightest interval for this transition. Inside q' the
/// margins are the endpoint distances. When the image is separated from q'
/// the single separating dimension with the largest certified probability is
/// used and every other dimension is left unconstrained.
Vec tightest_epsilon(const std::vector<Interval>& image, const Box& qprime, const ErrorProbFn& prob);

struct TransitionInterval {
    double lo = 0.0;
    double hi = 1.0;
};

/// Theorem-style bounds: lo = prod p_i if the image lies strictly inside the
/// reduction of q' by eps, else 0; hi = 1 - prod p_i if the image misses the
/// expansion of q' by eps, else 1.
TransitionInterval transition_bounds(const std::vector<Interval>& image, const Box& qprime, const ErrorProbFn& prob,
                                     const Vec& eps);

struct EpsilonPolicy {
    enum class Kind { Optimal, Facet, Uniform };
    Kind kind = Kind::Optimal;
    double value = 0.0;  ///< for Uniform

    [[nodiscard]] std::string describe() const;
    static EpsilonPolicy parse(const std::string& text);
};

/// Learning-error constants for one (action, output dimension).
struct ErrorModel {
    std::vector<RkhsConstants> constants;  ///< action-major, index a * n + i
    int n = 0;

    [[nodiscard]] const RkhsConstants& at(ActionId a, int i) const;
};

struct AbstractionStats {
    std::size_t transitions = 0;  ///< stored sparse entries
    double seconds = 0.0;
};

/// Assembles the IMDP from per-(cell, action) enclosures. Rows are stored
/// sparsely (entries with hi > 0 plus the unsafe entry); the unsafe state is
/// absorbing. Throws if any row is not well formed.
Imdp build_imdp(const Partition& part, const EnclosureCache& enclosures, const std::vector<std::string>& actions,
                const ErrorModel& errors, const EpsilonPolicy& policy, int threads, AbstractionStats* stats = nullptr);

}  // namespace gpimdp
