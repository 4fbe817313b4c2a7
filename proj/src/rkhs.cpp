#include "gpimdp/rkhs.hpp"

#include <cmath>
#include <limits>

namespace gpimdp {

void RkhsConstants::validate() const {
    if (!(B > 0.0) || !(Gamma > 0.0) || !(R > 0.0) || !(sigma_v > 0.0)) {
        throw Error("RKHS constants B, Gamma, R and sigma_v must all be positive");
    }
}

double lipschitz_f_sup(double x_sup, double lipschitz, double diam) {
    if (lipschitz < 0.0) throw Error("Lipschitz constant must be non-negative");
    return x_sup + lipschitz * diam;
}

ErrorBoundInput bound_input_for(const SqExpKernel& kernel, const Box& domain, int dim) {
    ErrorBoundInput in;
    in.x_sup = std::max(std::abs(domain.lo[dim]), std::abs(domain.hi[dim]));
    in.diam = domain.diameter();
    // The SE kernel decreases with distance, so its infimum over X x X sits at
    // the two farthest corners of the box.
    in.kappa_inf = kernel.from_sq_dist(in.diam * in.diam);
    in.kappa_sup = kernel.prior_variance();
    return in;
}

double rkhs_norm_bound(const ErrorBoundInput& in) {
    if (!(in.kappa_inf > 0.0)) {
        throw Error("kernel infimum over the working set is not positive; the RKHS norm bound does not apply");
    }
    const double numerator = in.lipschitz ? lipschitz_f_sup(in.x_sup, *in.lipschitz, in.diam) : in.f_sup;
    if (!(numerator >= 0.0) || !std::isfinite(numerator)) throw Error("sup |f| must be finite and non-negative");
    return numerator / std::sqrt(in.kappa_inf) * (1.0 + kBoundSlack);
}

double info_gain_bound(std::size_t d, double sigma_v, double kappa_sup) {
    if (d == 0) throw Error("information gain bound needs d >= 1");
    if (!(sigma_v > 0.0)) throw Error("sigma_v must be positive");
    return static_cast<double>(d) * std::log1p(kappa_sup / (sigma_v * sigma_v)) * (1.0 + kBoundSlack);
}

double beta(double delta, const RkhsConstants& c) {
    if (!(delta > 0.0 && delta <= 1.0)) throw Error("delta must lie in (0, 1]");
    return (c.R / c.sigma_v) * (c.B + c.R * std::sqrt(2.0 * (c.Gamma + 1.0 + std::log(1.0 / delta))));
}

double error_prob(double epsilon, double sigma_bar, const RkhsConstants& c) {
    if (!(epsilon >= 0.0) || !(sigma_bar >= 0.0)) throw Error("epsilon and sigma_bar must be non-negative");
    if (sigma_bar == 0.0 || std::isinf(epsilon)) return 1.0;
    const double t = (epsilon * c.sigma_v / (c.R * sigma_bar) - c.B) / c.R;
    const double floor_t = std::sqrt(2.0 * (c.Gamma + 1.0));
    if (!(t > floor_t)) return 0.0;
    const double delta = std::exp(c.Gamma + 1.0 - 0.5 * t * t);
    if (delta == 0.0) return 1.0;
    return std::clamp(1.0 - std::min(delta, 1.0) - kBoundSlack, 0.0, 1.0);
}

}  // namespace gpimdp
