#pragma once

#include <cstddef>
#include <optional>

#include "gpimdp/box.hpp"
#include "gpimdp/gp.hpp"

namespace gpimdp {

/// Slack used to keep bound arithmetic one-sided under floating point:
/// norm bounds are inflated by it (relative), probabilities deflated (absolute).
inline constexpr double kBoundSlack = 1e-12;

/// Constants of the certified learning-error bound for one output dimension.
struct RkhsConstants {
    double B = 1.0;        ///< RKHS norm upper bound
    double Gamma = 1.0;    ///< information gain upper bound
    double R = 0.01;       ///< sub-Gaussian constant of the noise
    double sigma_v = 1.0;  ///< regression sigma_v, sigma_v^2 = 1 + 2/d

    void validate() const;
};

struct ErrorBoundInput {
    double f_sup = 0.0;                ///< sup_x |f_i(x)| over the working set
    std::optional<double> lipschitz;   ///< L_f, used when f_sup is derived
    double x_sup = 0.0;                ///< sup_x |x_i| over the working set
    double diam = 0.0;                 ///< diameter of the working set
    double kappa_inf = 0.0;            ///< inf of the kernel over the working set squared
    double kappa_sup = 1.0;            ///< sup_x kappa(x, x)
};

/// sup|f_i| <= sup|x_i| + L diam(X).
double lipschitz_f_sup(double x_sup, double lipschitz, double diam);

/// Fills kernel-dependent fields of an ErrorBoundInput for a box working set.
ErrorBoundInput bound_input_for(const SqExpKernel& kernel, const Box& domain, int dim);

/// B = f_sup / sqrt(kappa_inf), rounded up. When `lipschitz` is set the
/// numerator is the Lipschitz recipe instead of f_sup.
double rkhs_norm_bound(const ErrorBoundInput& in);

/// Gamma = d log(1 + kappa_sup / sigma_v^2).
double info_gain_bound(std::size_t d, double sigma_v, double kappa_sup);

/// beta(delta) = (R / sigma_v) (B + R sqrt(2 (Gamma + 1 + log 1/delta))).
double beta(double delta, const RkhsConstants& c);

/// Certified lower bound on Pr(e <= epsilon) for a region whose posterior
/// standard deviation is bounded by `sigma_bar`. Inverts beta in closed form
/// and clamps delta to [0, 1]. Infinite epsilon yields 1.
double error_prob(double epsilon, double sigma_bar, const RkhsConstants& c);

}  // namespace gpimdp
