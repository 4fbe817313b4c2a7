#pragma once

#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpimdp/data.hpp"
#include "gpimdp/types.hpp"

namespace gpimdp {

/// Squared-exponential kernel sf^2 * exp(-|x - x'|^2 / (2 l^2)).
struct SqExpKernel {
    double length_scale = 0.8062257748298549;  // sqrt(0.65)
    double scale_factor = 1.0;

    SqExpKernel() = default;
    SqExpKernel(double ell, double sf);

    [[nodiscard]] double operator()(const Vec& a, const Vec& b) const { return from_sq_dist((a - b).squaredNorm()); }
    [[nodiscard]] double from_sq_dist(double r2) const {
        return scale_factor * scale_factor * std::exp(-r2 / (2.0 * length_scale * length_scale));
    }
    /// kappa(x, x), constant for a stationary kernel.
    [[nodiscard]] double prior_variance() const { return scale_factor * scale_factor; }

    friend bool operator==(const SqExpKernel&, const SqExpKernel&) = default;
};

/// Factorization of K + sigma_v^2 I for one set of training inputs. Shared by
/// every output dimension trained on the same inputs; immutable after build.
class GramFactor {
public:
    GramFactor(Mat inputs, SqExpKernel kernel, double sigma_v_sq);

    [[nodiscard]] const Mat& inputs() const { return inputs_; }
    [[nodiscard]] const SqExpKernel& kernel() const { return kernel_; }
    [[nodiscard]] double sigma_v_sq() const { return sigma_v_sq_; }
    [[nodiscard]] int size() const { return static_cast<int>(inputs_.rows()); }
    [[nodiscard]] int dim() const { return static_cast<int>(inputs_.cols()); }

    /// Row-major copy of the inputs for tight inner loops.
    [[nodiscard]] const std::vector<double>& packed_inputs() const { return packed_; }

    /// k(X, x).
    [[nodiscard]] Vec cross(const Vec& x) const;
    /// (K + sigma_v^2 I)^{-1} b.
    [[nodiscard]] Vec solve(const Vec& b) const;
    [[nodiscard]] Mat solve(const Mat& b) const;
    /// k^T (K + sigma_v^2 I)^{-1} k for a cross-covariance vector k.
    [[nodiscard]] double quad_form(const Vec& k) const;
    /// Explicit (K + sigma_v^2 I)^{-1}, computed once on first use.
    [[nodiscard]] const Mat& inverse() const;

private:
    Mat inputs_;
    SqExpKernel kernel_;
    double sigma_v_sq_;
    std::vector<double> packed_;
    Eigen::LLT<Mat> llt_;
    mutable std::once_flag inverse_once_;
    mutable Mat inverse_;
};

/// Exact GP posterior for one (action, output dimension) pair.
class GpPosterior {
public:
    GpPosterior(std::shared_ptr<const GramFactor> factor, Vec targets, ActionId action, int dim);
    /// Rebuilds from an archived weight vector instead of re-solving.
    GpPosterior(std::shared_ptr<const GramFactor> factor, Vec targets, Vec alpha, ActionId action, int dim);

    [[nodiscard]] double mean(const Vec& x) const;
    /// Posterior variance, clamped to [0, kappa(x,x)]. Throws on values below -1e-9.
    [[nodiscard]] double variance(const Vec& x) const;
    [[nodiscard]] double stddev(const Vec& x) const { return std::sqrt(variance(x)); }

    [[nodiscard]] const GramFactor& factor() const { return *factor_; }
    [[nodiscard]] const std::shared_ptr<const GramFactor>& shared_factor() const { return factor_; }
    [[nodiscard]] const SqExpKernel& kernel() const { return factor_->kernel(); }
    [[nodiscard]] const Vec& alpha() const { return alpha_; }
    /// RKHS norm of the mean function, sqrt(alpha^T K alpha).
    [[nodiscard]] double mean_rkhs_norm() const { return mean_norm_; }
    [[nodiscard]] const Vec& targets() const { return targets_; }
    [[nodiscard]] ActionId action() const { return action_; }
    [[nodiscard]] int dim() const { return dim_; }

private:
    std::shared_ptr<const GramFactor> factor_;
    Vec targets_;
    Vec alpha_;
    double mean_norm_ = 0.0;
    ActionId action_;
    int dim_;
};

/// sigma_v^2 = 1 + 2/d, the regression parameter the certified error bound requires.
double certified_sigma_v_sq(std::size_t d);

GpPosterior fit(const Dataset& data, ActionId action, int dim, const SqExpKernel& kernel, double sigma_v_sq);

/// Posteriors indexed by (action, output dimension).
class PosteriorTable {
public:
    PosteriorTable() = default;
    PosteriorTable(std::vector<std::string> actions, int n, std::vector<GpPosterior> posteriors);

    [[nodiscard]] const GpPosterior& at(ActionId a, int dim) const;
    [[nodiscard]] int num_actions() const { return static_cast<int>(actions_.size()); }
    [[nodiscard]] int dim() const { return n_; }
    [[nodiscard]] const std::vector<std::string>& actions() const { return actions_; }
    [[nodiscard]] std::size_t size() const { return posteriors_.size(); }
    /// Number of training points used for action `a`.
    [[nodiscard]] std::size_t samples_for(ActionId a) const { return static_cast<std::size_t>(at(a, 0).factor().size()); }

private:
    std::vector<std::string> actions_;
    int n_ = 0;
    std::vector<GpPosterior> posteriors_;  // action-major
};

/// One independent fit per (action, dim). Dimensions of one action share a
/// single Gram factorization. `sigma_v_sq <= 0` selects 1 + 2/d per action.
PosteriorTable fit_all(const Dataset& data, const SqExpKernel& kernel, double sigma_v_sq = 0.0);

nlohmann::json to_json(const PosteriorTable& table);
PosteriorTable posterior_table_from_json(const nlohmann::json& j);

}  // namespace gpimdp
