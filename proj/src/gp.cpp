#include "gpimdp/gp.hpp"

#include <sstream>

namespace gpimdp {

SqExpKernel::SqExpKernel(double ell, double sf) : length_scale(ell), scale_factor(sf) {
    if (!(ell > 0.0)) throw Error("kernel length scale must be positive");
    if (!(sf > 0.0)) throw Error("kernel scale factor must be positive");
}

GramFactor::GramFactor(Mat inputs, SqExpKernel kernel, double sigma_v_sq)
    : inputs_(std::move(inputs)), kernel_(kernel), sigma_v_sq_(sigma_v_sq) {
    if (inputs_.rows() < 1) throw Error("GP needs at least one training point");
    if (!(sigma_v_sq_ > 0.0)) throw Error("regression noise parameter sigma_v^2 must be positive");

    const auto d = inputs_.rows();
    const auto n = inputs_.cols();
    packed_.resize(static_cast<std::size_t>(d * n));
    for (Eigen::Index r = 0; r < d; ++r) {
        for (Eigen::Index c = 0; c < n; ++c) packed_[static_cast<std::size_t>(r * n + c)] = inputs_(r, c);
    }

    Mat gram(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        gram(i, i) = kernel_.prior_variance() + sigma_v_sq_;
        for (Eigen::Index j = 0; j < i; ++j) {
            const double k = kernel_.from_sq_dist((inputs_.row(i) - inputs_.row(j)).squaredNorm());
            gram(i, j) = k;
            gram(j, i) = k;
        }
    }
    llt_.compute(gram);
    if (llt_.info() != Eigen::Success) {
        std::ostringstream msg;
        const Vec diag = gram.diagonal();
        msg << "Gram matrix is numerically not positive definite (d=" << d
            << ", sigma_v^2=" << sigma_v_sq_ << ", diagonal range [" << diag.minCoeff() << ", "
            << diag.maxCoeff() << "]); duplicate inputs need a larger sigma_v^2";
        throw Error(msg.str());
    }
    const Vec ldiag = llt_.matrixL().toDenseMatrix().diagonal();
    const double rcond = std::pow(ldiag.minCoeff() / ldiag.maxCoeff(), 2.0);
    if (!(rcond > 1e-15)) {
        std::ostringstream msg;
        msg << "Gram matrix is ill conditioned (reciprocal condition estimate " << rcond << ")";
        throw Error(msg.str());
    }
}

Vec GramFactor::cross(const Vec& x) const {
    const auto d = inputs_.rows();
    const auto n = inputs_.cols();
    Vec k(d);
    for (Eigen::Index r = 0; r < d; ++r) {
        double r2 = 0.0;
        const double* row = packed_.data() + r * n;
        for (Eigen::Index c = 0; c < n; ++c) {
            const double diff = x[c] - row[c];
            r2 += diff * diff;
        }
        k[r] = kernel_.from_sq_dist(r2);
    }
    return k;
}

Vec GramFactor::solve(const Vec& b) const { return llt_.solve(b); }

Mat GramFactor::solve(const Mat& b) const { return llt_.solve(b); }

double GramFactor::quad_form(const Vec& k) const { return llt_.matrixL().solve(k).squaredNorm(); }

const Mat& GramFactor::inverse() const {
    std::call_once(inverse_once_, [this] {
        inverse_ = llt_.solve(Mat::Identity(inputs_.rows(), inputs_.rows()));
        inverse_ = 0.5 * (inverse_ + inverse_.transpose()).eval();
    });
    return inverse_;
}

namespace {

double mean_norm(const GramFactor& f, const Vec& alpha) {
    const auto& x = f.packed_inputs();
    const int d = f.size();
    const int n = f.dim();
    double acc = 0.0;
    for (int j = 0; j < d; ++j) {
        double row = 0.0;
        for (int l = 0; l < j; ++l) {
            double r2 = 0.0;
            for (int c = 0; c < n; ++c) {
                const double diff = x[static_cast<std::size_t>(j * n + c)] - x[static_cast<std::size_t>(l * n + c)];
                r2 += diff * diff;
            }
            row += alpha[l] * f.kernel().from_sq_dist(r2);
        }
        acc += alpha[j] * (2.0 * row + alpha[j] * f.kernel().prior_variance());
    }
    return std::sqrt(std::max(acc, 0.0));
}

}  // namespace

GpPosterior::GpPosterior(std::shared_ptr<const GramFactor> factor, Vec targets, ActionId action, int dim)
    : factor_(std::move(factor)), targets_(std::move(targets)), action_(action), dim_(dim) {
    if (targets_.size() != factor_->size()) throw Error("target count does not match training inputs");
    alpha_ = factor_->solve(targets_);
    mean_norm_ = mean_norm(*factor_, alpha_);
}

GpPosterior::GpPosterior(std::shared_ptr<const GramFactor> factor, Vec targets, Vec alpha, ActionId action, int dim)
    : factor_(std::move(factor)), targets_(std::move(targets)), alpha_(std::move(alpha)), action_(action), dim_(dim) {
    if (targets_.size() != factor_->size() || alpha_.size() != factor_->size()) {
        throw Error("archived posterior has inconsistent sizes");
    }
    mean_norm_ = mean_norm(*factor_, alpha_);
}

double GpPosterior::mean(const Vec& x) const { return factor_->cross(x).dot(alpha_); }

double GpPosterior::variance(const Vec& x) const {
    const double prior = kernel().prior_variance();
    const double v = prior - factor_->quad_form(factor_->cross(x));
    if (v < -1e-9) {
        std::ostringstream msg;
        msg << "posterior variance " << v << " is negative beyond round-off";
        throw Error(msg.str());
    }
    return std::clamp(v, 0.0, prior);
}

double certified_sigma_v_sq(std::size_t d) {
    if (d == 0) throw Error("dataset size must be positive");
    return 1.0 + 2.0 / static_cast<double>(d);
}

GpPosterior fit(const Dataset& data, ActionId action, int dim, const SqExpKernel& kernel, double sigma_v_sq) {
    if (action < 0 || action >= static_cast<ActionId>(data.actions().size())) throw Error("action id out of range");
    if (dim < 0 || dim >= data.dim()) throw Error("output dimension out of range");
    if (data.count_for(action) == 0) {
        throw Error("no samples for action '" + data.actions()[static_cast<std::size_t>(action)] + "'");
    }
    auto factor = std::make_shared<const GramFactor>(data.inputs_for(action), kernel, sigma_v_sq);
    return {std::move(factor), data.targets_for(action, dim), action, dim};
}

PosteriorTable::PosteriorTable(std::vector<std::string> actions, int n, std::vector<GpPosterior> posteriors)
    : actions_(std::move(actions)), n_(n), posteriors_(std::move(posteriors)) {
    if (posteriors_.size() != actions_.size() * static_cast<std::size_t>(n_)) {
        throw Error("posterior table must hold one posterior per (action, dimension)");
    }
}

const GpPosterior& PosteriorTable::at(ActionId a, int dim) const {
    if (a < 0 || a >= num_actions() || dim < 0 || dim >= n_) throw Error("posterior index out of range");
    return posteriors_[static_cast<std::size_t>(a * n_ + dim)];
}

PosteriorTable fit_all(const Dataset& data, const SqExpKernel& kernel, double sigma_v_sq) {
    std::vector<GpPosterior> posteriors;
    for (ActionId a = 0; a < static_cast<ActionId>(data.actions().size()); ++a) {
        const std::size_t d = data.count_for(a);
        if (d == 0) throw Error("no samples for action '" + data.actions()[static_cast<std::size_t>(a)] + "'");
        const double s2 = sigma_v_sq > 0.0 ? sigma_v_sq : certified_sigma_v_sq(d);
        auto factor = std::make_shared<const GramFactor>(data.inputs_for(a), kernel, s2);
        for (int i = 0; i < data.dim(); ++i) posteriors.emplace_back(factor, data.targets_for(a, i), a, i);
    }
    return {data.actions(), data.dim(), std::move(posteriors)};
}

namespace {

std::vector<double> to_std(const Vec& v) { return {v.data(), v.data() + v.size()}; }

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

}  // namespace

nlohmann::json to_json(const PosteriorTable& table) {
    nlohmann::json j;
    j["format"] = "gpimdp-posteriors";
    j["version"] = 1;
    j["dim"] = table.dim();
    j["actions"] = nlohmann::json::array();
    for (ActionId a = 0; a < table.num_actions(); ++a) {
        const auto& f = table.at(a, 0).factor();
        nlohmann::json ja;
        ja["name"] = table.actions()[static_cast<std::size_t>(a)];
        ja["length_scale"] = f.kernel().length_scale;
        ja["scale_factor"] = f.kernel().scale_factor;
        ja["sigma_v_sq"] = f.sigma_v_sq();
        nlohmann::json inputs = nlohmann::json::array();
        for (Eigen::Index r = 0; r < f.inputs().rows(); ++r) inputs.push_back(to_std(f.inputs().row(r).transpose()));
        ja["inputs"] = std::move(inputs);
        for (int i = 0; i < table.dim(); ++i) {
            const auto& p = table.at(a, i);
            ja["outputs"].push_back({{"targets", to_std(p.targets())}, {"alpha", to_std(p.alpha())}});
        }
        j["actions"].push_back(std::move(ja));
    }
    return j;
}

PosteriorTable posterior_table_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "gpimdp-posteriors") throw Error("not a posterior archive");
    const int n = j.at("dim").get<int>();
    std::vector<std::string> names;
    std::vector<GpPosterior> posteriors;
    ActionId a = 0;
    for (const auto& ja : j.at("actions")) {
        names.push_back(ja.at("name").get<std::string>());
        const auto rows = ja.at("inputs").get<std::vector<std::vector<double>>>();
        Mat X(static_cast<Eigen::Index>(rows.size()), n);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != static_cast<std::size_t>(n)) throw Error("archived input has wrong dimension");
            X.row(static_cast<Eigen::Index>(r)) = to_vec(rows[r]).transpose();
        }
        SqExpKernel kernel(ja.at("length_scale").get<double>(), ja.at("scale_factor").get<double>());
        auto factor = std::make_shared<const GramFactor>(std::move(X), kernel, ja.at("sigma_v_sq").get<double>());
        const auto& outs = ja.at("outputs");
        if (outs.size() != static_cast<std::size_t>(n)) throw Error("archive needs one output entry per dimension");
        for (int i = 0; i < n; ++i) {
            const auto& o = outs.at(static_cast<std::size_t>(i));
            posteriors.emplace_back(factor, to_vec(o.at("targets").get<std::vector<double>>()),
                                    to_vec(o.at("alpha").get<std::vector<double>>()), a, i);
        }
        ++a;
    }
    return {std::move(names), n, std::move(posteriors)};
}

}  // namespace gpimdp
