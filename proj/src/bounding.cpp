#include "gpimdp/bounding.hpp"

#include <cmath>
#include <numbers>
#include <queue>

namespace gpimdp {

namespace {

constexpr double kSqrt3 = std::numbers::sqrt3;

struct MeanNode {
    Interval bound;
    double center = 0.0;
};

struct SigmaNode {
    double upper = 0.0;
    double center = 0.0;
};

/// Squared distance from coordinate interval [lo, hi] to a point, nearest and farthest.
inline void axis_sq_dist(double lo, double hi, double p, double& near, double& far) {
    const double a = lo - p;
    const double b = hi - p;
    const double a2 = a * a;
    const double b2 = b * b;
    near += (a <= 0.0 && b >= 0.0) ? 0.0 : std::min(a2, b2);
    far += std::max(a2, b2);
}

MeanNode mean_node(const GpPosterior& post, const Box& q) {
    const GramFactor& f = post.factor();
    const SqExpKernel& kern = f.kernel();
    const double ell2 = kern.length_scale * kern.length_scale;
    const double sf2 = kern.prior_variance();
    const int d = f.size();
    const int n = f.dim();
    const auto& x = f.packed_inputs();
    const Vec c = q.center();
    const Vec h = 0.5 * q.widths();
    const Vec& alpha = post.alpha();

    double nat_lo = 0.0;
    double nat_hi = 0.0;
    double mu_c = 0.0;
    double abs_sum = 0.0;
    Vec grad = Vec::Zero(n);
    for (int j = 0; j < d; ++j) {
        const double* xj = x.data() + static_cast<std::size_t>(j) * n;
        double d2c = 0.0;
        double near = 0.0;
        double far = 0.0;
        for (int i = 0; i < n; ++i) {
            const double diff = c[i] - xj[i];
            d2c += diff * diff;
            axis_sq_dist(q.lo[i], q.hi[i], xj[i], near, far);
        }
        const double a = alpha[j];
        const double kc = kern.from_sq_dist(d2c);
        const double klo = kern.from_sq_dist(far);
        const double khi = kern.from_sq_dist(near);
        if (a >= 0.0) {
            nat_lo += a * klo;
            nat_hi += a * khi;
        } else {
            nat_lo += a * khi;
            nat_hi += a * klo;
        }
        mu_c += a * kc;
        abs_sum += std::abs(a);
        const double w = a * kc / ell2;
        for (int i = 0; i < n; ++i) grad[i] += w * (xj[i] - c[i]);
    }

    // Second-order Taylor form around the center. Along a unit direction u,
    // |d^2 mu / du^2| <= ||mu||_H ||d^2 k_x / du^2||_H = ||mu||_H sqrt(3) sf / l^2.
    const double linear = grad.cwiseAbs().dot(h);
    const double curvature = 0.5 * post.mean_rkhs_norm() * (1.0 + 1e-9) * kSqrt3 * kern.scale_factor / ell2 * h.squaredNorm();
    const double slack = 1e-12 * abs_sum * sf2 + 1e-300;

    MeanNode out;
    out.center = mu_c;
    out.bound.lo = std::max(nat_lo, mu_c - linear - curvature) - slack;
    out.bound.hi = std::min(nat_hi, mu_c + linear + curvature) + slack;
    out.bound.lo = std::min(out.bound.lo, mu_c);
    out.bound.hi = std::max(out.bound.hi, mu_c);
    return out;
}

double quad_form_sigma(const GramFactor& f, const Box& q) {
    const SqExpKernel& kern = f.kernel();
    const double sf2 = kern.prior_variance();
    const int d = f.size();
    const int n = f.dim();
    const auto& x = f.packed_inputs();
    Vec klo(d);
    Vec khi(d);
    for (int j = 0; j < d; ++j) {
        const double* xj = x.data() + static_cast<std::size_t>(j) * n;
        double near = 0.0;
        double far = 0.0;
        for (int i = 0; i < n; ++i) axis_sq_dist(q.lo[i], q.hi[i], xj[i], near, far);
        klo[j] = kern.from_sq_dist(far);
        khi[j] = kern.from_sq_dist(near);
    }
    // Lower bound of k^T M k over k in [klo, khi] (all entries non-negative):
    // each product k_j k_l is taken at the end that minimizes M_jl k_j k_l.
    const Mat& M = f.inverse();
    double qf_lo = 0.0;
    for (int l = 0; l < d; ++l) {
        const double* col = M.data() + static_cast<std::size_t>(l) * d;
        double pos = 0.0;
        double neg = 0.0;
        for (int j = 0; j < d; ++j) {
            const double m = col[j];
            if (m >= 0.0) {
                pos += m * klo[j];
            } else {
                neg += m * khi[j];
            }
        }
        qf_lo += klo[l] * pos + khi[l] * neg;
    }
    const double v = sf2 - qf_lo + 1e-10 * sf2;
    return std::sqrt(std::clamp(v, 0.0, sf2));
}

SigmaNode sigma_node(const GramFactor& f, const Box& q, bool use_quad_form) {
    const SqExpKernel& kern = f.kernel();
    const double ell2 = kern.length_scale * kern.length_scale;
    const double sf = kern.scale_factor;
    const double sf2 = kern.prior_variance();
    const int d = f.size();
    const int n = f.dim();
    const auto& x = f.packed_inputs();
    const Vec c = q.center();
    const Vec h = 0.5 * q.widths();
    const double r2 = h.squaredNorm();

    // Columns: k(c) and its partial derivatives in c.
    Mat D(d, n + 1);
    for (int j = 0; j < d; ++j) {
        const double* xj = x.data() + static_cast<std::size_t>(j) * n;
        double d2c = 0.0;
        for (int i = 0; i < n; ++i) {
            const double diff = c[i] - xj[i];
            d2c += diff * diff;
        }
        const double kc = kern.from_sq_dist(d2c);
        D(j, 0) = kc;
        for (int i = 0; i < n; ++i) D(j, i + 1) = -kc * (c[i] - xj[i]) / ell2;
    }
    const Mat W = f.solve(D);
    const Mat G = D.transpose() * W;

    const double slack_v = 1e-10 * sf2;
    const double v_c = std::max(sf2 - G(0, 0), 0.0);
    SigmaNode out;
    out.center = std::sqrt(v_c);
    const double sigma_c_up = std::sqrt(v_c + slack_v);

    // sigma is 1-Lipschitz in the kernel metric.
    const double dk = sf * std::sqrt(2.0 * -std::expm1(-r2 / (2.0 * ell2)));
    const double sigma_lip = sigma_c_up + dk;
    const double sigma_cap = std::min(sf, sigma_lip);

    // Taylor form for v = sigma^2. Along a unit direction u,
    //   v'' = 2 Var(f_u) + 2 Cov(f, f_uu)   (posterior moments),
    // with std(f_u) bounded by its value at c plus the prior distance of the
    // derivative process, and |Cov(f, f_uu)| <= sigma * sqrt(3) sf / l^2.
    Mat grad_cov = Mat::Identity(n, n) * (sf2 / ell2) - G.bottomRightCorner(n, n);
    const double lambda_max = Eigen::SelfAdjointEigenSolver<Mat>(grad_cov, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
    const double sd_cap = sf / kern.length_scale;
    const double s_c = std::sqrt(std::max(lambda_max, 0.0) + slack_v / ell2);
    // The covariance of the derivative process falls monotonically up to a
    // separation of sqrt(3) l, which is where the distance bound saturates.
    const double rho2 = std::min(r2, 3.0 * ell2);
    const double d1 = sd_cap * std::sqrt(2.0 * std::max(0.0, 1.0 - std::exp(-rho2 / (2.0 * ell2)) * (1.0 - rho2 / ell2)));
    const double sd_up = std::min(sd_cap, s_c + d1);
    const double v2 = 2.0 * sd_up * sd_up + 2.0 * kSqrt3 * sf / ell2 * sigma_cap;
    double linear = 0.0;
    for (int i = 0; i < n; ++i) linear += std::abs(2.0 * G(0, i + 1)) * h[i];
    const double v_up = v_c + linear + 0.5 * v2 * r2 + slack_v;
    const double sigma_taylor = std::sqrt(v_up);

    out.upper = std::min({sf, sigma_lip, sigma_taylor});
    if (use_quad_form) out.upper = std::min(out.upper, quad_form_sigma(f, q));
    out.upper = std::max(out.upper, out.center);
    return out;
}

}  // namespace

void BnbConfig::validate() const {
    if (max_depth < 0 || max_depth > 40) throw Error("BNB depth must lie in [0, 40]");
    if (!(tol > 0.0)) throw Error("BNB tolerance must be positive");
}

BnbBound bnb_maximize(const Box& root, const BnbConfig& cfg,
                      const std::function<std::pair<double, double>(const Box&)>& node) {
    cfg.validate();
    struct Node {
        double upper;
        std::uint64_t seq;
        int depth;
        Box box;
    };
    auto worse = [](const Node& a, const Node& b) {
        if (a.upper != b.upper) return a.upper < b.upper;
        return a.seq > b.seq;
    };
    std::priority_queue<Node, std::vector<Node>, decltype(worse)> open(worse);

    BnbBound out;
    std::uint64_t seq = 0;
    auto [ub0, at0] = node(root);
    out.attained = at0;
    out.nodes = 1;
    open.push({std::max(ub0, at0), seq++, 0, root});
    while (true) {
        Node top = open.top();
        if (top.upper - out.attained <= cfg.tol || top.depth >= cfg.max_depth) {
            out.upper = top.upper;
            return out;
        }
        open.pop();
        auto [left, right] = top.box.bisect(top.box.widest_dim());
        for (Box* child : {&left, &right}) {
            auto [ub, at] = node(*child);
            ++out.nodes;
            out.attained = std::max(out.attained, at);
            open.push({std::max(std::min(ub, top.upper), at), seq++, top.depth + 1, std::move(*child)});
        }
    }
}

Interval mean_range(const GpPosterior& post, const Box& q, const BnbConfig& cfg) {
    const BnbBound hi = bnb_maximize(q, cfg, [&](const Box& b) {
        const MeanNode m = mean_node(post, b);
        return std::pair{m.bound.hi, m.center};
    });
    const BnbBound lo = bnb_maximize(q, cfg, [&](const Box& b) {
        const MeanNode m = mean_node(post, b);
        return std::pair{-m.bound.lo, -m.center};
    });
    return {-lo.upper, hi.upper};
}

namespace {

double sigma_sup(const GramFactor& f, const Box& q, const BnbConfig& cfg) {
    // The quadratic-form bound only pays off for small training sets.
    const bool use_qf = f.size() <= 64;
    return bnb_maximize(q, cfg, [&](const Box& b) {
               const SigmaNode s = sigma_node(f, b, use_qf);
               return std::pair{s.upper, s.center};
           }).upper;
}

}  // namespace

double variance_sup(const GpPosterior& post, const Box& q, const BnbConfig& cfg) {
    return sigma_sup(post.factor(), q, cfg);
}

Enclosure enclose(const PosteriorTable& table, const Box& q, ActionId a, const BnbConfig& cfg) {
    Enclosure e;
    const int n = table.dim();
    e.image.reserve(static_cast<std::size_t>(n));
    e.sigma_sup.reserve(static_cast<std::size_t>(n));
    const auto& shared = table.at(a, 0).shared_factor();
    double shared_sigma = -1.0;
    for (int i = 0; i < n; ++i) {
        const GpPosterior& post = table.at(a, i);
        e.image.push_back(mean_range(post, q, cfg));
        // sigma depends on inputs, kernel and sigma_v only, so dimensions that
        // share a factorization share the bound.
        if (post.shared_factor() == shared) {
            if (shared_sigma < 0.0) shared_sigma = sigma_sup(*shared, q, cfg);
            e.sigma_sup.push_back(shared_sigma);
        } else {
            e.sigma_sup.push_back(sigma_sup(post.factor(), q, cfg));
        }
    }
    return e;
}

namespace detail {

Interval mean_node_bound(const GpPosterior& post, const Box& q) { return mean_node(post, q).bound; }

double sigma_node_bound(const GramFactor& factor, const Box& q) { return sigma_node(factor, q, true).upper; }

double sigma_quad_form_bound(const GramFactor& factor, const Box& q) { return quad_form_sigma(factor, q); }

}  // namespace detail

const Enclosure& EnclosureCache::at(StateId cell, ActionId a) const {
    const auto idx = static_cast<std::size_t>(cell) * static_cast<std::size_t>(num_actions) + static_cast<std::size_t>(a);
    if (cell < 0 || a < 0 || a >= num_actions || idx >= entries.size()) throw Error("enclosure index out of range");
    return entries[idx];
}

nlohmann::json to_json(const EnclosureCache& cache) {
    nlohmann::json j;
    j["format"] = "gpimdp-enclosures";
    j["version"] = 1;
    j["key"] = cache.key;
    j["num_actions"] = cache.num_actions;
    j["entries"] = nlohmann::json::array();
    for (const auto& e : cache.entries) {
        nlohmann::json je;
        for (const auto& iv : e.image) je["image"].push_back({iv.lo, iv.hi});
        je["sigma"] = e.sigma_sup;
        j["entries"].push_back(std::move(je));
    }
    return j;
}

EnclosureCache enclosure_cache_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "gpimdp-enclosures") throw Error("not an enclosure cache");
    if (j.value("version", 0) != 1) throw Error("unsupported enclosure cache version");
    EnclosureCache cache;
    cache.key = j.at("key").get<std::string>();
    cache.num_actions = j.at("num_actions").get<int>();
    for (const auto& je : j.at("entries")) {
        Enclosure e;
        for (const auto& iv : je.at("image")) e.image.emplace_back(iv.at(0).get<double>(), iv.at(1).get<double>());
        e.sigma_sup = je.at("sigma").get<std::vector<double>>();
        cache.entries.push_back(std::move(e));
    }
    return cache;
}

}  // namespace gpimdp
