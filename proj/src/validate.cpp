#include "gpimdp/validate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>

#include "gpimdp/parallel.hpp"
#include "gpimdp/rng.hpp"

namespace gpimdp {

namespace {

class ConstantStrategy final : public Strategy {
public:
    explicit ConstantStrategy(ActionId a) : a_(a) {}
    [[nodiscard]] ActionId choose(const std::vector<Vec>&) const override { return a_; }
    [[nodiscard]] std::string name() const override { return "constant:" + std::to_string(a_); }

private:
    ActionId a_;
};

class RoundRobinStrategy final : public Strategy {
public:
    explicit RoundRobinStrategy(int k) : k_(k) {}
    [[nodiscard]] ActionId choose(const std::vector<Vec>& ys) const override {
        return static_cast<ActionId>((ys.size() - 1) % static_cast<std::size_t>(k_));
    }
    [[nodiscard]] std::string name() const override { return "round-robin"; }

private:
    int k_;
};

class ThresholdStrategy final : public Strategy {
public:
    ThresholdStrategy(int dim, double t, ActionId below, ActionId above) : dim_(dim), t_(t), below_(below), above_(above) {}
    [[nodiscard]] ActionId choose(const std::vector<Vec>& ys) const override {
        return ys.back()[dim_] < t_ ? below_ : above_;
    }
    [[nodiscard]] std::string name() const override { return "threshold:x" + std::to_string(dim_ + 1); }

private:
    int dim_;
    double t_;
    ActionId below_;
    ActionId above_;
};

}  // namespace

std::unique_ptr<Strategy> constant_strategy(ActionId a) { return std::make_unique<ConstantStrategy>(a); }

std::unique_ptr<Strategy> round_robin_strategy(int num_actions) {
    if (num_actions < 1) throw Error("round-robin strategy needs at least one action");
    return std::make_unique<RoundRobinStrategy>(num_actions);
}

std::unique_ptr<Strategy> threshold_strategy(int dim, double threshold, ActionId below, ActionId above) {
    return std::make_unique<ThresholdStrategy>(dim, threshold, below, above);
}

std::vector<std::unique_ptr<Strategy>> builtin_strategies(int num_actions) {
    std::vector<std::unique_ptr<Strategy>> out;
    out.push_back(constant_strategy(0));
    out.push_back(round_robin_strategy(num_actions));
    out.push_back(threshold_strategy(0, 0.0, num_actions > 1 ? 1 : 0, 0));
    return out;
}

Estimate wilson(int successes, int trials) {
    if (trials < 1) throw Error("estimate needs at least one trajectory");
    constexpr double z = 1.959963984540054;
    const double n = trials;
    const double p = successes / n;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / denom;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
    return {successes, trials, p, std::max(0.0, center - half), std::min(1.0, center + half)};
}

bool holds(const StateFormula& phi, const std::set<std::string>& labels) {
    switch (phi.kind) {
        case StateFormula::Kind::True: return true;
        case StateFormula::Kind::Atom: return labels.count(phi.atom) > 0;
        case StateFormula::Kind::Not: return !holds(*phi.left, labels);
        case StateFormula::Kind::And: return holds(*phi.left, labels) && holds(*phi.right, labels);
        case StateFormula::Kind::Prob: throw Error("nested probabilistic operators cannot be simulated");
    }
    return false;
}

namespace {

bool simulate_one(const KnownSystem& sys, const Vec& x0, const PathFormula& psi, const Partition& grid, const Strategy& strat,
                  const SimConfig& cfg, Rng& rng) {
    const StateId unsafe = grid.unsafe_id();
    std::vector<Vec> ys;
    Vec x = x0;
    StateId s = grid.locate(x);
    auto measure = [&](const Vec& state) {
        Vec y = state;
        if (cfg.noise_stddev > 0.0) {
            for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += rng.normal(0.0, cfg.noise_stddev);
        }
        ys.push_back(std::move(y));
    };
    // Once outside the domain the path stays in the unsafe state.
    auto advance = [&] {
        if (s == unsafe) return;
        measure(x);
        const ActionId a = strat.choose(ys);
        x = sys.step(x, a);
        s = grid.locate(x);
    };

    if (psi.kind == PathFormula::Kind::Next) {
        advance();
        return holds(*psi.right, grid.labels(s));
    }
    const int steps = psi.horizon ? *psi.horizon : cfg.horizon_cap;
    for (int k = 0;; ++k) {
        const auto& labels = grid.labels(s);
        if (holds(*psi.right, labels)) return true;
        if (!holds(*psi.left, labels)) return false;
        if (s == unsafe || k == steps) return false;
        advance();
    }
}

}  // namespace

Estimate estimate(const KnownSystem& sys, const Vec& x0, const PathFormula& psi, const Partition& grid, const Strategy& strat,
                  const SimConfig& cfg) {
    if (cfg.trajectories < 1) throw Error("trajectory count must be at least 1");
    if (x0.size() != sys.n) throw Error("initial state has the wrong dimension");
    std::atomic<int> successes{0};
    parallel_for(static_cast<std::size_t>(cfg.trajectories), cfg.threads, [&](std::size_t i) {
        Rng rng(derive_seed(cfg.seed, i));
        if (simulate_one(sys, x0, psi, grid, strat, cfg, rng)) successes.fetch_add(1, std::memory_order_relaxed);
    });
    return wilson(successes.load(), cfg.trajectories);
}

std::size_t AuditReport::violations() const {
    return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [](const AuditEntry& e) { return !e.pass; }));
}

AuditReport soundness_audit(const std::vector<SatInterval>& intervals, const KnownSystem& sys, const Partition& grid,
                            const PathFormula& psi, const std::vector<std::unique_ptr<Strategy>>& strategies,
                            const SimConfig& cfg, int sample_cells) {
    if (intervals.size() != static_cast<std::size_t>(grid.num_states())) throw Error("result does not match the grid");
    Rng rng(derive_seed(cfg.seed, 0xA0D17ULL));
    std::vector<StateId> cells(static_cast<std::size_t>(grid.num_cells()));
    std::iota(cells.begin(), cells.end(), 0);
    const auto take = static_cast<std::size_t>(std::clamp(sample_cells, 0, grid.num_cells()));
    // Partial Fisher-Yates with our own generator keeps the choice portable.
    for (std::size_t i = 0; i < take; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.uniform() * static_cast<double>(cells.size() - i));
        std::swap(cells[i], cells[std::min(j, cells.size() - 1)]);
    }
    cells.resize(take);

    AuditReport report;
    std::uint64_t run = 1;
    for (StateId q : cells) {
        const Box& box = grid.cells[static_cast<std::size_t>(q)].box;
        Vec x(box.dim());
        for (int i = 0; i < box.dim(); ++i) x[i] = rng.uniform(box.lo[i], box.hi[i]);
        for (const auto& strat : strategies) {
            SimConfig sub = cfg;
            sub.seed = derive_seed(cfg.seed, run++);
            AuditEntry e;
            e.cell = q;
            e.strategy = strat->name();
            e.x = x;
            e.interval = intervals[static_cast<std::size_t>(q)];
            e.estimate = estimate(sys, x, psi, grid, *strat, sub);
            e.pass = e.estimate.ci_hi >= e.interval.lo && e.estimate.ci_lo <= e.interval.hi;
            report.entries.push_back(std::move(e));
        }
    }
    return report;
}

nlohmann::json to_json(const AuditReport& report) {
    nlohmann::json j;
    j["violations"] = report.violations();
    j["entries"] = nlohmann::json::array();
    for (const auto& e : report.entries) {
        j["entries"].push_back({{"cell", e.cell},
                                {"strategy", e.strategy},
                                {"x", std::vector<double>(e.x.data(), e.x.data() + e.x.size())},
                                {"interval", {e.interval.lo, e.interval.hi}},
                                {"estimate", e.estimate.p},
                                {"ci", {e.estimate.ci_lo, e.estimate.ci_hi}},
                                {"trajectories", e.estimate.trials},
                                {"pass", e.pass}});
    }
    return j;
}

}  // namespace gpimdp
