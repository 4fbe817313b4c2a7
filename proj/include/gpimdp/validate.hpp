#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpimdp/abstraction.hpp"
#include "gpimdp/checker.hpp"
#include "gpimdp/data.hpp"
#include "gpimdp/pctl.hpp"

namespace gpimdp {

struct SimConfig {
    int trajectories = 10000;
    int horizon_cap = 500;       ///< steps simulated for unbounded until
    std::uint64_t seed = 0;
    double noise_stddev = 0.01;  ///< measurement noise, y = x + v
    int threads = 1;
};

/// Feedback rule from the measurement history y(0..k) to the action at step k.
class Strategy {
public:
    virtual ~Strategy() = default;
    [[nodiscard]] virtual ActionId choose(const std::vector<Vec>& measurements) const = 0;
    [[nodiscard]] virtual std::string name() const = 0;
};

std::unique_ptr<Strategy> constant_strategy(ActionId a);
std::unique_ptr<Strategy> round_robin_strategy(int num_actions);
/// Action `below` while y[dim] < threshold, `above` otherwise.
std::unique_ptr<Strategy> threshold_strategy(int dim, double threshold, ActionId below, ActionId above);

/// The three built-in strategies used by the audit for a system with the given actions.
std::vector<std::unique_ptr<Strategy>> builtin_strategies(int num_actions);

struct Estimate {
    int successes = 0;
    int trials = 0;
    double p = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 1.0;
};

/// Wilson score interval at 95%.
Estimate wilson(int successes, int trials);

/// Monte Carlo estimate of Pr(path from x0 satisfies psi). Operands are
/// evaluated on the labels of the grid cell holding the true state; leaving
/// the domain is absorbing in the unsafe state.
Estimate estimate(const KnownSystem& sys, const Vec& x0, const PathFormula& psi, const Partition& grid, const Strategy& strat,
                  const SimConfig& cfg);

/// Truth value of a label-only state formula on one state of the grid.
bool holds(const StateFormula& phi, const std::set<std::string>& labels);

struct AuditEntry {
    StateId cell = 0;
    std::string strategy;
    Vec x;
    SatInterval interval;
    Estimate estimate;
    bool pass = true;
};

struct AuditReport {
    std::vector<AuditEntry> entries;

    [[nodiscard]] std::size_t violations() const;
};

/// For `sample_cells` random cells, draws one initial state per cell and, for
/// every strategy, checks that the Monte Carlo confidence interval meets the
/// verified interval of that cell.
AuditReport soundness_audit(const std::vector<SatInterval>& intervals, const KnownSystem& sys, const Partition& grid,
                            const PathFormula& psi, const std::vector<std::unique_ptr<Strategy>>& strategies,
                            const SimConfig& cfg, int sample_cells);

nlohmann::json to_json(const AuditReport& report);

}  // namespace gpimdp
