// Command-line front end: regress, abstract, verify, simulate, audit, run.

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "gpimdp/pipeline.hpp"

namespace {

using namespace gpimdp;

struct Overrides {
    std::string config;
    std::optional<int> threads;
    std::optional<std::uint64_t> seed;
    std::optional<double> delta;
    std::optional<int> depth;
    std::optional<std::string> formula;
    std::optional<std::string> out;
    std::optional<int> samples;
    std::optional<double> noise_std;
    std::optional<std::string> epsilon;
    std::optional<int> trajectories;
    std::optional<int> cells;
};

void add_common(CLI::App* app, Overrides& o) {
    app->add_option("--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
    app->add_option("--threads", o.threads, "worker threads for the enclosure and transition loops");
    app->add_option("--seed", o.seed, "seed for data generation and simulation");
    app->add_option("--delta", o.delta, "grid cell side length");
    app->add_option("--depth", o.depth, "branch-and-bound depth T");
    app->add_option("--formula", o.formula, "PCTL formula");
    app->add_option("--out", o.out, "output directory for artifacts");
    app->add_option("--samples", o.samples, "synthetic samples per action");
    app->add_option("--noise-std", o.noise_std, "synthetic measurement noise standard deviation");
    app->add_option("--epsilon", o.epsilon, "epsilon policy: optimal, facet or a uniform value");
}

RunConfig resolve(const Overrides& o) {
    RunConfig cfg = o.config.empty() ? default_config() : load_config(o.config);
    if (o.threads) cfg.threads = *o.threads;
    if (o.seed) cfg.seed = *o.seed;
    if (o.delta) cfg.grid.delta = *o.delta;
    if (o.depth) cfg.bnb.max_depth = *o.depth;
    if (o.formula) cfg.formula = *o.formula;
    if (o.out) cfg.out = *o.out;
    if (o.samples) cfg.dataset.samples = *o.samples;
    if (o.noise_std) cfg.dataset.noise_std = *o.noise_std;
    if (o.epsilon) cfg.epsilon = EpsilonPolicy::parse(*o.epsilon);
    if (o.trajectories) cfg.simulation.trajectories = *o.trajectories;
    if (o.cells) cfg.simulation.audit_cells = *o.cells;
    return cfg;
}

void print_result(const RunResult& r, bool with_timings) {
    std::printf("formula       %s\n", r.formula.c_str());
    std::printf("states        yes %zu  no %zu  maybe %zu\n", r.check.count(Verdict::Yes), r.check.count(Verdict::No),
                r.check.count(Verdict::Maybe));
    std::printf("p_bar         %.6f\n", r.p_bar);
    std::printf("determinate   %.4f\n", r.determinate_fraction);
    if (!r.check.converged) std::printf("warning: value iteration hit the iteration cap\n");
    if (with_timings) {
        std::printf("timings [s]   regression %.3f  images %.3f  transitions %.3f  verification %.3f\n", r.timings.regression,
                    r.timings.images, r.timings.transitions, r.timings.verification);
        std::printf("enclosures    cache hits %zu  misses %zu\n", r.cache_hits, r.cache_misses);
    }
}

Vec parse_point(const std::string& text) {
    std::vector<double> xs;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            xs.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw Error("bad coordinate '" + item + "' in --x0");
        }
    }
    Vec x(static_cast<Eigen::Index>(xs.size()));
    for (std::size_t i = 0; i < xs.size(); ++i) x[static_cast<Eigen::Index>(i)] = xs[i];
    return x;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Data-driven verification of unknown systems via GP regression and interval MDP abstraction"};
    app.require_subcommand(1);

    Overrides o;
    auto* regress_cmd = app.add_subcommand("regress", "generate or load data and fit the GP posteriors");
    auto* abstract_cmd = app.add_subcommand("abstract", "build the IMDP abstraction from the posterior archive");
    auto* verify_cmd = app.add_subcommand("verify", "check a PCTL formula on the exported IMDP");
    auto* run_cmd = app.add_subcommand("run", "regress, abstract and verify");
    auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo estimate on the known system");
    auto* audit_cmd = app.add_subcommand("audit", "compare verified intervals against simulation");
    for (auto* cmd : {regress_cmd, abstract_cmd, verify_cmd, run_cmd, simulate_cmd, audit_cmd}) add_common(cmd, o);

    std::string x0_text;
    std::string strategy = "constant";
    simulate_cmd->add_option("--x0", x0_text, "initial state, comma separated")->required();
    simulate_cmd->add_option("--strategy", strategy, "constant, constant:<a>, round-robin or threshold");
    for (auto* cmd : {simulate_cmd, audit_cmd}) cmd->add_option("--trajectories", o.trajectories, "trajectories per estimate");
    audit_cmd->add_option("--cells", o.cells, "number of sampled cells");

    CLI11_PARSE(app, argc, argv);

    try {
        const RunConfig cfg = resolve(o);
        if (regress_cmd->parsed()) {
            const RegressOutput r = regress(cfg);
            std::printf("fitted %zu posteriors on %zu samples in %.3f s\n", r.table.size(), r.data.size(), r.seconds);
        } else if (abstract_cmd->parsed()) {
            const AbstractOutput a = abstract(cfg);
            std::printf("%d states, %zu transitions; enclosure cache hits %zu misses %zu; images %.3f s, transitions %.3f s\n",
                        a.imdp.num_states(), a.transitions, a.cache_hits, a.cache_misses, a.images_seconds,
                        a.transitions_seconds);
        } else if (verify_cmd->parsed()) {
            print_result(verify(cfg), false);
        } else if (run_cmd->parsed()) {
            print_result(run(cfg), true);
        } else if (simulate_cmd->parsed()) {
            const Estimate e = simulate(cfg, parse_point(x0_text), strategy);
            std::printf("estimate %.6f  (%d/%d)  95%% CI [%.6f, %.6f]\n", e.p, e.successes, e.trials, e.ci_lo, e.ci_hi);
        } else if (audit_cmd->parsed()) {
            const AuditReport report = audit(cfg);
            std::printf("%zu checks, %zu violations\n", report.entries.size(), report.violations());
            return report.violations() == 0 ? 0 : 3;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
