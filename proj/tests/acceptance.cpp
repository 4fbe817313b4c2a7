// Acceptance run: every criterion at its stated size and tolerance, one
// PASS/FAIL line each. Exit status is the number of failures.

#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <optional>
#include <sstream>

#include "gen.hpp"
#include "gpimdp/pipeline.hpp"
#include "oracles.hpp"

using namespace gpimdp;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> body;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

const fs::path kScratch = fs::temp_directory_path() / "gpimdp_acceptance";

RunConfig shipped(const std::string& name, const std::string& out) {
    RunConfig cfg = load_config(fs::path(GPIMDP_SOURCE_DIR) / "configs" / (name + ".json"));
    cfg.out = kScratch / out;
    fs::remove_all(cfg.out);
    return cfg;
}

std::vector<double> stdvec(const Vec& v) { return {v.data(), v.data() + v.size()}; }

Vec vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

// ---------------------------------------------------------------------------

Outcome gp_fixture() {
    const std::vector<double> xs = {-1.0, 0.25, 1.5};
    const std::vector<double> ys = {0.3, -0.8, 1.1};
    const SqExpKernel k(0.9, 1.0);
    const double s = certified_sigma_v_sq(3);
    Dataset d(1, {"a"});
    for (std::size_t i = 0; i < 3; ++i) d.add({Vec::Constant(1, xs[i]), 0, Vec::Constant(1, ys[i])});
    const GpPosterior p = fit(d, 0, 0, k, s);
    double dm = 0.0, dv = 0.0;
    for (int i = 0; i < 50; ++i) {
        const double q = -3.0 + 6.0 * i / 49.0;
        const auto o = oracle::gp_predict({{xs[0]}, {xs[1]}, {xs[2]}}, ys, 0.9, 1.0, s, {q});
        dm = std::max(dm, std::abs(p.mean(Vec::Constant(1, q)) - o.mean));
        dv = std::max(dv, std::abs(p.variance(Vec::Constant(1, q)) - o.variance));
    }
    return {dm <= 1e-10 && dv <= 1e-10, fmt("max |d mean| %.2e, max |d var| %.2e over 50 queries", dm, dv)};
}

Outcome adversary() {
    Rng rng(2);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const TransitionRow row = gen::grid_row(rng, gen::integer(rng, 1, 5));
        std::vector<double> values(row.size());
        for (double& v : values) v = rng.uniform();
        std::vector<oracle::Entry> e;
        for (const auto& t : row) e.push_back({t.lo, t.hi});
        const auto [lo, hi] = oracle::vertex_extremes(e, values);
        worst = std::max({worst, std::abs(min_expectation(row, values) - lo), std::abs(max_expectation(row, values) - hi)});
    }
    return {worst <= 1e-9, fmt("100 rows, max deviation from vertex enumeration %.2e", worst)};
}

Outcome mdp_degeneration() {
    Rng rng(3);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        const int n = gen::integer(rng, 2, 10);
        const int actions = gen::integer(rng, 1, 3);
        std::vector<std::string> names;
        for (int a = 0; a < actions; ++a) names.push_back("a" + std::to_string(a));
        Imdp m(n, names);
        m.declare_atom("goal");
        m.declare_atom("safe");
        oracle::Mdp mdp;
        mdp.p.assign(static_cast<std::size_t>(n), {});
        std::vector<bool> left(static_cast<std::size_t>(n)), right(static_cast<std::size_t>(n));
        for (StateId s = 0; s < n; ++s) {
            const double r = rng.uniform();
            right[static_cast<std::size_t>(s)] = r < 0.25;
            left[static_cast<std::size_t>(s)] = r < 0.85;
            m.set_labels(s, r < 0.25 ? std::set<std::string>{"goal"} : r < 0.85 ? std::set<std::string>{"safe"} : std::set<std::string>{});
            for (ActionId a = 0; a < actions; ++a) {
                const auto p = gen::distribution(rng, n);
                mdp.p[static_cast<std::size_t>(s)].push_back(p);
                TransitionRow row;
                for (StateId t = 0; t < n; ++t) {
                    const double pt = p[static_cast<std::size_t>(t)];
                    if (pt > 0.0) row.push_back({t, pt, pt});
                }
                m.set_row(s, a, row);
            }
        }
        for (int k : {1, 5, 25}) {
            const auto got = check_path(m, *make_until(make_atom("safe"), make_atom("goal"), k), left, right).intervals;
            const auto [lo, hi] = oracle::mdp_until(mdp, left, right, k);
            for (std::size_t s = 0; s < got.size(); ++s) {
                worst = std::max({worst, std::abs(got[s].lo - lo[s]), std::abs(got[s].hi - hi[s])});
            }
        }
    }
    return {worst <= 1e-9, fmt("20 point-interval models, max deviation from plain value iteration %.2e", worst)};
}

Outcome bnb_soundness() {
    Rng rng(4);
    const BnbConfig cfg;
    const BnbConfig deeper{cfg.max_depth + 1, cfg.tol};
    int escapes = 0, unnested = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const Dataset data = gen::smooth_dataset(rng, 2, gen::integer(rng, 5, 80), 0.1);
        const SqExpKernel k(rng.uniform(0.4, 2.0), rng.uniform(0.5, 1.5));
        const GpPosterior p = fit(data, 0, 0, k, certified_sigma_v_sq(data.size()));
        const Box q = gen::random_box(rng, 2, -2.5, 2.5, 1.5);
        const Interval m = mean_range(p, q, cfg);
        const double sig = variance_sup(p, q, cfg);
        const auto mr = oracle::grid_range(stdvec(q.lo), stdvec(q.hi), 100, [&](const auto& x) { return p.mean(vec(x)); });
        const auto sr = oracle::grid_range(stdvec(q.lo), stdvec(q.hi), 100, [&](const auto& x) { return p.stddev(vec(x)); });
        escapes += mr.first < m.lo || mr.second > m.hi || sr.second > sig;
        const Interval m2 = mean_range(p, q, deeper);
        unnested += !m.contains(m2) || variance_sup(p, q, deeper) > sig;
    }
    return {escapes == 0 && unnested == 0,
            fmt("100 pairs on a 100x100 grid: %d escapes, %d depth %d enclosures not nested in depth %d", escapes, unnested,
                deeper.max_depth, cfg.max_depth)};
}

Outcome bound_inequalities() {
    Rng rng(5);
    int gain_fail = 0, norm_fail = 0, trip_fail = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const double ell = rng.uniform(0.2, 3.0), sf = rng.uniform(0.5, 2.0);
        const std::size_t d = 50;
        const double sigma_v = std::sqrt(certified_sigma_v_sq(d));
        std::vector<std::vector<double>> xs;
        for (std::size_t i = 0; i < d; ++i) xs.push_back(stdvec(gen::uniform_vec(rng, 2, -2, 2)));
        oracle::Matrix g(d, std::vector<double>(d));
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = 0; j < d; ++j) g[i][j] = oracle::se_kernel(xs[i], xs[j], ell, sf) / (sigma_v * sigma_v) + (i == j);
        }
        gain_fail += info_gain_bound(d, sigma_v, sf * sf) < 0.5 * oracle::log_det(g);
    }
    const Box x(Vec::Constant(2, -2.0), Vec::Constant(2, 2.0));
    for (int c = 0; c < 20; ++c) {
        const SqExpKernel k(rng.uniform(0.5, 2.0), 1.0);
        const Vec x0 = gen::uniform_vec(rng, 2, -2, 2);
        ErrorBoundInput in = bound_input_for(k, x, 0);
        in.f_sup = k(x0, x0);
        norm_fail += rkhs_norm_bound(in) < std::sqrt(k(x0, x0));
    }
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        RkhsConstants c;
        c.B = rng.uniform(0.1, 50.0);
        c.Gamma = rng.uniform(0.1, 500.0);
        c.R = rng.uniform(0.001, 1.0);
        c.sigma_v = rng.uniform(0.5, 2.0);
        const double delta = rng.uniform(1e-6, 1.0), s = rng.uniform(1e-3, 2.0);
        const double err = std::abs(error_prob(beta(delta, c) * s, s, c) - (1.0 - delta));
        worst = std::max(worst, err);
        trip_fail += err > 1e-10;
    }
    return {gain_fail == 0 && norm_fail == 0 && trip_fail == 0,
            fmt("gain bound failures %d/100, norm bound failures %d/20, round trip max error %.2e", gain_fail, norm_fail, worst)};
}

/// linear_a runs shared by several criteria, keyed by sample count.
struct LinearA {
    RunConfig cfg;
    AbstractOutput abs;
    RunResult result;
    double seconds = 0.0;
};

std::map<int, LinearA>& linear_a_runs() {
    static std::map<int, LinearA> runs;
    return runs;
}

const LinearA& linear_a(int samples) {
    auto& runs = linear_a_runs();
    if (auto it = runs.find(samples); it != runs.end()) return it->second;
    LinearA r;
    r.cfg = shipped("linear_a", "linear_a_" + std::to_string(samples));
    r.cfg.dataset.samples = samples;
    r.cfg.threads = 8;
    const auto t0 = std::chrono::steady_clock::now();
    const RegressOutput reg = regress(r.cfg);
    r.abs = abstract(r.cfg, reg.table, reg.data_hash, reg.data.noise().r_subgaussian);
    r.result = verify(r.cfg, r.abs.imdp);
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return runs.emplace(samples, std::move(r)).first->second;
}

Outcome rows_well_formed() {
    const LinearA& r = linear_a(500);
    const Imdp& m = r.abs.imdp;
    int bad = 0, rows = 0;
    double excess = 0.0;
    for (StateId s = 0; s < m.num_states(); ++s) {
        for (ActionId a = 0; a < m.num_actions(); ++a) {
            double lo = 0.0, hi = 0.0;
            for (const auto& t : m.row(s, a)) {
                bad += !(0.0 <= t.lo && t.lo <= t.hi && t.hi <= 1.0);
                lo += t.lo;
                hi += t.hi;
            }
            excess = std::max({excess, lo - 1.0, 1.0 - hi});
            ++rows;
        }
    }
    const bool pass = bad == 0 && excess <= 1e-12 && r.seconds < 300.0;
    return {pass, fmt("%d rows, %d bad entries, worst mass violation %.2e, %.1f s with 8 workers", rows, bad, std::max(excess, 0.0),
                      r.seconds)};
}

Outcome epsilon_dominance() {
    bool pass = true;
    std::ostringstream detail;
    for (double delta : {0.5, 0.25}) {
        RunConfig cfg = shipped("linear_b", "linear_b_" + std::to_string(static_cast<int>(delta * 100)));
        cfg.grid.delta = delta;
        const RunResult opt = run(cfg);
        detail << opt.check.verdicts.size() << " states: optimal " << opt.p_bar;
        for (double u : {0.05, 0.1, 0.2, 0.45}) {
            cfg.epsilon.kind = EpsilonPolicy::Kind::Uniform;
            cfg.epsilon.value = u;
            const double p = run(cfg).p_bar;
            pass = pass && opt.p_bar <= p + 1e-6;
            detail << ", " << u << " -> " << p;
        }
        detail << "; ";
        cfg.epsilon = EpsilonPolicy{};
    }
    return {pass, detail.str()};
}

Outcome data_efficiency() {
    const double f100 = linear_a(100).result.determinate_fraction;
    const double f500 = linear_a(500).result.determinate_fraction;
    const double f2000 = linear_a(2000).result.determinate_fraction;
    return {f2000 >= f100, fmt("determinate fraction 100: %.4f, 500: %.4f, 2000: %.4f", f100, f500, f2000)};
}

Outcome audit_soundness() {
    RunConfig cfg = linear_a(500).cfg;
    cfg.simulation.trajectories = 10000;
    cfg.simulation.audit_cells = 20;
    // The audit reads the verified intervals of the 500-sample run from disk.
    const AuditReport rep = audit(cfg);
    std::size_t strategies = 0;
    for (const auto& e : rep.entries) strategies += e.cell == rep.entries.front().cell;
    return {rep.violations() == 0 && rep.entries.size() == 60,
            fmt("%zu cells x %zu strategies x 10000 trajectories, %zu violations", rep.entries.size() / std::max<std::size_t>(strategies, 1),
                strategies, rep.violations())};
}

Outcome parser_corpus() {
    const std::vector<std::string> corpus = {
        "P>=0.95 [ !O U D ]",        "P>=0.95 [ G X ]",           "P>=0.95 [ G<=1 X ]",
        "P>=0.95 [ G<=3 safe ]",     "P<=0.05 [ F O ]",           "P<0.2 [ F<=10 O ]",
        "P>0.5 [ X goal ]",          "P>=0.9 [ true U<=4 goal ]", "true",
        "!a & (b & c)",              "P>=0.5 [ P>0.9 [ X a ] U b ]", "!P<0.1 [ F<=2 (a & !b) ]",
        "P>=1 [ G !(O & X) ]",       "P>=0 [ X X ]",              "P>0.123456789012345 [ a U<=0 b ]",
    };
    int mismatches = 0;
    for (const auto& text : corpus) {
        const StatePtr f = parse_pctl(text);
        mismatches += !(*f == *parse_pctl(to_string(*f)));
    }
    int sugar = 0;
    sugar += !(*parse_pctl("P>=0.5 [ F a ]") == *parse_pctl("P>=0.5 [ true U a ]"));
    sugar += !(*parse_pctl("P>=0.5 [ F<=4 a ]") == *parse_pctl("P>=0.5 [ true U<=4 a ]"));
    sugar += !(*parse_pctl("P>=0.95 [ G<=3 safe ]") == *parse_pctl("P<=0.05 [ true U<=3 !safe ]"));
    sugar += !(*parse_pctl("P>=0.95 [ G X ]") == *parse_pctl("P<=0.05 [ true U !X ]"));

    const Imdp& m = linear_a(500).abs.imdp;
    const CheckResult g = check(m, *parse_pctl("P>=0.95 [ G !O ]"));
    const CheckResult f = check(m, *parse_pctl("P<=0.05 [ F O ]"));
    int differ = 0;
    for (std::size_t s = 0; s < g.intervals.size(); ++s) {
        differ += g.intervals[s].lo != f.intervals[s].lo || g.intervals[s].hi != f.intervals[s].hi || g.verdicts[s] != f.verdicts[s];
    }
    return {mismatches == 0 && sugar == 0 && differ == 0,
            fmt("%zu formulas, %d round-trip mismatches, %d sugar mismatches, %d states differing between G and F forms",
                corpus.size(), mismatches, sugar, differ)};
}

Outcome switched_smoke() {
    RunConfig cfg = shipped("switched", "switched");
    const RegressOutput reg = regress(cfg);
    const AbstractOutput abs = abstract(cfg, reg.table, reg.data_hash, reg.data.noise().r_subgaussian);
    const RunResult res = verify(cfg, abs.imdp);
    const Box& x = cfg.grid.domain;
    std::size_t yes = 0, outside = 0;
    for (StateId s = 0; s < abs.part.num_cells(); ++s) {
        if (res.check.verdicts[static_cast<std::size_t>(s)] != Verdict::Yes) continue;
        ++yes;
        for (ActionId a = 0; a < abs.imdp.num_actions(); ++a) {
            const auto& img = abs.enclosures.at(s, a).image;
            for (int i = 0; i < x.dim(); ++i) outside += img[static_cast<std::size_t>(i)].lo < x.lo[i] || img[static_cast<std::size_t>(i)].hi > x.hi[i];
        }
    }
    const bool unsafe_yes = res.check.verdicts.back() == Verdict::Yes;
    return {yes > 0 && outside == 0 && !unsafe_yes && abs.imdp.num_actions() == 2 && reg.table.samples_for(0) == 400 &&
                reg.table.samples_for(1) == 400,
            fmt("%zu yes cells of %d, %zu with an enclosure leaving X", yes, abs.part.num_cells(), outside)};
}

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "gp-fixture", gp_fixture},
        {2, "adversary-optimality", adversary},
        {3, "mdp-degeneration", mdp_degeneration},
        {4, "bnb-soundness", bnb_soundness},
        {5, "bound-inequalities", bound_inequalities},
        {6, "row-well-formedness", rows_well_formed},
        {7, "epsilon-dominance", epsilon_dominance},
        {8, "data-efficiency", data_efficiency},
        {9, "soundness-audit", audit_soundness},
        {10, "pctl-parser", parser_corpus},
        {11, "switched-smoke", switched_smoke},
    };
    fs::create_directories(kScratch);
    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.body();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failures += !o.pass;
        std::printf("%s %2d %-22s %8.2fs  %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, secs, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    fs::remove_all(kScratch);
    return failures;
}
