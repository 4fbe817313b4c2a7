#include <doctest.h>

#include <fstream>
#include <sstream>

#include "gpimdp/pipeline.hpp"

using namespace gpimdp;
namespace fs = std::filesystem;

namespace {

/// Fresh scratch directory removed on destruction.
struct Scratch {
    fs::path dir;
    explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("gpimdp_test_" + name)) {
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }
    Scratch(const Scratch&) = delete;
    Scratch& operator=(const Scratch&) = delete;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunConfig small_config(const fs::path& out) {
    RunConfig cfg = default_config();
    cfg.dataset.samples = 100;
    cfg.grid.delta = 0.5;
    cfg.kernel = SqExpKernel(1.25, 1.0);
    cfg.rkhs.R = 0.01;
    cfg.seed = 7;
    cfg.out = out;
    return cfg;
}

RunConfig from_file(const std::string& name) { return load_config(fs::path(GPIMDP_SOURCE_DIR) / "configs" / name); }

}  // namespace

TEST_CASE("shipped configs load and validate") {
    for (const char* name : {"linear_a.json", "linear_b.json", "switched.json", "nonlinear.json"}) {
        CAPTURE(name);
        const RunConfig cfg = from_file(name);
        CHECK_NOTHROW(cfg.validate());
        CHECK(cfg.kernel.length_scale == 1.25);
        CHECK(config_from_json(to_json(cfg)).formula == cfg.formula);
    }
    const RunConfig a = from_file("linear_a.json");
    CHECK(a.dataset.samples == 500);
    CHECK(a.grid.delta == 0.25);
    CHECK(a.grid.regions.size() == 2);
}

TEST_CASE("config errors") {
    nlohmann::json j = to_json(default_config());
    j["grid"]["delta"] = 0.0;
    CHECK_THROWS(config_from_json(j).validate());
    j = to_json(default_config());
    j["gird"] = 1;
    CHECK_THROWS_WITH(config_from_json(j), doctest::Contains("gird"));
    j = to_json(default_config());
    j["formula"] = "P>=0.5 [ F Z ]";
    CHECK_THROWS_WITH(config_from_json(j).validate(), doctest::Contains("Z"));
    j = to_json(default_config());
    j["epsilon"] = "sometimes";
    CHECK_THROWS(config_from_json(j));
    CHECK_THROWS(load_config("/nonexistent/config.json"));
}

TEST_CASE("stages name the producer of a missing artifact") {
    Scratch s("missing");
    const RunConfig cfg = small_config(s.dir);
    CHECK_THROWS_WITH(abstract(cfg), doctest::Contains("regress"));
    CHECK_THROWS_WITH(verify(cfg), doctest::Contains("abstract"));
    try {
        abstract(cfg);
    } catch (const StageError& e) {
        CHECK(e.stage() == "abstract");
    }
}

TEST_CASE("same config and seed give byte-identical results") {
    Scratch a("det_a");
    Scratch b("det_b");
    const RunResult ra = run(small_config(a.dir));
    const RunResult rb = run(small_config(b.dir));
    CHECK(ra.p_bar == rb.p_bar);
    for (const char* f : {artifact::result, artifact::imdp, artifact::plot, artifact::posteriors, artifact::dataset}) {
        CAPTURE(f);
        CHECK(slurp(a.dir / f) == slurp(b.dir / f));
    }
}

TEST_CASE("stages resume from artifacts and reuse enclosures") {
    Scratch s("resume");
    RunConfig cfg = small_config(s.dir);
    const RunResult first = run(cfg);
    CHECK(first.cache_misses == 64);
    CHECK(first.cache_hits == 0);
    CHECK(first.check.count(Verdict::Yes) > 0);
    CHECK(first.check.count(Verdict::No) > 0);
    CHECK(first.p_bar >= 0.0);
    CHECK(first.p_bar <= 1.0);

    cfg.formula = "P>=0.95 [ G X ]";
    const RunResult second = run(cfg);
    CHECK(second.cache_hits == 64);
    CHECK(second.cache_misses == 0);

    const RunResult resumed = verify(cfg);
    CHECK(resumed.p_bar == second.p_bar);
    const AbstractOutput again = abstract(cfg);
    CHECK(again.cache_hits == 64);

    cfg.grid.delta = 1.0;
    cfg.grid.regions.clear();
    const AbstractOutput coarse = abstract(cfg);
    CHECK(coarse.cache_misses == 16);
}

TEST_CASE("manifest records every constant behind a bound") {
    Scratch s("manifest");
    run(small_config(s.dir));
    const auto m = nlohmann::json::parse(slurp(s.dir / artifact::manifest));
    const auto& abs = m.at("abstract");
    REQUIRE(abs.at("constants").size() == 2);
    for (const auto& c : abs.at("constants")) {
        for (const char* key : {"B", "Gamma", "R", "sigma_v"}) {
            CAPTURE(key);
            CHECK(c.at(key).is_number());
        }
        CHECK(c.at("R") == 0.01);
    }
    CHECK(abs.at("bnb").at("T") == 8);
    CHECK(abs.at("grid").at("delta") == 0.5);
    CHECK(abs.at("epsilon") == "optimal");
    CHECK(m.at("run").at("timings").contains("verification"));
    CHECK(m.at("regress").contains("dataset_hash"));
}

TEST_CASE("plot data has one row per cell") {
    Scratch s("plot");
    run(small_config(s.dir));
    std::istringstream in(slurp(s.dir / artifact::plot));
    std::string line;
    std::getline(in, line);
    CHECK(line == "id,lo1,lo2,hi1,hi2,p_lo,p_hi,verdict");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 64);
}

TEST_CASE("finer grids do not widen the mean interval") {
    RunConfig cfg = from_file("linear_b.json");
    Scratch s("sweep");
    cfg.out = s.dir;
    std::vector<double> p_bar;
    for (double delta : {0.5, 0.25, 0.125}) {
        cfg.grid.delta = delta;
        p_bar.push_back(run(cfg).p_bar);
    }
    MESSAGE("p_bar over the sweep: " << p_bar[0] << " " << p_bar[1] << " " << p_bar[2]);
    CHECK(p_bar[1] <= p_bar[0] + 0.02);
    CHECK(p_bar[2] <= p_bar[1] + 0.02);
}

TEST_CASE("simulation and audit on the learned linear system") {
    Scratch s("audit");
    RunConfig cfg = small_config(s.dir);
    cfg.simulation.trajectories = 500;
    cfg.simulation.audit_cells = 8;
    run(cfg);
    const Estimate e = simulate(cfg, (Vec(2) << 1.9, 1.9).finished(), "constant");
    CHECK(e.p == 1.0);
    CHECK_THROWS(simulate(cfg, Vec::Zero(2), "zigzag"));
    const AuditReport report = audit(cfg);
    CHECK(report.entries.size() == 24);
    CHECK(report.violations() == 0);
    CHECK(fs::exists(s.dir / artifact::audit));
}
