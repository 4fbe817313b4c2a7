#include <doctest.h>

#include <filesystem>

#include "gpimdp/data.hpp"
#include "gpimdp/rng.hpp"

using namespace gpimdp;

namespace {

Vec v2(double a, double b) { return (Vec(2) << a, b).finished(); }

Box square(double lo, double hi) { return {Vec::Constant(2, lo), Vec::Constant(2, hi)}; }

}  // namespace

TEST_CASE("csv row maps directly onto a sample") {
    const Dataset d = parse_dataset("x1,x2,action,y1,y2\n0.5,-0.3,a1,0.17,-0.15\n");
    REQUIRE(d.size() == 1);
    const Sample& s = d.samples()[0];
    CHECK(d.dim() == 2);
    CHECK(s.x == v2(0.5, -0.3));
    CHECK(d.actions()[static_cast<std::size_t>(s.action)] == "a1");
    CHECK(s.y == v2(0.17, -0.15));
}

TEST_CASE("malformed datasets are rejected") {
    CHECK_THROWS_WITH(parse_dataset(""), doctest::Contains("empty dataset"));
    CHECK_THROWS_WITH(parse_dataset("x1,x2,action,y1,y2\n"), doctest::Contains("empty dataset"));
    CHECK_THROWS_WITH(parse_dataset("x1,x2,action,y1,y2\n0,0,a1,0,0\n1,2,3,a1,0\n"), doctest::Contains("row 2"));

    DatasetSchema schema;
    schema.dim = 3;
    CHECK_THROWS_WITH(parse_dataset("x1,x2,action,y1,y2\n0,0,a1,0,0\n", schema), doctest::Contains("dimension mismatch"));

    DatasetSchema actions;
    actions.actions = std::vector<std::string>{"a1"};
    CHECK_THROWS_WITH(parse_dataset("x1,x2,action,y1,y2\n0,0,b,0,0\n", actions), doctest::Contains("unknown action"));
}

TEST_CASE("save then load is bit exact") {
    Rng rng(3);
    const KnownSystem sys = builtin_system("switched");
    const Dataset d = generate_dataset(sys, 50, square(-2, 2), 0.01, 11);
    const auto path = std::filesystem::temp_directory_path() / "gpimdp_roundtrip.csv";
    save_dataset(d, path);
    const Dataset back = load_dataset(path);
    std::filesystem::remove(path);
    REQUIRE(back.size() == d.size());
    CHECK(back.actions() == d.actions());
    for (std::size_t i = 0; i < d.size(); ++i) {
        CHECK(back.samples()[i].x == d.samples()[i].x);
        CHECK(back.samples()[i].y == d.samples()[i].y);
        CHECK(back.samples()[i].action == d.samples()[i].action);
    }
    CHECK(dataset_hash(back) == dataset_hash(d));
}

TEST_CASE("builtin systems follow the printed dynamics") {
    const KnownSystem a = builtin_system("linear_a");
    CHECK(a.step(v2(1, 1), 0) == v2(0.5, 0.5));
    const KnownSystem b = builtin_system("linear_b");
    CHECK(b.step(v2(1, 1), 0) == v2(1.3, 0.5));
    const KnownSystem s = builtin_system("switched");
    CHECK(s.actions.size() == 2);
    CHECK(s.step(v2(1, 0), 1) == v2(0.5, -0.5));
    CHECK(s.step(v2(1, 1), 0) == v2(1.3, 0.5));
    const KnownSystem nl = builtin_system("nonlinear");
    CHECK(nl.step(v2(0, 0), 0) == v2(0, 0));
    CHECK(nl.step(v2(0, -1), 0) == v2(0, -1));
    CHECK_THROWS_WITH(builtin_system("pendulum"), doctest::Contains("unknown system"));
}

TEST_CASE("interval image of the dynamics encloses sampled successors") {
    Rng rng(5);
    for (const char* name : {"linear_a", "linear_b", "switched", "nonlinear"}) {
        const KnownSystem sys = builtin_system(name);
        for (int trial = 0; trial < 50; ++trial) {
            Vec lo(2), hi(2);
            for (int i = 0; i < 2; ++i) {
                lo[i] = rng.uniform(-2.0, 1.5);
                hi[i] = lo[i] + rng.uniform(0.0, 0.5);
            }
            const Box q(lo, hi);
            for (ActionId a = 0; a < static_cast<ActionId>(sys.actions.size()); ++a) {
                const auto img = sys.image(q, a);
                for (int k = 0; k < 20; ++k) {
                    Vec x(2);
                    for (int i = 0; i < 2; ++i) x[i] = rng.uniform(lo[i], hi[i]);
                    const Vec y = sys.step(x, a);
                    CHECK(img[0].contains(y[0]));
                    CHECK(img[1].contains(y[1]));
                }
            }
        }
    }
}

TEST_CASE("generation is deterministic and noise free at zero stddev") {
    const KnownSystem sys = builtin_system("linear_a");
    const Dataset a = generate_dataset(sys, 20, square(-2, 2), 0.0, 7);
    const Dataset b = generate_dataset(sys, 20, square(-2, 2), 0.0, 7);
    CHECK(dataset_hash(a) == dataset_hash(b));
    for (const auto& s : a.samples()) {
        CHECK(s.y == sys.step(s.x, 0));
        CHECK(square(-2, 2).contains(s.x));
    }
    const Dataset c = generate_dataset(sys, 20, square(-2, 2), 0.0, 8);
    CHECK(dataset_hash(a) != dataset_hash(c));
}

TEST_CASE("switched generation draws count samples per action") {
    const Dataset d = generate_dataset(builtin_system("switched"), 30, square(-2, 2), 0.01, 1);
    CHECK(d.count_for(0) == 30);
    CHECK(d.count_for(1) == 30);
}

TEST_CASE("generator noise has the requested standard deviation") {
    const KnownSystem sys = builtin_system("linear_a");
    const Dataset d = generate_dataset(sys, 100000, square(-2, 2), 0.01, 99);
    for (int i = 0; i < 2; ++i) {
        double sum = 0.0, sq = 0.0;
        for (const auto& s : d.samples()) {
            const double r = s.y[i] - sys.step(s.x, 0)[i];
            sum += r;
            sq += r * r;
        }
        const double n = static_cast<double>(d.size());
        const double sd = std::sqrt(sq / n - (sum / n) * (sum / n));
        CHECK(sd == doctest::Approx(0.01).epsilon(0.05));
    }
    CHECK(d.noise().r_subgaussian == 0.01);
}
