#include "gpimdp/pipeline.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gpimdp/parallel.hpp"
#include "gpimdp/rng.hpp"

namespace gpimdp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class Stopwatch {
public:
    [[nodiscard]] double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string number(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return {buf, res.ptr};
}

std::vector<double> to_vector(const Vec& v) { return {v.data(), v.data() + v.size()}; }

Vec to_vec(const std::vector<double>& v) {
    Vec out(static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
    return out;
}

json box_json(const Box& b) { return {{"lo", to_vector(b.lo)}, {"hi", to_vector(b.hi)}}; }

Box box_from(const json& j, const std::string& where) {
    if (!j.is_object() || !j.contains("lo") || !j.contains("hi")) throw Error(where + " needs 'lo' and 'hi'");
    return Box(to_vec(j.at("lo").get<std::vector<double>>()), to_vec(j.at("hi").get<std::vector<double>>()));
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
    if (!j.is_object()) throw Error(where + " must be an object");
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (const char* k : allowed) known = known || key == k;
        if (!known) throw Error("unknown key '" + key + "' in " + where);
    }
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw Error("malformed JSON in " + path.string() + ": " + e.what());
    }
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << text;
    if (!out) throw Error("write failed for " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

/// Loads an artifact that an earlier stage produces.
json upstream(const fs::path& dir, const char* name, const char* producer) {
    const fs::path path = dir / name;
    if (!fs::exists(path)) {
        throw Error(std::string("missing ") + name + " in " + dir.string() + "; run `" + producer + "` first");
    }
    return read_json(path);
}

template <class F>
auto staged(const char* stage, F&& body) {
    try {
        return body();
    } catch (const StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(stage, e.what());
    }
}

void collect_atoms(const StateFormula& f, std::set<std::string>& out);

void collect_atoms(const PathFormula& p, std::set<std::string>& out) {
    if (p.left) collect_atoms(*p.left, out);
    if (p.right) collect_atoms(*p.right, out);
}

void collect_atoms(const StateFormula& f, std::set<std::string>& out) {
    if (f.kind == StateFormula::Kind::Atom) out.insert(f.atom);
    if (f.left) collect_atoms(*f.left, out);
    if (f.right) collect_atoms(*f.right, out);
    if (f.path) collect_atoms(*f.path, out);
}

/// Manifest sections accumulate across separately run stages.
void update_manifest(const fs::path& dir, const std::string& section, json value) {
    const fs::path path = dir / artifact::manifest;
    json m = fs::exists(path) ? read_json(path) : json::object();
    m["tool"] = "gpimdp";
    m[section] = std::move(value);
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    m["updated"] = stamp;
    write_json(path, m);
}

}  // namespace

// ---- configuration ----------------------------------------------------------

RunConfig default_config() {
    RunConfig cfg;
    cfg.grid.domain = Box(Vec::Constant(2, -2.0), Vec::Constant(2, 2.0));
    cfg.grid.delta = 0.25;
    cfg.grid.domain_label = "X";
    cfg.grid.regions = {{"D", Box(Vec::Constant(2, -0.5), Vec::Constant(2, 0.5))},
                        {"O", Box((Vec(2) << 0.5, -1.0).finished(), (Vec(2) << 1.0, -0.5).finished())}};
    return cfg;
}

void RunConfig::validate() const {
    if (dataset.source != "synthetic" && dataset.source != "file") {
        throw Error("dataset.source must be 'synthetic' or 'file'");
    }
    if (dataset.source == "file" && dataset.path.empty()) throw Error("dataset.path is required for a file source");
    if (dataset.source == "synthetic") {
        (void)builtin_system(dataset.system);
        if (dataset.samples < 1) throw Error("dataset.samples must be at least 1");
        if (!(dataset.noise_std >= 0.0)) throw Error("dataset.noise_std must be non-negative");
    }
    if (!(kernel.length_scale > 0.0) || !(kernel.scale_factor > 0.0)) throw Error("kernel parameters must be positive");
    if (rkhs.R && !(*rkhs.R > 0.0)) throw Error("rkhs.R must be positive");
    if (rkhs.lipschitz && !(*rkhs.lipschitz >= 0.0)) throw Error("rkhs.lipschitz must be non-negative");
    if (rkhs.f_sup) {
        if (static_cast<int>(rkhs.f_sup->size()) != grid.domain.dim()) {
            throw Error("rkhs.f_sup needs one value per state dimension");
        }
        for (double v : *rkhs.f_sup) {
            if (!(v >= 0.0) || !std::isfinite(v)) throw Error("rkhs.f_sup values must be finite and non-negative");
        }
    }
    if (!rkhs.f_sup && !rkhs.lipschitz && dataset.source == "file") {
        throw Error("rkhs.f_sup is 'auto' but a file dataset has no known system; give f_sup or lipschitz");
    }
    if (!(grid.delta > 0.0)) throw Error("grid.delta must be positive");
    if (grid.domain.dim() < 1) throw Error("grid.domain must have at least one dimension");
    bnb.validate();
    if (threads < 1) throw Error("threads must be at least 1");
    if (simulation.trajectories < 1) throw Error("simulation.trajectories must be at least 1");
    if (simulation.horizon_cap < 1) throw Error("simulation.horizon_cap must be at least 1");
    if (!(simulation.noise_std >= 0.0)) throw Error("simulation.noise_std must be non-negative");

    const auto phi = parse_pctl(formula);
    std::set<std::string> declared;
    if (!grid.domain_label.empty()) declared.insert(grid.domain_label);
    for (const auto& r : grid.regions) declared.insert(r.label);
    std::set<std::string> used;
    collect_atoms(*phi, used);
    for (const auto& a : used) {
        if (!declared.count(a)) throw Error("formula uses undeclared label '" + a + "'");
    }
}

RunConfig config_from_json(const json& j) {
    RunConfig cfg = default_config();
    check_keys(j, {"dataset", "kernel", "rkhs", "grid", "bnb", "formula", "epsilon", "seed", "threads", "out", "simulation"},
               "config");
    try {
        if (j.contains("dataset")) {
            const json& d = j.at("dataset");
            check_keys(d, {"source", "system", "samples", "noise_std", "path"}, "dataset");
            cfg.dataset.source = d.value("source", cfg.dataset.source);
            cfg.dataset.system = d.value("system", cfg.dataset.system);
            cfg.dataset.samples = d.value("samples", cfg.dataset.samples);
            cfg.dataset.noise_std = d.value("noise_std", cfg.dataset.noise_std);
            if (d.contains("path")) cfg.dataset.path = d.at("path").get<std::string>();
        }
        if (j.contains("kernel")) {
            const json& k = j.at("kernel");
            check_keys(k, {"length_scale", "scale_factor"}, "kernel");
            cfg.kernel = SqExpKernel(k.value("length_scale", cfg.kernel.length_scale),
                                     k.value("scale_factor", cfg.kernel.scale_factor));
        }
        if (j.contains("rkhs")) {
            const json& r = j.at("rkhs");
            check_keys(r, {"R", "f_sup", "lipschitz"}, "rkhs");
            if (r.contains("R")) cfg.rkhs.R = r.at("R").get<double>();
            if (r.contains("lipschitz")) cfg.rkhs.lipschitz = r.at("lipschitz").get<double>();
            if (r.contains("f_sup")) {
                const json& f = r.at("f_sup");
                if (f.is_string()) {
                    if (f.get<std::string>() != "auto") throw Error("rkhs.f_sup must be 'auto' or an array");
                } else {
                    cfg.rkhs.f_sup = f.get<std::vector<double>>();
                }
            }
        }
        if (j.contains("grid")) {
            const json& g = j.at("grid");
            check_keys(g, {"domain", "delta", "domain_label", "regions"}, "grid");
            if (g.contains("domain")) cfg.grid.domain = box_from(g.at("domain"), "grid.domain");
            cfg.grid.delta = g.value("delta", cfg.grid.delta);
            cfg.grid.domain_label = g.value("domain_label", cfg.grid.domain_label);
            if (g.contains("regions")) {
                cfg.grid.regions.clear();
                for (const auto& r : g.at("regions")) {
                    check_keys(r, {"label", "lo", "hi"}, "grid.regions");
                    cfg.grid.regions.push_back({r.at("label").get<std::string>(), box_from(r, "grid.regions")});
                }
            }
        }
        if (j.contains("bnb")) {
            const json& b = j.at("bnb");
            check_keys(b, {"depth", "tol"}, "bnb");
            cfg.bnb.max_depth = b.value("depth", cfg.bnb.max_depth);
            cfg.bnb.tol = b.value("tol", cfg.bnb.tol);
        }
        if (j.contains("simulation")) {
            const json& s = j.at("simulation");
            check_keys(s, {"trajectories", "horizon_cap", "noise_std", "audit_cells"}, "simulation");
            cfg.simulation.trajectories = s.value("trajectories", cfg.simulation.trajectories);
            cfg.simulation.horizon_cap = s.value("horizon_cap", cfg.simulation.horizon_cap);
            cfg.simulation.noise_std = s.value("noise_std", cfg.simulation.noise_std);
            cfg.simulation.audit_cells = s.value("audit_cells", cfg.simulation.audit_cells);
        }
        cfg.formula = j.value("formula", cfg.formula);
        if (j.contains("epsilon")) {
            const json& e = j.at("epsilon");
            cfg.epsilon = e.is_number() ? EpsilonPolicy{EpsilonPolicy::Kind::Uniform, e.get<double>()}
                                        : EpsilonPolicy::parse(e.get<std::string>());
        }
        cfg.seed = j.value("seed", cfg.seed);
        cfg.threads = j.value("threads", cfg.threads);
        if (j.contains("out")) cfg.out = j.at("out").get<std::string>();
    } catch (const json::exception& e) {
        throw Error(std::string("bad config value: ") + e.what());
    }
    return cfg;
}

RunConfig load_config(const fs::path& path) {
    RunConfig cfg = config_from_json(read_json(path));
    if (cfg.dataset.source == "file" && cfg.dataset.path.is_relative()) {
        cfg.dataset.path = path.parent_path() / cfg.dataset.path;
    }
    return cfg;
}

json to_json(const RunConfig& cfg) {
    json j;
    j["dataset"] = {{"source", cfg.dataset.source}, {"samples", cfg.dataset.samples}, {"noise_std", cfg.dataset.noise_std}};
    if (cfg.dataset.source == "synthetic") j["dataset"]["system"] = cfg.dataset.system;
    if (!cfg.dataset.path.empty()) j["dataset"]["path"] = cfg.dataset.path.string();
    j["kernel"] = {{"length_scale", cfg.kernel.length_scale}, {"scale_factor", cfg.kernel.scale_factor}};
    j["rkhs"] = json::object();
    if (cfg.rkhs.R) j["rkhs"]["R"] = *cfg.rkhs.R;
    j["rkhs"]["f_sup"] = cfg.rkhs.f_sup ? json(*cfg.rkhs.f_sup) : json("auto");
    if (cfg.rkhs.lipschitz) j["rkhs"]["lipschitz"] = *cfg.rkhs.lipschitz;
    json regions = json::array();
    for (const auto& r : cfg.grid.regions) {
        regions.push_back({{"label", r.label}, {"lo", to_vector(r.box.lo)}, {"hi", to_vector(r.box.hi)}});
    }
    j["grid"] = {{"domain", box_json(cfg.grid.domain)},
                 {"delta", cfg.grid.delta},
                 {"domain_label", cfg.grid.domain_label},
                 {"regions", regions}};
    j["bnb"] = {{"depth", cfg.bnb.max_depth}, {"tol", cfg.bnb.tol}};
    j["formula"] = cfg.formula;
    j["epsilon"] = cfg.epsilon.describe();
    j["seed"] = cfg.seed;
    j["threads"] = cfg.threads;
    j["out"] = cfg.out.string();
    j["simulation"] = {{"trajectories", cfg.simulation.trajectories},
                       {"horizon_cap", cfg.simulation.horizon_cap},
                       {"noise_std", cfg.simulation.noise_std},
                       {"audit_cells", cfg.simulation.audit_cells}};
    return j;
}

// ---- stages -----------------------------------------------------------------

RegressOutput regress(const RunConfig& cfg) {
    return staged("regress", [&] {
        cfg.validate();
        Stopwatch clock;
        RegressOutput out;
        if (cfg.dataset.source == "synthetic") {
            const KnownSystem sys = builtin_system(cfg.dataset.system);
            out.data = generate_dataset(sys, cfg.dataset.samples, cfg.grid.domain, cfg.dataset.noise_std, cfg.seed);
        } else {
            DatasetSchema schema;
            schema.dim = cfg.grid.domain.dim();
            if (cfg.rkhs.R) schema.noise.r_subgaussian = *cfg.rkhs.R;
            out.data = load_dataset(cfg.dataset.path, schema);
        }
        if (cfg.rkhs.R) {
            NoiseSpec noise = out.data.noise();
            noise.r_subgaussian = *cfg.rkhs.R;
            out.data.set_noise(noise);
        }
        out.data_hash = dataset_hash(out.data);
        out.table = fit_all(out.data, cfg.kernel);
        out.seconds = clock.seconds();

        fs::create_directories(cfg.out);
        save_dataset(out.data, cfg.out / artifact::dataset);
        json archive = to_json(out.table);
        archive["dataset_hash"] = hex(out.data_hash);
        archive["noise_r"] = out.data.noise().r_subgaussian;
        write_json(cfg.out / artifact::posteriors, archive);

        json samples = json::object();
        for (ActionId a = 0; a < out.table.num_actions(); ++a) {
            samples[out.table.actions()[static_cast<std::size_t>(a)]] = out.table.samples_for(a);
        }
        update_manifest(cfg.out, "regress",
                        {{"dataset_hash", hex(out.data_hash)},
                         {"samples", samples},
                         {"noise_r", out.data.noise().r_subgaussian},
                         {"seed", cfg.seed},
                         {"kernel", {{"length_scale", cfg.kernel.length_scale}, {"scale_factor", cfg.kernel.scale_factor}}},
                         {"seconds", out.seconds}});
        return out;
    });
}

ErrorModel error_model(const RunConfig& cfg, const PosteriorTable& table, double noise_r) {
    const int n = table.dim();
    if (n != cfg.grid.domain.dim()) throw Error("posterior dimension does not match the grid");
    std::optional<KnownSystem> sys;
    if (!cfg.rkhs.f_sup && !cfg.rkhs.lipschitz) {
        if (cfg.dataset.source != "synthetic") throw Error("f_sup 'auto' needs a known system");
        sys = builtin_system(cfg.dataset.system);
    }
    ErrorModel model;
    model.n = n;
    for (ActionId a = 0; a < table.num_actions(); ++a) {
        const GpPosterior& first = table.at(a, 0);
        const double sigma_v = std::sqrt(first.factor().sigma_v_sq());
        for (int i = 0; i < n; ++i) {
            ErrorBoundInput in = bound_input_for(cfg.kernel, cfg.grid.domain, i);
            if (cfg.rkhs.lipschitz) {
                in.lipschitz = cfg.rkhs.lipschitz;
            } else if (cfg.rkhs.f_sup) {
                in.f_sup = (*cfg.rkhs.f_sup)[static_cast<std::size_t>(i)];
            } else {
                in.f_sup = sys->output_sup(cfg.grid.domain, a, i);
            }
            RkhsConstants c;
            c.B = rkhs_norm_bound(in);
            c.Gamma = info_gain_bound(table.samples_for(a), sigma_v, in.kappa_sup);
            c.R = noise_r;
            c.sigma_v = sigma_v;
            c.validate();
            model.constants.push_back(c);
        }
    }
    return model;
}

std::string enclosure_key(const RunConfig& cfg, const PosteriorTable& table, std::uint64_t data_hash) {
    json k;
    k["dataset"] = hex(data_hash);
    k["kernel"] = {cfg.kernel.length_scale, cfg.kernel.scale_factor};
    json sv = json::array();
    for (ActionId a = 0; a < table.num_actions(); ++a) sv.push_back(table.at(a, 0).factor().sigma_v_sq());
    k["sigma_v_sq"] = sv;
    k["domain"] = box_json(cfg.grid.domain);
    k["delta"] = cfg.grid.delta;
    k["bnb"] = {cfg.bnb.max_depth, cfg.bnb.tol};
    return hex(fnv1a(k.dump()));
}

AbstractOutput abstract(const RunConfig& cfg, const PosteriorTable& table, std::uint64_t data_hash, double noise_r) {
    return staged("abstract", [&] {
        cfg.validate();
        AbstractOutput out;
        Stopwatch images_clock;
        out.part = partition(cfg.grid);
        const std::string key = enclosure_key(cfg, table, data_hash);
        const fs::path cache_path = cfg.out / artifact::enclosures;
        const auto jobs = static_cast<std::size_t>(out.part.num_cells()) * static_cast<std::size_t>(table.num_actions());

        bool reused = false;
        if (fs::exists(cache_path)) {
            try {
                EnclosureCache cached = enclosure_cache_from_json(read_json(cache_path));
                if (cached.key == key && cached.num_actions == table.num_actions() && cached.entries.size() == jobs) {
                    out.enclosures = std::move(cached);
                    reused = true;
                }
            } catch (const std::exception&) {
                // an unreadable cache is recomputed
            }
        }
        if (reused) {
            out.cache_hits = jobs;
        } else {
            out.enclosures.key = key;
            out.enclosures.num_actions = table.num_actions();
            out.enclosures.entries.assign(jobs, {});
            const auto k = static_cast<std::size_t>(table.num_actions());
            parallel_for(jobs, cfg.threads, [&](std::size_t job) {
                const Box& q = out.part.cells[job / k].box;
                out.enclosures.entries[job] = enclose(table, q, static_cast<ActionId>(job % k), cfg.bnb);
            });
            out.cache_misses = jobs;
            write_json(cache_path, to_json(out.enclosures));
        }
        out.errors = error_model(cfg, table, noise_r);
        out.images_seconds = images_clock.seconds();

        Stopwatch transitions_clock;
        AbstractionStats stats;
        out.imdp = build_imdp(out.part, out.enclosures, table.actions(), out.errors, cfg.epsilon, cfg.threads, &stats);
        out.transitions = stats.transitions;
        out.transitions_seconds = transitions_clock.seconds();
        write_json(cfg.out / artifact::imdp, to_json(out.imdp));

        json constants = json::array();
        for (ActionId a = 0; a < table.num_actions(); ++a) {
            for (int i = 0; i < table.dim(); ++i) {
                const RkhsConstants& c = out.errors.at(a, i);
                constants.push_back({{"action", table.actions()[static_cast<std::size_t>(a)]},
                                     {"dim", i},
                                     {"B", c.B},
                                     {"Gamma", c.Gamma},
                                     {"R", c.R},
                                     {"sigma_v", c.sigma_v},
                                     {"samples", table.samples_for(a)}});
            }
        }
        update_manifest(cfg.out, "abstract",
                        {{"dataset_hash", hex(data_hash)},
                         {"constants", constants},
                         {"bnb", {{"T", cfg.bnb.max_depth}, {"tol", cfg.bnb.tol}}},
                         {"grid",
                          {{"delta", cfg.grid.delta},
                           {"domain", box_json(cfg.grid.domain)},
                           {"counts", out.part.counts},
                           {"states", out.part.num_states()}}},
                         {"epsilon", cfg.epsilon.describe()},
                         {"enclosure_key", key},
                         {"cache", {{"hits", out.cache_hits}, {"misses", out.cache_misses}}},
                         {"transitions", out.transitions},
                         {"imdp_hash", hex(fnv1a(to_json(out.imdp).dump()))},
                         {"seconds", {{"images", out.images_seconds}, {"transitions", out.transitions_seconds}}}});
        return out;
    });
}

AbstractOutput abstract(const RunConfig& cfg) {
    json archive;
    PosteriorTable table;
    staged("abstract", [&] {
        archive = upstream(cfg.out, artifact::posteriors, "regress");
        table = posterior_table_from_json(archive);
        return 0;
    });
    const auto hash = std::stoull(archive.value("dataset_hash", std::string("0")), nullptr, 16);
    const double noise_r = archive.value("noise_r", cfg.rkhs.R.value_or(cfg.dataset.noise_std));
    return abstract(cfg, table, hash, noise_r);
}

json to_json(const RunResult& r, const Imdp& m) {
    json j;
    j["formula"] = r.formula;
    j["p_bar"] = r.p_bar;
    j["determinate_fraction"] = r.determinate_fraction;
    j["counts"] = {{"yes", r.check.count(Verdict::Yes)},
                   {"no", r.check.count(Verdict::No)},
                   {"maybe", r.check.count(Verdict::Maybe)}};
    j["iterations"] = r.check.iterations;
    j["converged"] = r.check.converged;
    json states = json::array();
    for (StateId s = 0; s < m.num_states(); ++s) {
        const auto& p = r.check.intervals[static_cast<std::size_t>(s)];
        json e = {{"id", s}, {"p_lo", p.lo}, {"p_hi", p.hi}, {"verdict", verdict_text(r.check.verdicts[static_cast<std::size_t>(s)])}};
        states.push_back(std::move(e));
    }
    j["states"] = std::move(states);
    return j;
}

std::string plot_csv(const RunResult& r, const Imdp& m) {
    std::ostringstream os;
    int n = 0;
    for (StateId s = 0; s < m.num_states() && n == 0; ++s) {
        if (m.box(s)) n = m.box(s)->dim();
    }
    os << "id";
    for (int i = 1; i <= n; ++i) os << ",lo" << i;
    for (int i = 1; i <= n; ++i) os << ",hi" << i;
    os << ",p_lo,p_hi,verdict\n";
    for (StateId s = 0; s < m.num_states(); ++s) {
        const auto& b = m.box(s);
        if (!b || m.unsafe_state() == s) continue;
        os << s;
        for (int i = 0; i < n; ++i) os << ',' << number(b->lo[i]);
        for (int i = 0; i < n; ++i) os << ',' << number(b->hi[i]);
        const auto& p = r.check.intervals[static_cast<std::size_t>(s)];
        os << ',' << number(p.lo) << ',' << number(p.hi) << ',' << verdict_text(r.check.verdicts[static_cast<std::size_t>(s)])
           << '\n';
    }
    return os.str();
}

RunResult verify(const RunConfig& cfg, const Imdp& m) {
    return staged("verify", [&] {
        const auto phi = parse_pctl(cfg.formula);
        Stopwatch clock;
        RunResult r;
        r.formula = to_string(*phi);
        r.check = check(m, *phi);
        r.timings.verification = clock.seconds();
        r.p_bar = r.check.mean_width();
        const auto n = static_cast<double>(m.num_states());
        r.determinate_fraction = static_cast<double>(r.check.count(Verdict::Yes) + r.check.count(Verdict::No)) / n;
        write_json(cfg.out / artifact::result, to_json(r, m));
        write_text(cfg.out / artifact::plot, plot_csv(r, m));
        update_manifest(cfg.out, "verify",
                        {{"formula", r.formula},
                         {"p_bar", r.p_bar},
                         {"determinate_fraction", r.determinate_fraction},
                         {"iterations", r.check.iterations},
                         {"converged", r.check.converged},
                         {"seconds", r.timings.verification}});
        return r;
    });
}

RunResult verify(const RunConfig& cfg) {
    const Imdp m = staged("verify", [&] { return imdp_from_json(upstream(cfg.out, artifact::imdp, "abstract")); });
    return verify(cfg, m);
}

RunResult run(const RunConfig& cfg) {
    const RegressOutput reg = regress(cfg);
    const AbstractOutput abs = abstract(cfg, reg.table, reg.data_hash, reg.data.noise().r_subgaussian);
    RunResult r = verify(cfg, abs.imdp);
    r.timings.regression = reg.seconds;
    r.timings.images = abs.images_seconds;
    r.timings.transitions = abs.transitions_seconds;
    r.cache_hits = abs.cache_hits;
    r.cache_misses = abs.cache_misses;
    update_manifest(cfg.out, "run",
                    {{"config", to_json(cfg)},
                     {"timings",
                      {{"regression", r.timings.regression},
                       {"images", r.timings.images},
                       {"transitions", r.timings.transitions},
                       {"verification", r.timings.verification}}},
                     {"hashes",
                      {{"dataset", hex(reg.data_hash)},
                       {"result", hex(fnv1a(to_json(r, abs.imdp).dump()))}}}});
    return r;
}

namespace {

std::unique_ptr<Strategy> strategy_named(const std::string& name, int num_actions) {
    if (name == "constant") return constant_strategy(0);
    if (name == "round-robin") return round_robin_strategy(num_actions);
    if (name == "threshold") return threshold_strategy(0, 0.0, num_actions > 1 ? 1 : 0, 0);
    if (name.rfind("constant:", 0) == 0) {
        const int a = std::stoi(name.substr(9));
        if (a < 0 || a >= num_actions) throw Error("action " + std::to_string(a) + " is out of range");
        return constant_strategy(a);
    }
    throw Error("unknown strategy '" + name + "' (expected constant, constant:<a>, round-robin or threshold)");
}

const PathFormula& top_path(const StateFormula& phi) {
    if (phi.kind != StateFormula::Kind::Prob) throw Error("formula must be a probabilistic operator P~p [ psi ]");
    return *phi.path;
}

SimConfig sim_config(const RunConfig& cfg) {
    SimConfig sim;
    sim.trajectories = cfg.simulation.trajectories;
    sim.horizon_cap = cfg.simulation.horizon_cap;
    sim.noise_stddev = cfg.simulation.noise_std;
    sim.seed = derive_seed(cfg.seed, 0x5157ULL);
    sim.threads = cfg.threads;
    return sim;
}

}  // namespace

Estimate simulate(const RunConfig& cfg, const Vec& x0, const std::string& strategy) {
    return staged("simulate", [&] {
        if (cfg.dataset.source != "synthetic") throw Error("simulation needs a known system (synthetic dataset source)");
        const KnownSystem sys = builtin_system(cfg.dataset.system);
        const auto phi = parse_pctl(cfg.formula);
        const Partition grid = partition(cfg.grid);
        const auto strat = strategy_named(strategy, static_cast<int>(sys.actions.size()));
        return estimate(sys, x0, top_path(*phi), grid, *strat, sim_config(cfg));
    });
}

AuditReport audit(const RunConfig& cfg) {
    return staged("audit", [&] {
        if (cfg.dataset.source != "synthetic") throw Error("the audit needs a known system (synthetic dataset source)");
        const json result = upstream(cfg.out, artifact::result, "verify");
        const KnownSystem sys = builtin_system(cfg.dataset.system);
        const Partition grid = partition(cfg.grid);
        const auto phi = parse_pctl(result.at("formula").get<std::string>());
        std::vector<SatInterval> intervals;
        for (const auto& s : result.at("states")) intervals.push_back({s.at("p_lo").get<double>(), s.at("p_hi").get<double>()});
        if (intervals.size() != static_cast<std::size_t>(grid.num_states())) {
            throw Error("stored result does not match the configured grid; rerun `verify`");
        }
        const auto strategies = builtin_strategies(static_cast<int>(sys.actions.size()));
        AuditReport report =
            soundness_audit(intervals, sys, grid, top_path(*phi), strategies, sim_config(cfg), cfg.simulation.audit_cells);
        json j = to_json(report);
        j["formula"] = to_string(*phi);
        write_json(cfg.out / artifact::audit, j);
        return report;
    });
}

}  // namespace gpimdp
