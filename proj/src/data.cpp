#include "gpimdp/data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "gpimdp/rng.hpp"

namespace gpimdp {

Dataset::Dataset(int n, std::vector<std::string> actions, NoiseSpec noise)
    : n_(n), actions_(std::move(actions)), noise_(noise) {
    if (n_ < 1) throw Error("dataset dimension must be positive");
    if (actions_.empty()) throw Error("dataset needs at least one action");
    for (std::size_t i = 0; i < actions_.size(); ++i) {
        for (std::size_t j = 0; j < i; ++j) {
            if (actions_[i] == actions_[j]) throw Error("duplicate action name '" + actions_[i] + "'");
        }
    }
    if (!(noise_.r_subgaussian > 0.0)) throw Error("sub-Gaussian constant R must be positive");
}

std::optional<ActionId> Dataset::find_action(std::string_view name) const {
    auto it = std::find(actions_.begin(), actions_.end(), name);
    if (it == actions_.end()) return std::nullopt;
    return static_cast<ActionId>(it - actions_.begin());
}

ActionId Dataset::action_id(std::string_view name) const {
    auto id = find_action(name);
    if (!id) throw Error("unknown action '" + std::string(name) + "'");
    return *id;
}

void Dataset::add(Sample s) {
    if (s.x.size() != n_ || s.y.size() != n_) throw Error("sample dimension does not match dataset");
    if (s.action < 0 || s.action >= static_cast<ActionId>(actions_.size())) {
        throw Error("sample action id out of range");
    }
    samples_.push_back(std::move(s));
}

std::size_t Dataset::count_for(ActionId a) const {
    return static_cast<std::size_t>(std::count_if(samples_.begin(), samples_.end(),
                                                  [a](const Sample& s) { return s.action == a; }));
}

Mat Dataset::inputs_for(ActionId a) const {
    Mat X(static_cast<Eigen::Index>(count_for(a)), n_);
    Eigen::Index row = 0;
    for (const auto& s : samples_) {
        if (s.action == a) X.row(row++) = s.x.transpose();
    }
    return X;
}

Vec Dataset::targets_for(ActionId a, int dim) const {
    if (dim < 0 || dim >= n_) throw Error("output dimension out of range");
    Vec y(static_cast<Eigen::Index>(count_for(a)));
    Eigen::Index row = 0;
    for (const auto& s : samples_) {
        if (s.action == a) y[row++] = s.y[dim];
    }
    return y;
}

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        auto pos = line.find(',', start);
        auto field = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
        while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
        while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r')) {
            field.remove_suffix(1);
        }
        out.push_back(field);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::optional<double> parse_double(std::string_view s) {
    double v = 0.0;
    if (s.empty()) return std::nullopt;
    if (s.front() == '+') s.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

void append_double(std::string& out, double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.append(buf, ptr);
}

}  // namespace

Dataset parse_dataset(std::string_view text, const DatasetSchema& schema) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start < text.size()) {
        auto pos = text.find('\n', start);
        auto line = text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.find_first_not_of(" \t") != std::string_view::npos) lines.push_back(line);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    if (lines.size() < 2) throw Error("empty dataset");

    const auto header = split_fields(lines.front());
    if (header.size() < 3 || header.size() % 2 == 0) {
        throw Error("dataset header must have the form x1..xn,action,y1..yn");
    }
    const int n = static_cast<int>(header.size() - 1) / 2;
    if (header[static_cast<std::size_t>(n)] != "action") {
        throw Error("dataset header must name column " + std::to_string(n + 1) + " 'action'");
    }
    if (schema.dim && *schema.dim != n) {
        throw Error("dimension mismatch: header has n=" + std::to_string(n) + ", schema expects n=" +
                    std::to_string(*schema.dim));
    }

    std::vector<std::string> actions;
    if (schema.actions) actions = *schema.actions;

    struct RawRow {
        Vec x;
        std::string action;
        Vec y;
    };
    std::vector<RawRow> rows;
    rows.reserve(lines.size() - 1);
    for (std::size_t r = 1; r < lines.size(); ++r) {
        const auto fields = split_fields(lines[r]);
        const std::string where = "row " + std::to_string(r);
        if (fields.size() != header.size()) {
            throw Error("malformed " + where + ": expected " + std::to_string(header.size()) + " fields, got " +
                        std::to_string(fields.size()));
        }
        RawRow row{Vec(n), std::string(fields[static_cast<std::size_t>(n)]), Vec(n)};
        for (int i = 0; i < n; ++i) {
            auto xv = parse_double(fields[static_cast<std::size_t>(i)]);
            auto yv = parse_double(fields[static_cast<std::size_t>(n + 1 + i)]);
            if (!xv || !yv) throw Error("malformed " + where + ": non-numeric state field");
            row.x[i] = *xv;
            row.y[i] = *yv;
        }
        if (row.action.empty()) throw Error("malformed " + where + ": empty action");
        if (std::find(actions.begin(), actions.end(), row.action) == actions.end()) {
            if (schema.actions) throw Error("unknown action token '" + row.action + "' in " + where);
            actions.push_back(row.action);
        }
        rows.push_back(std::move(row));
    }

    Dataset data(n, actions, schema.noise);
    for (auto& row : rows) {
        data.add(Sample{std::move(row.x), data.action_id(row.action), std::move(row.y)});
    }
    return data;
}

Dataset load_dataset(const std::filesystem::path& path, const DatasetSchema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open dataset file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_dataset(ss.str(), schema);
}

std::string format_dataset(const Dataset& data) {
    std::string out;
    const int n = data.dim();
    for (int i = 0; i < n; ++i) out += "x" + std::to_string(i + 1) + ",";
    out += "action";
    for (int i = 0; i < n; ++i) out += ",y" + std::to_string(i + 1);
    out += '\n';
    for (const auto& s : data.samples()) {
        for (int i = 0; i < n; ++i) {
            append_double(out, s.x[i]);
            out += ',';
        }
        out += data.actions()[static_cast<std::size_t>(s.action)];
        for (int i = 0; i < n; ++i) {
            out += ',';
            append_double(out, s.y[i]);
        }
        out += '\n';
    }
    return out;
}

void save_dataset(const Dataset& data, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write dataset file " + path.string());
    out << format_dataset(data);
}

std::uint64_t dataset_hash(const Dataset& data) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : format_dataset(data)) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

double KnownSystem::output_sup(const Box& domain, ActionId a, int i) const {
    return image(domain, a)[static_cast<std::size_t>(i)].mag();
}

namespace {

KnownSystem linear_system(SystemName name, std::string label, std::vector<Mat> matrices,
                          std::vector<std::string> actions) {
    KnownSystem sys;
    sys.name = name;
    sys.label = std::move(label);
    sys.n = 2;
    sys.actions = std::move(actions);
    sys.dynamics = [matrices](const Vec& x, ActionId a) -> Vec {
        return matrices.at(static_cast<std::size_t>(a)) * x;
    };
    sys.image = [matrices](const Box& q, ActionId a) {
        const Mat& A = matrices.at(static_cast<std::size_t>(a));
        std::vector<Interval> out;
        for (Eigen::Index r = 0; r < A.rows(); ++r) {
            Interval acc(0.0);
            for (Eigen::Index c = 0; c < A.cols(); ++c) acc = acc + Interval(A(r, c)) * q.side(static_cast<int>(c));
            out.push_back(acc);
        }
        return out;
    };
    return sys;
}

Mat mat2(double a, double b, double c, double d) {
    Mat m(2, 2);
    m << a, b, c, d;
    return m;
}

}  // namespace

KnownSystem builtin_system(std::string_view name) {
    const Mat a_mat = mat2(0.4, 0.1, 0.0, 0.5);
    const Mat b_mat = mat2(0.8, 0.5, 0.0, 0.5);
    const Mat s_mat = mat2(0.5, 0.0, -0.5, 0.8);
    if (name == "linear_a") return linear_system(SystemName::LinearA, "linear_a", {a_mat}, {"a1"});
    if (name == "linear_b") return linear_system(SystemName::LinearB, "linear_b", {b_mat}, {"a1"});
    if (name == "switched") return linear_system(SystemName::Switched, "switched", {b_mat, s_mat}, {"a1", "a2"});
    if (name == "nonlinear") {
        KnownSystem sys;
        sys.name = SystemName::Nonlinear;
        sys.label = "nonlinear";
        sys.n = 2;
        sys.actions = {"a1"};
        sys.dynamics = [](const Vec& x, ActionId) -> Vec {
            Vec out(2);
            out[0] = x[0] + 0.2 * (x[1] + x[1] * x[1] * std::exp(x[0]));
            out[1] = x[1] + 0.2 * x[0];
            return out;
        };
        sys.image = [](const Box& q, ActionId) {
            const Interval x1 = q.side(0);
            const Interval x2 = q.side(1);
            return std::vector<Interval>{x1 + Interval(0.2) * (x2 + sqr(x2) * exp(x1)),
                                         x2 + Interval(0.2) * x1};
        };
        return sys;
    }
    throw Error("unknown system '" + std::string(name) + "' (expected linear_a, linear_b, switched or nonlinear)");
}

Dataset generate_dataset(const KnownSystem& sys, int count, const Box& domain, double noise_stddev,
                         std::uint64_t seed) {
    if (count < 1) throw Error("sample count must be at least 1");
    if (!(noise_stddev >= 0.0)) throw Error("noise standard deviation must be non-negative");
    if (domain.dim() != sys.n) throw Error("domain dimension does not match the system");

    NoiseSpec noise;
    noise.generator_stddev = noise_stddev;
    if (noise_stddev > 0.0) noise.r_subgaussian = noise_stddev;
    Dataset data(sys.n, sys.actions, noise);

    Rng rng(seed);
    for (ActionId a = 0; a < static_cast<ActionId>(sys.actions.size()); ++a) {
        for (int k = 0; k < count; ++k) {
            Vec x(sys.n);
            for (int i = 0; i < sys.n; ++i) x[i] = rng.uniform(domain.lo[i], domain.hi[i]);
            Vec y = sys.step(x, a);
            if (noise_stddev > 0.0) {
                for (int i = 0; i < sys.n; ++i) y[i] += rng.normal(0.0, noise_stddev);
            }
            data.add(Sample{std::move(x), a, std::move(y)});
        }
    }
    return data;
}

}  // namespace gpimdp
