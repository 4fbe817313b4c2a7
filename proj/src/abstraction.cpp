#include "gpimdp/abstraction.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <sstream>

#include "gpimdp/parallel.hpp"

namespace gpimdp {

namespace {

int snap(double offset, double delta, const std::string& what) {
    const double k = std::round(offset / delta);
    if (std::abs(k * delta - offset) > 1e-9 * delta) {
        std::ostringstream msg;
        msg << what << " is not aligned with the grid (offset " << offset << " is not a multiple of delta " << delta << ")";
        throw Error(msg.str());
    }
    return static_cast<int>(k);
}

double grid_line(const Box& dom, int dim, int k, int count, double delta) {
    return k == count ? dom.hi[dim] : dom.lo[dim] + k * delta;
}

}  // namespace

Partition partition(const GridSpec& spec) {
    if (!(spec.delta > 0.0)) throw Error("grid delta must be positive");
    const Box& dom = spec.domain;
    const int n = dom.dim();
    if (n < 1) throw Error("grid domain must have positive dimension");

    Partition part;
    part.spec = spec;
    part.counts.resize(static_cast<std::size_t>(n));
    std::size_t total = 1;
    for (int i = 0; i < n; ++i) {
        const int c = snap(dom.hi[i] - dom.lo[i], spec.delta, "domain side " + std::to_string(i + 1));
        if (c < 1) throw Error("grid delta is larger than the domain");
        part.counts[static_cast<std::size_t>(i)] = c;
        total *= static_cast<std::size_t>(c);
    }
    if (total > 50'000'000) throw Error("grid has too many cells");

    // Index ranges [from, to) of each labelled region.
    struct Span {
        std::string label;
        std::vector<int> from, to;
    };
    std::vector<Span> spans;
    for (const auto& r : spec.regions) {
        if (r.box.dim() != n) throw Error("region '" + r.label + "' has the wrong dimension");
        if (!dom.contains(r.box)) throw Error("region '" + r.label + "' extends outside the domain");
        Span s{r.label, {}, {}};
        for (int i = 0; i < n; ++i) {
            s.from.push_back(snap(r.box.lo[i] - dom.lo[i], spec.delta, "region '" + r.label + "'"));
            s.to.push_back(snap(r.box.hi[i] - dom.lo[i], spec.delta, "region '" + r.label + "'"));
        }
        spans.push_back(std::move(s));
    }

    part.cells.reserve(total);
    std::vector<int> k(static_cast<std::size_t>(n), 0);
    for (std::size_t id = 0; id < total; ++id) {
        Vec lo(n);
        Vec hi(n);
        for (int i = 0; i < n; ++i) {
            const int ki = k[static_cast<std::size_t>(i)];
            const int ci = part.counts[static_cast<std::size_t>(i)];
            lo[i] = grid_line(dom, i, ki, ci, spec.delta);
            hi[i] = grid_line(dom, i, ki + 1, ci, spec.delta);
        }
        Region cell{Box(lo, hi), static_cast<StateId>(id), {}};
        if (!spec.domain_label.empty()) cell.labels.insert(spec.domain_label);
        for (const auto& s : spans) {
            bool inside = true;
            for (int i = 0; i < n && inside; ++i) {
                const int ki = k[static_cast<std::size_t>(i)];
                inside = s.from[static_cast<std::size_t>(i)] <= ki && ki < s.to[static_cast<std::size_t>(i)];
            }
            if (inside) cell.labels.insert(s.label);
        }
        part.cells.push_back(std::move(cell));
        for (int i = 0; i < n; ++i) {
            if (++k[static_cast<std::size_t>(i)] < part.counts[static_cast<std::size_t>(i)]) break;
            k[static_cast<std::size_t>(i)] = 0;
        }
    }
    part.unsafe = Region{Box(), static_cast<StateId>(total), {}};
    return part;
}

StateId Partition::locate(const Vec& x) const {
    const Box& dom = spec.domain;
    if (!dom.contains(x)) return unsafe_id();
    std::size_t id = 0;
    std::size_t stride = 1;
    for (int i = 0; i < dom.dim(); ++i) {
        const int c = counts[static_cast<std::size_t>(i)];
        int k = std::clamp(static_cast<int>(std::floor((x[i] - dom.lo[i]) / spec.delta)), 0, c - 1);
        // Guard against rounding in the division near grid lines.
        if (k > 0 && x[i] < grid_line(dom, i, k, c, spec.delta)) --k;
        if (k + 1 < c && x[i] >= grid_line(dom, i, k + 1, c, spec.delta)) ++k;
        id += static_cast<std::size_t>(k) * stride;
        stride *= static_cast<std::size_t>(c);
    }
    return static_cast<StateId>(id);
}

const std::set<std::string>& Partition::labels(StateId s) const {
    if (s == unsafe_id()) return unsafe.labels;
    if (s < 0 || s >= num_cells()) throw Error("state id out of range");
    return cells[static_cast<std::size_t>(s)].labels;
}

std::set<std::string> Partition::alphabet() const {
    std::set<std::string> out;
    if (!spec.domain_label.empty()) out.insert(spec.domain_label);
    for (const auto& r : spec.regions) out.insert(r.label);
    return out;
}

Vec optimal_epsilon(const std::vector<Interval>& image, const Box& qprime) {
    const int n = qprime.dim();
    if (static_cast<int>(image.size()) != n) throw Error("image and region dimensions differ");
    Vec eps(n);
    for (int i = 0; i < n; ++i) {
        const auto& m = image[static_cast<std::size_t>(i)];
        eps[i] = std::min({std::abs(m.lo - qprime.lo[i]), std::abs(m.lo - qprime.hi[i]), std::abs(m.hi - qprime.lo[i]),
                           std::abs(m.hi - qprime.hi[i])});
    }
    return eps;
}

Vec tightest_epsilon(const std::vector<Interval>& image, const Box& qprime, const ErrorProbFn& prob) {
    const int n = qprime.dim();
    if (static_cast<int>(image.size()) != n) throw Error("image and region dimensions differ");
    int best_dim = -1;
    double best_gap = 0.0;
    double best_p = -1.0;
    for (int i = 0; i < n; ++i) {
        const auto& m = image[static_cast<std::size_t>(i)];
        const double gap = std::max(qprime.lo[i] - m.hi, m.lo - qprime.hi[i]);
        if (gap > 0.0) {
            const double p = prob(i, gap * kEpsilonShrink);
            if (p > best_p) {
                best_p = p;
                best_dim = i;
                best_gap = gap;
            }
        }
    }
    if (best_dim >= 0) {
        Vec eps = Vec::Constant(n, std::numeric_limits<double>::infinity());
        eps[best_dim] = best_gap * kEpsilonShrink;
        return eps;
    }
    return optimal_epsilon(image, qprime) * kEpsilonShrink;
}

TransitionInterval transition_bounds(const std::vector<Interval>& image, const Box& qprime, const ErrorProbFn& prob,
                                     const Vec& eps) {
    const int n = qprime.dim();
    if (static_cast<int>(image.size()) != n || eps.size() != n) throw Error("transition bound inputs have mismatched dimensions");
    bool inside = true;
    bool disjoint = false;
    for (int i = 0; i < n; ++i) {
        const auto& m = image[static_cast<std::size_t>(i)];
        if (!(eps[i] >= 0.0)) throw Error("epsilon must be non-negative");
        // Strict containment in the reduction; closed intersection with the expansion.
        if (!(m.lo > qprime.lo[i] + eps[i] && m.hi < qprime.hi[i] - eps[i])) inside = false;
        if (m.lo > qprime.hi[i] + eps[i] || m.hi < qprime.lo[i] - eps[i]) disjoint = true;
    }
    TransitionInterval out{0.0, 1.0};
    if (!inside && !disjoint) return out;
    double p = 1.0;
    for (int i = 0; i < n; ++i) p *= prob(i, eps[i]);
    p = std::clamp(p, 0.0, 1.0);
    if (inside) out.lo = p;
    if (disjoint) out.hi = 1.0 - p;
    return out;
}

std::string EpsilonPolicy::describe() const {
    switch (kind) {
        case Kind::Optimal: return "optimal";
        case Kind::Facet: return "facet";
        case Kind::Uniform: {
            std::ostringstream s;
            s.precision(17);
            s << "uniform:" << value;
            return s.str();
        }
    }
    return "unknown";
}

EpsilonPolicy EpsilonPolicy::parse(const std::string& text) {
    if (text == "optimal") return {Kind::Optimal, 0.0};
    if (text == "facet") return {Kind::Facet, 0.0};
    std::string num = text.rfind("uniform:", 0) == 0 ? text.substr(8) : text;
    try {
        std::size_t used = 0;
        const double v = std::stod(num, &used);
        if (used == num.size() && v >= 0.0 && std::isfinite(v)) return {Kind::Uniform, v};
    } catch (const std::exception&) {
    }
    throw Error("epsilon policy must be 'optimal', 'facet' or a non-negative number, got '" + text + "'");
}

const RkhsConstants& ErrorModel::at(ActionId a, int i) const {
    const auto idx = static_cast<std::size_t>(a) * static_cast<std::size_t>(n) + static_cast<std::size_t>(i);
    if (a < 0 || i < 0 || i >= n || idx >= constants.size()) throw Error("error model index out of range");
    return constants[idx];
}

namespace {

Vec choose_epsilon(const EpsilonPolicy& policy, const std::vector<Interval>& image, const Box& qprime,
                   const ErrorProbFn& prob) {
    switch (policy.kind) {
        case EpsilonPolicy::Kind::Optimal: return tightest_epsilon(image, qprime, prob);
        case EpsilonPolicy::Kind::Facet: return optimal_epsilon(image, qprime) * kEpsilonShrink;
        case EpsilonPolicy::Kind::Uniform: return Vec::Constant(qprime.dim(), policy.value);
    }
    throw Error("unknown epsilon policy");
}

}  // namespace

Imdp build_imdp(const Partition& part, const EnclosureCache& enclosures, const std::vector<std::string>& actions,
                const ErrorModel& errors, const EpsilonPolicy& policy, int threads, AbstractionStats* stats) {
    const auto start = std::chrono::steady_clock::now();
    const int num_actions = static_cast<int>(actions.size());
    if (enclosures.num_actions != num_actions) throw Error("enclosure cache does not match the action set");
    if (enclosures.entries.size() != static_cast<std::size_t>(part.num_cells()) * static_cast<std::size_t>(num_actions)) {
        throw Error("enclosure cache does not match the grid");
    }

    Imdp m(part.num_states(), actions);
    for (const auto& atom : part.alphabet()) m.declare_atom(atom);
    for (const auto& cell : part.cells) {
        m.set_labels(cell.id, cell.labels);
        m.set_box(cell.id, cell.box);
    }
    const StateId unsafe = part.unsafe_id();
    m.set_unsafe_state(unsafe);
    m.set_labels(unsafe, part.unsafe.labels);

    const std::size_t jobs = static_cast<std::size_t>(part.num_cells()) * static_cast<std::size_t>(num_actions);
    std::vector<TransitionRow> rows(jobs);
    parallel_for(jobs, threads, [&](std::size_t job) {
        const StateId q = static_cast<StateId>(job / static_cast<std::size_t>(num_actions));
        const ActionId a = static_cast<ActionId>(job % static_cast<std::size_t>(num_actions));
        const Enclosure& enc = enclosures.at(q, a);
        const ErrorProbFn prob = [&](int i, double eps) {
            return error_prob(eps, enc.sigma_sup[static_cast<std::size_t>(i)], errors.at(a, i));
        };
        TransitionRow row;
        for (const auto& target : part.cells) {
            const Vec eps = choose_epsilon(policy, enc.image, target.box, prob);
            const TransitionInterval t = transition_bounds(enc.image, target.box, prob, eps);
            if (t.hi > 0.0) row.push_back({target.id, t.lo, t.hi});
        }
        // Unsafe entry: complement of the transition into the whole domain.
        const Box& dom = part.spec.domain;
        const TransitionInterval tx = transition_bounds(enc.image, dom, prob, choose_epsilon(policy, enc.image, dom, prob));
        row.push_back({unsafe, std::clamp(1.0 - tx.hi, 0.0, 1.0), std::clamp(1.0 - tx.lo, 0.0, 1.0)});
        check_row(row, part.num_states(), "state " + std::to_string(q) + ", action " + actions[static_cast<std::size_t>(a)]);
        rows[job] = std::move(row);
    });

    std::size_t count = 0;
    for (std::size_t job = 0; job < jobs; ++job) {
        count += rows[job].size();
        m.set_row(static_cast<StateId>(job / static_cast<std::size_t>(num_actions)),
                  static_cast<ActionId>(job % static_cast<std::size_t>(num_actions)), std::move(rows[job]));
    }
    for (ActionId a = 0; a < num_actions; ++a) m.set_row(unsafe, a, {{unsafe, 1.0, 1.0}});
    m.validate();
    if (stats) {
        stats->transitions = count + static_cast<std::size_t>(num_actions);
        stats->seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
    return m;
}

}  // namespace gpimdp
