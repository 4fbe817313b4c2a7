#include "gpimdp/imdp.hpp"

#include <sstream>

namespace gpimdp {

Imdp::Imdp(int num_states, std::vector<std::string> actions)
    : num_states_(num_states), actions_(std::move(actions)) {
    if (num_states_ < 1) throw Error("IMDP needs at least one state");
    if (actions_.empty()) throw Error("IMDP needs at least one action");
    rows_.resize(static_cast<std::size_t>(num_states_) * actions_.size());
    labels_.resize(static_cast<std::size_t>(num_states_));
    boxes_.resize(static_cast<std::size_t>(num_states_));
}

std::size_t Imdp::index(StateId s, ActionId a) const {
    if (s < 0 || s >= num_states_) throw Error("state id " + std::to_string(s) + " out of range");
    if (a < 0 || a >= num_actions()) throw Error("action id " + std::to_string(a) + " out of range");
    return static_cast<std::size_t>(s) * actions_.size() + static_cast<std::size_t>(a);
}

const TransitionRow& Imdp::row(StateId s, ActionId a) const { return rows_[index(s, a)]; }

void Imdp::set_row(StateId s, ActionId a, TransitionRow row) { rows_[index(s, a)] = std::move(row); }

const std::set<std::string>& Imdp::labels(StateId s) const {
    if (s < 0 || s >= num_states_) throw Error("state id out of range");
    return labels_[static_cast<std::size_t>(s)];
}

void Imdp::set_labels(StateId s, std::set<std::string> labels) {
    if (s < 0 || s >= num_states_) throw Error("state id out of range");
    alphabet_.insert(labels.begin(), labels.end());
    labels_[static_cast<std::size_t>(s)] = std::move(labels);
}

const std::optional<Box>& Imdp::box(StateId s) const {
    if (s < 0 || s >= num_states_) throw Error("state id out of range");
    return boxes_[static_cast<std::size_t>(s)];
}

void Imdp::set_box(StateId s, Box b) {
    if (s < 0 || s >= num_states_) throw Error("state id out of range");
    boxes_[static_cast<std::size_t>(s)] = std::move(b);
}

void Imdp::set_unsafe_state(StateId s) {
    if (s < 0 || s >= num_states_) throw Error("state id out of range");
    unsafe_ = s;
}

void check_row(const TransitionRow& row, int num_states, const std::string& where) {
    double sum_lo = 0.0;
    double sum_hi = 0.0;
    for (const auto& t : row) {
        if (t.target < 0 || t.target >= num_states) throw Error(where + ": target " + std::to_string(t.target) + " out of range");
        if (!(0.0 <= t.lo && t.lo <= t.hi && t.hi <= 1.0)) {
            std::ostringstream msg;
            msg << where << ": entry to " << t.target << " has invalid interval [" << t.lo << ", " << t.hi << "]";
            throw Error(msg.str());
        }
        sum_lo += t.lo;
        sum_hi += t.hi;
    }
    if (sum_lo > 1.0 + kRowTolerance || sum_hi < 1.0 - kRowTolerance) {
        std::ostringstream msg;
        msg.precision(17);
        msg << where << ": row violates sum lo <= 1 <= sum hi (sum lo = " << sum_lo << ", sum hi = " << sum_hi << ")";
        throw Error(msg.str());
    }
}

void Imdp::validate() const {
    for (StateId s = 0; s < num_states_; ++s) {
        bool any = false;
        for (ActionId a = 0; a < num_actions(); ++a) {
            const auto& r = row(s, a);
            if (r.empty()) continue;
            any = true;
            check_row(r, num_states_, "state " + std::to_string(s) + ", action " + actions_[static_cast<std::size_t>(a)]);
        }
        if (!any) throw Error("state " + std::to_string(s) + " has no available action");
    }
}

nlohmann::json to_json(const Imdp& m) {
    nlohmann::json j;
    j["format"] = "gpimdp-imdp";
    j["schema_version"] = kImdpSchemaVersion;
    j["actions"] = m.actions();
    j["alphabet"] = m.alphabet();
    if (m.unsafe_state()) j["unsafe_state"] = *m.unsafe_state();
    j["states"] = nlohmann::json::array();
    for (StateId s = 0; s < m.num_states(); ++s) {
        nlohmann::json js;
        js["id"] = s;
        js["labels"] = m.labels(s);
        if (const auto& b = m.box(s)) {
            js["lo"] = std::vector<double>(b->lo.data(), b->lo.data() + b->lo.size());
            js["hi"] = std::vector<double>(b->hi.data(), b->hi.data() + b->hi.size());
        }
        nlohmann::json rows = nlohmann::json::object();
        for (ActionId a = 0; a < m.num_actions(); ++a) {
            if (!m.available(s, a)) continue;
            nlohmann::json jr = nlohmann::json::array();
            for (const auto& t : m.row(s, a)) jr.push_back({{"target", t.target}, {"lo", t.lo}, {"hi", t.hi}});
            rows[m.actions()[static_cast<std::size_t>(a)]] = std::move(jr);
        }
        js["rows"] = std::move(rows);
        j["states"].push_back(std::move(js));
    }
    return j;
}

Imdp imdp_from_json(const nlohmann::json& j) {
    if (j.value("format", "") != "gpimdp-imdp") throw Error("not an IMDP export");
    const int version = j.value("schema_version", 0);
    if (version != kImdpSchemaVersion) throw Error("unsupported IMDP schema version " + std::to_string(version));
    const auto actions = j.at("actions").get<std::vector<std::string>>();
    const auto& states = j.at("states");
    Imdp m(static_cast<int>(states.size()), actions);
    for (const auto& atom : j.value("alphabet", std::vector<std::string>{})) m.declare_atom(atom);
    if (j.contains("unsafe_state")) m.set_unsafe_state(j.at("unsafe_state").get<int>());
    for (const auto& js : states) {
        const StateId s = js.at("id").get<int>();
        m.set_labels(s, js.at("labels").get<std::set<std::string>>());
        if (js.contains("lo")) {
            const auto lo = js.at("lo").get<std::vector<double>>();
            const auto hi = js.at("hi").get<std::vector<double>>();
            m.set_box(s, Box(Eigen::Map<const Vec>(lo.data(), static_cast<Eigen::Index>(lo.size())),
                             Eigen::Map<const Vec>(hi.data(), static_cast<Eigen::Index>(hi.size()))));
        }
        for (const auto& [name, jr] : js.at("rows").items()) {
            ActionId a = -1;
            for (std::size_t k = 0; k < actions.size(); ++k) {
                if (actions[k] == name) a = static_cast<ActionId>(k);
            }
            if (a < 0) throw Error("IMDP row references undeclared action '" + name + "'");
            TransitionRow row;
            for (const auto& t : jr) row.push_back({t.at("target").get<int>(), t.at("lo").get<double>(), t.at("hi").get<double>()});
            m.set_row(s, a, std::move(row));
        }
    }
    m.validate();
    return m;
}

}  // namespace gpimdp
