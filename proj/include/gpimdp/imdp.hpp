#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpimdp/box.hpp"
#include "gpimdp/types.hpp"

namespace gpimdp {

/// One sparse entry of an interval transition row.
struct Transition {
    StateId target = 0;
    double lo = 0.0;
    double hi = 0.0;

    friend bool operator==(const Transition&, const Transition&) = default;
};

using TransitionRow = std::vector<Transition>;

/// Interval MDP over states 0..num_states-1. An empty row means the action is
/// not available in that state.
class Imdp {
public:
    Imdp() = default;
    Imdp(int num_states, std::vector<std::string> actions);

    [[nodiscard]] int num_states() const { return num_states_; }
    [[nodiscard]] int num_actions() const { return static_cast<int>(actions_.size()); }
    [[nodiscard]] const std::vector<std::string>& actions() const { return actions_; }

    [[nodiscard]] const TransitionRow& row(StateId s, ActionId a) const;
    void set_row(StateId s, ActionId a, TransitionRow row);
    [[nodiscard]] bool available(StateId s, ActionId a) const { return !row(s, a).empty(); }

    [[nodiscard]] const std::set<std::string>& labels(StateId s) const;
    void set_labels(StateId s, std::set<std::string> labels);
    /// Every proposition formulas may mention, including ones no state carries.
    [[nodiscard]] const std::set<std::string>& alphabet() const { return alphabet_; }
    void declare_atom(const std::string& atom) { alphabet_.insert(atom); }

    /// Optional geometry, used for export and plotting only.
    [[nodiscard]] const std::optional<Box>& box(StateId s) const;
    void set_box(StateId s, Box b);

    [[nodiscard]] std::optional<StateId> unsafe_state() const { return unsafe_; }
    void set_unsafe_state(StateId s);

    /// Throws on any entry outside 0 <= lo <= hi <= 1, on rows violating
    /// sum lo <= 1 <= sum hi, on out-of-range targets and on states without actions.
    void validate() const;

private:
    [[nodiscard]] std::size_t index(StateId s, ActionId a) const;

    int num_states_ = 0;
    std::vector<std::string> actions_;
    std::vector<TransitionRow> rows_;
    std::vector<std::set<std::string>> labels_;
    std::vector<std::optional<Box>> boxes_;
    std::set<std::string> alphabet_;
    std::optional<StateId> unsafe_;
};

/// Tolerance used when checking sum lo <= 1 <= sum hi on floating-point rows.
inline constexpr double kRowTolerance = 1e-9;

/// Throws when the row is not a feasible interval distribution.
void check_row(const TransitionRow& row, int num_states, const std::string& where);

inline constexpr int kImdpSchemaVersion = 1;

nlohmann::json to_json(const Imdp& m);
Imdp imdp_from_json(const nlohmann::json& j);

}  // namespace gpimdp
