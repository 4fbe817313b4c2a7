#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gpimdp/box.hpp"
#include "gpimdp/interval.hpp"
#include "gpimdp/types.hpp"

namespace gpimdp {

/// One noisy transition: state x, action, measured successor y.
struct Sample {
    Vec x;
    ActionId action = 0;
    Vec y;
};

struct NoiseSpec {
    double r_subgaussian = 0.01;   ///< R, the sub-Gaussian constant of the measurement noise
    double generator_stddev = 0.0; ///< only meaningful for synthetic data
};

/// Samples over a fixed state dimension and an ordered action set. Action
/// names are interned to dense ids in order of declaration.
class Dataset {
public:
    Dataset() = default;
    Dataset(int n, std::vector<std::string> actions, NoiseSpec noise = {});

    [[nodiscard]] int dim() const { return n_; }
    [[nodiscard]] const std::vector<std::string>& actions() const { return actions_; }
    [[nodiscard]] const std::vector<Sample>& samples() const { return samples_; }
    [[nodiscard]] const NoiseSpec& noise() const { return noise_; }
    [[nodiscard]] std::size_t size() const { return samples_.size(); }

    /// Dense id for a name, or nullopt.
    [[nodiscard]] std::optional<ActionId> find_action(std::string_view name) const;
    [[nodiscard]] ActionId action_id(std::string_view name) const;

    void add(Sample s);

    [[nodiscard]] std::size_t count_for(ActionId a) const;
    /// Training inputs of action `a`, one row per sample.
    [[nodiscard]] Mat inputs_for(ActionId a) const;
    /// Output component `dim` of the measurements for action `a`.
    [[nodiscard]] Vec targets_for(ActionId a, int dim) const;

    void set_noise(NoiseSpec noise) { noise_ = noise; }

private:
    int n_ = 0;
    std::vector<std::string> actions_;
    std::vector<Sample> samples_;
    NoiseSpec noise_;
};

/// Optional expectations checked while loading a CSV file.
struct DatasetSchema {
    std::optional<int> dim;
    std::optional<std::vector<std::string>> actions;
    NoiseSpec noise;
};

/// Parses the CSV dataset format: header `x1..xn,action,y1..yn`, one sample per row.
Dataset parse_dataset(std::string_view text, const DatasetSchema& schema = {});
Dataset load_dataset(const std::filesystem::path& path, const DatasetSchema& schema = {});

/// Shortest round-trip decimal output, so save/load is bit-exact.
std::string format_dataset(const Dataset& data);
void save_dataset(const Dataset& data, const std::filesystem::path& path);

/// FNV-1a 64 over the canonical CSV serialization.
std::uint64_t dataset_hash(const Dataset& data);

enum class SystemName { LinearA, LinearB, Switched, Nonlinear };

/// Ground-truth dynamics used for synthetic data and Monte Carlo validation.
struct KnownSystem {
    SystemName name = SystemName::LinearA;
    std::string label;
    int n = 2;
    std::vector<std::string> actions;
    std::function<Vec(const Vec&, ActionId)> dynamics;
    /// Interval extension of the dynamics, used for sound sup |f_i| over a box.
    std::function<std::vector<Interval>(const Box&, ActionId)> image;

    [[nodiscard]] Vec step(const Vec& x, ActionId a) const { return dynamics(x, a); }
    /// sup over `domain` of |f_i(x, a)| (interval-arithmetic upper bound).
    [[nodiscard]] double output_sup(const Box& domain, ActionId a, int i) const;
};

KnownSystem builtin_system(std::string_view name);

/// `count` samples per action, x uniform over `domain`, y = f(x, a) plus
/// independent N(0, noise_stddev^2) per component.
Dataset generate_dataset(const KnownSystem& sys, int count, const Box& domain, double noise_stddev,
                         std::uint64_t seed);

}  // namespace gpimdp
