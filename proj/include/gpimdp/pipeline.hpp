#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpimdp/abstraction.hpp"
#include "gpimdp/checker.hpp"
#include "gpimdp/data.hpp"
#include "gpimdp/gp.hpp"
#include "gpimdp/validate.hpp"

namespace gpimdp {

struct DatasetConfig {
    std::string source = "synthetic";  ///< "synthetic" or "file"
    std::string system = "linear_a";   ///< built-in system for synthetic data, simulation and f_sup
    int samples = 500;                 ///< per action
    double noise_std = 0.01;
    std::filesystem::path path;        ///< CSV for source = "file"
};

struct RkhsConfig {
    std::optional<double> R;                ///< defaults to the generator noise level
    std::optional<std::vector<double>> f_sup;  ///< per output dimension; empty means derive from the system
    std::optional<double> lipschitz;
};

struct SimulationConfig {
    int trajectories = 10000;
    int horizon_cap = 500;
    double noise_std = 0.01;
    int audit_cells = 20;
};

struct RunConfig {
    DatasetConfig dataset;
    SqExpKernel kernel;
    RkhsConfig rkhs;
    GridSpec grid;
    BnbConfig bnb;
    std::string formula = "P>=0.95 [ !O U D ]";
    EpsilonPolicy epsilon;
    std::uint64_t seed = 1;
    int threads = 1;
    std::filesystem::path out = "out";
    SimulationConfig simulation;

    /// Throws on any inconsistency, including formula atoms the grid never assigns.
    void validate() const;
};

/// The linear case study: X = [-2,2]^2 labelled "X", target D, obstacle O.
RunConfig default_config();
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& cfg);

/// Error raised by a pipeline stage; the message starts with the stage name.
class StageError : public Error {
public:
    StageError(const std::string& stage, const std::string& what) : Error(stage + ": " + what), stage_(stage) {}
    [[nodiscard]] const std::string& stage() const { return stage_; }

private:
    std::string stage_;
};

/// Artifact file names inside the output directory.
namespace artifact {
inline constexpr const char* dataset = "dataset.csv";
inline constexpr const char* posteriors = "posteriors.json";
inline constexpr const char* enclosures = "enclosures.json";
inline constexpr const char* imdp = "imdp.json";
inline constexpr const char* result = "result.json";
inline constexpr const char* plot = "plot.csv";
inline constexpr const char* manifest = "manifest.json";
inline constexpr const char* audit = "audit.json";
}  // namespace artifact

struct StageTimings {
    double regression = 0.0;
    double images = 0.0;
    double transitions = 0.0;
    double verification = 0.0;
};

struct RegressOutput {
    Dataset data;
    PosteriorTable table;
    std::uint64_t data_hash = 0;
    double seconds = 0.0;
};

struct AbstractOutput {
    Partition part;
    ErrorModel errors;
    EnclosureCache enclosures;
    Imdp imdp;
    std::size_t cache_hits = 0;
    std::size_t cache_misses = 0;
    std::size_t transitions = 0;
    double images_seconds = 0.0;
    double transitions_seconds = 0.0;
};

struct RunResult {
    std::string formula;  ///< canonical printed form
    CheckResult check;
    double p_bar = 0.0;   ///< mean interval width over all states
    double determinate_fraction = 0.0;
    StageTimings timings;
    std::size_t cache_hits = 0;
    std::size_t cache_misses = 0;
};

/// Generates or loads the dataset and fits every posterior. Writes the
/// dataset CSV and the posterior archive.
RegressOutput regress(const RunConfig& cfg);

/// Partition, enclosures (reused from the cache when its key matches),
/// learning-error constants and transition intervals. Reads the posterior
/// archive; writes the enclosure cache and the IMDP export.
AbstractOutput abstract(const RunConfig& cfg);
AbstractOutput abstract(const RunConfig& cfg, const PosteriorTable& table, std::uint64_t data_hash, double noise_r);

/// Checks the configured formula on the exported IMDP; writes the result JSON
/// and the plot CSV.
RunResult verify(const RunConfig& cfg);
RunResult verify(const RunConfig& cfg, const Imdp& m);

/// regress, abstract and verify in order, then the manifest.
RunResult run(const RunConfig& cfg);

/// Monte Carlo estimate of the configured formula's path from x0 on the known
/// system under a built-in strategy ("constant", "round-robin" or "threshold").
Estimate simulate(const RunConfig& cfg, const Vec& x0, const std::string& strategy);

/// Soundness audit of the stored result against the known system; writes the
/// audit report.
AuditReport audit(const RunConfig& cfg);

/// Learning-error constants for every (action, dimension) of a posterior table.
ErrorModel error_model(const RunConfig& cfg, const PosteriorTable& table, double noise_r);

/// Key identifying the inputs an enclosure cache depends on.
std::string enclosure_key(const RunConfig& cfg, const PosteriorTable& table, std::uint64_t data_hash);

nlohmann::json to_json(const RunResult& r, const Imdp& m);

/// Plot rows: id, lower corner, upper corner, p_lo, p_hi, verdict. The unsafe state is skipped.
std::string plot_csv(const RunResult& r, const Imdp& m);

}  // namespace gpimdp
