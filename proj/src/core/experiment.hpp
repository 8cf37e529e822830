#ifndef BUBBLESIM_EXPERIMENT_HPP
#define BUBBLESIM_EXPERIMENT_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "core/arbitrage.hpp"
#include "core/drivers.hpp"
#include "core/market.hpp"
#include "core/models.hpp"
#include "core/types.hpp"

namespace bubblesim {

// Ordered key = value configuration. Order is preserved so that serialized
// configs and driver declaration order are reproducible byte for byte.
class Config {
  public:
    static Config parse(const std::string& text);
    static Config load(const std::string& path);

    void set(const std::string& key, const std::string& value); // insert or overwrite
    bool has(const std::string& key) const;
    const std::string* find(const std::string& key) const;

    std::string get_string(const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& key, double fallback) const;
    long long get_int(const std::string& key, long long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;

    std::string serialize() const;
    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  private:
    std::vector<std::pair<std::string, std::string>> entries_;
};

// Fills in the named experiment preset. Recognized names: figure1, figure2,
// figure3, figure3-tilt (figure3 plus the tilt overrides).
void apply_preset(Config& cfg, const std::string& name);

struct ConfigIssues {
    std::vector<std::string> errors;
    std::vector<std::string> warnings;
    bool ok() const { return errors.empty(); }
    std::string str() const;
};
ConfigIssues validate_config(const Config& cfg);

// Per-period sample mean and standard error over trajectories.
struct AggregateReport {
    std::vector<double> mean_beta, se_beta;
    std::vector<double> mean_p_diff, se_p_diff;
    long long paths = 0;
    double wall_seconds = 0.0;
    double paths_per_second = 0.0;
};

struct ExperimentResult {
    AggregateReport aggregate;
    std::vector<double> times;
    // CSV-ready rows of the first output.trajectories trajectories.
    std::vector<std::string> trajectory_rows;
    // Full market-path CSVs of the first output.market_paths trajectories.
    std::vector<std::string> market_path_csvs;
    // Sampled driver paths (one column per driver) of the first
    // output.scenarios trajectories, for debugging.
    std::vector<std::string> scenario_csvs;
};

// Runs the configured number of trajectories (scenario -> type-fraction
// dynamics -> market path). Deterministic for fixed (config, seed): results
// are independent of the worker count.
ExperimentResult run_experiment(const Config& cfg);

struct TiltResult {
    ExperimentResult base;
    ExperimentResult tilted;
};

// Runs the same seeds under the base and the tilted measure.
TiltResult run_tilt_experiment(const Config& cfg);

// Writes averages.csv (period,mean_beta,stderr), averages_p_diff.csv and,
// when trajectories were kept, trajectories.csv
// (period,trajectory,beta,p1_minus_p3) into out_dir.
void emit_figure_data(const ExperimentResult& r, const std::string& out_dir);

// Martingale verification configured through verify.* keys.
MartingaleReport run_verify_martingale(const Config& cfg);

// One seeded matching round on a small population; returns the population
// CSV after the match plus summary counts.
struct MatchingDemoResult {
    std::string population_csv;
    int agents = 0;
    int pairs_formed = 0;
    ExtendedTypeDistribution before, after;
};
MatchingDemoResult run_matching_demo(const Config& cfg);

// Internals shared with the test suites.
DriverSet driver_set_from_config(const Config& cfg);
std::unique_ptr<TransitionModel> model_from_config(const Config& cfg, const DriverSet& set);
MeasureTilt tilt_from_config(const Config& cfg);

} // namespace bubblesim

#endif
