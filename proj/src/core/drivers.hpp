#ifndef BUBBLESIM_DRIVERS_HPP
#define BUBBLESIM_DRIVERS_HPP

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "core/rng.hpp"
#include "core/types.hpp"

namespace bubblesim {

// Up-factor convention for the driftless binomial lattices. The literal
// convention uses u = exp(sigma*T/N); the square-root convention uses the
// usual weak-convergence scaling u = exp(sigma*sqrt(T/N)).
enum class UpFactor { paper_literal, square_root };

struct BinomialDriverSpec {
    std::string name;
    double x0 = 1.0;    // lattice start, > 0
    double sigma = 0.0; // volatility per sqrt(time), >= 0
};

struct LatticeParams {
    double u = 1.0;
    double d = 1.0;
    double p = 0.5; // up-move probability
};

// u, d = 1/u and the martingale up-probability p = (1-d)/(u-d) for one step
// of length dt. sigma = 0 degenerates to u = d = 1 with p = 1/2 by convention.
LatticeParams lattice_params(double sigma, double dt, UpFactor convention);
LatticeParams lattice_params(const BinomialDriverSpec& spec, const TimeGrid& grid,
                             UpFactor convention);

// Bounded maps applied to raw lattice values. Probability-level drivers use
// the plain arctan squash into (0,1); the eta/varsigma intensity drivers are
// additionally scaled into (0, 1/4) so that composite type-change
// probabilities stay below 1/2 and row sums below 1.
inline double arctan_squash(double z) { return (2.0 / M_PI) * std::atan(z); }
inline double quarter_squash(double z) { return 0.25 * arctan_squash(z); }
inline double arctan_squash_inverse(double y) { return std::tan(y * M_PI / 2.0); }
inline double quarter_squash_inverse(double y) { return arctan_squash_inverse(4.0 * y); }

// The exogenous scenario component: all named drivers plus an optional
// per-period two-state component (used by the arbitrage construction).
struct DriverSet {
    TimeGrid grid;
    UpFactor convention = UpFactor::paper_literal;
    std::vector<BinomialDriverSpec> drivers;
    bool with_two_state = false;
    double state1_prob = 0.5; // P(state = 1) per period under the base measure

    int id_of(const std::string& name) const; // -1 if absent
    int require(const std::string& name) const;
};

// One realization of the scenario: values[d][n] for n = 0..N on the lattice
// {x0 u^j}, and per-period discrete states (1 or 2) when configured.
struct ScenarioPath {
    std::vector<std::vector<double>> values; // per driver, length N+1
    std::vector<int> states;                 // length N+1; states[0] unused (0)
    uint64_t seed = 0;
    uint64_t index = 0;

    double value(int driver_id, int period) const { return values[driver_id][period]; }
    int state(int period) const {
        return (period >= 0 && period < static_cast<int>(states.size())) ? states[period] : 0;
    }
};

// Per-driver, per-period up-probability overrides defining a tilted measure.
// Draw positions are shared with the base sampler, so running the same seed
// under base and tilt couples the paths through common random numbers.
struct MeasureTilt {
    struct Override {
        std::string driver;
        int period = 0; // 1..N
        double p_up = 0.5;
    };
    std::vector<Override> overrides;
    // Optional reweighting of the two-state component: q[k] = P(state=1) at
    // period k (index 1..N); empty means untouched.
    std::vector<double> state_probs;
};

class ScenarioSampler {
  public:
    explicit ScenarioSampler(DriverSet set);
    ScenarioSampler(DriverSet set, const MeasureTilt& tilt);

    const DriverSet& set() const { return set_; }

    ScenarioPath sample(const SeedScheme& seeds, uint64_t index) const;
    // Reuses the path's storage; bit-identical to sample().
    void sample_into(const SeedScheme& seeds, uint64_t index, ScenarioPath& out) const;

    // CSV dump (one row per period, one column per driver) for debugging.
    std::string csv(const ScenarioPath& path) const;

  private:
    DriverSet set_;
    std::vector<std::vector<LatticeParams>> steps_; // [driver][period-1]
    std::vector<double> state_probs_;               // per period P(state=1), index 0 unused
};

} // namespace bubblesim

#endif
