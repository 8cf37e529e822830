#include "core/drivers.hpp"

#include <stdexcept>

namespace bubblesim {

LatticeParams lattice_params(double sigma, double dt, UpFactor convention) {
    if (sigma < 0.0) throw std::invalid_argument("driver sigma must be >= 0");
    if (dt <= 0.0) throw std::invalid_argument("driver step must have dt > 0");
    LatticeParams lp;
    if (sigma == 0.0) return lp; // u = d = 1, p = 1/2 by convention
    const double expo = (convention == UpFactor::paper_literal) ? sigma * dt : sigma * std::sqrt(dt);
    lp.u = std::exp(expo);
    lp.d = 1.0 / lp.u;
    lp.p = (1.0 - lp.d) / (lp.u - lp.d);
    return lp;
}

LatticeParams lattice_params(const BinomialDriverSpec& spec, const TimeGrid& grid,
                             UpFactor convention) {
    if (spec.x0 <= 0.0) throw std::invalid_argument("driver " + spec.name + ": x0 must be > 0");
    return lattice_params(spec.sigma, grid.horizon() / grid.periods(), convention);
}

int DriverSet::id_of(const std::string& name) const {
    for (size_t i = 0; i < drivers.size(); ++i)
        if (drivers[i].name == name) return static_cast<int>(i);
    return -1;
}

int DriverSet::require(const std::string& name) const {
    const int id = id_of(name);
    if (id < 0) throw std::invalid_argument("unknown driver: " + name);
    return id;
}

ScenarioSampler::ScenarioSampler(DriverSet set) : ScenarioSampler(std::move(set), MeasureTilt{}) {}

ScenarioSampler::ScenarioSampler(DriverSet set, const MeasureTilt& tilt) : set_(std::move(set)) {
    const int N = set_.grid.periods();
    steps_.resize(set_.drivers.size());
    for (size_t d = 0; d < set_.drivers.size(); ++d) {
        const auto& spec = set_.drivers[d];
        if (spec.x0 <= 0.0) throw std::invalid_argument("driver " + spec.name + ": x0 must be > 0");
        steps_[d].resize(N);
        for (int n = 1; n <= N; ++n)
            steps_[d][n - 1] = lattice_params(spec.sigma, set_.grid.dt(n), set_.convention);
    }
    state_probs_.assign(N + 1, set_.state1_prob);
    if (!tilt.state_probs.empty()) {
        if (static_cast<int>(tilt.state_probs.size()) != N + 1 &&
            static_cast<int>(tilt.state_probs.size()) != N)
            throw std::invalid_argument("state tilt must provide one probability per period");
        const size_t off = (tilt.state_probs.size() == static_cast<size_t>(N)) ? 1 : 0;
        for (int n = 1; n <= N; ++n) {
            const double q = tilt.state_probs[n - off];
            if (!(q > 0.0 && q < 1.0))
                throw std::invalid_argument("state tilt probability must lie in (0,1)");
            state_probs_[n] = q;
        }
    }
    for (const auto& ov : tilt.overrides) {
        const int id = set_.require(ov.driver);
        if (ov.period < 1 || ov.period > N)
            throw std::invalid_argument("tilt override for " + ov.driver + ": period " +
                                        std::to_string(ov.period) + " out of range");
        if (!(ov.p_up > 0.0 && ov.p_up < 1.0))
            throw std::invalid_argument("tilt override for " + ov.driver +
                                        ": up-probability must lie in (0,1)");
        steps_[id][ov.period - 1].p = ov.p_up;
    }
}

ScenarioPath ScenarioSampler::sample(const SeedScheme& seeds, uint64_t index) const {
    ScenarioPath path;
    sample_into(seeds, index, path);
    return path;
}

void ScenarioSampler::sample_into(const SeedScheme& seeds, uint64_t index, ScenarioPath& out) const {
    const int N = set_.grid.periods();
    const size_t D = set_.drivers.size();
    out.seed = seeds.base;
    out.index = index;
    out.values.resize(D);
    for (size_t d = 0; d < D; ++d) {
        out.values[d].resize(N + 1);
        out.values[d][0] = set_.drivers[d].x0;
    }
    out.states.assign(N + 1, 0);

    Rng rng = seeds.stream(index);
    // Fixed draw order: for each period, one uniform per driver in declared
    // order, then one for the two-state component. Tilted samplers consume
    // the same positions, which couples base and tilted paths.
    for (int n = 1; n <= N; ++n) {
        for (size_t d = 0; d < D; ++d) {
            const double u = rng.uniform();
            const LatticeParams& lp = steps_[d][n - 1];
            const double prev = out.values[d][n - 1];
            out.values[d][n] = (u < lp.p) ? prev * lp.u : prev * lp.d;
        }
        if (set_.with_two_state) {
            const double u = rng.uniform();
            out.states[n] = (u < state_probs_[n]) ? 1 : 2;
        }
    }
}

std::string ScenarioSampler::csv(const ScenarioPath& path) const {
    std::string out = "period";
    for (const auto& d : set_.drivers) out += "," + d.name;
    if (set_.with_two_state) out += ",state";
    out += '\n';
    const int N = set_.grid.periods();
    for (int n = 0; n <= N; ++n) {
        out += std::to_string(n);
        for (size_t d = 0; d < set_.drivers.size(); ++d) out += "," + fmt_g17(path.values[d][n]);
        if (set_.with_two_state) out += "," + std::to_string(path.states[n]);
        out += '\n';
    }
    return out;
}

} // namespace bubblesim
