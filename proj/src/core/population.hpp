#ifndef BUBBLESIM_POPULATION_HPP
#define BUBBLESIM_POPULATION_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "core/models.hpp"
#include "core/rng.hpp"
#include "core/types.hpp"

namespace bubblesim {

// Finite roster of agents: current type (0-based) and partner index, -1 when
// unmatched. The partner map is involutive and irreflexive where defined.
struct AgentPopulation {
    int K = 0;
    std::vector<int32_t> type;
    std::vector<int32_t> partner;

    int size() const { return static_cast<int>(type.size()); }

    // All agents unmatched with type counts as close to n * fractions as
    // integer rounding allows (largest-remainder apportionment).
    static AgentPopulation unmatched(int n, const std::vector<double>& fractions);

    ValidationReport validate() const;

    std::string csv() const; // agent_id,type,partner_id (types 1-based, -1 = none)
};

// Mutation: every agent redraws its type from eta[current][.], independently;
// partner links are untouched.
void mutation_step(AgentPopulation& pop, const Mat& eta, Rng& rng);

// Directed random matching of the currently unmatched agents:
//   1. each unmatched agent of type k proposes a partner type l with
//      probability theta[k][l], or J with the residual b[k];
//   2. proposal buckets A_kl are trimmed to min(|A_kl|, |A_lk|) by uniform
//      truncation (one uniformly chosen agent dropped when |A_kk| is odd);
//   3. pairs form through a uniformly random bijection A_kl -> A_lk (k < l)
//      and a uniformly random perfect matching on A_kk.
// Existing matches are preserved verbatim; dropped agents stay unmatched.
void match_step(AgentPopulation& pop, const Mat& theta, const std::vector<double>& b, Rng& rng);

// Break-up: each matched pair (k,l) separates with probability xi[k][l], the
// two agents then redrawing types independently from varsigma[k][l][.] and
// varsigma[l][k][.]; a staying pair redraws its joint type from
// sigma[k][l][.,.]. Unmatched agents are untouched.
void breakup_step(AgentPopulation& pop, const Mat& xi, const std::vector<double>& sigma,
                  const std::vector<double>& varsigma, Rng& rng);

// cell (k,l) = #{agents of type k matched to type l}/n; (k,J) = unmatched share.
ExtendedTypeDistribution empirical_distribution(const AgentPopulation& pop);

struct PeriodDistributions {
    ExtendedTypeDistribution post_mutation;
    ExtendedTypeDistribution post_matching;
    ExtendedTypeDistribution end_of_period;
};

// One full period: mutation -> matching -> break-up, each table evaluated at
// the realized empirical distribution of its sub-step (eta at the
// start-of-period distribution, theta post-mutation, xi/sigma/varsigma
// post-matching).
PeriodDistributions run_period(AgentPopulation& pop, const TransitionModel& model,
                               const ScenarioPath& w, int period, Rng& rng);

} // namespace bubblesim

#endif
