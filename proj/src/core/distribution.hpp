#ifndef BUBBLESIM_DISTRIBUTION_HPP
#define BUBBLESIM_DISTRIBUTION_HPP

#include <vector>

#include "core/models.hpp"
#include "core/types.hpp"

namespace bubblesim {

// Exact (infinite-population) evolution of the extended type distribution.
// One period factors into three maps evaluated in order:
//   post_mutation   with eta at the start-of-period distribution,
//   post_matching   with theta at the post-mutation distribution,
//   post_breakup    with xi/sigma/varsigma at the post-matching distribution.

// p~_kl = sum eta_{k1 k} eta_{l1 l} p_{k1 l1};  p~_kJ = sum_l p_lJ eta_{lk}.
ExtendedTypeDistribution post_mutation(const ExtendedTypeDistribution& p, const Mat& eta);

// p~~_kl = p_kl + theta_kl p_kJ;  p~~_kJ = b_k p_kJ. Flags a symmetry break
// beyond the tolerance, which indicates a theta without detailed balance.
ExtendedTypeDistribution post_matching(const ExtendedTypeDistribution& p, const Mat& theta,
                                       const std::vector<double>& b);

// p'_kl = sum (1-xi) sigma[k,l] p_{k1 l1};  p'_kJ = p_kJ + sum xi varsigma[k] p_{k1 l1}.
ExtendedTypeDistribution post_breakup(const ExtendedTypeDistribution& p, const Mat& xi,
                                      const std::vector<double>& sigma,
                                      const std::vector<double>& varsigma);

struct GammaStep {
    ExtendedTypeDistribution post_mutation;  // p-check
    ExtendedTypeDistribution post_matching;  // p-check-check
    ExtendedTypeDistribution next;           // p-hat at the end of the period
};

// Reusable table storage for the per-period evaluation.
struct GammaWorkspace {
    Mat eta, theta, xi;
    std::vector<double> b, sigma, varsigma;
};

// One period of the recursion. Raises on mass drift beyond the tolerance
// (the map is exactly mass-preserving, so drift indicates a bug); entries in
// [-1e-15, 0) are clamped to zero.
GammaStep gamma_step(const TransitionModel& model, const ScenarioPath& w, int period,
                     const ExtendedTypeDistribution& p_prev);
GammaStep gamma_step(const TransitionModel& model, const ScenarioPath& w, int period,
                     const ExtendedTypeDistribution& p_prev, GammaWorkspace& ws);
// Allocation-free variant reusing both the workspace and the step storage.
void gamma_step_into(const TransitionModel& model, const ScenarioPath& w, int period,
                     const ExtendedTypeDistribution& p_prev, GammaWorkspace& ws, GammaStep& step);

// In-place cores of the three maps.
void post_mutation_into(const ExtendedTypeDistribution& p, const Mat& eta,
                        ExtendedTypeDistribution& out);
void post_matching_into(const ExtendedTypeDistribution& p, const Mat& theta,
                        const std::vector<double>& b, ExtendedTypeDistribution& out);
void post_breakup_into(const ExtendedTypeDistribution& p, const Mat& xi,
                       const std::vector<double>& sigma, const std::vector<double>& varsigma,
                       ExtendedTypeDistribution& out);

// Extended-type Markov transition matrix over S x (S u {J}), built
// compositionally from the mutation, matching and break-up kernels. Cell
// order matches the distribution layout: index(k,l) = k*(K+1)+l, l = K is J.
struct TransitionMatrix {
    int K = 0;
    int period = 0;
    Mat z; // (K*(K+1)) x (K*(K+1)), rows sum to 1
};

TransitionMatrix transition_matrix(const TransitionModel& model, const ScenarioPath& w, int period,
                                   const ExtendedTypeDistribution& p_prev);

struct EvolveResult {
    std::vector<ExtendedTypeDistribution> p_hat;         // N+1 entries, [0] = start
    std::vector<ExtendedTypeDistribution> post_mutation; // N entries, period n at [n-1]
    std::vector<ExtendedTypeDistribution> post_matching; // N entries
};

// Iterates gamma_step along the scenario. Pure function of its inputs.
EvolveResult evolve(const ExtendedTypeDistribution& p0, const TransitionModel& model,
                    const ScenarioPath& w, int n_periods);

// Hot-loop variant: writes p_1 - p_3 for periods 0..N into out (size N+1)
// without retaining the intermediate distributions.
void evolve_fraction_difference(const ExtendedTypeDistribution& p0, const TransitionModel& model,
                                const ScenarioPath& w, int n_periods, double* out,
                                GammaWorkspace& ws);

// CSV stream of an evolve result: period, all p-hat cells, p1_minus_p3.
std::string evolve_csv(const EvolveResult& r);

} // namespace bubblesim

#endif
