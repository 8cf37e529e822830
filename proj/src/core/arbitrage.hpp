#ifndef BUBBLESIM_ARBITRAGE_HPP
#define BUBBLESIM_ARBITRAGE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "core/drivers.hpp"
#include "core/models.hpp"
#include "core/types.hpp"

namespace bubblesim {

// No-arbitrage machinery for the two-state immediate-break-up model: the
// closed-form one-period conditional expectation of p1 - p3, the q(k)
// martingale-measure solver, a feasibility construction, and martingale
// verification for the price.
//
// All evaluators require an all-unmatched distribution (pairs break up every
// period, so nothing else can reach them).

// Post-mutation unmatched masses of each type under one scenario state.
struct PostMutationMasses {
    double F1 = 0.0, F2 = 0.0, F3 = 0.0;
};
PostMutationMasses eval_F13(const ArbitrageStateParams& s, const ExtendedTypeDistribution& p);

// Conditional one-period drift contribution of one state:
// a = Gamma_1J - Gamma_3J evaluated through the immediate-break-up recursion.
double eval_a(const ArbitrageStateParams& s, const ExtendedTypeDistribution& p);

// q(k) = (p1 - p3 - a2) / (a1 - a2), admissible iff it falls strictly in
// (0,1), which needs the drifts to bracket p1 - p3.
struct QSolution {
    enum class Verdict { feasible, infeasible, degenerate };
    double q = 0.0;
    Verdict verdict = Verdict::infeasible;
    bool feasible() const { return verdict == Verdict::feasible; }
};
QSolution solve_q(double p_diff, double a1, double a2);

// Parameters for both states such that solve_q is feasible at p, following
// the constructive recipe: one state pushes the drift below p1 - p3 (full
// cross-type mutation pressure), the other above it (ratio condition on the
// mutation terms plus separation pressure), with the matching level bisected
// down until each side brackets. The symmetric case p1 = p3 has every q as a
// solution; q = 1/2 is returned with the degenerate flag.
struct FeasibleConstruction {
    ArbitrageModelParams params;
    double a1 = 0.0, a2 = 0.0;
    QSolution q;
    bool degenerate_symmetric = false;
};
FeasibleConstruction construct_feasible_params(const ExtendedTypeDistribution& p);

// Lattice specs of the price-side processes for martingale verification.
// Theta and F enter the price, so they must be plain martingale lattices
// here; Lambda and M only scale the impact term.
struct PriceDrivers {
    double theta0 = 5.0, sigma_theta = 0.2;
    double f0 = 100.0, sigma_f = 0.0;
    double lambda0 = 1.0, sigma_lambda = 0.3;
    double m0 = 1.0, sigma_m = 0.3;
};

struct MartingaleReport {
    struct Row {
        int period = 0;
        double a1 = 0.0, a2 = 0.0, q = 0.0, residual = 0.0;
        double mc_mean = 0.0, mc_se = 0.0;
    };
    std::vector<Row> rows;
    double max_residual = 0.0;     // analytic check (a)
    double max_mc_ratio = 0.0;     // max |mc_mean| / mc_se over periods
    bool analytic_ok = false;
    bool mc_ok = false;

    std::string csv() const; // k,a1,a2,q,residual
};

// Walks a deterministic distribution path, constructing a feasible measure at
// every period, and runs both checks: (a) q a1 + (1-q) a2 - (p1 - p3) = 0 to
// 1e-12, and (b) nested Monte Carlo of E^Q[S^k - S^{k-1}] at each reached
// node, n_resamples per node, required within 4 standard errors of zero.
// kappa = 0 throughout.
MartingaleReport verify_martingale(const ExtendedTypeDistribution& p0, const TimeGrid& grid,
                                   const PriceDrivers& drivers, int n_resamples, uint64_t seed,
                                   UpFactor convention = UpFactor::paper_literal);

// Exact small-instance oracle: enumerates the full scenario tree (two-state
// component plus Theta, F, Lambda lattices; M constant) and returns the
// largest deviation of E^Q[S^k] from S^0. Only sensible for a handful of
// periods; the tree has 16^N leaves.
double exact_tree_price_drift(const ExtendedTypeDistribution& p0, const TimeGrid& grid,
                              const PriceDrivers& drivers,
                              UpFactor convention = UpFactor::paper_literal);

} // namespace bubblesim

#endif
