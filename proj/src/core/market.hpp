#ifndef BUBBLESIM_MARKET_HPP
#define BUBBLESIM_MARKET_HPP

#include <string>
#include <vector>

#include "core/types.hpp"

namespace bubblesim {

// Total cost and average price per share of a buy market order of size x
// against the linear supply curve S + M x (book density 1/(2M)):
// cost = S x + M x^2, average = S + M x.
struct ExecutionCost {
    double total = 0.0;
    double average = 0.0;
};
ExecutionCost execution_cost(double quoted_price, double illiquidity, double shares);

// Signed aggregate volume X = Theta (p1 - p3).
double signed_volume(double theta, double p1, double p3);

// One step of the bubble recursion:
// beta_n = beta_{n-1} - kappa beta_{n-1} dt + 2 Lambda_n M_n dX_n.
double bubble_step(double beta_prev, double kappa, double dt, double lambda, double illiquidity,
                   double volume_change);

// Birth and burst stopping times on the grid. tau_plus is the time of the
// first strictly positive bubble value, capped at T; tau_zero the first
// return to zero at or after birth, again capped at T. A sign change
// beta_{j-1} > 0 >= beta_j after birth counts as a burst at t_j.
struct BirthBurst {
    double tau_plus = 0.0;
    double tau_zero = 0.0;
    int birth_index = -1; // -1 when capped
    int burst_index = -1;
};
BirthBurst birth_burst(const std::vector<double>& beta, const std::vector<double>& times);

struct MarketParams {
    double kappa = 0.0;
    bool x0_zero = false; // true: X_0 := 0 regardless of p1_0 - p3_0
};

// Time series of one simulated market, all aligned on the grid.
struct MarketPath {
    std::vector<double> times;
    std::vector<double> fundamental;  // F
    std::vector<double> price;        // S = F + beta
    std::vector<double> beta;         // bubble
    std::vector<double> volume;       // X
    std::vector<double> p_diff;       // p1 - p3
    std::vector<double> wealth;       // W (dividends identically zero)
    std::vector<double> fund_wealth;  // W^F
    BirthBurst stops;

    std::string csv() const; // period,t,F,S,beta,X,p1_minus_p3
};

// Runs the price/bubble recursion for given exogenous series. All series
// must have length N+1 where N = times.size()-1.
MarketPath simulate_market_path(const std::vector<double>& p_diff,
                                const std::vector<double>& fundamental,
                                const std::vector<double>& lambda,
                                const std::vector<double>& illiquidity,
                                const std::vector<double>& theta, const MarketParams& params,
                                const std::vector<double>& times);

} // namespace bubblesim

#endif
