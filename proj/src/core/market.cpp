#include "core/market.hpp"

#include <stdexcept>

namespace bubblesim {

ExecutionCost execution_cost(double quoted_price, double illiquidity, double shares) {
    if (shares < 0.0) throw std::invalid_argument("execution_cost: order size must be >= 0");
    if (illiquidity <= 0.0 && shares > 0.0)
        throw std::invalid_argument("execution_cost: illiquidity must be > 0 for a nonzero order");
    ExecutionCost c;
    c.total = quoted_price * shares + illiquidity * shares * shares;
    c.average = (shares > 0.0) ? quoted_price + illiquidity * shares : quoted_price;
    return c;
}

double signed_volume(double theta, double p1, double p3) { return theta * (p1 - p3); }

double bubble_step(double beta_prev, double kappa, double dt, double lambda, double illiquidity,
                   double volume_change) {
    if (dt <= 0.0) throw std::invalid_argument("bubble_step: dt must be > 0");
    return beta_prev - kappa * beta_prev * dt + 2.0 * lambda * illiquidity * volume_change;
}

BirthBurst birth_burst(const std::vector<double>& beta, const std::vector<double>& times) {
    if (beta.size() != times.size())
        throw std::invalid_argument("birth_burst: beta and grid lengths differ");
    BirthBurst bb;
    const double T = times.back();
    bb.tau_plus = T;
    bb.tau_zero = T;
    const int n = static_cast<int>(beta.size());
    for (int j = 0; j < n; ++j) {
        if (beta[j] > 0.0) {
            bb.birth_index = j;
            bb.tau_plus = times[j];
            break;
        }
    }
    if (bb.birth_index < 0) return bb;
    for (int j = bb.birth_index; j < n; ++j) {
        const bool exact_zero = beta[j] == 0.0;
        const bool sign_change = j > bb.birth_index && beta[j - 1] > 0.0 && beta[j] <= 0.0;
        if (exact_zero || sign_change) {
            bb.burst_index = j;
            bb.tau_zero = times[j];
            break;
        }
    }
    return bb;
}

MarketPath simulate_market_path(const std::vector<double>& p_diff,
                                const std::vector<double>& fundamental,
                                const std::vector<double>& lambda,
                                const std::vector<double>& illiquidity,
                                const std::vector<double>& theta, const MarketParams& params,
                                const std::vector<double>& times) {
    const size_t len = times.size();
    if (p_diff.size() != len || fundamental.size() != len || lambda.size() != len ||
        illiquidity.size() != len || theta.size() != len)
        throw std::invalid_argument("simulate_market_path: series misaligned with the grid");

    MarketPath mp;
    mp.times = times;
    mp.p_diff = p_diff;
    mp.fundamental = fundamental;
    mp.volume.resize(len);
    mp.beta.resize(len);
    mp.price.resize(len);

    mp.volume[0] = params.x0_zero ? 0.0 : theta[0] * p_diff[0];
    for (size_t n = 1; n < len; ++n) mp.volume[n] = theta[n] * p_diff[n];

    mp.beta[0] = 0.0;
    mp.price[0] = fundamental[0];
    for (size_t n = 1; n < len; ++n) {
        const double dx = mp.volume[n] - mp.volume[n - 1];
        mp.beta[n] = bubble_step(mp.beta[n - 1], params.kappa, times[n] - times[n - 1], lambda[n],
                                 illiquidity[n], dx);
        mp.price[n] = fundamental[n] + mp.beta[n];
    }

    mp.stops = birth_burst(mp.beta, times);

    // Wealth with D identically zero: the market price until the burst, the
    // fundamental from the burst on.
    mp.wealth.resize(len);
    mp.fund_wealth = fundamental;
    for (size_t n = 0; n < len; ++n) {
        const bool pre_burst = mp.stops.burst_index < 0 || static_cast<int>(n) < mp.stops.burst_index;
        mp.wealth[n] = pre_burst ? mp.price[n] : mp.fundamental[n];
    }
    return mp;
}

std::string MarketPath::csv() const {
    std::string out = "period,t,F,S,beta,X,p1_minus_p3\n";
    for (size_t n = 0; n < times.size(); ++n) {
        out += std::to_string(n) + "," + fmt_g17(times[n]) + "," + fmt_g17(fundamental[n]) + "," +
               fmt_g17(price[n]) + "," + fmt_g17(beta[n]) + "," + fmt_g17(volume[n]) + "," +
               fmt_g17(p_diff[n]) + "\n";
    }
    return out;
}

} // namespace bubblesim
