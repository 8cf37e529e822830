#include "doctest.h"

#include <cmath>

#include "core/market.hpp"
#include "core/rng.hpp"

using namespace bubblesim;

TEST_CASE("execution cost equals the book integral") {
    CHECK(execution_cost(10.0, 0.5, 0.0).total == 0.0);
    const ExecutionCost c = execution_cost(10.0, 0.5, 2.0);
    CHECK(c.total == doctest::Approx(22.0).epsilon(1e-15));
    CHECK(c.average == doctest::Approx(11.0).epsilon(1e-15));

    // Independent route: integrate z / (2M) between the quote and the walk
    // depth z_x = S + 2Mx, in closed form.
    Rng rng(1, 0);
    for (int rep = 0; rep < 50; ++rep) {
        const double s = 1.0 + 20.0 * rng.uniform();
        const double m = 0.05 + rng.uniform();
        const double x = 5.0 * rng.uniform();
        const double zx = s + 2.0 * m * x;
        const double integral = (zx * zx - s * s) / (4.0 * m);
        const ExecutionCost ec = execution_cost(s, m, x);
        CHECK(ec.total == doctest::Approx(integral).epsilon(1e-12));
        // average premium is linear in x with slope M
        if (x > 0.0) CHECK((ec.average - s) / x == doctest::Approx(m).epsilon(1e-12));
    }
}

TEST_CASE("execution cost rejects a nonpositive book depth") {
    CHECK_THROWS_AS(execution_cost(10.0, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(execution_cost(10.0, -0.5, 1.0), std::invalid_argument);
    CHECK(execution_cost(10.0, 0.0, 0.0).total == 0.0);
}

TEST_CASE("signed volume") {
    CHECK(signed_volume(2.0, 0.3, 0.3) == 0.0);
    CHECK(signed_volume(5.0, 4.0 / 9, 1.0 / 3) == doctest::Approx(5.0 / 9).epsilon(1e-15));
    Rng rng(2, 0);
    for (int rep = 0; rep < 20; ++rep) {
        const double p1 = rng.uniform();
        const double p3 = rng.uniform();
        const double x = signed_volume(1.5, p1, p3);
        if (p1 > p3) CHECK(x > 0.0);
        if (p1 < p3) CHECK(x < 0.0);
    }
}

TEST_CASE("bubble step arithmetic") {
    CHECK(bubble_step(0.5, 0.01, 0.01, 1.0, 1.0, 0.1) == doctest::Approx(0.69995).epsilon(1e-15));
    CHECK(bubble_step(0.3, 0.0, 0.5, 2.0, 1.5, -0.05) ==
          doctest::Approx(0.3 + 2.0 * 2.0 * 1.5 * -0.05).epsilon(1e-15));
    CHECK(bubble_step(0.0, 0.01, 0.01, 1.0, 1.0, 0.0) == 0.0);
    CHECK_THROWS_AS(bubble_step(0.0, 0.0, 0.0, 1.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("without forcing the bubble decays monotonically") {
    double beta = 0.8;
    double prev = beta;
    for (int n = 0; n < 50; ++n) {
        beta = bubble_step(beta, 0.5, 0.1, 1.0, 1.0, 0.0);
        CHECK(std::abs(beta) < std::abs(prev));
        prev = beta;
    }
}

TEST_CASE("birth and burst detection") {
    SUBCASE("flat path caps both times at the horizon") {
        const auto bb = birth_burst({0, 0, 0, 0}, {0, 0.25, 0.5, 0.75});
        CHECK(bb.tau_plus == 0.75);
        CHECK(bb.tau_zero == 0.75);
        CHECK(bb.birth_index == -1);
    }
    SUBCASE("rise and exact return to zero") {
        const auto bb = birth_burst({0, 0.2, 0.1, 0.0, -0.1}, {0, 1, 2, 3, 4});
        CHECK(bb.tau_plus == 1.0);
        CHECK(bb.tau_zero == 3.0);
        CHECK(bb.birth_index == 1);
        CHECK(bb.burst_index == 3);
    }
    SUBCASE("negative bubble never births") {
        const auto bb = birth_burst({0, -0.3, -0.1, 0.0}, {0, 1, 2, 3});
        CHECK(bb.tau_plus == 3.0);
        CHECK(bb.tau_zero == 3.0);
    }
    SUBCASE("sign change without an exact zero counts as a burst") {
        const auto bb = birth_burst({0, 0.2, -0.05, 0.1}, {0, 1, 2, 3});
        CHECK(bb.tau_plus == 1.0);
        CHECK(bb.tau_zero == 2.0);
    }
    SUBCASE("positive until the horizon never bursts") {
        const auto bb = birth_burst({0, 0.2, 0.3, 0.1}, {0, 1, 2, 3});
        CHECK(bb.tau_plus == 1.0);
        CHECK(bb.tau_zero == 3.0);
        CHECK(bb.burst_index == -1);
    }
}

namespace {

std::vector<double> constant(double v, size_t len) { return std::vector<double>(len, v); }

} // namespace

TEST_CASE("a balanced market never leaves the fundamental") {
    const std::vector<double> times = {0, 0.25, 0.5, 0.75, 1.0};
    MarketParams params;
    params.kappa = 0.01;
    const MarketPath mp = simulate_market_path(constant(0.0, 5), constant(100.0, 5),
                                               constant(1.0, 5), constant(1.0, 5),
                                               constant(0.9, 5), params, times);
    for (int n = 0; n < 5; ++n) {
        CHECK(mp.beta[n] == 0.0);
        CHECK(mp.price[n] == 100.0);
    }
}

TEST_CASE("market path reproduces the per-step recursion and the beta identity") {
    const std::vector<double> times = {0, 0.1, 0.2, 0.3, 0.4};
    const std::vector<double> pdiff = {0.1, 0.25, 0.2, -0.05, 0.0};
    const std::vector<double> fund = {100, 101, 100.5, 99.5, 100};
    const std::vector<double> lambda = {1.0, 0.9, 1.1, 1.0, 0.95};
    const std::vector<double> ill = {1.0, 1.2, 0.8, 1.0, 1.1};
    const std::vector<double> theta = {0.8, 0.85, 0.8, 0.75, 0.8};
    MarketParams params;
    params.kappa = 0.05;

    const MarketPath mp = simulate_market_path(pdiff, fund, lambda, ill, theta, params, times);
    double beta = 0.0;
    double x_prev = theta[0] * pdiff[0];
    for (int n = 1; n < 5; ++n) {
        const double x = theta[n] * pdiff[n];
        beta = bubble_step(beta, params.kappa, times[n] - times[n - 1], lambda[n], ill[n],
                           x - x_prev);
        x_prev = x;
        CHECK(mp.beta[n] == doctest::Approx(beta).epsilon(1e-15));
        CHECK(mp.price[n] == mp.fundamental[n] + mp.beta[n]); // identical arithmetic, exact
    }

    // Wealth tracks the price until the burst index, the fundamental after.
    for (size_t n = 0; n < times.size(); ++n) {
        const bool pre = mp.stops.burst_index < 0 || static_cast<int>(n) < mp.stops.burst_index;
        CHECK(mp.wealth[n] == (pre ? mp.price[n] : mp.fundamental[n]));
        CHECK(mp.fund_wealth[n] == mp.fundamental[n]);
        if (pre) CHECK(mp.wealth[n] - mp.fund_wealth[n] == doctest::Approx(mp.beta[n]));
    }
}

TEST_CASE("the x0-zero convention changes only the first increment") {
    const std::vector<double> times = {0, 0.5, 1.0};
    const std::vector<double> pdiff = {0.2, 0.2, 0.1};
    MarketParams with_x0;
    MarketParams zeroed;
    zeroed.x0_zero = true;
    const auto a = simulate_market_path(pdiff, constant(1, 3), constant(1, 3), constant(1, 3),
                                        constant(1, 3), with_x0, times);
    const auto b = simulate_market_path(pdiff, constant(1, 3), constant(1, 3), constant(1, 3),
                                        constant(1, 3), zeroed, times);
    CHECK(a.volume[0] == doctest::Approx(0.2));
    CHECK(b.volume[0] == 0.0);
    CHECK(b.beta[1] - a.beta[1] == doctest::Approx(2.0 * 0.2).epsilon(1e-12));
}

TEST_CASE("negative bubbles are representable") {
    const std::vector<double> times = {0, 0.5, 1.0};
    const std::vector<double> pdiff = {0.0, -0.3, -0.2};
    const auto mp = simulate_market_path(pdiff, constant(1, 3), constant(1, 3), constant(1, 3),
                                         constant(1, 3), MarketParams{}, times);
    CHECK(mp.beta[1] < 0.0);
    CHECK(mp.stops.tau_plus == 1.0);
}

TEST_CASE("misaligned series are rejected") {
    const std::vector<double> times = {0, 0.5, 1.0};
    CHECK_THROWS_AS(simulate_market_path(constant(0, 2), constant(1, 3), constant(1, 3),
                                         constant(1, 3), constant(1, 3), MarketParams{}, times),
                    std::invalid_argument);
}

TEST_CASE("market csv carries the documented columns") {
    const std::vector<double> times = {0, 1.0};
    const auto mp = simulate_market_path(constant(0.1, 2), constant(100, 2), constant(1, 2),
                                         constant(1, 2), constant(1, 2), MarketParams{}, times);
    const std::string csv = mp.csv();
    CHECK(csv.rfind("period,t,F,S,beta,X,p1_minus_p3\n", 0) == 0);
}
