#include "doctest.h"

#include <cmath>

#include "core/drivers.hpp"

using namespace bubblesim;

namespace {

DriverSet two_driver_set() {
    DriverSet set;
    set.grid = TimeGrid::uniform(100, 1.0);
    set.drivers = {{"Lambda", 1.0, 0.3}, {"M", 1.0, 0.3}};
    return set;
}

} // namespace

TEST_CASE("lattice parameters, literal convention") {
    const LatticeParams lp = lattice_params(0.3, 0.01, UpFactor::paper_literal);
    CHECK(lp.u == doctest::Approx(1.0030045045033771).epsilon(1e-15));
    CHECK(lp.d == doctest::Approx(0.99700449550337289).epsilon(1e-15));
    CHECK(lp.p == doctest::Approx(0.49925000056250213).epsilon(1e-13));
}

TEST_CASE("lattice parameters, square-root convention") {
    const LatticeParams lp = lattice_params(0.3, 0.01, UpFactor::square_root);
    CHECK(lp.u == doctest::Approx(1.0304545339535169).epsilon(1e-15));
}

TEST_CASE("zero volatility degenerates to a constant lattice") {
    const LatticeParams lp = lattice_params(0.0, 0.01, UpFactor::paper_literal);
    CHECK(lp.u == 1.0);
    CHECK(lp.d == 1.0);
    CHECK(lp.p == 0.5);
}

TEST_CASE("negative volatility is rejected") {
    CHECK_THROWS_AS(lattice_params(-0.1, 0.01, UpFactor::paper_literal), std::invalid_argument);
}

TEST_CASE("one lattice step is exactly mean preserving") {
    // p u + (1-p) d = d + (1-d) = 1 for p = (1-d)/(u-d), any u.
    for (double sigma : {0.05, 0.3, 1.0, 4.0}) {
        const LatticeParams lp = lattice_params(sigma, 0.01, UpFactor::paper_literal);
        CHECK(lp.p * lp.u + (1.0 - lp.p) * lp.d == doctest::Approx(1.0).epsilon(1e-15));
    }
}

TEST_CASE("sampling is a pure function of seed and index") {
    const ScenarioSampler sampler((two_driver_set()));
    const SeedScheme seeds{12345};
    const ScenarioPath a = sampler.sample(seeds, 7);
    const ScenarioPath b = sampler.sample(seeds, 7);
    CHECK(a.values == b.values);

    // Order insensitivity: drawing other indices first changes nothing.
    (void)sampler.sample(seeds, 3);
    const ScenarioPath c = sampler.sample(seeds, 7);
    CHECK(a.values == c.values);
}

TEST_CASE("zero-volatility drivers stay constant") {
    DriverSet set;
    set.grid = TimeGrid::uniform(10, 1.0);
    set.drivers = {{"A", 2.5, 0.0}, {"B", 0.75, 0.0}};
    const ScenarioSampler sampler(set);
    const ScenarioPath p = sampler.sample(SeedScheme{1}, 0);
    for (int n = 0; n <= 10; ++n) {
        CHECK(p.value(0, n) == 2.5);
        CHECK(p.value(1, n) == 0.75);
    }
}

TEST_CASE("paths live on the lattice grid") {
    const ScenarioSampler sampler((two_driver_set()));
    const ScenarioPath p = sampler.sample(SeedScheme{99}, 11);
    const LatticeParams lp = lattice_params(0.3, 0.01, UpFactor::paper_literal);
    for (int n = 1; n <= 100; ++n) {
        const double ratio = p.value(0, n) / p.value(0, n - 1);
        const bool up = std::abs(ratio - lp.u) < 1e-12;
        const bool down = std::abs(ratio - lp.d) < 1e-12;
        CHECK((up || down));
    }
}

TEST_CASE("driftless lattice is a martingale along the whole path") {
    const ScenarioSampler sampler((two_driver_set()));
    const SeedScheme seeds{777};
    const int n_paths = 200000;
    double mean = 0.0, m2 = 0.0;
    for (int i = 0; i < n_paths; ++i) {
        const ScenarioPath p = sampler.sample(seeds, static_cast<uint64_t>(i));
        const double x = p.value(0, 100);
        const double delta = x - mean;
        mean += delta / (i + 1);
        m2 += delta * (x - mean);
    }
    const double se = std::sqrt(m2 / (n_paths - 1) / n_paths);
    CHECK(std::abs(mean - 1.0) <= 3.0 * se);
}

TEST_CASE("distinct drivers move independently") {
    const ScenarioSampler sampler((two_driver_set()));
    const SeedScheme seeds{31337};
    const int n_paths = 100000;
    // Correlation of the first-step up/down indicators across drivers.
    double sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
    for (int i = 0; i < n_paths; ++i) {
        const ScenarioPath p = sampler.sample(seeds, static_cast<uint64_t>(i));
        const double x = p.value(0, 1) > 1.0 ? 1.0 : 0.0;
        const double y = p.value(1, 1) > 1.0 ? 1.0 : 0.0;
        sx += x;
        sy += y;
        sxy += x * y;
        sxx += x * x;
        syy += y * y;
    }
    const double n = n_paths;
    const double cov = sxy / n - (sx / n) * (sy / n);
    const double vx = sxx / n - (sx / n) * (sx / n);
    const double vy = syy / n - (sy / n) * (sy / n);
    const double corr = cov / std::sqrt(vx * vy);
    CHECK(std::abs(corr) <= 3.0 / std::sqrt(n));
}

TEST_CASE("tilt changes only the targeted period") {
    DriverSet set = two_driver_set();
    MeasureTilt tilt;
    tilt.overrides = {{"Lambda", 1, 0.95}};
    const ScenarioSampler base{set};
    const ScenarioSampler tilted(set, tilt);
    const SeedScheme seeds{5};

    int base_up = 0, tilt_up = 0, later_diff = 0;
    for (int i = 0; i < 4000; ++i) {
        const ScenarioPath a = base.sample(seeds, static_cast<uint64_t>(i));
        const ScenarioPath b = tilted.sample(seeds, static_cast<uint64_t>(i));
        base_up += a.value(0, 1) > 1.0;
        tilt_up += b.value(0, 1) > 1.0;
        // Shared draw positions: whenever the first move agrees, the whole
        // Lambda path agrees.
        if ((a.value(0, 1) > 1.0) == (b.value(0, 1) > 1.0)) {
            for (int n = 0; n <= 100; ++n)
                if (a.value(0, n) != b.value(0, n)) ++later_diff;
        }
        // The untouched driver is identical under both measures.
        for (int n = 0; n <= 100; ++n) CHECK(a.value(1, n) == b.value(1, n));
    }
    CHECK(later_diff == 0);
    CHECK(base_up < 2400);  // near half of 4000
    CHECK(tilt_up > 3600);  // near 0.95 of 4000
}

TEST_CASE("empty tilt reproduces the base sampler") {
    DriverSet set = two_driver_set();
    const ScenarioSampler base{set};
    const ScenarioSampler tilted(set, MeasureTilt{});
    const SeedScheme seeds{6};
    const ScenarioPath a = base.sample(seeds, 42);
    const ScenarioPath b = tilted.sample(seeds, 42);
    CHECK(a.values == b.values);
}

TEST_CASE("tilt validation") {
    DriverSet set = two_driver_set();
    MeasureTilt bad_p;
    bad_p.overrides = {{"Lambda", 1, 1.0}};
    CHECK_THROWS_AS(ScenarioSampler(set, bad_p), std::invalid_argument);

    MeasureTilt bad_name;
    bad_name.overrides = {{"nope", 1, 0.5}};
    CHECK_THROWS_AS(ScenarioSampler(set, bad_name), std::invalid_argument);

    MeasureTilt bad_period;
    bad_period.overrides = {{"Lambda", 101, 0.5}};
    CHECK_THROWS_AS(ScenarioSampler(set, bad_period), std::invalid_argument);
}

TEST_CASE("two-state component obeys its probability and the tilt") {
    DriverSet set = two_driver_set();
    set.with_two_state = true;
    set.state1_prob = 0.5;
    MeasureTilt tilt;
    tilt.state_probs.assign(100, 0.9);
    const ScenarioSampler base{set};
    const ScenarioSampler tilted(set, tilt);
    const SeedScheme seeds{8};
    int base_ones = 0, tilt_ones = 0;
    const int n = 2000;
    for (int i = 0; i < n; ++i) {
        base_ones += base.sample(seeds, static_cast<uint64_t>(i)).state(1) == 1;
        tilt_ones += tilted.sample(seeds, static_cast<uint64_t>(i)).state(1) == 1;
    }
    CHECK(base_ones > 800);
    CHECK(base_ones < 1200);
    CHECK(tilt_ones > 1600);
}

TEST_CASE("squash helpers invert each other") {
    CHECK(arctan_squash(5.0) == doctest::Approx(0.87433408362199772).epsilon(1e-15));
    CHECK(quarter_squash(arctan_squash_inverse(0.8)) == doctest::Approx(0.2).epsilon(1e-13));
    CHECK(quarter_squash_inverse(0.2) == doctest::Approx(3.0776835371752531).epsilon(1e-13));
}
