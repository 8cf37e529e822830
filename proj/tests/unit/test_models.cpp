#include "doctest.h"

#include <cmath>

#include "core/distribution.hpp"
#include "core/models.hpp"
#include "core/rng.hpp"

using namespace bubblesim;

namespace {

// Driver set of the simulation-study model with zero volatility so that all
// paths are constant at the published initial levels.
DriverSet study_set(int periods = 4) {
    DriverSet set;
    set.grid = TimeGrid::uniform(periods, 1.0);
    set.drivers.push_back({"Z_theta", 1.0, 0.0});
    for (int i = 1; i <= 3; ++i)
        for (int j = 1; j <= 3; ++j) {
            set.drivers.push_back(
                {SimulationStudyModel::eta_driver_name(i, j), 3.0776835371752531, 0.0});
            set.drivers.push_back(
                {SimulationStudyModel::varsigma_driver_name(i, j), 3.0776835371752531, 0.0});
        }
    return set;
}

ScenarioPath constant_path(const DriverSet& set) {
    return ScenarioSampler(set).sample(SeedScheme{0}, 0);
}

ExtendedTypeDistribution random_valid_distribution(int K, Rng& rng) {
    ExtendedTypeDistribution d(K);
    double sum = 0.0;
    for (int k = 0; k < K; ++k) {
        for (int l = k; l < K; ++l) {
            const double x = rng.uniform();
            d.at(k, l) = x;
            d.at(l, k) = x;
        }
        d.unmatched_cell(k) = 2.0 * rng.uniform();
    }
    for (int k = 0; k < K; ++k)
        for (int l = 0; l <= K; ++l) sum += d.at(k, l);
    for (int k = 0; k < K; ++k)
        for (int l = 0; l <= K; ++l) d.at(k, l) /= sum;
    return d;
}

ScenarioPath empty_path() { return ScenarioPath{}; }

} // namespace

TEST_CASE("sentiment function family") {
    CHECK(sentiment_f(0.2, 1, 0) == doctest::Approx(0.1751018536269178).epsilon(1e-15));
    CHECK(sentiment_f(0.2, 2, 0) == doctest::Approx(0.030660659143582545).epsilon(1e-15));
    CHECK(sentiment_f(0.2, 0, 1) == 0.0);
    CHECK(sentiment_f(0.2, 0, 2) == 0.0);
    CHECK(sentiment_f(0.2, 1, 2) == 0.0);
    CHECK(sentiment_f(-0.2, 0, 1) == doctest::Approx(0.1751018536269178).epsilon(1e-15));
    CHECK(sentiment_f(-0.2, 0, 2) == doctest::Approx(0.030660659143582545).epsilon(1e-15));
    CHECK(sentiment_f(0.0, 1, 0) == 0.0);
    CHECK(sentiment_f(0.3, 1, 0) == doctest::Approx(0.20593361685580394).epsilon(1e-15));
    CHECK_THROWS_AS(sentiment_f(0.1, 1, 1), std::invalid_argument);
    // monotone in the active direction, bounded by 1/3
    double prev = -1.0;
    for (double x = 0.0; x <= 1.0; x += 0.05) {
        const double v = sentiment_f(x, 1, 0);
        CHECK(v >= prev);
        CHECK(v <= 1.0 / 3 + 1e-15);
        prev = v;
    }
}

// ---------------------------------------------------------------------------
// Example1Model
// ---------------------------------------------------------------------------

TEST_CASE("mutation matrix without sentiment or noise is the identity") {
    Example1Model model{Example1Model::Params{}};
    Mat eta;
    model.eta(empty_path(), 1, ExtendedTypeDistribution::unmatched({0.2, 0.6, 0.2}), eta);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(eta(i, j) == (i == j ? 1.0 : 0.0));
}

TEST_CASE("mutation matrix at g+ = 0.2") {
    Example1Model model{Example1Model::Params{}};
    // sentiment(x) = 0.2 at x = 0.6^2.5
    const double x = std::pow(0.6, 2.5);
    const auto d = ExtendedTypeDistribution::unmatched({0.2 + x, 0.8 - x - 0.2, 0.2});
    Mat eta;
    model.eta(empty_path(), 1, d, eta);
    CHECK(eta(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(eta(0, 1) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(eta(1, 0) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(eta(1, 1) == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(eta(1, 2) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(eta(2, 0) == doctest::Approx(0.04).epsilon(1e-12));
    CHECK(eta(2, 1) == doctest::Approx(0.16).epsilon(1e-12));
    CHECK(eta(2, 2) == doctest::Approx(0.8).epsilon(1e-12));
    for (int i = 0; i < 3; ++i)
        CHECK(eta(i, 0) + eta(i, 1) + eta(i, 2) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mutation noise keeps rows stochastic; infeasible noise is rejected") {
    Example1Model::Params p;
    p.C[0][1] = Binding::of(0.2);
    p.C[0][2] = Binding::of(0.3);
    Example1Model model{p};
    Mat eta;
    model.eta(empty_path(), 1, ExtendedTypeDistribution::unmatched({0.3, 0.4, 0.3}), eta);
    CHECK(eta(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(eta(0, 1) == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(eta(0, 2) == doctest::Approx(0.3).epsilon(1e-14));

    Example1Model::Params bad;
    bad.C[0][1] = Binding::of(0.5);
    bad.C[0][2] = Binding::of(0.5);
    Example1Model broken{bad};
    const auto skew = ExtendedTypeDistribution::unmatched({0.2, 0.3, 0.5}); // g- > 0
    CHECK_THROWS_AS(broken.eta(empty_path(), 1, skew, eta), std::invalid_argument);
}

TEST_CASE("pair transition block matches the published plug-in values") {
    Example1Model::Params p;
    p.F121 = Binding::of(0.1);
    p.F122 = Binding::of(0.05);
    Example1Model model{p};
    const auto d = ExtendedTypeDistribution::unmatched({0.4, 0.4, 0.2}); // p1 - p3 = 0.2
    std::vector<double> sigma;
    model.sigma(empty_path(), 1, d, sigma);
    ProbabilityTable t(3);
    t.sigma = sigma;
    CHECK(t.sigma_at(0, 1, 0, 0) == doctest::Approx(0.2751018536269178).epsilon(1e-15));
    CHECK(t.sigma_at(0, 1, 1, 1) == doctest::Approx(0.05).epsilon(1e-15));
    CHECK(t.sigma_at(0, 1, 0, 1) == doctest::Approx(0.6748981463730821).epsilon(1e-15));
    CHECK(t.sigma_at(0, 1, 2, 2) == 0.0);
    CHECK(t.sigma_at(0, 1, 1, 0) == 0.0);
    // same-type pairs keep their types, whatever the inputs
    CHECK(t.sigma_at(0, 0, 0, 0) == 1.0);
    CHECK(t.sigma_at(1, 1, 1, 1) == 1.0);
    CHECK(t.sigma_at(2, 2, 2, 2) == 1.0);
}

TEST_CASE("balanced market with no noise forces the mixed pair to stand still") {
    Example1Model model{Example1Model::Params{}};
    std::vector<double> sigma;
    model.sigma(empty_path(), 1, ExtendedTypeDistribution::unmatched({0.3, 0.4, 0.3}), sigma);
    ProbabilityTable t(3);
    t.sigma = sigma;
    CHECK(t.sigma_at(0, 1, 0, 0) == 0.0);
    CHECK(t.sigma_at(0, 1, 1, 1) == 0.0);
    CHECK(t.sigma_at(0, 1, 0, 1) == 1.0);
}

TEST_CASE("pair transition symmetry is exact") {
    Example1Model::Params p;
    p.F121 = Binding::of(0.07);
    p.F122 = Binding::of(0.11);
    p.F232 = Binding::of(0.05);
    p.F233 = Binding::of(0.02);
    p.F131 = Binding::of(0.04);
    p.F132 = Binding::of(0.06);
    p.F133 = Binding::of(0.03);
    Example1Model model{p};
    Rng rng(42, 0);
    for (int rep = 0; rep < 20; ++rep) {
        const auto d = random_valid_distribution(3, rng);
        std::vector<double> sigma;
        model.sigma(empty_path(), 1, d, sigma);
        ProbabilityTable t(3);
        t.sigma = sigma;
        for (int k = 0; k < 3; ++k)
            for (int l = 0; l < 3; ++l)
                for (int r = 0; r < 3; ++r)
                    for (int s = 0; s < 3; ++s)
                        CHECK(t.sigma_at(k, l, r, s) == t.sigma_at(l, k, s, r));
    }
}

TEST_CASE("infeasible pair transition names the offending cell") {
    Example1Model::Params p;
    p.F131 = Binding::of(0.5);
    p.F132 = Binding::of(0.5);
    p.F133 = Binding::of(0.5);
    Example1Model model{p};
    std::vector<double> sigma;
    try {
        model.sigma(empty_path(), 1, ExtendedTypeDistribution::unmatched({0.5, 0.3, 0.2}), sigma);
        FAIL("expected a configuration error");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("sigma_13(1,3)") != std::string::npos);
    }
}

// ---------------------------------------------------------------------------
// Bundled models emit tables that validate at their evaluation distribution
// ---------------------------------------------------------------------------

TEST_CASE("every bundled model passes validate_table at random distributions") {
    const DriverSet set = study_set();
    const ScenarioPath study_path = constant_path(set);

    Example1Model::Params e1;
    e1.F121 = Binding::of(0.1);
    e1.F122 = Binding::of(0.05);
    e1.F131 = Binding::of(0.02);
    e1.theta_level = Binding::of(0.4);
    e1.xi = 0.3;

    ArbitrageModelParams ap;
    ap.state1 = {0.3, 0.1, 0.05, 0.0, 0.0, 0.2, 0.1};
    ap.state2 = {0.45, 0.0, 0.25, 0.0, 0.0, 0.05, 0.0};
    ScenarioPath arb_path;
    arb_path.states = {0, 1, 2, 1, 2};

    const Example1Model example1{e1};
    const SimulationStudyModel study{set};
    const ArbitrageModel arbitrage{ap};
    const MemoryModel memory{MemoryModel::Params{1, 0.4, 1.0, 0.1, 0.05, 0.1, 0.05, 0.1, 0.05, 0.1}};

    Rng rng(7, 0);
    for (int rep = 0; rep < 25; ++rep) {
        const auto d3 = random_valid_distribution(3, rng);
        const int period = 1 + (rep % 4);
        CHECK(validate_table(example1.tables(empty_path(), period, d3), d3).ok());
        CHECK(validate_table(study.tables(study_path, period, d3), d3).ok());
        CHECK(validate_table(arbitrage.tables(arb_path, period, d3), d3).ok());
        const auto d24 = random_valid_distribution(24, rng);
        CHECK(validate_table(memory.tables(empty_path(), period, d24), d24).ok());
    }
}

// ---------------------------------------------------------------------------
// ArbitrageModel
// ---------------------------------------------------------------------------

TEST_CASE("arbitrage tables select the per-period state") {
    ArbitrageModelParams ap;
    ap.state1.theta = 0.1;
    ap.state2.theta = 0.4;
    const ArbitrageModel model{ap};
    ScenarioPath w;
    w.states = {0, 1, 2};
    const auto d = ExtendedTypeDistribution::unmatched({0.5, 0.3, 0.2});
    Mat theta;
    model.theta(w, 1, d, theta);
    CHECK(theta(0, 1) == doctest::Approx(0.1 * 0.3).epsilon(1e-15));
    model.theta(w, 2, d, theta);
    CHECK(theta(0, 1) == doctest::Approx(0.4 * 0.3).epsilon(1e-15));
}

TEST_CASE("arbitrage matching scales the unmatched mass") {
    ArbitrageModelParams ap;
    ap.state1.theta = 0.5;
    const ArbitrageModel model{ap};
    ScenarioPath w;
    w.states = {0, 1};
    ExtendedTypeDistribution d(3);
    d.unmatched_cell(0) = 0.35;
    d.unmatched_cell(1) = 0.4;
    d.unmatched_cell(2) = 0.25;
    Mat theta;
    model.theta(w, 1, d, theta);
    CHECK(theta(0, 1) == doctest::Approx(0.2).epsilon(1e-15)); // 0.5 * 0.4
}

TEST_CASE("arbitrage model degenerates to the identity in a balanced market") {
    const ArbitrageModel model{ArbitrageModelParams{}};
    ScenarioPath w;
    w.states = {0, 1};
    const auto d = ExtendedTypeDistribution::unmatched({0.4, 0.2, 0.4});
    Mat eta;
    model.eta(w, 1, d, eta);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) CHECK(eta(i, j) == (i == j ? 1.0 : 0.0));
}

TEST_CASE("arbitrage model: break-up is certain and the mandated zeros hold") {
    ArbitrageModelParams ap;
    ap.state1 = {0.3, 0.1, 0.2, 0.0, 0.0, 0.25, 0.05};
    const ArbitrageModel model{ap};
    ScenarioPath w;
    w.states = {0, 1};
    const auto d = ExtendedTypeDistribution::unmatched({0.5, 0.3, 0.2}); // optimists lead
    const ProbabilityTable t = model.tables(w, 1, d);
    for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) CHECK(t.xi(k, l) == 1.0);
    CHECK(t.eta(0, 1) == 0.0); // downgrade sentiment inactive when optimists lead
    CHECK(t.eta(1, 2) == 0.0);
    CHECK(t.eta(0, 2) == doctest::Approx(0.1).epsilon(1e-15)); // pure exogenous term
    CHECK(t.varsigma_at(0, 1, 1) == 0.0);                      // g_122 = 0
    CHECK(t.varsigma_at(1, 2, 2) == 0.0);                      // g_233 = 0
    for (int i = 0; i < 3; ++i) CHECK(t.varsigma_at(i, i, i) == 1.0);

    // Mirrored zeros when pessimists lead.
    const auto d2 = ExtendedTypeDistribution::unmatched({0.2, 0.3, 0.5});
    const ProbabilityTable t2 = model.tables(w, 1, d2);
    CHECK(t2.eta(1, 0) == 0.0);
    CHECK(t2.eta(2, 1) == 0.0);
    CHECK(t2.varsigma_at(1, 0, 0) == 0.0);
    CHECK(t2.varsigma_at(2, 1, 1) == 0.0);
}

TEST_CASE("arbitrage parameters outside the half interval are rejected") {
    ArbitrageModelParams ap;
    ap.state1.eta13 = 0.6;
    CHECK_THROWS_AS(ArbitrageModel{ap}, std::invalid_argument);
}

TEST_CASE("arbitrage model requires the two-state component") {
    const ArbitrageModel model{ArbitrageModelParams{}};
    Mat eta;
    CHECK_THROWS_AS(
        model.eta(empty_path(), 1, ExtendedTypeDistribution::unmatched({0.5, 0.3, 0.2}), eta),
        std::invalid_argument);
}

// ---------------------------------------------------------------------------
// SimulationStudyModel
// ---------------------------------------------------------------------------

TEST_CASE("study model intensities stay within the quarter bound") {
    const DriverSet set = study_set();
    const SimulationStudyModel model{set};
    const ScenarioPath w = constant_path(set);
    const auto d = ExtendedTypeDistribution::unmatched({0.5, 0.2, 0.3});
    const ProbabilityTable t = model.tables(w, 1, d);
    // eta_ij = 0.2 + f_ij at the constant driver level
    CHECK(t.eta(1, 0) ==
          doctest::Approx(0.2 + sentiment_f(0.2, 1, 0)).epsilon(1e-13));
    CHECK(t.eta(0, 1) == doctest::Approx(0.2).epsilon(1e-13));
    CHECK(t.theta(0, 1) == doctest::Approx(0.5 * 0.2).epsilon(1e-13));
    for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) CHECK(t.xi(k, l) == 1.0);
    CHECK(t.varsigma_at(0, 2, 2) == doctest::Approx(0.2).epsilon(1e-13)); // g_133 = 0 here
    CHECK(t.varsigma_at(2, 0, 0) ==
          doctest::Approx(0.2 + sentiment_f(0.2, 2, 0)).epsilon(1e-13));
}

// ---------------------------------------------------------------------------
// Memory-augmented type space
// ---------------------------------------------------------------------------

TEST_CASE("memory codec examples") {
    CHECK(memory_encode({0, 0, 0, 1}, 100) == 0);
    CHECK(memory_encode({2, 1, 0, 3}, 100) == 2060705);
    CHECK(memory_type_count(100) == 3090903);
    CHECK(memory_view_of(0, 100) == 1);
    CHECK(memory_view_of(2060705, 100) == 3);
}

TEST_CASE("memory codec is a bijection on 1000 random tuples") {
    Rng rng(99, 0);
    const int N = 100;
    for (int i = 0; i < 1000; ++i) {
        MemoryType t;
        t.n_o = static_cast<int>(rng.bounded(N + 1));
        t.n_n = static_cast<int>(rng.bounded(N + 1));
        t.n_p = static_cast<int>(rng.bounded(N + 1));
        t.view = 1 + static_cast<int>(rng.bounded(3));
        const long long k = memory_encode(t, N);
        CHECK(k >= 0);
        CHECK(k < memory_type_count(N));
        const MemoryType back = memory_decode(k, N);
        CHECK(back.n_o == t.n_o);
        CHECK(back.n_n == t.n_n);
        CHECK(back.n_p == t.n_p);
        CHECK(back.view == t.view);
        CHECK(memory_view_of(k, N) == t.view);
    }
}

TEST_CASE("memory codec rejects out-of-range input") {
    CHECK_THROWS_AS(memory_encode({101, 0, 0, 1}, 100), std::invalid_argument);
    CHECK_THROWS_AS(memory_encode({0, 0, 0, 4}, 100), std::invalid_argument);
    CHECK_THROWS_AS(memory_decode(-1, 100), std::invalid_argument);
    CHECK_THROWS_AS(memory_decode(memory_type_count(100), 100), std::invalid_argument);
}

TEST_CASE("memory model: one period moves matched mass onto count-1 types") {
    MemoryModel::Params mp;
    mp.horizon = 1;
    mp.theta_level = 0.5;
    mp.xi = 1.0;
    const MemoryModel model{mp};
    const int H = 1;
    ExtendedTypeDistribution p0(static_cast<int>(memory_type_count(H)));
    for (int v = 1; v <= 3; ++v)
        p0.unmatched_cell(static_cast<int>(memory_encode({0, 0, 0, v}, H))) = 1.0 / 3;

    const GammaStep step = gamma_step(model, ScenarioPath{}, 1, p0);
    double count1_mass = 0.0;
    for (int k = 0; k < p0.type_count(); ++k) {
        const MemoryType t = memory_decode(k, H);
        if (t.n_o + t.n_n + t.n_p == 1) count1_mass += step.next.unmatched_cell(k);
    }
    // Exactly the matched share records a meeting.
    CHECK(count1_mass == doctest::Approx(0.5).epsilon(1e-12));
    const auto views = memory_view_fractions(step.next, H);
    CHECK(views[0] + views[1] + views[2] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(model.p_difference(step.next) == doctest::Approx(views[0] - views[2]).epsilon(1e-15));
}

TEST_CASE("memory model horizon is capped by the dense-table guard") {
    MemoryModel::Params mp;
    mp.horizon = 2;
    CHECK_THROWS_AS(MemoryModel{mp}, std::invalid_argument);
}
