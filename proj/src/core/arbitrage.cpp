#include "core/arbitrage.hpp"

#include <cmath>
#include <stdexcept>

#include "core/distribution.hpp"

namespace bubblesim {

namespace {

void require_unmatched(const ExtendedTypeDistribution& p) {
    const int K = p.type_count();
    if (K != 3) throw std::invalid_argument("arbitrage evaluators need the three-type model");
    for (int k = 0; k < K; ++k)
        for (int l = 0; l < K; ++l)
            if (p.at(k, l) > 1e-12)
                throw std::invalid_argument(
                    "arbitrage evaluators need an all-unmatched distribution");
}

double p_diff(const ExtendedTypeDistribution& p) {
    return p.unmatched_cell(0) - p.unmatched_cell(2);
}

double snapped(double x) { return (std::abs(x) < 1e-13) ? 0.0 : x; }

// One period of the immediate-break-up dynamics under a fixed state.
ExtendedTypeDistribution arbitrage_one_period(const ArbitrageStateParams& s,
                                              const ExtendedTypeDistribution& p) {
    ArbitrageModelParams mp;
    mp.state1 = s;
    mp.state2 = s;
    ArbitrageModel model(mp);
    ScenarioPath w;
    w.states = {0, 1};
    return gamma_step(model, w, 1, p).next;
}

} // namespace

PostMutationMasses eval_F13(const ArbitrageStateParams& s, const ExtendedTypeDistribution& p) {
    require_unmatched(p);
    const double x = snapped(p_diff(p));
    const double p1 = p.unmatched_cell(0);
    const double p2 = p.unmatched_cell(1);
    const double p3 = p.unmatched_cell(2);
    PostMutationMasses m;
    m.F1 = p2 * (s.eta21 + sentiment_f(x, 1, 0)) + p3 * (s.eta31 + sentiment_f(x, 2, 0)) +
           p1 * (1.0 - sentiment_f(x, 0, 1) - s.eta13 - sentiment_f(x, 0, 2));
    m.F3 = p2 * (s.eta23 + sentiment_f(x, 1, 2)) + p1 * (s.eta13 + sentiment_f(x, 0, 2)) +
           p3 * (1.0 - sentiment_f(x, 2, 1) - s.eta31 - sentiment_f(x, 2, 0));
    m.F2 = 1.0 - m.F1 - m.F3;
    return m;
}

double eval_a(const ArbitrageStateParams& s, const ExtendedTypeDistribution& p) {
    const PostMutationMasses m = eval_F13(s, p);
    const double y = snapped(m.F1 - m.F3); // post-mutation fraction difference
    const double g211 = sentiment_f(y, 1, 0);
    const double g122 = sentiment_f(y, 0, 1);
    const double g233 = sentiment_f(y, 1, 2);
    const double g322 = sentiment_f(y, 2, 1);
    const double g311 = sentiment_f(y, 2, 0);
    const double g133 = sentiment_f(y, 0, 2);
    return (1.0 - s.theta) * y + s.theta * (m.F1 * m.F1 - m.F3 * m.F3) +
           s.theta * ((1.0 + g211 - g122) * m.F1 * m.F2 - (1.0 + g233 - g322) * m.F2 * m.F3 +
                      2.0 * (s.vs31 - s.vs13 + g311 - g133) * m.F1 * m.F3);
}

QSolution solve_q(double p_diff, double a1, double a2) {
    QSolution sol;
    if (std::abs(a1 - a2) <= 1e-14) {
        sol.q = std::numeric_limits<double>::quiet_NaN();
        sol.verdict = QSolution::Verdict::degenerate;
        return sol;
    }
    sol.q = (p_diff - a2) / (a1 - a2);
    sol.verdict = (sol.q > 0.0 && sol.q < 1.0) ? QSolution::Verdict::feasible
                                               : QSolution::Verdict::infeasible;
    return sol;
}

namespace {

// Halves theta until pred(eval_a) holds; the recipe only promises that a
// small enough matching level works.
double bisect_theta(ArbitrageStateParams& s, const ExtendedTypeDistribution& p, double target,
                    bool want_above) {
    s.theta = 0.25;
    for (int it = 0; it < 60; ++it) {
        const double a = eval_a(s, p);
        if (want_above ? (a > target) : (a < target)) return a;
        s.theta *= 0.5;
    }
    throw std::runtime_error("construct_feasible_params: theta bisection failed, final bracket [0, " +
                             fmt_g17(s.theta * 2.0) + "], drift target " + fmt_g17(target));
}

} // namespace

FeasibleConstruction construct_feasible_params(const ExtendedTypeDistribution& p) {
    require_unmatched(p);
    FeasibleConstruction fc;
    const double dp = p_diff(p);

    if (std::abs(dp) < 1e-15) {
        // Any q solves the symmetric zero-drift pair; keep states identical.
        fc.params.state1.theta = 0.25;
        fc.params.state2.theta = 0.25;
        fc.a1 = eval_a(fc.params.state1, p);
        fc.a2 = eval_a(fc.params.state2, p);
        fc.q.q = 0.5;
        fc.q.verdict = QSolution::Verdict::degenerate;
        fc.degenerate_symmetric = true;
        return fc;
    }

    ArbitrageStateParams below; // drift pushed under dp
    ArbitrageStateParams above; // drift pushed over dp
    if (dp > 0.0) {
        // full mutation pressure toward pessimism vs. a tilt toward optimism
        below.eta13 = 0.5;
        below.eta23 = 0.5;
        above.eta31 = 0.3;
        above.vs31 = 0.25;
    } else {
        // mirrored under the 1 <-> 3 relabeling
        below.eta13 = 0.3;
        below.vs13 = 0.25;
        above.eta31 = 0.5;
        above.eta21 = 0.5;
    }
    const double a_below = bisect_theta(below, p, dp, /*want_above=*/false);
    const double a_above = bisect_theta(above, p, dp, /*want_above=*/true);

    fc.params.state1 = below;
    fc.params.state2 = above;
    fc.a1 = a_below;
    fc.a2 = a_above;
    fc.q = solve_q(dp, fc.a1, fc.a2);
    if (!fc.q.feasible())
        throw std::runtime_error("construct_feasible_params: bracketing failed, a1 = " +
                                 fmt_g17(fc.a1) + ", a2 = " + fmt_g17(fc.a2) +
                                 ", p1 - p3 = " + fmt_g17(dp));
    return fc;
}

std::string MartingaleReport::csv() const {
    std::string out = "k,a1,a2,q,residual\n";
    for (const auto& r : rows)
        out += std::to_string(r.period) + "," + fmt_g17(r.a1) + "," + fmt_g17(r.a2) + "," +
               fmt_g17(r.q) + "," + fmt_g17(r.residual) + "\n";
    return out;
}

namespace {

struct LatticeState {
    double value;
    LatticeParams lp;
    void move(bool up) { value *= up ? lp.u : lp.d; }
};

} // namespace

MartingaleReport verify_martingale(const ExtendedTypeDistribution& p0, const TimeGrid& grid,
                                   const PriceDrivers& dr, int n_resamples, uint64_t seed,
                                   UpFactor convention) {
    require_unmatched(p0);
    MartingaleReport rep;
    const int N = grid.periods();
    const double dt = grid.horizon() / N;

    LatticeState theta{dr.theta0, lattice_params(dr.sigma_theta, dt, convention)};
    LatticeState fund{dr.f0, lattice_params(dr.sigma_f, dt, convention)};
    LatticeState lam{dr.lambda0, lattice_params(dr.sigma_lambda, dt, convention)};
    LatticeState ill{dr.m0, lattice_params(dr.sigma_m, dt, convention)};

    ExtendedTypeDistribution p = p0;
    Rng rng(seed, 0);
    rep.analytic_ok = true;
    rep.mc_ok = true;

    for (int k = 1; k <= N; ++k) {
        const FeasibleConstruction fc = construct_feasible_params(p);
        const double dp = p.unmatched_cell(0) - p.unmatched_cell(2);

        MartingaleReport::Row row;
        row.period = k;
        row.a1 = fc.a1;
        row.a2 = fc.a2;
        row.q = fc.q.q;
        row.residual = fc.q.q * fc.a1 + (1.0 - fc.q.q) * fc.a2 - dp;
        rep.max_residual = std::max(rep.max_residual, std::abs(row.residual));

        // Nested Monte Carlo at this node: one-step price increments under Q.
        // Given the state draw, the fraction difference is deterministic, so
        // only the five Bernoulli moves are sampled.
        double mean = 0.0, m2 = 0.0;
        for (int r = 1; r <= n_resamples; ++r) {
            const int state = rng.bernoulli(fc.q.q) ? 1 : 2;
            const double a_next = (state == 1) ? fc.a1 : fc.a2;
            const double theta_next = theta.value * (rng.bernoulli(theta.lp.p) ? theta.lp.u : theta.lp.d);
            const double f_next = fund.value * (rng.bernoulli(fund.lp.p) ? fund.lp.u : fund.lp.d);
            const double lam_next = lam.value * (rng.bernoulli(lam.lp.p) ? lam.lp.u : lam.lp.d);
            const double ill_next = ill.value * (rng.bernoulli(ill.lp.p) ? ill.lp.u : ill.lp.d);
            const double ds = (f_next - fund.value) +
                              2.0 * lam_next * ill_next * (theta_next * a_next - theta.value * dp);
            const double delta = ds - mean;
            mean += delta / r;
            m2 += delta * (ds - mean);
        }
        const double se = std::sqrt(m2 / (static_cast<double>(n_resamples) - 1.0) / n_resamples);
        row.mc_mean = mean;
        row.mc_se = se;
        const double ratio = (se > 0.0) ? std::abs(mean) / se : (mean == 0.0 ? 0.0 : 1e300);
        rep.max_mc_ratio = std::max(rep.max_mc_ratio, ratio);
        rep.rows.push_back(row);

        // Advance the reference node deterministically: alternate the state,
        // alternate every lattice move.
        const bool up = (k % 2) == 1;
        p = arbitrage_one_period(fc.params.state(up ? 1 : 2), p);
        theta.move(up);
        fund.move(!up);
        lam.move(up);
        ill.move(!up);
    }

    rep.analytic_ok = rep.max_residual <= 1e-12;
    rep.mc_ok = rep.max_mc_ratio <= 4.0;
    return rep;
}

namespace {

struct TreeAccumulator {
    std::vector<double> expected_price; // E^Q[S^k], k = 0..N
};

struct TreeNode {
    ExtendedTypeDistribution p;
    double theta, fund, lam;
    double x_prev, s_prev;
};

void tree_walk(const TreeNode& node, int k, int N, double prob, double m0,
               const LatticeParams& lp_theta, const LatticeParams& lp_f,
               const LatticeParams& lp_lam, TreeAccumulator& acc) {
    if (k > N) return;
    const FeasibleConstruction fc = construct_feasible_params(node.p);
    const double q = fc.degenerate_symmetric ? 0.5 : fc.q.q;
    for (int state = 1; state <= 2; ++state) {
        const double ps = (state == 1) ? q : 1.0 - q;
        const ExtendedTypeDistribution p_next =
            arbitrage_one_period(fc.params.state(state), node.p);
        for (int mt = 0; mt < 2; ++mt)
            for (int mf = 0; mf < 2; ++mf)
                for (int ml = 0; ml < 2; ++ml) {
                    const double pm = ps * (mt ? lp_theta.p : 1.0 - lp_theta.p) *
                                      (mf ? lp_f.p : 1.0 - lp_f.p) * (ml ? lp_lam.p : 1.0 - lp_lam.p);
                    if (pm == 0.0) continue;
                    TreeNode next;
                    next.p = p_next;
                    next.theta = node.theta * (mt ? lp_theta.u : lp_theta.d);
                    next.fund = node.fund * (mf ? lp_f.u : lp_f.d);
                    next.lam = node.lam * (ml ? lp_lam.u : lp_lam.d);
                    next.x_prev = next.theta *
                                  (p_next.unmatched_cell(0) - p_next.unmatched_cell(2));
                    next.s_prev = node.s_prev + (next.fund - node.fund) +
                                  2.0 * next.lam * m0 * (next.x_prev - node.x_prev);
                    acc.expected_price[k] += prob * pm * next.s_prev;
                    tree_walk(next, k + 1, N, prob * pm, m0, lp_theta, lp_f, lp_lam, acc);
                }
    }
}

} // namespace

double exact_tree_price_drift(const ExtendedTypeDistribution& p0, const TimeGrid& grid,
                              const PriceDrivers& dr, UpFactor convention) {
    require_unmatched(p0);
    const int N = grid.periods();
    if (N > 4) throw std::invalid_argument("exact_tree_price_drift: tree limited to N <= 4");
    const double dt = grid.horizon() / N;

    TreeAccumulator acc;
    acc.expected_price.assign(N + 1, 0.0);
    acc.expected_price[0] = dr.f0;

    TreeNode root;
    root.p = p0;
    root.theta = dr.theta0;
    root.fund = dr.f0;
    root.lam = dr.lambda0;
    root.x_prev = dr.theta0 * (p0.unmatched_cell(0) - p0.unmatched_cell(2));
    root.s_prev = dr.f0;

    tree_walk(root, 1, N, 1.0, dr.m0, lattice_params(dr.sigma_theta, dt, convention),
              lattice_params(dr.sigma_f, dt, convention),
              lattice_params(dr.sigma_lambda, dt, convention), acc);

    double worst = 0.0;
    for (int k = 1; k <= N; ++k) worst = std::max(worst, std::abs(acc.expected_price[k] - dr.f0));
    return worst;
}

} // namespace bubblesim
