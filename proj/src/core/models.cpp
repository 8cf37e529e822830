#include "core/models.hpp"

#include <cmath>
#include <stdexcept>

namespace bubblesim {

double sentiment(double x) { return (x <= 0.0) ? 0.0 : std::pow(x, 0.4) / 3.0; }

double sentiment_difference(const ExtendedTypeDistribution& d) {
    const double x = fraction_difference(d);
    return (std::abs(x) < 1e-13) ? 0.0 : x;
}

double sentiment_f(double x, int i, int j) {
    const double up = sentiment(x > 0.0 ? x : 0.0);
    const double down = sentiment(x < 0.0 ? -x : 0.0);
    if ((i == 1 && j == 0) || (i == 2 && j == 1)) return up;
    if ((i == 0 && j == 1) || (i == 1 && j == 2)) return down;
    if (i == 2 && j == 0) return up * up;
    if (i == 0 && j == 2) return down * down;
    throw std::invalid_argument("sentiment_f: no such index pair (" + std::to_string(i) + "," +
                                std::to_string(j) + ")");
}

ProbabilityTable TransitionModel::tables(const ScenarioPath& w, int period,
                                         const ExtendedTypeDistribution& d) const {
    ProbabilityTable t(type_count());
    eta(w, period, d, t.eta);
    theta(w, period, d, t.theta);
    xi(w, period, d, t.xi);
    sigma(w, period, d, t.sigma);
    varsigma(w, period, d, t.varsigma);
    t.refresh_b();
    return t;
}

double Binding::value(const ScenarioPath& w, int period) const {
    switch (map) {
        case Map::constant: return constant;
        case Map::raw: return w.value(driver_id, period);
        case Map::arctan: return arctan_squash(w.value(driver_id, period));
        case Map::quarter: return quarter_squash(w.value(driver_id, period));
    }
    return constant;
}

// ---------------------------------------------------------------------------
// Pair transition block
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void negative_cell(int a, int b, int r, int s, double v) {
    throw std::invalid_argument("sigma_" + std::to_string(a + 1) + std::to_string(b + 1) + "(" +
                                std::to_string(r + 1) + "," + std::to_string(s + 1) +
                                ") negative: " + fmt_g17(v));
}

} // namespace

void pair_transition_block(int a, int b, double f_plus, double f_minus, const PairRandomTerm& F,
                           std::array<std::array<double, 3>, 3>& out) {
    for (auto& row : out) row.fill(0.0);
    if (a == b) {
        out[a][a] = 1.0;
        return;
    }
    if (a == 0 && b == 1) {
        out[0][0] = F(1, 2, 1, 1, 1) + f_plus;
        out[1][1] = F(1, 2, 2, 0, 2) + f_minus;
        out[0][1] = 1.0 - out[0][0] - out[1][1];
        if (out[0][1] < 0.0) negative_cell(a, b, 0, 1, out[0][1]);
        return;
    }
    if (a == 1 && b == 2) {
        out[1][1] = F(2, 3, 2, 1, 2) + f_plus;
        out[2][2] = F(2, 3, 3, 0, 3) + f_minus;
        out[1][2] = 1.0 - out[1][1] - out[2][2];
        if (out[1][2] < 0.0) negative_cell(a, b, 1, 2, out[1][2]);
        return;
    }
    if (a == 0 && b == 2) {
        out[0][0] = F(1, 3, 1, 1, 1) + f_plus * f_plus;
        out[0][1] = F(1, 3, 2, 1, 2) + f_plus * (1.0 - f_plus);
        out[2][2] = F(1, 3, 3, 0, 3) + f_minus * f_minus;
        out[1][2] = F(1, 3, 2, 0, 2) + f_minus * (1.0 - f_minus);
        out[0][2] = 1.0 - out[0][0] - out[0][1] - out[2][2] - out[1][2];
        if (out[0][2] < 0.0) negative_cell(a, b, 0, 2, out[0][2]);
        return;
    }
    throw std::invalid_argument("pair_transition_block: needs a <= b");
}

namespace {

// Assembles the full K=3 sigma tensor from the per-pair blocks, enforcing
// sigma[k][l][r][s] = sigma[l][k][s][r].
template <typename BlockFn>
void fill_sigma_from_blocks(std::vector<double>& out, const BlockFn& block) {
    constexpr int K = 3;
    out.assign(K * K * K * K, 0.0);
    auto at = [&out](int k, int l, int r, int s) -> double& {
        return out[static_cast<size_t>(((k * K + l) * K + r)) * K + s];
    };
    std::array<std::array<double, 3>, 3> blk{};
    for (int a = 0; a < K; ++a)
        for (int b = a; b < K; ++b) {
            block(a, b, blk);
            for (int r = 0; r < K; ++r)
                for (int s = 0; s < K; ++s) {
                    at(a, b, r, s) = blk[r][s];
                    at(b, a, s, r) = blk[r][s];
                }
        }
}

void fill_balanced_theta(double level, const ExtendedTypeDistribution& d, Mat& out) {
    if (level < 0.0 || level > 1.0)
        throw std::invalid_argument("theta level out of [0,1]: " + fmt_g17(level));
    const int K = d.type_count();
    out.assign(K, K);
    for (int k = 0; k < K; ++k)
        for (int l = 0; l < K; ++l) out(k, l) = level * d.unmatched_cell(l);
}

} // namespace

// ---------------------------------------------------------------------------
// Example1Model
// ---------------------------------------------------------------------------

Example1Model::Example1Model(Params params) : p_(std::move(params)) {}

void Example1Model::eta(const ScenarioPath& w, int period, const ExtendedTypeDistribution& d,
                        Mat& out) const {
    const double x = sentiment_difference(d);
    const double gp = sentiment(x > 0.0 ? x : 0.0);
    const double gm = sentiment(x < 0.0 ? -x : 0.0);
    out.assign(3, 3);
    out(0, 0) = 1.0 - gm;
    out(0, 1) = gm * (1.0 - gm);
    out(0, 2) = gm * gm;
    out(1, 0) = gp;
    out(1, 1) = 1.0 - gp - gm;
    out(1, 2) = gm;
    out(2, 0) = gp * gp;
    out(2, 1) = gp * (1.0 - gp);
    out(2, 2) = 1.0 - gp;
    for (int i = 0; i < 3; ++i) {
        double off = 0.0;
        for (int j = 0; j < 3; ++j) {
            const double c = p_.C[i][j].value(w, period);
            if (j != i) out(i, j) += c;
            off += c;
        }
        // Fold the row sum of C into the diagonal so rows stay stochastic.
        out(i, i) += p_.C[i][i].value(w, period) - off;
        if (out(i, i) < 0.0)
            throw std::invalid_argument("eta row " + std::to_string(i + 1) +
                                        ": C perturbation drives diagonal negative: " +
                                        fmt_g17(out(i, i)));
    }
}

void Example1Model::theta(const ScenarioPath& w, int period, const ExtendedTypeDistribution& d,
                          Mat& out) const {
    fill_balanced_theta(p_.theta_level.value(w, period), d, out);
}

void Example1Model::xi(const ScenarioPath&, int, const ExtendedTypeDistribution&, Mat& out) const {
    out.assign(3, 3, p_.xi);
}

void Example1Model::sigma(const ScenarioPath& w, int period, const ExtendedTypeDistribution& d,
                          std::vector<double>& out) const {
    const double x = sentiment_difference(d);
    const double fp = sentiment(x > 0.0 ? x : 0.0);
    const double fm = sentiment(x < 0.0 ? -x : 0.0);
    auto term = [&](int i, int j, int k, int, int) -> double {
        const Binding* b = nullptr;
        if (i == 1 && j == 2) b = (k == 1) ? &p_.F121 : &p_.F122;
        if (i == 2 && j == 3) b = (k == 2) ? &p_.F232 : &p_.F233;
        if (i == 1 && j == 3) b = (k == 1) ? &p_.F131 : (k == 2) ? &p_.F132 : &p_.F133;
        const double v = b ? b->value(w, period) : 0.0;
        if (v < 0.0 || v > 0.5)
            throw std::invalid_argument("F_" + std::to_string(i) + std::to_string(j) +
                                        std::to_string(k) + " out of [0,1/2]: " + fmt_g17(v));
        return v;
    };
    fill_sigma_from_blocks(out, [&](int a, int b, std::array<std::array<double, 3>, 3>& blk) {
        pair_transition_block(a, b, fp, fm, term, blk);
    });
}

void Example1Model::varsigma(const ScenarioPath&, int, const ExtendedTypeDistribution&,
                             std::vector<double>& out) const {
    constexpr int K = 3;
    out.assign(K * K * K, 0.0);
    for (int k = 0; k < K; ++k)
        for (int l = 0; l < K; ++l) out[static_cast<size_t>((k * K + l)) * K + k] = 1.0;
}

// ---------------------------------------------------------------------------
// SimulationStudyModel
// ---------------------------------------------------------------------------

std::string SimulationStudyModel::eta_driver_name(int i, int j) {
    return "Z_eta_" + std::to_string(i) + std::to_string(j);
}

std::string SimulationStudyModel::varsigma_driver_name(int i, int j) {
    return "Z_varsigma_" + std::to_string(i) + std::to_string(j);
}

SimulationStudyModel::SimulationStudyModel(const DriverSet& set) {
    z_theta_ = set.require("Z_theta");
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            z_eta_[i][j] = (i == j) ? -1 : set.require(eta_driver_name(i + 1, j + 1));
            z_vs_[i][j] = (i == j) ? -1 : set.require(varsigma_driver_name(i + 1, j + 1));
        }
}

void SimulationStudyModel::eta(const ScenarioPath& w, int period, const ExtendedTypeDistribution& d,
                               Mat& out) const {
    const double x = sentiment_difference(d);
    out.assign(3, 3);
    for (int i = 0; i < 3; ++i) {
        double off = 0.0;
        for (int j = 0; j < 3; ++j) {
            if (i == j) continue;
            const double v = quarter_squash(w.value(z_eta_[i][j], period)) + sentiment_f(x, i, j);
            out(i, j) = v;
            off += v;
        }
        out(i, i) = 1.0 - off;
        if (out(i, i) < 0.0)
            throw std::invalid_argument("eta row " + std::to_string(i + 1) +
                                        " exceeds 1: residual " + fmt_g17(out(i, i)));
    }
}

void SimulationStudyModel::theta(const ScenarioPath& w, int period,
                                 const ExtendedTypeDistribution& d, Mat& out) const {
    fill_balanced_theta(arctan_squash(w.value(z_theta_, period)), d, out);
}

void SimulationStudyModel::xi(const ScenarioPath&, int, const ExtendedTypeDistribution&,
                              Mat& out) const {
    out.assign(3, 3, 1.0);
}

void SimulationStudyModel::sigma(const ScenarioPath&, int, const ExtendedTypeDistribution&,
                                 std::vector<double>& out) const {
    // Never reached under immediate break-up; keep-pair keeps the table valid.
    constexpr int K = 3;
    out.assign(K * K * K * K, 0.0);
    for (int k = 0; k < K; ++k)
        for (int l = 0; l < K; ++l)
            out[static_cast<size_t>(((k * K + l) * K + k)) * K + l] = 1.0;
}

void SimulationStudyModel::varsigma(const ScenarioPath& w, int period,
                                    const ExtendedTypeDistribution& d,
                                    std::vector<double>& out) const {
    const double x = sentiment_difference(d);
    constexpr int K = 3;
    out.assign(K * K * K, 0.0);
    auto at = [&out](int k, int l, int r) -> double& {
        return out[static_cast<size_t>((k * K + l)) * K + r];
    };
    for (int i = 0; i < K; ++i)
        for (int l = 0; l < K; ++l) {
            if (i == l) {
                at(i, i, i) = 1.0;
                continue;
            }
            const double v = quarter_squash(w.value(z_vs_[i][l], period)) + sentiment_f(x, i, l);
            at(i, l, l) = v;
            at(i, l, i) = 1.0 - v;
            if (at(i, l, i) < 0.0)
                throw std::invalid_argument("varsigma[" + std::to_string(i + 1) + "][" +
                                            std::to_string(l + 1) + "] residual negative");
        }
}

// ---------------------------------------------------------------------------
// ArbitrageModel
// ---------------------------------------------------------------------------

void ArbitrageStateParams::validate() const {
    auto check = [](const char* name, double v) {
        if (v < 0.0 || v > 0.5)
            throw std::invalid_argument(std::string(name) + " out of [0,1/2]: " + fmt_g17(v));
    };
    check("theta", theta);
    check("eta13", eta13);
    check("eta31", eta31);
    check("eta21", eta21);
    check("eta23", eta23);
    check("vs31", vs31);
    check("vs13", vs13);
}

ArbitrageModel::ArbitrageModel(ArbitrageModelParams params) : per_period_{params} {
    params.state1.validate();
    params.state2.validate();
}

ArbitrageModel::ArbitrageModel(std::vector<ArbitrageModelParams> per_period)
    : per_period_(std::move(per_period)) {
    if (per_period_.empty()) throw std::invalid_argument("arbitrage model: no parameters");
    for (const auto& p : per_period_) {
        p.state1.validate();
        p.state2.validate();
    }
}

const ArbitrageModelParams& ArbitrageModel::params(int period) const {
    if (per_period_.size() == 1) return per_period_[0];
    if (period < 1 || period > static_cast<int>(per_period_.size()))
        throw std::invalid_argument("arbitrage model: period " + std::to_string(period) +
                                    " has no parameters");
    return per_period_[period - 1];
}

int ArbitrageModel::state_of(const ScenarioPath& w, int period) const {
    const int s = w.state(period);
    if (s != 1 && s != 2)
        throw std::invalid_argument("arbitrage model needs a two-state scenario component");
    return s;
}

void arbitrage_eta(const ArbitrageStateParams& p, const ExtendedTypeDistribution& d, Mat& out) {
    const double x = sentiment_difference(d);
    out.assign(3, 3);
    out(0, 1) = sentiment_f(x, 0, 1);
    out(0, 2) = p.eta13 + sentiment_f(x, 0, 2);
    out(1, 0) = p.eta21 + sentiment_f(x, 1, 0);
    out(1, 2) = p.eta23 + sentiment_f(x, 1, 2);
    out(2, 0) = p.eta31 + sentiment_f(x, 2, 0);
    out(2, 1) = sentiment_f(x, 2, 1);
    for (int i = 0; i < 3; ++i) {
        out(i, i) = 1.0 - out(i, (i + 1) % 3) - out(i, (i + 2) % 3);
        if (out(i, i) < 0.0)
            throw std::invalid_argument("arbitrage eta row " + std::to_string(i + 1) +
                                        " exceeds 1: residual " + fmt_g17(out(i, i)));
    }
}

void arbitrage_varsigma(const ArbitrageStateParams& p, const ExtendedTypeDistribution& d,
                        std::vector<double>& out) {
    const double x = sentiment_difference(d);
    constexpr int K = 3;
    out.assign(K * K * K, 0.0);
    auto at = [&out](int k, int l, int r) -> double& {
        return out[static_cast<size_t>((k * K + l)) * K + r];
    };
    for (int i = 0; i < K; ++i)
        for (int l = 0; l < K; ++l) {
            if (i == l) {
                at(i, i, i) = 1.0;
                continue;
            }
            double tilde = 0.0;
            if (i == 0 && l == 2) tilde = p.vs13;
            if (i == 2 && l == 0) tilde = p.vs31;
            const double v = tilde + sentiment_f(x, i, l);
            at(i, l, l) = v;
            at(i, l, i) = 1.0 - v;
            if (at(i, l, i) < 0.0)
                throw std::invalid_argument("arbitrage varsigma[" + std::to_string(i + 1) + "][" +
                                            std::to_string(l + 1) + "] residual negative");
        }
}

void ArbitrageModel::eta(const ScenarioPath& w, int period, const ExtendedTypeDistribution& d,
                         Mat& out) const {
    arbitrage_eta(params(period).state(state_of(w, period)), d, out);
}

void ArbitrageModel::theta(const ScenarioPath& w, int period, const ExtendedTypeDistribution& d,
                           Mat& out) const {
    const ArbitrageStateParams& p = params(period).state(state_of(w, period));
    fill_balanced_theta(p.theta, d, out);
}

void ArbitrageModel::xi(const ScenarioPath&, int, const ExtendedTypeDistribution&, Mat& out) const {
    out.assign(3, 3, 1.0);
}

void ArbitrageModel::sigma(const ScenarioPath&, int, const ExtendedTypeDistribution&,
                           std::vector<double>& out) const {
    constexpr int K = 3;
    out.assign(K * K * K * K, 0.0);
    for (int k = 0; k < K; ++k)
        for (int l = 0; l < K; ++l)
            out[static_cast<size_t>(((k * K + l) * K + k)) * K + l] = 1.0;
}

void ArbitrageModel::varsigma(const ScenarioPath& w, int period, const ExtendedTypeDistribution& d,
                              std::vector<double>& out) const {
    arbitrage_varsigma(params(period).state(state_of(w, period)), d, out);
}

// ---------------------------------------------------------------------------
// Memory-augmented type space
// ---------------------------------------------------------------------------

long long memory_type_count(int N) {
    const long long base = N + 1;
    return 3 * base * base * base;
}

long long memory_encode(const MemoryType& t, int N) {
    if (t.n_o < 0 || t.n_o > N || t.n_n < 0 || t.n_n > N || t.n_p < 0 || t.n_p > N)
        throw std::invalid_argument("memory_encode: count out of [0," + std::to_string(N) + "]");
    if (t.view < 1 || t.view > 3) throw std::invalid_argument("memory_encode: view must be 1..3");
    const long long base = N + 1;
    return t.n_o + t.n_n * base + t.n_p * base * base +
           static_cast<long long>(t.view - 1) * base * base * base;
}

MemoryType memory_decode(long long k, int N) {
    const long long base = N + 1;
    const long long cube = base * base * base;
    if (k < 0 || k >= 3 * cube)
        throw std::invalid_argument("memory_decode: type " + std::to_string(k) + " out of range");
    MemoryType t;
    t.view = static_cast<int>(k / cube) + 1;
    k %= cube;
    t.n_p = static_cast<int>(k / (base * base));
    k %= base * base;
    t.n_n = static_cast<int>(k / base);
    t.n_o = static_cast<int>(k % base);
    return t;
}

int memory_view_of(long long k, int N) {
    const long long cube = static_cast<long long>(N + 1) * (N + 1) * (N + 1);
    if (k < 0 || k >= 3 * cube)
        throw std::invalid_argument("memory_view_of: type " + std::to_string(k) + " out of range");
    return static_cast<int>(k / cube) + 1;
}

std::array<double, 3> memory_view_fractions(const ExtendedTypeDistribution& d, int N) {
    std::array<double, 3> p{0.0, 0.0, 0.0};
    const TypeFractions f = fractions(d);
    for (size_t k = 0; k < f.size(); ++k) p[memory_view_of(static_cast<long long>(k), N) - 1] += f[k];
    return p;
}

MemoryModel::MemoryModel(Params params) : p_(params) {
    if (p_.horizon < 1 || p_.horizon > 1)
        throw std::invalid_argument(
            "memory model: dense tables grow as K^4; horizon must be 1 (K = 24)");
    K_ = static_cast<int>(memory_type_count(p_.horizon));
}

void MemoryModel::eta(const ScenarioPath&, int, const ExtendedTypeDistribution&, Mat& out) const {
    out.assign(K_, K_);
    for (int k = 0; k < K_; ++k) out(k, k) = 1.0;
}

void MemoryModel::theta(const ScenarioPath&, int, const ExtendedTypeDistribution& d,
                        Mat& out) const {
    fill_balanced_theta(p_.theta_level, d, out);
}

void MemoryModel::xi(const ScenarioPath&, int, const ExtendedTypeDistribution&, Mat& out) const {
    out.assign(K_, K_, p_.xi);
}

namespace {

MemoryType incremented(MemoryType t, int partner_view) {
    if (partner_view == 1) ++t.n_o;
    if (partner_view == 2) ++t.n_n;
    if (partner_view == 3) ++t.n_p;
    return t;
}

bool saturated(const MemoryType& t, int N) { return t.n_o + t.n_n + t.n_p >= N; }

double count_fraction(const MemoryType& t, int view) {
    const int total = t.n_o + t.n_n + t.n_p;
    if (total == 0) return 0.0;
    const int c = (view == 1) ? t.n_o : (view == 2) ? t.n_n : t.n_p;
    return static_cast<double>(c) / total;
}

} // namespace

void MemoryModel::sigma(const ScenarioPath&, int, const ExtendedTypeDistribution& d,
                        std::vector<double>& out) const {
    const int K = K_;
    out.assign(static_cast<size_t>(K) * K * K * K, 0.0);
    auto at = [&out, K](int k, int l, int r, int s) -> double& {
        return out[static_cast<size_t>(((static_cast<size_t>(k) * K + l) * K + r)) * K + s];
    };
    const std::array<double, 3> views = memory_view_fractions(d, p_.horizon);
    const double raw = views[0] - views[2];
    const double x = (std::abs(raw) < 1e-13) ? 0.0 : raw;
    const double fp = sentiment(x > 0.0 ? x : 0.0);
    const double fm = sentiment(x < 0.0 ? -x : 0.0);
    const double Fconst[3][3][3] = {
        {{0, 0, 0}, {p_.F121, p_.F122, 0}, {p_.F131, p_.F132, p_.F133}},
        {{0, 0, 0}, {0, 0, 0}, {0, p_.F232, p_.F233}},
        {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}},
    };

    std::array<std::array<double, 3>, 3> blk{};
    for (int k1 = 0; k1 < K; ++k1) {
        const MemoryType a = memory_decode(k1, p_.horizon);
        for (int k2 = 0; k2 < K; ++k2) {
            const MemoryType b = memory_decode(k2, p_.horizon);
            // Saturated memories stop recording; the pair then changes nothing.
            if (saturated(a, p_.horizon) || saturated(b, p_.horizon)) {
                at(k1, k2, k1, k2) = 1.0;
                continue;
            }
            const bool swap = a.view > b.view;
            const MemoryType& lo = swap ? b : a;
            const MemoryType& hi = swap ? a : b;
            auto term = [&](int i, int j, int k, int agent, int target) -> double {
                const MemoryType& changing = (agent == 0) ? lo : hi;
                return count_fraction(changing, target) * Fconst[i - 1][j - 1][k - 1];
            };
            pair_transition_block(lo.view - 1, hi.view - 1, fp, fm, term, blk);
            const MemoryType a_inc = incremented(a, b.view);
            const MemoryType b_inc = incremented(b, a.view);
            for (int r = 0; r < 3; ++r)
                for (int s = 0; s < 3; ++s) {
                    const double pr = swap ? blk[s][r] : blk[r][s];
                    if (pr == 0.0) continue;
                    MemoryType na = a_inc;
                    MemoryType nb = b_inc;
                    na.view = r + 1;
                    nb.view = s + 1;
                    at(k1, k2, static_cast<int>(memory_encode(na, p_.horizon)),
                       static_cast<int>(memory_encode(nb, p_.horizon))) += pr;
                }
        }
    }
}

void MemoryModel::varsigma(const ScenarioPath&, int, const ExtendedTypeDistribution&,
                           std::vector<double>& out) const {
    const int K = K_;
    out.assign(static_cast<size_t>(K) * K * K, 0.0);
    auto at = [&out, K](int k, int l, int r) -> double& {
        return out[static_cast<size_t>(static_cast<size_t>(k) * K + l) * K + r];
    };
    for (int k1 = 0; k1 < K; ++k1) {
        const MemoryType a = memory_decode(k1, p_.horizon);
        for (int k2 = 0; k2 < K; ++k2) {
            const MemoryType b = memory_decode(k2, p_.horizon);
            if (saturated(a, p_.horizon)) {
                at(k1, k2, k1) = 1.0;
                continue;
            }
            const MemoryType na = incremented(a, b.view);
            at(k1, k2, static_cast<int>(memory_encode(na, p_.horizon))) = 1.0;
        }
    }
}

} // namespace bubblesim
