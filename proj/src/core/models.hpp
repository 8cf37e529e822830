#ifndef BUBBLESIM_MODELS_HPP
#define BUBBLESIM_MODELS_HPP

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "core/drivers.hpp"
#include "core/types.hpp"

namespace bubblesim {

// ---------------------------------------------------------------------------
// Sentiment functions
// ---------------------------------------------------------------------------

// Base sentiment map x -> (1/3) x^0.4 on x >= 0; zero at zero, increasing,
// bounded by 1/3.
double sentiment(double x);

// Indexed family f_ij (= g_ijj) over 0-based types (0 optimistic, 1 neutral,
// 2 pessimistic), evaluated at the fraction difference x = p_1 - p_3:
//   (1,0), (2,1): sentiment(x^+)         upgrades, active when optimists lead
//   (0,1), (1,2): sentiment((-x)^+)      downgrades, active when pessimists lead
//   (2,0): sentiment(x^+)^2              double upgrade
//   (0,2): sentiment((-x)^+)^2           double downgrade
// Throws on a diagonal pair.
double sentiment_f(double x, int i, int j);

// Fraction difference fed to the sentiment maps. Differences below 1e-13 are
// treated as balanced: the maps have unbounded slope at the origin, so the
// rounding noise a symmetric input leaves in the recursion output would
// otherwise self-amplify.
double sentiment_difference(const ExtendedTypeDistribution& d);

// ---------------------------------------------------------------------------
// Model interface
// ---------------------------------------------------------------------------

// A transition model evaluates the five input tables as functions of the
// scenario realization, the period, and a conditioning distribution. The
// engines call each evaluator at the distribution prescribed for its
// sub-step: eta at the start-of-period distribution, theta at the
// post-mutation one, xi/sigma/varsigma at the post-matching one.
//
// Sentiment increments (f, g) always condition on the own-type fraction
// difference p_1 - p_3 of the distribution argument. Matching preserves
// own-type marginals, so for the immediate-break-up models this equals the
// post-mutation unmatched difference that the closed-form recursions use.
class TransitionModel {
  public:
    virtual ~TransitionModel() = default;

    virtual int type_count() const = 0;

    virtual void eta(const ScenarioPath& w, int period, const ExtendedTypeDistribution& d,
                     Mat& out) const = 0;
    virtual void theta(const ScenarioPath& w, int period, const ExtendedTypeDistribution& d,
                       Mat& out) const = 0;
    virtual void xi(const ScenarioPath& w, int period, const ExtendedTypeDistribution& d,
                    Mat& out) const = 0;
    virtual void sigma(const ScenarioPath& w, int period, const ExtendedTypeDistribution& d,
                       std::vector<double>& out) const = 0;
    virtual void varsigma(const ScenarioPath& w, int period, const ExtendedTypeDistribution& d,
                          std::vector<double>& out) const = 0;

    // The optimistic-minus-pessimistic fraction feeding the signed volume.
    // Models on an augmented type space override this with their view
    // marginals.
    virtual double p_difference(const ExtendedTypeDistribution& d) const {
        return fraction_difference(d);
    }

    // All five tables at one conditioning distribution (used by validation).
    ProbabilityTable tables(const ScenarioPath& w, int period,
                            const ExtendedTypeDistribution& d) const;
};

// A scalar model input: a constant, or a driver value, optionally squashed.
struct Binding {
    enum class Map { constant, raw, arctan, quarter };
    Map map = Map::constant;
    double constant = 0.0;
    int driver_id = -1;

    static Binding of(double c) { return Binding{Map::constant, c, -1}; }
    static Binding raw(int id) { return Binding{Map::raw, 0.0, id}; }
    static Binding arctan(int id) { return Binding{Map::arctan, 0.0, id}; }
    static Binding quarter(int id) { return Binding{Map::quarter, 0.0, id}; }

    double value(const ScenarioPath& w, int period) const;
};

// ---------------------------------------------------------------------------
// Shared Example-4.1 pair-transition block
// ---------------------------------------------------------------------------

// Random-term lookup for the pair blocks: (i, j, k) are the 1-based F_ijk
// subscripts, `agent` (0 or 1) names the pair member whose type change the
// term drives and `target` its 1-based destination view. Plain models ignore
// the last two arguments; the memory model uses them for count weighting.
using PairRandomTerm = std::function<double(int i, int j, int k, int agent, int target)>;

// Fills out[r][s] (0-based views) for the ordered pair (a, b), a <= b, with
// the type-change-after-match probabilities of the three-type model:
// same-type pairs keep their types; mixed pairs move per the residual
// construction. Throws when a residual cell comes out negative, naming it.
void pair_transition_block(int a, int b, double f_plus, double f_minus, const PairRandomTerm& F,
                           std::array<std::array<double, 3>, 3>& out);

// ---------------------------------------------------------------------------
// Concrete models (all three-type unless noted)
// ---------------------------------------------------------------------------

// Post-match type changes driven by random terms F_ijk plus sentiment, and
// mutation eta = B(g+, g-) + C with the row sum of C folded into the
// diagonal. theta/xi/varsigma, which the source model leaves free, default to
// a balanced product matching rule, a constant break-up probability, and
// keep-type separation.
class Example1Model : public TransitionModel {
  public:
    struct Params {
        // F_121, F_122, F_232, F_233, F_131, F_132, F_133.
        Binding F121, F122, F232, F233, F131, F132, F133;
        std::array<std::array<Binding, 3>, 3> C{}; // additive mutation noise
        Binding theta_level = Binding::of(0.3);    // theta_kl = level * d_lJ
        double xi = 0.0;                           // constant break-up probability
    };

    explicit Example1Model(Params params);

    int type_count() const override { return 3; }
    void eta(const ScenarioPath&, int, const ExtendedTypeDistribution&, Mat&) const override;
    void theta(const ScenarioPath&, int, const ExtendedTypeDistribution&, Mat&) const override;
    void xi(const ScenarioPath&, int, const ExtendedTypeDistribution&, Mat&) const override;
    void sigma(const ScenarioPath&, int, const ExtendedTypeDistribution&,
               std::vector<double>&) const override;
    void varsigma(const ScenarioPath&, int, const ExtendedTypeDistribution&,
                  std::vector<double>&) const override;

  private:
    Params p_;
};

// The simulation-study model: immediate break-up (xi = 1), mutation
// eta_ij = quarter_squash(Z_eta_ij) + f_ij, matching theta_il = squash(Z_theta) * d_lJ,
// and post-break-up changes varsigma_il[l] = quarter_squash(Z_vs_il) + f_il.
class SimulationStudyModel : public TransitionModel {
  public:
    // Resolves Z_theta, Z_eta_ij and Z_varsigma_ij against the driver set.
    explicit SimulationStudyModel(const DriverSet& set);

    int type_count() const override { return 3; }
    void eta(const ScenarioPath&, int, const ExtendedTypeDistribution&, Mat&) const override;
    void theta(const ScenarioPath&, int, const ExtendedTypeDistribution&, Mat&) const override;
    void xi(const ScenarioPath&, int, const ExtendedTypeDistribution&, Mat&) const override;
    void sigma(const ScenarioPath&, int, const ExtendedTypeDistribution&,
               std::vector<double>&) const override;
    void varsigma(const ScenarioPath&, int, const ExtendedTypeDistribution&,
                  std::vector<double>&) const override;

    static std::string eta_driver_name(int i, int j);      // 1-based indices
    static std::string varsigma_driver_name(int i, int j); // 1-based indices

  private:
    int z_theta_ = -1;
    std::array<std::array<int, 3>, 3> z_eta_{};
    std::array<std::array<int, 3>, 3> z_vs_{};
};

// Two-state-per-period immediate-break-up model used by the no-arbitrage
// construction. All parameters take values in [0, 1/2].
struct ArbitrageStateParams {
    double theta = 0.0;
    double eta13 = 0.0, eta31 = 0.0, eta21 = 0.0, eta23 = 0.0;
    double vs31 = 0.0, vs13 = 0.0;

    void validate() const; // throws when a value leaves [0, 1/2]
};

struct ArbitrageModelParams {
    ArbitrageStateParams state1, state2;
    const ArbitrageStateParams& state(int s) const { return s == 1 ? state1 : state2; }
};

// Table builders for one scenario state of the two-state model; also used by
// the closed-form no-arbitrage evaluators.
void arbitrage_eta(const ArbitrageStateParams& p, const ExtendedTypeDistribution& d, Mat& out);
void arbitrage_varsigma(const ArbitrageStateParams& p, const ExtendedTypeDistribution& d,
                        std::vector<double>& out);

class ArbitrageModel : public TransitionModel {
  public:
    // Constant parameters across periods, or one entry per period 1..N.
    explicit ArbitrageModel(ArbitrageModelParams params);
    explicit ArbitrageModel(std::vector<ArbitrageModelParams> per_period);

    const ArbitrageModelParams& params(int period) const;

    int type_count() const override { return 3; }
    void eta(const ScenarioPath&, int, const ExtendedTypeDistribution&, Mat&) const override;
    void theta(const ScenarioPath&, int, const ExtendedTypeDistribution&, Mat&) const override;
    void xi(const ScenarioPath&, int, const ExtendedTypeDistribution&, Mat&) const override;
    void sigma(const ScenarioPath&, int, const ExtendedTypeDistribution&,
               std::vector<double>&) const override;
    void varsigma(const ScenarioPath&, int, const ExtendedTypeDistribution&,
                  std::vector<double>&) const override;

  private:
    int state_of(const ScenarioPath& w, int period) const;
    std::vector<ArbitrageModelParams> per_period_; // size 1 = constant
};

// ---------------------------------------------------------------------------
// Memory-augmented type space
// ---------------------------------------------------------------------------

// Encoded type k = n_o + n_n (N+1) + n_p (N+1)^2 + (v-1) (N+1)^3 where the
// counts are meetings with optimistic/neutral/pessimistic agents and
// v in {1,2,3} is the current view.
struct MemoryType {
    int n_o = 0, n_n = 0, n_p = 0;
    int view = 1; // 1..3
};

long long memory_encode(const MemoryType& t, int N);
MemoryType memory_decode(long long k, int N);
int memory_view_of(long long k, int N); // 1..3
long long memory_type_count(int N);     // 3 (N+1)^3

// Per-view own-type fractions of a distribution over the encoded space.
std::array<double, 3> memory_view_fractions(const ExtendedTypeDistribution& d, int N);

// Demonstration model on the encoded space: no spontaneous mutation, balanced
// matching, and pair transitions that increment the meeting counts while
// views change with probabilities weighted by the changing agent's count
// fraction of the destination view. Dense tables grow as K^4, so the horizon
// is capped at 1.
class MemoryModel : public TransitionModel {
  public:
    struct Params {
        int horizon = 1;           // N in the encoding
        double theta_level = 0.3;  // theta_kl = level * d_lJ
        double xi = 1.0;           // constant break-up probability
        // Constant F_ijk seeds, weighted by count fractions per pair block.
        double F121 = 0.0, F122 = 0.0, F232 = 0.0, F233 = 0.0, F131 = 0.0, F132 = 0.0, F133 = 0.0;
    };

    explicit MemoryModel(Params params);

    int horizon() const { return p_.horizon; }
    int type_count() const override { return K_; }
    double p_difference(const ExtendedTypeDistribution& d) const override {
        const auto v = memory_view_fractions(d, p_.horizon);
        return v[0] - v[2];
    }
    void eta(const ScenarioPath&, int, const ExtendedTypeDistribution&, Mat&) const override;
    void theta(const ScenarioPath&, int, const ExtendedTypeDistribution&, Mat&) const override;
    void xi(const ScenarioPath&, int, const ExtendedTypeDistribution&, Mat&) const override;
    void sigma(const ScenarioPath&, int, const ExtendedTypeDistribution&,
               std::vector<double>&) const override;
    void varsigma(const ScenarioPath&, int, const ExtendedTypeDistribution&,
                  std::vector<double>&) const override;

  private:
    Params p_;
    int K_ = 0;
};

} // namespace bubblesim

#endif
