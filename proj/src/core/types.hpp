#ifndef BUBBLESIM_TYPES_HPP
#define BUBBLESIM_TYPES_HPP

#include <string>
#include <vector>

#include "core/common.hpp"

namespace bubblesim {

// Agent type space S = {1..K} plus the distinguished "unmatched" marker J.
// Types are stored 0-based internally; J is the extra partner column K.
struct TypeSpace {
    int K = 3;
    explicit TypeSpace(int k = 3);
};

// Joint fractions of agents by (own type, partner type), J marking unmatched.
// K rows, K+1 columns; column K is the J column. Stored in full so that
// validation can catch symmetry violations produced by buggy kernels.
class ExtendedTypeDistribution {
  public:
    ExtendedTypeDistribution() = default;
    explicit ExtendedTypeDistribution(int K) : K_(K), cells_(static_cast<size_t>(K) * (K + 1), 0.0) {}

    // Zeroes all cells, resizing only when the type count changes.
    void reset(int K) {
        K_ = K;
        cells_.assign(static_cast<size_t>(K) * (K + 1), 0.0);
    }

    // All mass unmatched, split per the given own-type fractions.
    static ExtendedTypeDistribution unmatched(const std::vector<double>& fractions);

    int type_count() const { return K_; }
    int cell_count() const { return K_ * (K_ + 1); }

    double& at(int k, int l) { return cells_[static_cast<size_t>(k) * (K_ + 1) + l]; }
    double at(int k, int l) const { return cells_[static_cast<size_t>(k) * (K_ + 1) + l]; }
    double& unmatched_cell(int k) { return at(k, K_); }
    double unmatched_cell(int k) const { return at(k, K_); }

    double* data() { return cells_.data(); }
    const double* data() const { return cells_.data(); }

    double sum() const;

    bool operator==(const ExtendedTypeDistribution&) const = default;

  private:
    int K_ = 0;
    std::vector<double> cells_;
};

using TypeFractions = std::vector<double>;

// Row sums: p_i = sum_l d(i,l) + d(i,J).
TypeFractions fractions(const ExtendedTypeDistribution& d);

// Difference of optimistic and pessimistic own-type fractions, p_1 - p_3.
// Only meaningful for K >= 3; this is the statistic every sentiment function
// conditions on.
double fraction_difference(const ExtendedTypeDistribution& d);

// Time grid t_0 = 0 < ... < t_N = T.
struct TimeGrid {
    std::vector<double> times;

    static TimeGrid uniform(int n_periods, double horizon);
    static TimeGrid from_times(std::vector<double> times);

    int periods() const { return static_cast<int>(times.size()) - 1; }
    double horizon() const { return times.back(); }
    double dt(int i) const { return times[i] - times[i - 1]; } // i in 1..N
};

// The five per-period probability tables (eta, theta with residual b, xi,
// sigma, varsigma) evaluated at one scenario state and one distribution.
struct ProbabilityTable {
    int K = 0;
    Mat eta;                     // K x K, rows sum to 1
    Mat theta;                   // K x K, row sums <= 1
    std::vector<double> b;       // K, b_k = 1 - sum_l theta_kl
    Mat xi;                      // K x K, symmetric
    std::vector<double> sigma;   // K^4, sigma[k][l][r][s]
    std::vector<double> varsigma; // K^3, varsigma[k][l][r]

    explicit ProbabilityTable(int k = 0) { resize(k); }
    void resize(int k);

    double& sigma_at(int k, int l, int r, int s) {
        return sigma[static_cast<size_t>(((k * K + l) * K + r)) * K + s];
    }
    double sigma_at(int k, int l, int r, int s) const {
        return sigma[static_cast<size_t>(((k * K + l) * K + r)) * K + s];
    }
    double& varsigma_at(int k, int l, int r) {
        return varsigma[static_cast<size_t>((k * K + l)) * K + r];
    }
    double varsigma_at(int k, int l, int r) const {
        return varsigma[static_cast<size_t>((k * K + l)) * K + r];
    }

    // Fills b from theta row sums.
    void refresh_b();
};

// Validation is reporting, not throwing: a report lists every violated
// invariant with the offending indices and magnitudes.
struct ValidationReport {
    std::vector<std::string> issues;
    bool ok() const { return issues.empty(); }
    void fail(std::string what) { issues.push_back(std::move(what)); }
    std::string str() const;
};

ValidationReport validate_distribution(const ExtendedTypeDistribution& d,
                                       double tol = Tol::normalization);

ValidationReport validate_table(const ProbabilityTable& t, const ExtendedTypeDistribution& d,
                                double tol = Tol::table);

// Flat CSV row serialization: header k1_l1,...,k1_J,...,kK_J, row-major,
// 17 significant digits.
std::string distribution_csv_header(int K);
std::string distribution_csv_row(const ExtendedTypeDistribution& d);
ExtendedTypeDistribution distribution_from_csv_row(int K, const std::string& row);

} // namespace bubblesim

#endif
