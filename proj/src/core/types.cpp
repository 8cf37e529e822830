#include "core/types.hpp"

#include <cmath>
#include <cstdlib>
#include <sstream>

namespace bubblesim {

TypeSpace::TypeSpace(int k) : K(k) {
    if (k < 1) throw std::invalid_argument("TypeSpace: K must be >= 1, got " + std::to_string(k));
}

ExtendedTypeDistribution ExtendedTypeDistribution::unmatched(const std::vector<double>& fractions) {
    ExtendedTypeDistribution d(static_cast<int>(fractions.size()));
    for (int k = 0; k < d.K_; ++k) d.unmatched_cell(k) = fractions[k];
    return d;
}

double ExtendedTypeDistribution::sum() const {
    double s = 0.0;
    for (double x : cells_) s += x;
    return s;
}

TypeFractions fractions(const ExtendedTypeDistribution& d) {
    const int K = d.type_count();
    TypeFractions p(K, 0.0);
    for (int k = 0; k < K; ++k) {
        double s = 0.0;
        for (int l = 0; l <= K; ++l) s += d.at(k, l);
        p[k] = s;
    }
    return p;
}

double fraction_difference(const ExtendedTypeDistribution& d) {
    const int K = d.type_count();
    double p1 = 0.0;
    double p3 = 0.0;
    for (int l = 0; l <= K; ++l) {
        p1 += d.at(0, l);
        p3 += d.at(2, l);
    }
    return p1 - p3;
}

TimeGrid TimeGrid::uniform(int n_periods, double horizon) {
    if (n_periods < 1) throw std::invalid_argument("TimeGrid: need at least one period");
    if (horizon <= 0.0) throw std::invalid_argument("TimeGrid: horizon must be positive");
    TimeGrid g;
    g.times.resize(n_periods + 1);
    for (int i = 0; i <= n_periods; ++i) g.times[i] = horizon * i / n_periods;
    g.times.back() = horizon;
    return g;
}

TimeGrid TimeGrid::from_times(std::vector<double> times) {
    if (times.size() < 2) throw std::invalid_argument("TimeGrid: need t0 and at least t1");
    if (times.front() != 0.0) throw std::invalid_argument("TimeGrid: t0 must be 0");
    for (size_t i = 1; i < times.size(); ++i)
        if (times[i] <= times[i - 1]) throw std::invalid_argument("TimeGrid: times must be strictly increasing");
    TimeGrid g;
    g.times = std::move(times);
    return g;
}

void ProbabilityTable::resize(int k) {
    K = k;
    eta.assign(k, k);
    theta.assign(k, k);
    b.assign(k, 0.0);
    xi.assign(k, k);
    sigma.assign(static_cast<size_t>(k) * k * k * k, 0.0);
    varsigma.assign(static_cast<size_t>(k) * k * k, 0.0);
}

void ProbabilityTable::refresh_b() {
    for (int k = 0; k < K; ++k) {
        double s = 0.0;
        for (int l = 0; l < K; ++l) s += theta(k, l);
        b[k] = 1.0 - s;
    }
}

std::string ValidationReport::str() const {
    if (ok()) return "ok";
    std::string out;
    for (const auto& i : issues) {
        out += i;
        out += '\n';
    }
    return out;
}

ValidationReport validate_distribution(const ExtendedTypeDistribution& d, double tol) {
    ValidationReport r;
    const int K = d.type_count();
    if (K < 1) {
        r.fail("empty distribution");
        return r;
    }
    for (int k = 0; k < K; ++k)
        for (int l = 0; l <= K; ++l)
            if (d.at(k, l) < 0.0)
                r.fail("negative cell (" + std::to_string(k + 1) + "," + std::to_string(l + 1) +
                       "): " + fmt_g17(d.at(k, l)));
    const double s = d.sum();
    if (std::abs(s - 1.0) > tol)
        r.fail("normalization: sum = " + fmt_g17(s) + ", deficit " + fmt_g17(1.0 - s));
    for (int k = 0; k < K; ++k)
        for (int l = k + 1; l < K; ++l) {
            const double gap = d.at(k, l) - d.at(l, k);
            if (std::abs(gap) > tol)
                r.fail("symmetry violated at (" + std::to_string(k + 1) + "," + std::to_string(l + 1) +
                       ")/(" + std::to_string(l + 1) + "," + std::to_string(k + 1) + "): gap " + fmt_g17(gap));
        }
    return r;
}

namespace {

void check_unit_interval(ValidationReport& r, const char* name, double x, int i, int j, int k = -1,
                         int l = -1) {
    if (x < 0.0 || x > 1.0) {
        std::string idx = "[" + std::to_string(i + 1) + "][" + std::to_string(j + 1) + "]";
        if (k >= 0) idx += "[" + std::to_string(k + 1) + "]";
        if (l >= 0) idx += "[" + std::to_string(l + 1) + "]";
        r.fail(std::string(name) + idx + " out of [0,1]: " + fmt_g17(x));
    }
}

} // namespace

ValidationReport validate_table(const ProbabilityTable& t, const ExtendedTypeDistribution& d,
                                double tol) {
    ValidationReport r;
    const int K = t.K;
    if (K != d.type_count()) {
        r.fail("type count mismatch between table and distribution");
        return r;
    }

    // eta rows sum to 1
    for (int k = 0; k < K; ++k) {
        double s = 0.0;
        for (int l = 0; l < K; ++l) {
            check_unit_interval(r, "eta", t.eta(k, l), k, l);
            s += t.eta(k, l);
        }
        if (std::abs(s - 1.0) > tol)
            r.fail("eta row " + std::to_string(k + 1) + " sums to " + fmt_g17(s));
    }

    // theta row sums <= 1, b residual, detailed balance at d
    for (int k = 0; k < K; ++k) {
        double s = 0.0;
        for (int l = 0; l < K; ++l) {
            check_unit_interval(r, "theta", t.theta(k, l), k, l);
            s += t.theta(k, l);
        }
        if (s > 1.0 + tol) r.fail("theta row " + std::to_string(k + 1) + " sums to " + fmt_g17(s));
        if (std::abs(t.b[k] - (1.0 - s)) > tol)
            r.fail("b[" + std::to_string(k + 1) + "] = " + fmt_g17(t.b[k]) + " != 1 - theta row sum " +
                   fmt_g17(1.0 - s));
    }
    for (int k = 0; k < K; ++k)
        for (int l = 0; l < K; ++l) {
            const double lhs = d.unmatched_cell(k) * t.theta(k, l);
            const double rhs = d.unmatched_cell(l) * t.theta(l, k);
            if (std::abs(lhs - rhs) > tol)
                r.fail("detailed balance at (" + std::to_string(k + 1) + "," + std::to_string(l + 1) +
                       "): " + fmt_g17(lhs) + " != " + fmt_g17(rhs));
        }

    // xi symmetric
    for (int k = 0; k < K; ++k)
        for (int l = 0; l < K; ++l) {
            check_unit_interval(r, "xi", t.xi(k, l), k, l);
            if (std::abs(t.xi(k, l) - t.xi(l, k)) > tol)
                r.fail("xi asymmetric at (" + std::to_string(k + 1) + "," + std::to_string(l + 1) + ")");
        }

    // sigma: normalized over (r,s), pair-symmetric
    for (int k = 0; k < K; ++k)
        for (int l = 0; l < K; ++l) {
            double s = 0.0;
            for (int rr = 0; rr < K; ++rr)
                for (int ss = 0; ss < K; ++ss) {
                    const double x = t.sigma_at(k, l, rr, ss);
                    check_unit_interval(r, "sigma", x, k, l, rr, ss);
                    s += x;
                    const double mirror = t.sigma_at(l, k, ss, rr);
                    if (std::abs(x - mirror) > tol)
                        r.fail("sigma[" + std::to_string(k + 1) + "][" + std::to_string(l + 1) + "][" +
                               std::to_string(rr + 1) + "][" + std::to_string(ss + 1) +
                               "] != mirrored entry");
                }
            if (std::abs(s - 1.0) > tol)
                r.fail("sigma[" + std::to_string(k + 1) + "][" + std::to_string(l + 1) + "] sums to " +
                       fmt_g17(s));
        }

    // varsigma rows normalized
    for (int k = 0; k < K; ++k)
        for (int l = 0; l < K; ++l) {
            double s = 0.0;
            for (int rr = 0; rr < K; ++rr) {
                check_unit_interval(r, "varsigma", t.varsigma_at(k, l, rr), k, l, rr);
                s += t.varsigma_at(k, l, rr);
            }
            if (std::abs(s - 1.0) > tol)
                r.fail("varsigma[" + std::to_string(k + 1) + "][" + std::to_string(l + 1) + "] sums to " +
                       fmt_g17(s));
        }

    return r;
}

std::string distribution_csv_header(int K) {
    std::string h;
    for (int k = 0; k < K; ++k) {
        for (int l = 0; l <= K; ++l) {
            if (!h.empty()) h += ',';
            h += "k" + std::to_string(k + 1) + "_";
            h += (l == K) ? "J" : ("l" + std::to_string(l + 1));
        }
    }
    return h;
}

std::string distribution_csv_row(const ExtendedTypeDistribution& d) {
    std::string row;
    const int K = d.type_count();
    for (int k = 0; k < K; ++k)
        for (int l = 0; l <= K; ++l) {
            if (!row.empty()) row += ',';
            row += fmt_g17(d.at(k, l));
        }
    return row;
}

ExtendedTypeDistribution distribution_from_csv_row(int K, const std::string& row) {
    ExtendedTypeDistribution d(K);
    std::stringstream ss(row);
    std::string tok;
    for (int k = 0; k < K; ++k)
        for (int l = 0; l <= K; ++l) {
            if (!std::getline(ss, tok, ','))
                throw std::invalid_argument("distribution row: expected " +
                                            std::to_string(K * (K + 1)) + " cells");
            d.at(k, l) = std::strtod(tok.c_str(), nullptr);
        }
    return d;
}

} // namespace bubblesim
