#include "core/distribution.hpp"

#include <cmath>
#include <stdexcept>

namespace bubblesim {

void post_mutation_into(const ExtendedTypeDistribution& p, const Mat& eta,
                        ExtendedTypeDistribution& out) {
    const int K = p.type_count();
    out.reset(K);
    for (int k1 = 0; k1 < K; ++k1) {
        for (int l1 = 0; l1 < K; ++l1) {
            const double mass = p.at(k1, l1);
            if (mass == 0.0) continue;
            for (int k = 0; k < K; ++k) {
                const double ek = eta(k1, k) * mass;
                if (ek == 0.0) continue;
                for (int l = 0; l < K; ++l) out.at(k, l) += ek * eta(l1, l);
            }
        }
        const double um = p.unmatched_cell(k1);
        if (um != 0.0)
            for (int k = 0; k < K; ++k) out.unmatched_cell(k) += um * eta(k1, k);
    }
}

ExtendedTypeDistribution post_mutation(const ExtendedTypeDistribution& p, const Mat& eta) {
    ExtendedTypeDistribution out;
    post_mutation_into(p, eta, out);
    return out;
}

void post_matching_into(const ExtendedTypeDistribution& p, const Mat& theta,
                        const std::vector<double>& b, ExtendedTypeDistribution& out) {
    const int K = p.type_count();
    out.reset(K);
    for (int k = 0; k < K; ++k) {
        for (int l = 0; l < K; ++l) out.at(k, l) = p.at(k, l) + theta(k, l) * p.unmatched_cell(k);
        out.unmatched_cell(k) = b[k] * p.unmatched_cell(k);
    }
    for (int k = 0; k < K; ++k)
        for (int l = k + 1; l < K; ++l)
            if (std::abs(out.at(k, l) - out.at(l, k)) > Tol::table)
                throw std::runtime_error(
                    "post_matching broke pair symmetry at (" + std::to_string(k + 1) + "," +
                    std::to_string(l + 1) + "): theta lacks detailed balance, gap " +
                    fmt_g17(out.at(k, l) - out.at(l, k)));
}

ExtendedTypeDistribution post_matching(const ExtendedTypeDistribution& p, const Mat& theta,
                                       const std::vector<double>& b) {
    ExtendedTypeDistribution out;
    post_matching_into(p, theta, b, out);
    return out;
}

void post_breakup_into(const ExtendedTypeDistribution& p, const Mat& xi,
                       const std::vector<double>& sigma, const std::vector<double>& varsigma,
                       ExtendedTypeDistribution& out) {
    const int K = p.type_count();
    out.reset(K);
    for (int k = 0; k < K; ++k) out.unmatched_cell(k) = p.unmatched_cell(k);
    for (int k1 = 0; k1 < K; ++k1)
        for (int l1 = 0; l1 < K; ++l1) {
            const double mass = p.at(k1, l1);
            if (mass == 0.0) continue;
            const double split = xi(k1, l1);
            const double stay = (1.0 - split) * mass;
            if (stay != 0.0) {
                const double* s = &sigma[static_cast<size_t>((k1 * K + l1)) * K * K];
                for (int r = 0; r < K; ++r)
                    for (int ss = 0; ss < K; ++ss) out.at(r, ss) += stay * s[r * K + ss];
            }
            if (split != 0.0) {
                const double leave = split * mass;
                const double* v = &varsigma[static_cast<size_t>((k1 * K + l1)) * K];
                for (int r = 0; r < K; ++r) out.unmatched_cell(r) += leave * v[r];
            }
        }
}

ExtendedTypeDistribution post_breakup(const ExtendedTypeDistribution& p, const Mat& xi,
                                      const std::vector<double>& sigma,
                                      const std::vector<double>& varsigma) {
    ExtendedTypeDistribution out;
    post_breakup_into(p, xi, sigma, varsigma, out);
    return out;
}

namespace {

void finalize(ExtendedTypeDistribution& d, int period) {
    const int K = d.type_count();
    double sum = 0.0;
    for (int k = 0; k < K; ++k)
        for (int l = 0; l <= K; ++l) {
            double& x = d.at(k, l);
            if (x < 0.0) {
                if (x < -Tol::negative_clamp)
                    throw std::runtime_error("gamma_step period " + std::to_string(period) +
                                             ": negative mass " + fmt_g17(x) + " at (" +
                                             std::to_string(k + 1) + "," + std::to_string(l + 1) +
                                             ")");
                x = 0.0;
            }
            sum += x;
        }
    if (std::abs(sum - 1.0) > Tol::normalization)
        throw std::runtime_error("gamma_step period " + std::to_string(period) +
                                 ": mass drift, sum = " + fmt_g17(sum));
}

} // namespace

GammaStep gamma_step(const TransitionModel& model, const ScenarioPath& w, int period,
                     const ExtendedTypeDistribution& p_prev) {
    GammaWorkspace ws;
    GammaStep step;
    gamma_step_into(model, w, period, p_prev, ws, step);
    return step;
}

GammaStep gamma_step(const TransitionModel& model, const ScenarioPath& w, int period,
                     const ExtendedTypeDistribution& p_prev, GammaWorkspace& ws) {
    GammaStep step;
    gamma_step_into(model, w, period, p_prev, ws, step);
    return step;
}

void gamma_step_into(const TransitionModel& model, const ScenarioPath& w, int period,
                     const ExtendedTypeDistribution& p_prev, GammaWorkspace& ws, GammaStep& step) {
    model.eta(w, period, p_prev, ws.eta);
    post_mutation_into(p_prev, ws.eta, step.post_mutation);

    model.theta(w, period, step.post_mutation, ws.theta);
    const int K = model.type_count();
    ws.b.assign(K, 0.0);
    for (int k = 0; k < K; ++k) {
        double s = 0.0;
        for (int l = 0; l < K; ++l) s += ws.theta(k, l);
        ws.b[k] = 1.0 - s;
    }
    post_matching_into(step.post_mutation, ws.theta, ws.b, step.post_matching);

    model.xi(w, period, step.post_matching, ws.xi);
    model.sigma(w, period, step.post_matching, ws.sigma);
    model.varsigma(w, period, step.post_matching, ws.varsigma);
    post_breakup_into(step.post_matching, ws.xi, ws.sigma, ws.varsigma, step.next);
    finalize(step.next, period);
}

TransitionMatrix transition_matrix(const TransitionModel& model, const ScenarioPath& w, int period,
                                   const ExtendedTypeDistribution& p_prev) {
    const int K = model.type_count();
    const int M = K * (K + 1);
    const auto idx = [K](int k, int l) { return k * (K + 1) + l; }; // l = K is J

    GammaWorkspace ws;
    model.eta(w, period, p_prev, ws.eta);
    const ExtendedTypeDistribution p_mut = post_mutation(p_prev, ws.eta);
    model.theta(w, period, p_mut, ws.theta);
    ws.b.assign(K, 0.0);
    for (int k = 0; k < K; ++k) {
        double s = 0.0;
        for (int l = 0; l < K; ++l) s += ws.theta(k, l);
        ws.b[k] = 1.0 - s;
    }
    const ExtendedTypeDistribution p_match = post_matching(p_mut, ws.theta, ws.b);
    model.xi(w, period, p_match, ws.xi);
    model.sigma(w, period, p_match, ws.sigma);
    model.varsigma(w, period, p_match, ws.varsigma);

    // Mutation kernel: eta x eta on matched cells, eta alone on unmatched.
    Mat zm(M, M, 0.0);
    for (int k = 0; k < K; ++k) {
        for (int l = 0; l < K; ++l)
            for (int k2 = 0; k2 < K; ++k2)
                for (int l2 = 0; l2 < K; ++l2)
                    zm(idx(k, l), idx(k2, l2)) = ws.eta(k, k2) * ws.eta(l, l2);
        for (int k2 = 0; k2 < K; ++k2) zm(idx(k, K), idx(k2, K)) = ws.eta(k, k2);
    }

    // Matching kernel at the post-mutation distribution: only J rows move.
    Mat zq(M, M, 0.0);
    for (int k = 0; k < K; ++k) {
        for (int l = 0; l < K; ++l) {
            zq(idx(k, l), idx(k, l)) = 1.0;
            zq(idx(k, K), idx(k, l)) = ws.theta(k, l);
        }
        zq(idx(k, K), idx(k, K)) = ws.b[k];
    }

    // Break-up kernel at the post-matching distribution.
    Mat zb(M, M, 0.0);
    for (int k = 0; k < K; ++k) {
        zb(idx(k, K), idx(k, K)) = 1.0;
        for (int l = 0; l < K; ++l) {
            const double split = ws.xi(k, l);
            for (int r = 0; r < K; ++r) {
                for (int s = 0; s < K; ++s)
                    zb(idx(k, l), idx(r, s)) =
                        (1.0 - split) *
                        ws.sigma[static_cast<size_t>(((k * K + l) * K + r)) * K + s];
                zb(idx(k, l), idx(r, K)) =
                    split * ws.varsigma[static_cast<size_t>((k * K + l)) * K + r];
            }
        }
    }

    TransitionMatrix tm;
    tm.K = K;
    tm.period = period;
    tm.z.assign(M, M, 0.0);
    // z = zm * zq * zb
    Mat tmp(M, M, 0.0);
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j) {
            double acc = 0.0;
            for (int t = 0; t < M; ++t) acc += zm(i, t) * zq(t, j);
            tmp(i, j) = acc;
        }
    for (int i = 0; i < M; ++i) {
        double row = 0.0;
        for (int j = 0; j < M; ++j) {
            double acc = 0.0;
            for (int t = 0; t < M; ++t) acc += tmp(i, t) * zb(t, j);
            tm.z(i, j) = acc;
            row += acc;
        }
        if (std::abs(row - 1.0) > Tol::table)
            throw std::runtime_error("transition_matrix: row " + std::to_string(i) + " sums to " +
                                     fmt_g17(row));
    }
    return tm;
}

EvolveResult evolve(const ExtendedTypeDistribution& p0, const TransitionModel& model,
                    const ScenarioPath& w, int n_periods) {
    EvolveResult r;
    r.p_hat.reserve(n_periods + 1);
    r.p_hat.push_back(p0);
    GammaWorkspace ws;
    GammaStep step;
    for (int n = 1; n <= n_periods; ++n) {
        gamma_step_into(model, w, n, r.p_hat.back(), ws, step);
        r.post_mutation.push_back(step.post_mutation);
        r.post_matching.push_back(step.post_matching);
        r.p_hat.push_back(step.next);
    }
    return r;
}

void evolve_fraction_difference(const ExtendedTypeDistribution& p0, const TransitionModel& model,
                                const ScenarioPath& w, int n_periods, double* out,
                                GammaWorkspace& ws) {
    ExtendedTypeDistribution p = p0;
    GammaStep step;
    out[0] = model.p_difference(p);
    for (int n = 1; n <= n_periods; ++n) {
        gamma_step_into(model, w, n, p, ws, step);
        std::swap(p, step.next);
        out[n] = model.p_difference(p);
    }
}

std::string evolve_csv(const EvolveResult& r) {
    if (r.p_hat.empty()) return "";
    const int K = r.p_hat[0].type_count();
    std::string out = "period," + distribution_csv_header(K) + ",p1_minus_p3\n";
    for (size_t n = 0; n < r.p_hat.size(); ++n) {
        out += std::to_string(n) + "," + distribution_csv_row(r.p_hat[n]) + "," +
               fmt_g17(K >= 3 ? fraction_difference(r.p_hat[n]) : 0.0) + "\n";
    }
    return out;
}

} // namespace bubblesim
