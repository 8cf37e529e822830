#include "core/population.hpp"

#include <algorithm>
#include <stdexcept>

namespace bubblesim {

AgentPopulation AgentPopulation::unmatched(int n, const std::vector<double>& fractions) {
    if (n < 1) throw std::invalid_argument("population size must be >= 1");
    const int K = static_cast<int>(fractions.size());
    AgentPopulation pop;
    pop.K = K;
    pop.type.reserve(n);
    pop.partner.assign(n, -1);

    // Largest-remainder apportionment of n agents over the K fractions.
    std::vector<int> counts(K, 0);
    std::vector<std::pair<double, int>> rema(K);
    int assigned = 0;
    for (int k = 0; k < K; ++k) {
        const double ideal = fractions[k] * n;
        counts[k] = static_cast<int>(ideal);
        assigned += counts[k];
        rema[k] = {ideal - counts[k], k};
    }
    std::sort(rema.begin(), rema.end(), [](const auto& a, const auto& b) {
        return a.first > b.first || (a.first == b.first && a.second < b.second);
    });
    for (int i = 0; i < n - assigned; ++i) counts[rema[i % K].second] += 1;

    for (int k = 0; k < K; ++k)
        for (int c = 0; c < counts[k]; ++c) pop.type.push_back(k);
    return pop;
}

ValidationReport AgentPopulation::validate() const {
    ValidationReport r;
    const int n = size();
    if (static_cast<int>(partner.size()) != n) {
        r.fail("partner array size mismatch");
        return r;
    }
    for (int i = 0; i < n; ++i) {
        if (type[i] < 0 || type[i] >= K) r.fail("agent " + std::to_string(i) + ": type out of range");
        const int j = partner[i];
        if (j == -1) continue;
        if (j < 0 || j >= n) {
            r.fail("agent " + std::to_string(i) + ": partner out of range");
            continue;
        }
        if (j == i) r.fail("agent " + std::to_string(i) + ": matched to itself");
        else if (partner[j] != i)
            r.fail("agent " + std::to_string(i) + ": partner link not involutive");
    }
    return r;
}

std::string AgentPopulation::csv() const {
    std::string out = "agent_id,type,partner_id\n";
    for (int i = 0; i < size(); ++i)
        out += std::to_string(i) + "," + std::to_string(type[i] + 1) + "," +
               std::to_string(partner[i]) + "\n";
    return out;
}

void mutation_step(AgentPopulation& pop, const Mat& eta, Rng& rng) {
    const int K = pop.K;
    const int n = pop.size();
    for (int i = 0; i < n; ++i)
        pop.type[i] = rng.sample_row(&eta.v[static_cast<size_t>(pop.type[i]) * K], K);
}

void match_step(AgentPopulation& pop, const Mat& theta, const std::vector<double>& b, Rng& rng) {
    const int K = pop.K;
    const int n = pop.size();

    // Step 1: proposals. Bucket (k,l) holds unmatched agents of type k who
    // drew partner type l; drawing J (the residual) keeps the agent out.
    std::vector<std::vector<int32_t>> bucket(static_cast<size_t>(K) * K);
    std::vector<double> row(K + 1);
    for (int i = 0; i < n; ++i) {
        if (pop.partner[i] != -1) continue;
        const int k = pop.type[i];
        for (int l = 0; l < K; ++l) row[l] = theta(k, l);
        row[K] = b[k];
        const int draw = rng.sample_row(row.data(), K + 1);
        if (draw < K) bucket[static_cast<size_t>(k) * K + draw].push_back(i);
    }

    // Steps 2-3: cardinality repair by uniform truncation, then pairing via a
    // uniform bijection (k < l) or a uniform perfect matching (k = l).
    for (int k = 0; k < K; ++k) {
        auto& same = bucket[static_cast<size_t>(k) * K + k];
        if (same.size() % 2 == 1) {
            const size_t drop = static_cast<size_t>(rng.bounded(same.size()));
            same.erase(same.begin() + drop);
        }
        rng.shuffle(same);
        for (size_t i = 0; i + 1 < same.size(); i += 2) {
            pop.partner[same[i]] = same[i + 1];
            pop.partner[same[i + 1]] = same[i];
        }
        for (int l = k + 1; l < K; ++l) {
            auto& left = bucket[static_cast<size_t>(k) * K + l];
            auto& right = bucket[static_cast<size_t>(l) * K + k];
            const size_t m = std::min(left.size(), right.size());
            rng.shuffle(left);
            rng.shuffle(right);
            for (size_t i = 0; i < m; ++i) {
                pop.partner[left[i]] = right[i];
                pop.partner[right[i]] = left[i];
            }
        }
    }
}

void breakup_step(AgentPopulation& pop, const Mat& xi, const std::vector<double>& sigma,
                  const std::vector<double>& varsigma, Rng& rng) {
    const int K = pop.K;
    const int n = pop.size();
    for (int i = 0; i < n; ++i) {
        const int j = pop.partner[i];
        if (j == -1 || j < i) continue; // each pair handled once, from its lower index
        const int k = pop.type[i];
        const int l = pop.type[j];
        if (rng.bernoulli(xi(k, l))) {
            pop.partner[i] = -1;
            pop.partner[j] = -1;
            pop.type[i] = rng.sample_row(&varsigma[static_cast<size_t>((k * K + l)) * K], K);
            pop.type[j] = rng.sample_row(&varsigma[static_cast<size_t>((l * K + k)) * K], K);
        } else {
            const int joint =
                rng.sample_row(&sigma[static_cast<size_t>((k * K + l)) * K * K], K * K);
            pop.type[i] = joint / K;
            pop.type[j] = joint % K;
        }
    }
}

ExtendedTypeDistribution empirical_distribution(const AgentPopulation& pop) {
    const int K = pop.K;
    const int n = pop.size();
    ExtendedTypeDistribution d(K);
    const double w = 1.0 / n;
    for (int i = 0; i < n; ++i) {
        const int j = pop.partner[i];
        if (j == -1) d.unmatched_cell(pop.type[i]) += w;
        else d.at(pop.type[i], pop.type[j]) += w;
    }
    return d;
}

PeriodDistributions run_period(AgentPopulation& pop, const TransitionModel& model,
                               const ScenarioPath& w, int period, Rng& rng) {
    PeriodDistributions out;
    Mat eta, theta, xi;
    std::vector<double> b, sigma, varsigma;

    ExtendedTypeDistribution start = empirical_distribution(pop);
    model.eta(w, period, start, eta);
    mutation_step(pop, eta, rng);
    out.post_mutation = empirical_distribution(pop);

    model.theta(w, period, out.post_mutation, theta);
    const int K = model.type_count();
    b.assign(K, 0.0);
    for (int k = 0; k < K; ++k) {
        double s = 0.0;
        for (int l = 0; l < K; ++l) s += theta(k, l);
        b[k] = 1.0 - s;
    }
    match_step(pop, theta, b, rng);
    out.post_matching = empirical_distribution(pop);

    model.xi(w, period, out.post_matching, xi);
    model.sigma(w, period, out.post_matching, sigma);
    model.varsigma(w, period, out.post_matching, varsigma);
    breakup_step(pop, xi, sigma, varsigma, rng);
    out.end_of_period = empirical_distribution(pop);
    return out;
}

} // namespace bubblesim
