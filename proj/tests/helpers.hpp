#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fcomp/incentives.hpp"
#include "fcomp/mechanisms.hpp"
#include "fcomp/rng.hpp"
#include "fcomp/scoring.hpp"
#include "fcomp/types.hpp"

// Test-only oracles and instance generators. The oracles deliberately use
// direct enumeration, independent of the closed forms and dynamic programs
// they cross-check.
namespace testutil {

using namespace fcomp;

inline Rng test_rng(std::uint64_t index) {
    return Rng::substream(8923751, StreamPurpose::TestGen, index);
}

inline ReportMatrix random_reports(Rng& rng, std::size_t n, std::size_t m) {
    ReportMatrix r(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < m; ++k) r.at(i, k) = rng.next_unit();
    return r;
}

inline OutcomeVector random_binary_outcomes(Rng& rng, std::size_t m) {
    OutcomeVector x(m);
    for (std::size_t k = 0; k < m; ++k) x[k] = rng.bernoulli(0.5) ? 1.0 : 0.0;
    return x;
}

inline TrueDistribution random_independent_theta(Rng& rng, std::size_t m) {
    std::vector<double> t(m);
    for (double& v : t) v = rng.next_unit();
    return TrueDistribution::independent(t);
}

/// Correlated ground truth with `atoms` support points. The last weight
/// absorbs the rounding remainder so the masses sum to 1 exactly.
inline TrueDistribution random_joint_theta(Rng& rng, std::size_t m, std::size_t atoms) {
    std::vector<std::vector<double>> outcomes(atoms);
    std::vector<double> probs(atoms);
    double sum = 0.0;
    for (std::size_t a = 0; a < atoms; ++a) {
        outcomes[a] = random_binary_outcomes(rng, m);
        probs[a] = 0.05 + rng.next_unit();
        sum += probs[a];
    }
    double acc = 0.0;
    for (std::size_t a = 0; a + 1 < atoms; ++a) {
        probs[a] /= sum;
        acc += probs[a];
    }
    probs[atoms - 1] = 1.0 - acc;
    return TrueDistribution::joint(std::move(outcomes), std::move(probs));
}

/// Probability of each outcome vector under theta.
inline double outcome_probability(const TrueDistribution& theta, const OutcomeVector& x) {
    if (theta.is_independent()) {
        double p = 1.0;
        for (std::size_t k = 0; k < x.size(); ++k)
            p *= x[k] == 1.0 ? theta.thetas()[k] : 1.0 - theta.thetas()[k];
        return p;
    }
    double p = 0.0;
    for (std::size_t a = 0; a < theta.joint_probs().size(); ++a)
        if (theta.joint_outcomes()[a] == x) p += theta.joint_probs()[a];
    return p;
}

/// Brute-force selection probability of forecaster i under the score-
/// difference lottery: expectation of the per-outcome distribution over all
/// 2^m outcome vectors.
inline double elf_selection_brute_force(const ReportMatrix& reports,
                                        const TrueDistribution& theta, const ScoringRule& rule,
                                        std::size_t i) {
    const std::size_t m = reports.m;
    double total = 0.0;
    OutcomeVector x(m);
    for (std::uint64_t b = 0; b < (std::uint64_t{1} << m); ++b) {
        for (std::size_t k = 0; k < m; ++k) x[k] = (b >> k) & 1 ? 1.0 : 0.0;
        const double px = outcome_probability(theta, x);
        if (px == 0.0) continue;
        total += px * elf_distribution(reports, x, rule)[i];
    }
    return total;
}

/// Exact most-wins selection probability by enumerating all n^m event-winner
/// vectors; the oracle for the win-count dynamic program.
inline double ielf_win_probability_enumerated(std::span<const double> q, std::size_t n,
                                              std::size_t m, std::size_t audited) {
    std::vector<std::size_t> w(m, 0);
    double total = 0.0;
    while (true) {
        double p = 1.0;
        std::vector<std::size_t> counts(n, 0);
        for (std::size_t k = 0; k < m; ++k) {
            p *= q[k * n + w[k]];
            ++counts[w[k]];
        }
        if (p > 0.0) {
            const std::size_t top = *std::max_element(counts.begin(), counts.end());
            if (counts[audited] == top) {
                const auto ties = std::count(counts.begin(), counts.end(), top);
                total += p / static_cast<double>(ties);
            }
        }
        std::size_t k = m;
        bool done = true;
        while (k > 0) {
            --k;
            if (++w[k] < n) {
                done = false;
                break;
            }
            w[k] = 0;
        }
        if (done) break;
    }
    return total;
}

/// Random finite-support scenario (arbitrary correlation between events and
/// others' reports).
inline Scenario random_scenario(Rng& rng, std::size_t n, std::size_t m, std::size_t num_atoms) {
    Scenario sc;
    sc.n = n;
    sc.m = m;
    sc.audited = rng.uniform_index(n);
    std::vector<double> weights(num_atoms);
    double sum = 0.0;
    for (double& w : weights) {
        w = 0.05 + rng.next_unit();
        sum += w;
    }
    for (std::size_t a = 0; a < num_atoms; ++a) {
        ScenarioAtom atom;
        atom.p = weights[a] / sum;
        atom.outcome = random_binary_outcomes(rng, m);
        atom.others.resize(n - 1);
        for (auto& row : atom.others) {
            row.resize(m);
            for (double& v : row) v = rng.next_unit();
        }
        sc.atoms.push_back(std::move(atom));
    }
    // Exact unit mass: fold rounding into the heaviest atom.
    double mass = 0.0;
    for (const auto& a : sc.atoms) mass += a.p;
    sc.atoms.front().p += 1.0 - mass;
    return sc;
}

/// Random belief-independent scenario: independent per-event block sets,
/// joined into an explicit product-form atom list.
inline Scenario random_belief_independent_scenario(Rng& rng, std::size_t n, std::size_t m,
                                                   std::size_t blocks_per_event) {
    struct Block {
        double p;
        double outcome;
        std::vector<double> others;  // one report per other forecaster
    };
    std::vector<std::vector<Block>> events(m);
    for (std::size_t k = 0; k < m; ++k) {
        double sum = 0.0;
        for (std::size_t b = 0; b < blocks_per_event; ++b) {
            Block blk;
            blk.p = 0.05 + rng.next_unit();
            sum += blk.p;
            blk.outcome = rng.bernoulli(0.5) ? 1.0 : 0.0;
            blk.others.resize(n - 1);
            for (double& v : blk.others) v = rng.next_unit();
            events[k].push_back(std::move(blk));
        }
        double acc = 0.0;
        for (auto& blk : events[k]) blk.p /= sum;
        for (auto& blk : events[k]) acc += blk.p;
        events[k].front().p += 1.0 - acc;
    }

    Scenario sc;
    sc.n = n;
    sc.m = m;
    sc.audited = rng.uniform_index(n);
    std::vector<std::size_t> pick(m, 0);
    while (true) {
        ScenarioAtom atom;
        atom.p = 1.0;
        atom.outcome.resize(m);
        atom.others.assign(n - 1, std::vector<double>(m));
        for (std::size_t k = 0; k < m; ++k) {
            const Block& blk = events[k][pick[k]];
            atom.p *= blk.p;
            atom.outcome[k] = blk.outcome;
            for (std::size_t j = 0; j + 1 < n; ++j) atom.others[j][k] = blk.others[j];
        }
        sc.atoms.push_back(std::move(atom));
        std::size_t k = m;
        bool done = true;
        while (k > 0) {
            --k;
            if (++pick[k] < events[k].size()) {
                done = false;
                break;
            }
            pick[k] = 0;
        }
        if (done) break;
    }
    double mass = 0.0;
    for (const auto& a : sc.atoms) mass += a.p;
    for (auto& a : sc.atoms) a.p /= mass;
    mass = 0.0;
    for (const auto& a : sc.atoms) mass += a.p;
    sc.atoms.front().p += 1.0 - mass;
    return sc;
}

}  // namespace testutil
