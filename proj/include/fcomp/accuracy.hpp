#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "fcomp/incentives.hpp"
#include "fcomp/mechanisms.hpp"
#include "fcomp/rng.hpp"
#include "fcomp/scoring.hpp"
#include "fcomp/types.hpp"

namespace fcomp {

/// Inputs of the sample-complexity bound: forecaster count, expected-score
/// gap between best and second best, and the target selection probability.
struct LimitAccuracyParams {
    std::size_t n = 2;
    double delta = 0.0;
    double pi = 0.0;

    void validate() const {
        if (n < 2) throw std::invalid_argument("need n >= 2");
        if (!(delta > 0.0)) throw std::invalid_argument("accuracy gap must be positive");
        if (!(pi >= 0.0 && pi < 1.0)) throw std::invalid_argument("pi must be in [0,1)");
    }
};

/// Per-forecaster expected scores under the ground truth, the best
/// forecaster, and the gap to the runner-up.
struct AccuracyProfile {
    std::vector<double> expected_scores;
    std::size_t best = 0;   // lowest index on exact ties
    double gap = 0.0;       // best minus runner-up, 0 on ties
    bool degenerate = false;  // best is not unique
};

/// Closed-form probability that the score-difference lottery selects
/// forecaster i under ground truth theta:
/// 1/n + (1/n)(R(y_i, theta) - mean of the others' expected scores).
inline double elf_selection_probability_closed_form(const ReportMatrix& reports,
                                                    const TrueDistribution& theta,
                                                    const ScoringRule& rule, std::size_t i) {
    if (i >= reports.n) throw std::invalid_argument("forecaster index out of range");
    if (!rule.is_in_unit_range())
        throw UnsupportedRuleError("mechanism requires a rule bounded in [0,1]");
    const std::size_t n = reports.n;
    double sum = 0.0, own = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double e = expected_score(rule, reports.row(j), theta);
        sum += e;
        if (j == i) own = e;
    }
    const double others_mean = (sum - own) / static_cast<double>(n - 1);
    return (1.0 + own - others_mean) / static_cast<double>(n);
}

inline AccuracyProfile accuracy_profile(const ReportMatrix& reports,
                                        const TrueDistribution& theta,
                                        const ScoringRule& rule) {
    AccuracyProfile profile;
    profile.expected_scores.resize(reports.n);
    for (std::size_t i = 0; i < reports.n; ++i)
        profile.expected_scores[i] = expected_score(rule, reports.row(i), theta);
    profile.best = static_cast<std::size_t>(
        std::max_element(profile.expected_scores.begin(), profile.expected_scores.end()) -
        profile.expected_scores.begin());
    double runner_up = -1e300;
    for (std::size_t j = 0; j < reports.n; ++j) {
        if (j == profile.best) continue;
        runner_up = std::max(runner_up, profile.expected_scores[j]);
        if (profile.expected_scores[j] == profile.expected_scores[profile.best])
            profile.degenerate = true;
    }
    profile.gap = profile.expected_scores[profile.best] - runner_up;
    return profile;
}

/// Exact selection distribution of a mechanism under ground truth theta, by
/// expectation over all 2^m outcome vectors (per-event-lottery win
/// probabilities via the exact DP). Guarded to m <= 20.
inline std::vector<double> selection_distribution_under_theta(Mechanism mech,
                                                              const ReportMatrix& reports,
                                                              const TrueDistribution& theta,
                                                              const ScoringRule& rule,
                                                              double shrink_eps = kIelfDefaultShrink) {
    const std::size_t m = reports.m;
    if (theta.num_events() != m) throw std::invalid_argument("theta event count != m");
    if (m > 20) throw std::invalid_argument("outcome enumeration supports m <= 20");

    std::vector<double> probs(reports.n, 0.0);
    OutcomeVector x(m);
    for (std::uint64_t b = 0; b < (std::uint64_t{1} << m); ++b) {
        for (std::size_t k = 0; k < m; ++k) x[k] = (b >> k) & 1 ? 1.0 : 0.0;
        double px = 0.0;
        if (theta.is_independent()) {
            px = 1.0;
            for (std::size_t k = 0; k < m; ++k)
                px *= x[k] == 1.0 ? theta.thetas()[k] : 1.0 - theta.thetas()[k];
        } else {
            for (std::size_t a = 0; a < theta.joint_probs().size(); ++a)
                if (theta.joint_outcomes()[a] == x) px += theta.joint_probs()[a];
        }
        if (px == 0.0) continue;
        switch (mech) {
            case Mechanism::Mpsr:
                probs[mpsr_select(reports, x, rule)] += px;
                break;
            case Mechanism::Multnorm: {
                const auto mn = multnorm_distribution(reports, x, rule);
                for (std::size_t i = 0; i < reports.n; ++i) probs[i] += px * mn.dist[i];
                break;
            }
            case Mechanism::Elf: {
                const auto g = elf_distribution(reports, x, rule);
                for (std::size_t i = 0; i < reports.n; ++i) probs[i] += px * g[i];
                break;
            }
            case Mechanism::Ielf: {
                const ScoringRule r = detail::ielf_rule(rule, m, shrink_eps);
                const auto q = detail::event_distributions(reports, x, r);
                for (std::size_t i = 0; i < reports.n; ++i)
                    probs[i] += px * ielf_win_probability(q, reports.n, m, i);
                break;
            }
        }
    }
    return probs;
}

/// Rank accuracy: whenever forecaster i's expected score strictly exceeds
/// forecaster j's (by more than tol), i's selection probability must too.
inline bool rank_accuracy_check(const ReportMatrix& reports, const TrueDistribution& theta,
                                const ScoringRule& rule, Mechanism mech = Mechanism::Elf,
                                double tol = 1e-12) {
    std::vector<double> selection(reports.n);
    if (mech == Mechanism::Elf) {
        for (std::size_t i = 0; i < reports.n; ++i)
            selection[i] = elf_selection_probability_closed_form(reports, theta, rule, i);
    } else {
        selection = selection_distribution_under_theta(mech, reports, theta, rule);
    }
    std::vector<double> scores(reports.n);
    for (std::size_t i = 0; i < reports.n; ++i)
        scores[i] = expected_score(rule, reports.row(i), theta);
    for (std::size_t i = 0; i < reports.n; ++i)
        for (std::size_t j = 0; j < reports.n; ++j) {
            if (i == j) continue;
            if (scores[i] > scores[j] + tol && !(selection[i] > selection[j])) return false;
        }
    return true;
}

/// Minimum number of events after which the per-event-lottery mechanism is
/// guaranteed to select the most accurate forecaster with probability at
/// least pi: ceil((2(n-1)^2 / delta^2) * ln(2(n-1) / (1-pi))).
inline std::size_t hoeffding_m_bound(const LimitAccuracyParams& params) {
    params.validate();
    const double nm1 = static_cast<double>(params.n - 1);
    const double value =
        (2.0 * nm1 * nm1 / (params.delta * params.delta)) * std::log(2.0 * nm1 / (1.0 - params.pi));
    return static_cast<std::size_t>(std::ceil(value));
}

struct MonteCarloRate {
    double rate = 0.0;
    double std_error = 0.0;
    std::size_t wins = 0;
    std::size_t trials = 0;
};

namespace detail {

/// One reproducible trial: substream (master, Trial, index); outcomes are
/// drawn first (events ascending), then the mechanism's lotteries. Returns
/// the selected forecaster.
inline std::size_t selection_trial(Mechanism mech, const ScoringRule& rule,
                                   const ReportMatrix& reports, const TrueDistribution& theta,
                                   std::uint64_t master_seed, std::uint64_t trial_index,
                                   double shrink_eps) {
    Rng rng = Rng::substream(master_seed, StreamPurpose::Trial, trial_index);
    OutcomeVector x(reports.m);
    if (theta.is_independent()) {
        for (std::size_t k = 0; k < reports.m; ++k)
            x[k] = rng.bernoulli(theta.thetas()[k]) ? 1.0 : 0.0;
    } else {
        x = theta.joint_outcomes()[rng.sample(theta.joint_probs())];
    }
    switch (mech) {
        case Mechanism::Mpsr:
            return mpsr_select(reports, x, rule);
        case Mechanism::Multnorm: {
            const auto mn = multnorm_distribution(reports, x, rule);
            return rng.sample(mn.dist.probs);
        }
        case Mechanism::Elf:
            return elf_select(reports, x, rule, rng).winner;
        case Mechanism::Ielf:
            return ielf_select(reports, x, rule, rng, shrink_eps).winner;
    }
    throw std::logic_error("unreachable");
}

}  // namespace detail

/// Frequency with which the mechanism selects the most accurate forecaster,
/// over `trials` independently seeded trials. Requires a unique best
/// forecaster; per-event-lottery limit-accuracy claims additionally require
/// independent events.
inline MonteCarloRate monte_carlo_best_selection_rate(Mechanism mech, const ScoringRule& rule,
                                                      const ReportMatrix& reports,
                                                      const TrueDistribution& theta,
                                                      std::size_t trials,
                                                      std::uint64_t master_seed,
                                                      double shrink_eps = kIelfDefaultShrink) {
    if (trials == 0) throw std::invalid_argument("need at least one trial");
    if (mech == Mechanism::Ielf && !theta.is_independent())
        throw std::invalid_argument(
            "per-event-lottery accuracy claims need independent events");
    const AccuracyProfile profile = accuracy_profile(reports, theta, rule);
    if (profile.degenerate)
        throw std::invalid_argument("accuracy gap is zero; no best forecaster to track");

    MonteCarloRate out;
    out.trials = trials;
    for (std::uint64_t t = 0; t < trials; ++t)
        if (detail::selection_trial(mech, rule, reports, theta, master_seed, t, shrink_eps) ==
            profile.best)
            ++out.wins;
    out.rate = static_cast<double>(out.wins) / static_cast<double>(trials);
    out.std_error = std::sqrt(out.rate * (1.0 - out.rate) / static_cast<double>(trials));
    return out;
}

/// The two constraints a mechanism would have to satisfy to stay limit
/// accurate on perfectly correlated outcomes, as functions of the selection
/// probabilities q_{1|all-zeros} and q_{1|all-ones}. No point in [0,1]^2
/// satisfies both.
inline std::pair<bool, bool> prop7_infeasibility(double q10, double q11) {
    if (!(q10 >= 0.0 && q10 <= 1.0 && q11 >= 0.0 && q11 <= 1.0))
        throw std::invalid_argument("selection probabilities must lie in [0,1]");
    const bool c1 = q11 > 7.0 / 4.0 - 1.5 * q10;
    const bool c2 = q11 < 0.5 - (2.0 / 3.0) * q10;
    return {c1, c2};
}

}  // namespace fcomp
