#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fcomp/errors.hpp"
#include "fcomp/rng.hpp"
#include "fcomp/scoring.hpp"
#include "fcomp/types.hpp"

namespace fcomp {

enum class Mechanism { Mpsr, Multnorm, Elf, Ielf };

inline Mechanism parse_mechanism(const std::string& id) {
    if (id == "mpsr") return Mechanism::Mpsr;
    if (id == "multnorm") return Mechanism::Multnorm;
    if (id == "elf") return Mechanism::Elf;
    if (id == "ielf") return Mechanism::Ielf;
    throw ParseError("unknown mechanism: " + id);
}

inline std::string mechanism_name(Mechanism m) {
    switch (m) {
        case Mechanism::Mpsr: return "mpsr";
        case Mechanism::Multnorm: return "multnorm";
        case Mechanism::Elf: return "elf";
        case Mechanism::Ielf: return "ielf";
    }
    return "?";
}

/// Default shrink factor applied to the scoring rule inside multi-event
/// per-event lotteries, keeping scores strictly below 1 as that mechanism
/// requires.
inline constexpr double kIelfDefaultShrink = 1e-6;

namespace detail {

inline void check_dims(const ReportMatrix& reports, std::size_t outcome_count) {
    if (reports.n < 2) throw std::invalid_argument("need at least 2 forecasters");
    if (reports.m == 0 || reports.m != outcome_count)
        throw std::invalid_argument("report columns and outcome count do not match");
}

inline void require_unit_rule(const ScoringRule& rule) {
    if (!rule.is_in_unit_range())
        throw UnsupportedRuleError("mechanism requires a rule bounded in [0,1]");
}

}  // namespace detail

/// Realized scores, n x m row-major.
inline std::vector<double> score_matrix(const ReportMatrix& reports, const OutcomeVector& outcomes,
                                        const ScoringRule& rule) {
    detail::check_dims(reports, outcomes.size());
    std::vector<double> s(reports.n * reports.m);
    for (std::size_t i = 0; i < reports.n; ++i)
        for (std::size_t k = 0; k < reports.m; ++k)
            s[i * reports.m + k] = rule.score(reports.at(i, k), outcomes[k]);
    return s;
}

inline std::vector<double> score_matrix(const CategoricalReportMatrix& reports,
                                        const CategoricalOutcomes& outcomes,
                                        const ScoringRule& rule) {
    if (reports.n < 2) throw std::invalid_argument("need at least 2 forecasters");
    if (reports.m == 0 || reports.m != outcomes.size())
        throw std::invalid_argument("report columns and outcome count do not match");
    std::vector<double> s(reports.n * reports.m);
    for (std::size_t i = 0; i < reports.n; ++i)
        for (std::size_t k = 0; k < reports.m; ++k)
            s[i * reports.m + k] = rule.score(reports.report(i, k), outcomes[k]);
    return s;
}

namespace detail {

inline std::vector<double> total_scores(std::span<const double> scores, std::size_t n,
                                        std::size_t m) {
    std::vector<double> totals(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < m; ++k) totals[i] += scores[i * m + k];
    return totals;
}

inline std::vector<std::size_t> argmax_set(std::span<const double> values) {
    const double best = *std::max_element(values.begin(), values.end());
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < values.size(); ++i)
        if (values[i] == best) out.push_back(i);
    return out;
}

/// Single-event score-difference lottery over one column of realized scores:
/// f_i = 1/n + (1/n) * (s_i - mean of the others' scores).
inline std::vector<double> elf_probs_from_scores(std::span<const double> s) {
    const std::size_t n = s.size();
    const double sum = std::accumulate(s.begin(), s.end(), 0.0);
    std::vector<double> f(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double others_mean = (sum - s[i]) / static_cast<double>(n - 1);
        f[i] = (1.0 + s[i] - others_mean) / static_cast<double>(n);
    }
    return f;
}

inline std::vector<double> elf_probs_from_score_matrix(std::span<const double> scores,
                                                       std::size_t n, std::size_t m) {
    std::vector<double> g(n, 0.0);
    std::vector<double> col(n);
    for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t i = 0; i < n; ++i) col[i] = scores[i * m + k];
        const std::vector<double> f = elf_probs_from_scores(col);
        for (std::size_t i = 0; i < n; ++i) g[i] += f[i];
    }
    for (double& v : g) v /= static_cast<double>(m);
    return g;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Highest-total-proper-score selection (the standard leaderboard mechanism)
// ---------------------------------------------------------------------------

/// All forecasters attaining the maximum total score, ascending.
inline std::vector<std::size_t> mpsr_winner_set(const ReportMatrix& reports,
                                                const OutcomeVector& outcomes,
                                                const ScoringRule& rule) {
    const auto scores = score_matrix(reports, outcomes, rule);
    return detail::argmax_set(detail::total_scores(scores, reports.n, reports.m));
}

/// Selects the forecaster with the highest total score; ties go to the
/// lowest index. Deterministic.
inline std::size_t mpsr_select(const ReportMatrix& reports, const OutcomeVector& outcomes,
                               const ScoringRule& rule) {
    return mpsr_winner_set(reports, outcomes, rule).front();
}

inline std::size_t mpsr_select(const CategoricalReportMatrix& reports,
                               const CategoricalOutcomes& outcomes, const ScoringRule& rule) {
    const auto scores = score_matrix(reports, outcomes, rule);
    return detail::argmax_set(detail::total_scores(scores, reports.n, reports.m)).front();
}

// ---------------------------------------------------------------------------
// Multiplicative-normalization strawman (single event)
// ---------------------------------------------------------------------------

struct MultnormResult {
    SelectionDistribution dist;
    bool degenerate = false;  // all scores zero; fell back to uniform
};

/// Divides each realized score by the sum of all scores. Not incentive
/// compatible; kept as the baseline it is. Single event only.
inline MultnormResult multnorm_distribution(const ReportMatrix& reports,
                                            const OutcomeVector& outcomes,
                                            const ScoringRule& rule) {
    detail::check_dims(reports, outcomes.size());
    if (reports.m != 1)
        throw std::invalid_argument("multiplicative normalization is single-event only");
    if (rule.bounds().lower < -1e-12)
        throw UnsupportedRuleError("multiplicative normalization needs nonnegative scores");
    const auto scores = score_matrix(reports, outcomes, rule);
    const double sum = std::accumulate(scores.begin(), scores.end(), 0.0);
    const std::size_t n = reports.n;
    if (sum <= 0.0) {
        return {SelectionDistribution{std::vector<double>(n, 1.0 / static_cast<double>(n))},
                true};
    }
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i) p[i] = scores[i] / sum;
    return {SelectionDistribution::sanitized(std::move(p)), false};
}

// ---------------------------------------------------------------------------
// Score-difference lottery (single- and multi-event)
// ---------------------------------------------------------------------------

/// Single-event selection distribution, f_i = 1/n + (1/n)(R(y_i,x) - mean of
/// the other forecasters' scores). Valid for any rule bounded in [0,1].
inline SelectionDistribution elf_distribution_single(std::span<const double> reports,
                                                     double outcome, const ScoringRule& rule) {
    if (reports.size() < 2) throw std::invalid_argument("need at least 2 forecasters");
    detail::require_unit_rule(rule);
    std::vector<double> s(reports.size());
    for (std::size_t i = 0; i < reports.size(); ++i) s[i] = rule.score(reports[i], outcome);
    return SelectionDistribution::sanitized(detail::elf_probs_from_scores(s));
}

/// Multi-event selection distribution: the mean over events of the
/// single-event lotteries. Equivalently, sample one event uniformly and run
/// the single-event lottery there.
inline SelectionDistribution elf_distribution(const ReportMatrix& reports,
                                              const OutcomeVector& outcomes,
                                              const ScoringRule& rule) {
    detail::check_dims(reports, outcomes.size());
    detail::require_unit_rule(rule);
    const auto scores = score_matrix(reports, outcomes, rule);
    return SelectionDistribution::sanitized(
        detail::elf_probs_from_score_matrix(scores, reports.n, reports.m));
}

inline SelectionDistribution elf_distribution(const CategoricalReportMatrix& reports,
                                              const CategoricalOutcomes& outcomes,
                                              const ScoringRule& rule) {
    detail::require_unit_rule(rule);
    const auto scores = score_matrix(reports, outcomes, rule);
    return SelectionDistribution::sanitized(
        detail::elf_probs_from_score_matrix(scores, reports.n, reports.m));
}

/// Draws the winner from the multi-event selection distribution.
inline CompetitionResult elf_select(const ReportMatrix& reports, const OutcomeVector& outcomes,
                                    const ScoringRule& rule, Rng& rng) {
    CompetitionResult result;
    result.seed = rng.seed();
    result.distribution = elf_distribution(reports, outcomes, rule);
    result.winner = rng.sample(result.distribution->probs);
    return result;
}

// ---------------------------------------------------------------------------
// Per-event lotteries with most-wins selection
// ---------------------------------------------------------------------------

namespace detail {

/// Validates the rule for the per-event-lottery mechanism and applies the
/// multi-event shrink (scores must stay strictly below 1 when m >= 2).
inline ScoringRule ielf_rule(const ScoringRule& rule, std::size_t m, double shrink_eps) {
    require_unit_rule(rule);
    if (m >= 2) {
        if (!(shrink_eps > 0.0 && shrink_eps < 1.0))
            throw std::invalid_argument("shrink epsilon must be in (0,1)");
        return rule.scaled(1.0 - shrink_eps);
    }
    return rule;
}

inline EventWinnerVector sample_event_winners(std::span<const double> scores, std::size_t n,
                                              std::size_t m, Rng& rng) {
    EventWinnerVector winners(m);
    std::vector<double> col(n);
    for (std::size_t k = 0; k < m; ++k) {
        for (std::size_t i = 0; i < n; ++i) col[i] = scores[i * m + k];
        winners[k] = rng.sample(elf_probs_from_scores(col));
    }
    return winners;
}

inline std::vector<std::size_t> count_wins(const EventWinnerVector& winners, std::size_t n) {
    std::vector<std::size_t> counts(n, 0);
    for (std::size_t w : winners) ++counts[w];
    return counts;
}

inline CompetitionResult ielf_select_from_scores(std::vector<double> scores, std::size_t n,
                                                 std::size_t m, Rng& rng) {
    CompetitionResult result;
    result.seed = rng.seed();
    result.event_winners = sample_event_winners(scores, n, m, rng);
    result.win_counts = count_wins(*result.event_winners, n);
    const std::size_t top = *std::max_element(result.win_counts->begin(),
                                              result.win_counts->end());
    std::vector<std::size_t> tied;
    for (std::size_t i = 0; i < n; ++i)
        if ((*result.win_counts)[i] == top) tied.push_back(i);
    result.winner = tied.size() == 1 ? tied.front() : tied[rng.uniform_index(tied.size())];
    return result;
}

}  // namespace detail

/// Runs one single-event lottery per event and returns the event winners.
/// Consumes one draw per event, events ascending.
inline EventWinnerVector ielf_event_lotteries(const ReportMatrix& reports,
                                              const OutcomeVector& outcomes,
                                              const ScoringRule& rule, Rng& rng,
                                              double shrink_eps = kIelfDefaultShrink) {
    detail::check_dims(reports, outcomes.size());
    const ScoringRule r = detail::ielf_rule(rule, reports.m, shrink_eps);
    const auto scores = score_matrix(reports, outcomes, r);
    return detail::sample_event_winners(scores, reports.n, reports.m, rng);
}

/// Per-event lotteries, then the forecaster with the most event wins; final
/// ties are broken uniformly at random. Draw order: events ascending, then
/// one tie-break draw if needed.
inline CompetitionResult ielf_select(const ReportMatrix& reports, const OutcomeVector& outcomes,
                                     const ScoringRule& rule, Rng& rng,
                                     double shrink_eps = kIelfDefaultShrink) {
    detail::check_dims(reports, outcomes.size());
    const ScoringRule r = detail::ielf_rule(rule, reports.m, shrink_eps);
    return detail::ielf_select_from_scores(score_matrix(reports, outcomes, r), reports.n,
                                           reports.m, rng);
}

inline CompetitionResult ielf_select(const CategoricalReportMatrix& reports,
                                     const CategoricalOutcomes& outcomes,
                                     const ScoringRule& rule, Rng& rng,
                                     double shrink_eps = kIelfDefaultShrink) {
    const ScoringRule r = detail::ielf_rule(rule, reports.m, shrink_eps);
    return detail::ielf_select_from_scores(score_matrix(reports, outcomes, r), reports.n,
                                           reports.m, rng);
}

/// Forecasters ordered by descending event-win count; tie groups are
/// shuffled uniformly. With the same seed, the top of the ranking matches
/// the ielf_select winner (the first shuffle draw of the top group is the
/// same draw ielf_select uses for its tie-break).
inline Ranking ielf_ranking(const ReportMatrix& reports, const OutcomeVector& outcomes,
                            const ScoringRule& rule, Rng& rng,
                            double shrink_eps = kIelfDefaultShrink) {
    detail::check_dims(reports, outcomes.size());
    const ScoringRule r = detail::ielf_rule(rule, reports.m, shrink_eps);
    const auto scores = score_matrix(reports, outcomes, r);
    const EventWinnerVector winners =
        detail::sample_event_winners(scores, reports.n, reports.m, rng);
    const auto counts = detail::count_wins(winners, reports.n);

    Ranking order(reports.n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });

    std::size_t g = 0;
    while (g < order.size()) {
        std::size_t end = g + 1;
        while (end < order.size() && counts[order[end]] == counts[order[g]]) ++end;
        for (std::size_t i = g; i + 1 < end; ++i) {
            const std::size_t j = i + rng.uniform_index(end - i);
            std::swap(order[i], order[j]);
        }
        g = end;
    }
    return order;
}

}  // namespace fcomp
