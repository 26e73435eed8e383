#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "fcomp/mechanisms.hpp"
#include "fcomp/rng.hpp"
#include "fcomp/scoring.hpp"
#include "fcomp/types.hpp"

namespace fcomp {

/// One support point of a forecaster's joint belief over outcomes and the
/// other forecasters' reports.
struct ScenarioAtom {
    double p = 0.0;
    OutcomeVector outcome;                    // length m
    std::vector<std::vector<double>> others;  // (n-1) x m, rows in forecaster order
};

/// Finite-support joint distribution over (outcomes, others' reports) from
/// the audited forecaster's point of view. Continuous beliefs must be
/// discretized by the caller; exact expectations beat quadrature error when
/// auditing strict inequalities.
struct Scenario {
    std::size_t audited = 0;  // 0-based index of the audited forecaster
    std::size_t n = 0;
    std::size_t m = 0;
    std::vector<ScenarioAtom> atoms;

    void validate() const {
        if (n < 2) throw std::invalid_argument("scenario needs n >= 2");
        if (m < 1) throw std::invalid_argument("scenario needs m >= 1");
        if (audited >= n) throw std::invalid_argument("audited index out of range");
        if (atoms.empty()) throw std::invalid_argument("scenario needs at least one atom");
        double total = 0.0;
        for (const auto& a : atoms) {
            if (!(a.p >= 0.0)) throw std::invalid_argument("negative atom probability");
            total += a.p;
            if (a.outcome.size() != m) throw std::invalid_argument("atom outcome length != m");
            if (a.others.size() != n - 1)
                throw std::invalid_argument("atom others must have n-1 rows");
            for (const auto& row : a.others)
                if (row.size() != m) throw std::invalid_argument("atom others row length != m");
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw std::invalid_argument("atom probabilities must sum to 1");
    }
};

/// The audited forecaster's implied belief, E[X] under the atom distribution.
/// Components are clamped into [0,1] against atom-mass rounding.
inline std::vector<double> derived_belief(const Scenario& sc) {
    sc.validate();
    std::vector<double> p(sc.m, 0.0);
    for (const auto& a : sc.atoms)
        for (std::size_t k = 0; k < sc.m; ++k) p[k] += a.p * a.outcome[k];
    for (double& v : p) v = std::clamp(v, 0.0, 1.0);
    return p;
}

/// Full report matrix for one atom with the audited forecaster's report
/// inserted at her row.
inline ReportMatrix assemble_reports(const Scenario& sc, const ScenarioAtom& atom,
                                     std::span<const double> y_audited) {
    if (y_audited.size() != sc.m) throw std::invalid_argument("report length != m");
    ReportMatrix r(sc.n, sc.m);
    for (std::size_t i = 0; i < sc.n; ++i) {
        const double* src = nullptr;
        if (i == sc.audited) src = y_audited.data();
        else src = atom.others[i < sc.audited ? i : i - 1].data();
        for (std::size_t k = 0; k < sc.m; ++k) r.at(i, k) = src[k];
    }
    return r;
}

// ---------------------------------------------------------------------------
// Exact win probability of the per-event-lottery mechanism
// ---------------------------------------------------------------------------

/// Number of win-count states after m events among n forecasters,
/// C(m+n-1, n-1), saturating at `cap`.
inline std::size_t ielf_dp_state_count(std::size_t n, std::size_t m, std::size_t cap) {
    double states = 1.0;
    for (std::size_t i = 1; i < n; ++i) {
        states *= static_cast<double>(m + i) / static_cast<double>(i);
        if (states > static_cast<double>(cap)) return cap + 1;
    }
    return static_cast<std::size_t>(std::llround(states));
}

/// Whether n win counts bounded by m fit a 64-bit base-(m+1) encoding. The
/// state budget keeps every accepted audit shape well inside this.
inline bool ielf_dp_encodable(std::size_t n, std::size_t m) {
    return static_cast<double>(n) * std::log2(static_cast<double>(m) + 1.0) <= 63.0;
}

/// Exact probability that `audited` ends up selected given per-event winner
/// distributions q (m x n, row-major): dynamic program over win-count
/// vectors, with final-tie mass split uniformly. The ordered map keeps the
/// accumulation order, and therefore the result, bit-reproducible.
inline double ielf_win_probability(std::span<const double> q, std::size_t n, std::size_t m,
                                   std::size_t audited) {
    if (q.size() != n * m) throw std::invalid_argument("need m x n event distributions");
    if (audited >= n) throw std::invalid_argument("audited index out of range");
    if (!ielf_dp_encodable(n, m))
        throw std::invalid_argument("win-count state space too wide to encode");
    using Key = std::uint64_t;
    std::vector<Key> digit(n);
    digit[0] = 1;
    for (std::size_t i = 1; i < n; ++i) digit[i] = digit[i - 1] * static_cast<Key>(m + 1);

    std::map<Key, double> dp;
    dp[0] = 1.0;
    for (std::size_t k = 0; k < m; ++k) {
        std::map<Key, double> next;
        for (const auto& [key, prob] : dp) {
            for (std::size_t i = 0; i < n; ++i) {
                const double qi = q[k * n + i];
                if (qi <= 0.0) continue;
                next[key + digit[i]] += prob * qi;
            }
        }
        dp = std::move(next);
    }

    double win = 0.0;
    std::vector<std::size_t> counts(n);
    for (const auto& [key, prob] : dp) {
        Key rem = key;
        for (std::size_t i = 0; i < n; ++i) {
            counts[i] = static_cast<std::size_t>(rem % static_cast<Key>(m + 1));
            rem /= static_cast<Key>(m + 1);
        }
        const std::size_t top = *std::max_element(counts.begin(), counts.end());
        if (counts[audited] != top) continue;
        const auto ties = std::count(counts.begin(), counts.end(), top);
        win += prob / static_cast<double>(ties);
    }
    return win;
}

// ---------------------------------------------------------------------------
// Selection probability under a scenario
// ---------------------------------------------------------------------------

struct AuditOptions {
    double shrink_eps = kIelfDefaultShrink;
    std::size_t max_dp_states = 1'000'000;  // beyond this, Monte Carlo fallback
    std::size_t mc_trials = 100'000;
    std::uint64_t mc_seed = 20260809;
    std::size_t max_grid_evals = 4'000'000;
};

struct SelectionProbability {
    double value = 0.0;
    bool exact = true;
    double std_error = 0.0;    // Monte Carlo evaluator only
    bool dp_fallback = false;  // per-event-lottery DP exceeded the state budget
};

namespace detail {

/// Per-event winner distributions for one atom, m x n row-major.
inline std::vector<double> event_distributions(const ReportMatrix& reports,
                                               const OutcomeVector& outcomes,
                                               const ScoringRule& rule) {
    const auto scores = score_matrix(reports, outcomes, rule);
    std::vector<double> q(reports.m * reports.n);
    std::vector<double> col(reports.n);
    for (std::size_t k = 0; k < reports.m; ++k) {
        for (std::size_t i = 0; i < reports.n; ++i) col[i] = scores[i * reports.m + k];
        const auto f = SelectionDistribution::sanitized(elf_probs_from_scores(col));
        for (std::size_t i = 0; i < reports.n; ++i) q[k * reports.n + i] = f[i];
    }
    return q;
}

inline double ielf_win_probability_mc(std::span<const double> q, std::size_t n, std::size_t m,
                                      std::size_t audited, std::size_t trials, Rng& rng,
                                      double* std_error) {
    std::vector<std::size_t> counts(n);
    double acc = 0.0;
    for (std::size_t t = 0; t < trials; ++t) {
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t k = 0; k < m; ++k)
            ++counts[rng.sample(std::span<const double>(q.data() + k * n, n))];
        const std::size_t top = *std::max_element(counts.begin(), counts.end());
        if (counts[audited] == top) {
            const auto ties = std::count(counts.begin(), counts.end(), top);
            acc += 1.0 / static_cast<double>(ties);
        }
    }
    const double rate = acc / static_cast<double>(trials);
    if (std_error)
        *std_error =
            std::sqrt(std::max(rate * (1.0 - rate), 0.0) / static_cast<double>(trials));
    return rate;
}

}  // namespace detail

/// Exact (or flagged Monte Carlo) probability that the audited forecaster is
/// selected when she reports y_audited, in expectation over the scenario.
inline SelectionProbability selection_probability(Mechanism mech, const ScoringRule& rule,
                                                  const Scenario& sc,
                                                  std::span<const double> y_audited,
                                                  const AuditOptions& opts = {}) {
    sc.validate();
    if (y_audited.size() != sc.m) throw std::invalid_argument("report length != m");

    SelectionProbability out;
    double variance = 0.0;
    std::size_t atom_index = 0;
    for (const auto& atom : sc.atoms) {
        const ReportMatrix reports = assemble_reports(sc, atom, y_audited);
        double v = 0.0;
        switch (mech) {
            case Mechanism::Mpsr:
                v = mpsr_select(reports, atom.outcome, rule) == sc.audited ? 1.0 : 0.0;
                break;
            case Mechanism::Multnorm:
                v = multnorm_distribution(reports, atom.outcome, rule).dist[sc.audited];
                break;
            case Mechanism::Elf:
                v = elf_distribution(reports, atom.outcome, rule)[sc.audited];
                break;
            case Mechanism::Ielf: {
                const ScoringRule r = detail::ielf_rule(rule, sc.m, opts.shrink_eps);
                const auto q = detail::event_distributions(reports, atom.outcome, r);
                if (ielf_dp_state_count(sc.n, sc.m, opts.max_dp_states) <= opts.max_dp_states &&
                    ielf_dp_encodable(sc.n, sc.m)) {
                    v = ielf_win_probability(q, sc.n, sc.m, sc.audited);
                } else {
                    Rng rng = Rng::substream(opts.mc_seed, StreamPurpose::AuditMc, atom_index);
                    double se = 0.0;
                    v = detail::ielf_win_probability_mc(q, sc.n, sc.m, sc.audited,
                                                        opts.mc_trials, rng, &se);
                    out.exact = false;
                    out.dp_fallback = true;
                    variance += atom.p * atom.p * se * se;
                }
                break;
            }
        }
        out.value += atom.p * v;
        ++atom_index;
    }
    out.std_error = std::sqrt(variance);
    return out;
}

// ---------------------------------------------------------------------------
// Best-response search
// ---------------------------------------------------------------------------

/// Result of an exhaustive best-response search. `best_report` maximizes the
/// selection probability over the report grid plus the derived belief
/// itself (so best_value >= truthful_value always); `grid_best_report` is
/// the maximizer over the pure grid.
struct AuditReport {
    double truthful_value = 0.0;
    std::vector<double> best_report;
    double best_value = 0.0;
    std::vector<double> grid_best_report;
    double grid_best_value = 0.0;
    bool violation = false;
    double grid_step = 0.0;
    bool exact = true;
    double std_error = 0.0;
};

/// Checks that the per-event blocks (X_k, Y_{-i,k}) are mutually
/// independent: the product of the per-event marginals must reproduce the
/// joint atom distribution on every point of the product support.
inline bool belief_independence_check(const Scenario& sc, double tol) {
    sc.validate();
    using Block = std::vector<double>;

    std::vector<std::map<Block, double>> marginals(sc.m);
    std::map<std::vector<Block>, double> joint;
    for (const auto& atom : sc.atoms) {
        std::vector<Block> blocks(sc.m);
        for (std::size_t k = 0; k < sc.m; ++k) {
            Block b;
            b.reserve(sc.n);
            b.push_back(atom.outcome[k]);
            for (const auto& row : atom.others) b.push_back(row[k]);
            marginals[k][b] += atom.p;
            blocks[k] = std::move(b);
        }
        joint[blocks] += atom.p;
    }

    double combos = 1.0;
    for (const auto& mk : marginals) combos *= static_cast<double>(mk.size());
    if (combos > 4e6)
        throw std::invalid_argument("belief independence check: product support too large");

    std::vector<std::map<Block, double>::const_iterator> its;
    its.reserve(sc.m);
    for (const auto& mk : marginals) its.push_back(mk.begin());
    while (true) {
        double prod = 1.0;
        std::vector<Block> point(sc.m);
        for (std::size_t k = 0; k < sc.m; ++k) {
            prod *= its[k]->second;
            point[k] = its[k]->first;
        }
        const auto found = joint.find(point);
        const double joint_p = found == joint.end() ? 0.0 : found->second;
        if (std::abs(joint_p - prod) > tol) return false;

        std::size_t k = sc.m;
        while (k > 0) {
            --k;
            if (++its[k] != marginals[k].end()) break;
            its[k] = marginals[k].begin();
            if (k == 0) return true;
        }
    }
}

namespace detail {

/// Whether the selection probability decomposes into independent per-event
/// terms of the audited forecaster's report, making coordinate-wise search
/// exact. True unconditionally for the score-difference lottery (its value
/// is linear in the per-event scores); true for the per-event-lottery
/// mechanism when the scenario is belief independent (overall win
/// probability is then monotone in each per-event expected score).
inline bool coordinatewise_searchable(Mechanism mech, const Scenario& sc) {
    if (mech == Mechanism::Elf) return true;
    if (mech == Mechanism::Ielf) return belief_independence_check(sc, 1e-9);
    return false;
}

/// Marginal expected score of reporting y on event k under the scenario.
inline double event_expected_score(const Scenario& sc, const ScoringRule& rule, std::size_t k,
                                   double y) {
    double e = 0.0;
    for (const auto& atom : sc.atoms) e += atom.p * rule.score(y, atom.outcome[k]);
    return e;
}

}  // namespace detail

/// Exhaustive best-response search over the report grid {0, step, ..., 1}^m
/// (coordinate-wise when the mechanism decomposes per event, full
/// enumeration otherwise) plus the derived belief itself. A violation is a
/// candidate beating the truthful report by more than 1e-9 (exact
/// evaluators) or 3 standard errors (Monte Carlo evaluators).
inline AuditReport best_response(Mechanism mech, const ScoringRule& rule, const Scenario& sc,
                                 double grid_step, const AuditOptions& opts = {}) {
    sc.validate();
    if (!(grid_step > 0.0 && grid_step <= 1.0))
        throw std::invalid_argument("grid step must be in (0,1]");
    const auto ticks = static_cast<std::size_t>(std::llround(1.0 / grid_step));
    if (std::abs(static_cast<double>(ticks) * grid_step - 1.0) > 1e-9)
        throw std::invalid_argument("grid step must divide 1");

    const std::vector<double> belief = derived_belief(sc);
    AuditReport report;
    report.grid_step = grid_step;

    const SelectionProbability truthful =
        selection_probability(mech, rule, sc, belief, opts);
    report.truthful_value = truthful.value;
    report.exact = truthful.exact;

    const auto grid_value = [&](std::size_t t) {
        return static_cast<double>(t) / static_cast<double>(ticks);
    };

    if (detail::coordinatewise_searchable(mech, sc)) {
        // Both lottery mechanisms reward each coordinate only through that
        // event's expected score, so maximize it per coordinate.
        report.grid_best_report.resize(sc.m);
        report.best_report.resize(sc.m);
        for (std::size_t k = 0; k < sc.m; ++k) {
            double best_e = -1e300;
            double best_y = 0.0;
            for (std::size_t t = 0; t <= ticks; ++t) {
                const double y = grid_value(t);
                const double e = detail::event_expected_score(sc, rule, k, y);
                if (e > best_e) {
                    best_e = e;
                    best_y = y;
                }
            }
            report.grid_best_report[k] = best_y;
            report.best_report[k] =
                detail::event_expected_score(sc, rule, k, belief[k]) > best_e ? belief[k]
                                                                              : best_y;
        }
        report.grid_best_value =
            selection_probability(mech, rule, sc, report.grid_best_report, opts).value;
        const SelectionProbability best =
            selection_probability(mech, rule, sc, report.best_report, opts);
        report.exact = report.exact && best.exact;
        if (report.truthful_value >= best.value) {
            report.best_report = belief;
            report.best_value = report.truthful_value;
            report.std_error = truthful.std_error;
        } else {
            report.best_value = best.value;
            report.std_error = best.std_error;
        }
    } else {
        double points = 1.0;
        for (std::size_t k = 0; k < sc.m; ++k) points *= static_cast<double>(ticks + 1);
        if (points > static_cast<double>(opts.max_grid_evals))
            throw GridTooLargeError("report grid has " + std::to_string(points) +
                                    " points, budget is " +
                                    std::to_string(opts.max_grid_evals));

        std::vector<double> y(sc.m, 0.0);
        std::vector<std::size_t> idx(sc.m, 0);
        double best_grid = -1e300, best_grid_se = 0.0;
        std::vector<double> best_grid_y;
        bool done = false;
        while (!done) {
            for (std::size_t k = 0; k < sc.m; ++k) y[k] = grid_value(idx[k]);
            const SelectionProbability v = selection_probability(mech, rule, sc, y, opts);
            report.exact = report.exact && v.exact;
            if (v.value > best_grid) {
                best_grid = v.value;
                best_grid_se = v.std_error;
                best_grid_y = y;
            }
            std::size_t k = sc.m;
            done = true;
            while (k > 0) {
                --k;
                if (++idx[k] <= ticks) {
                    done = false;
                    break;
                }
                idx[k] = 0;
            }
        }
        report.grid_best_report = best_grid_y;
        report.grid_best_value = best_grid;
        if (best_grid > report.truthful_value) {
            report.best_report = best_grid_y;
            report.best_value = best_grid;
            report.std_error = best_grid_se;
        } else {
            report.best_report = belief;
            report.best_value = report.truthful_value;
            report.std_error = truthful.std_error;
        }
    }

    const double threshold =
        report.exact ? 1e-9
                     : 3.0 * std::sqrt(report.std_error * report.std_error +
                                       truthful.std_error * truthful.std_error);
    report.violation = report.best_value > report.truthful_value + threshold;
    return report;
}

// ---------------------------------------------------------------------------
// Pigeonhole demonstration for deterministic mechanisms
// ---------------------------------------------------------------------------

/// Win-set of a candidate report against opponents all reporting 0.5 on
/// every event: bit b is set iff the audited forecaster wins under outcome
/// vector b (bit k of b = outcome of event k). Requires m <= 6.
inline std::uint64_t mpsr_win_set(const ScoringRule& rule, std::size_t n, std::size_t m,
                                  std::size_t audited, std::span<const double> candidate) {
    if (m > 6) throw std::invalid_argument("win-set enumeration supports m <= 6");
    if (candidate.size() != m) throw std::invalid_argument("candidate length != m");
    ReportMatrix reports(n, m);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < m; ++k)
            reports.at(i, k) = i == audited ? candidate[k] : 0.5;
    std::uint64_t set = 0;
    OutcomeVector x(m);
    for (std::uint64_t b = 0; b < (std::uint64_t{1} << m); ++b) {
        for (std::size_t k = 0; k < m; ++k) x[k] = (b >> k) & 1 ? 1.0 : 0.0;
        if (mpsr_select(reports, x, rule) == audited) set |= std::uint64_t{1} << b;
    }
    return set;
}

struct DuplicateWinSets {
    std::size_t first = 0;   // candidate indices
    std::size_t second = 0;
    std::uint64_t win_set = 0;
};

/// Scans candidate reports in order and returns the first pair whose
/// win-sets coincide (opponents fixed at 0.5 everywhere). With more than
/// 2^(2^m) candidates a pair is guaranteed to exist. Only deterministic
/// mechanisms have win-sets.
inline std::optional<DuplicateWinSets> pigeonhole_duplicate_winsets(
    Mechanism mech, const ScoringRule& rule, std::size_t m,
    const std::vector<std::vector<double>>& candidates, std::size_t n = 2,
    std::size_t audited = SIZE_MAX) {
    if (mech != Mechanism::Mpsr)
        throw std::invalid_argument("win-sets are only defined for deterministic mechanisms");
    if (audited == SIZE_MAX) audited = n - 1;
    std::map<std::uint64_t, std::size_t> seen;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
        const std::uint64_t ws = mpsr_win_set(rule, n, m, audited, candidates[c]);
        const auto [it, inserted] = seen.emplace(ws, c);
        if (!inserted) return DuplicateWinSets{it->second, c, ws};
    }
    return std::nullopt;
}

}  // namespace fcomp
