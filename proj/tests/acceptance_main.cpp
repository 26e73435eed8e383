// Acceptance suite: runs every headline guarantee end to end and prints one
// pass/fail line per criterion. Exit code 0 iff all pass.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "fcomp/accuracy.hpp"
#include "fcomp/incentives.hpp"
#include "fcomp/mechanisms.hpp"
#include "fcomp/repro.hpp"
#include "fcomp/rng.hpp"
#include "fcomp/scoring.hpp"

#include "helpers.hpp"

using namespace fcomp;

namespace {

struct Checker {
    bool ok = true;
    std::string first_failure;

    void expect(bool condition, const std::string& what) {
        if (!condition && ok) {
            ok = false;
            first_failure = what;
        }
    }
    void expect_near(double expected, double observed, double tol, const std::string& what) {
        if (std::abs(observed - expected) > tol) {
            char buf[160];
            std::snprintf(buf, sizeof buf, "%s: expected %.12g observed %.12g (tol %.3g)",
                          what.c_str(), expected, observed, tol);
            expect(false, buf);
        }
    }
};

double three_sigma(double p, std::size_t trials) {
    return 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

// --- criterion bodies -------------------------------------------------------

void appendix_d_reproduction(Checker& c) {
    const Scenario sc = appendix_d_scenario();
    const ScoringRule q = ScoringRule::quadratic();
    const std::vector<double> truthful = {0.5}, shifted = {0.8};
    c.expect_near(5.0 / 7.0, selection_probability(Mechanism::Multnorm, q, sc, truthful).value,
                  1e-12, "truthful selection probability");
    c.expect_near(73.0 / 98.0, selection_probability(Mechanism::Multnorm, q, sc, shifted).value,
                  1e-12, "misreport selection probability");
    c.expect(best_response(Mechanism::Multnorm, q, sc, 0.01).violation, "violation flagged");
}

void appendix_b_reproduction(Checker& c) {
    const Scenario sc = appendix_b_scenario();
    const ScoringRule q = ScoringRule::quadratic();
    const auto belief = derived_belief(sc);
    c.expect_near(0.2, selection_probability(Mechanism::Mpsr, q, sc, belief).value, 1e-12,
                  "truthful selection probability");
    const std::vector<double> overshoot = {0.5, 1.0};
    c.expect_near(0.8, selection_probability(Mechanism::Mpsr, q, sc, overshoot).value, 1e-12,
                  "misreport selection probability");
    const AuditReport audit = best_response(Mechanism::Mpsr, q, sc, 0.01);
    c.expect(audit.violation, "violation flagged");
    c.expect_near(0.8, audit.best_value, 1e-9, "best response value");
}

void elf_distribution_validity(Checker& c) {
    Rng rng = testutil::test_rng(101);
    const ScoringRule rules[] = {ScoringRule::quadratic(), ScoringRule::spherical()};
    for (int iter = 0; iter < 100000; ++iter) {
        const std::size_t n = 2 + rng.uniform_index(7);
        const std::size_t m = 1 + rng.uniform_index(10);
        const ReportMatrix reports = testutil::random_reports(rng, n, m);
        const OutcomeVector x = testutil::random_binary_outcomes(rng, m);
        const auto g = elf_distribution(reports, x, rules[iter % 2]);
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            c.expect(g[i] >= 0.0 && g[i] <= 1.0, "probability outside [0,1]");
            sum += g[i];
        }
        c.expect(std::abs(sum - 1.0) <= 1e-12, "probabilities do not sum to 1");
        if (!c.ok) return;
    }
}

void elf_incentive_compatibility(Checker& c) {
    Rng rng = testutil::test_rng(102);
    const ScoringRule rules[] = {ScoringRule::quadratic(), ScoringRule::spherical()};
    for (int iter = 0; iter < 200; ++iter) {
        const std::size_t n = 2 + rng.uniform_index(3);
        const std::size_t m = 1 + rng.uniform_index(3);
        const Scenario sc = testutil::random_scenario(rng, n, m, 1 + rng.uniform_index(8));
        const AuditReport audit = best_response(Mechanism::Elf, rules[iter % 2], sc, 0.01);
        c.expect(!audit.violation, "unexpected incentive violation");
        const auto belief = derived_belief(sc);
        for (std::size_t k = 0; k < m; ++k)
            c.expect(std::abs(audit.grid_best_report[k] - belief[k]) <= 0.01 + 1e-12,
                     "grid best response further than one step from the belief");
        if (!c.ok) return;
    }
}

void ielf_incentive_compatibility(Checker& c) {
    Rng rng = testutil::test_rng(103);
    const ScoringRule rules[] = {ScoringRule::quadratic(), ScoringRule::spherical()};
    for (int iter = 0; iter < 200; ++iter) {
        const std::size_t n = 2 + rng.uniform_index(2);
        const std::size_t m = 1 + rng.uniform_index(5);
        const Scenario sc =
            testutil::random_belief_independent_scenario(rng, n, m, 1 + rng.uniform_index(3));
        const AuditReport audit = best_response(Mechanism::Ielf, rules[iter % 2], sc, 0.01);
        c.expect(audit.exact, "expected the exact evaluator");
        c.expect(!audit.violation, "unexpected incentive violation");
        if (!c.ok) return;
    }
}

void closed_form_oracle_equivalence(Checker& c) {
    Rng rng = testutil::test_rng(104);
    const ScoringRule rules[] = {ScoringRule::quadratic(), ScoringRule::spherical()};
    for (int iter = 0; iter < 1000; ++iter) {
        const std::size_t n = 2 + rng.uniform_index(2);
        const std::size_t m = 1 + rng.uniform_index(8);
        const ReportMatrix reports = testutil::random_reports(rng, n, m);
        const TrueDistribution theta = testutil::random_independent_theta(rng, m);
        const std::size_t i = rng.uniform_index(n);
        const ScoringRule& rule = rules[iter % 2];
        const double closed = elf_selection_probability_closed_form(reports, theta, rule, i);
        const double brute = testutil::elf_selection_brute_force(reports, theta, rule, i);
        c.expect(std::abs(closed - brute) <= 1e-12, "closed form disagrees with enumeration");
        if (!c.ok) return;
    }
}

void rank_accuracy(Checker& c) {
    Rng rng = testutil::test_rng(105);
    const ScoringRule rules[] = {ScoringRule::quadratic(), ScoringRule::spherical()};
    for (int iter = 0; iter < 10000; ++iter) {
        const std::size_t n = 2 + rng.uniform_index(5);
        const std::size_t m = 1 + rng.uniform_index(4);
        const ReportMatrix reports = testutil::random_reports(rng, n, m);
        // Rank accuracy is quantified over all joint ground truths, so mix
        // correlated supports in with the independent ones.
        TrueDistribution theta = testutil::random_independent_theta(rng, m);
        if (iter % 5 == 0) theta = testutil::random_joint_theta(rng, m, 2 + rng.uniform_index(3));
        c.expect(rank_accuracy_check(reports, theta, rules[iter % 2]),
                 "lottery mechanism failed rank accuracy");
        if (!c.ok) return;
    }
    const ReportMatrix overconfident = ReportMatrix::from_rows({{0.8}, {0.95}});
    const TrueDistribution t8 = TrueDistribution::independent({0.8});
    c.expect(!rank_accuracy_check(overconfident, t8, ScoringRule::quadratic(), Mechanism::Mpsr),
             "highest-total-score selection unexpectedly rank accurate");
}

void limit_accuracy(Checker& c) {
    const ScoringRule q = ScoringRule::quadratic();
    const ReportMatrix base = ReportMatrix::from_rows({{0.5}, {0.8}});
    const TrueDistribution theta1 = TrueDistribution::independent({0.5});
    const AccuracyProfile profile = accuracy_profile(base, theta1, q);
    c.expect_near(0.09, profile.gap, 1e-12, "accuracy gap");

    const std::size_t m_bound = hoeffding_m_bound({2, profile.gap, 0.9});
    c.expect(m_bound == 740, "sample bound is not 740");

    const std::size_t trials = 10000;
    double previous = -1.0;
    double previous_se = 0.0;
    for (std::size_t m : {std::size_t{1}, std::size_t{10}, std::size_t{100}, m_bound}) {
        const ReportMatrix reports = base.replicated(m);
        const TrueDistribution theta =
            TrueDistribution::independent(std::vector<double>(m, 0.5));
        const MonteCarloRate r = monte_carlo_best_selection_rate(Mechanism::Ielf, q, reports,
                                                                 theta, trials, 88001);
        c.expect(r.rate >= previous - 3.0 * std::hypot(r.std_error, previous_se),
                 "selection rate decreased along the sweep");
        previous = r.rate;
        previous_se = r.std_error;
        if (m == m_bound) c.expect(r.rate >= 0.9, "rate at the bound is below 0.9");
    }
}

void prop7_grid_sweep(Checker& c) {
    for (int a = 0; a <= 1000; ++a)
        for (int b = 0; b <= 1000; ++b) {
            const auto both = prop7_infeasibility(a / 1000.0, b / 1000.0);
            if (both.first && both.second) {
                c.expect(false, "found a point satisfying both constraints");
                return;
            }
        }
}

void dominance_of_normalized_rule(Checker& c) {
    Rng rng = testutil::test_rng(106);
    const ScoringRule base = ScoringRule::quadratic();
    const ScoringRule normalized = normalize(base);
    int done = 0;
    while (done < 10000) {
        const double alpha = 0.05 + 0.95 * rng.next_unit();
        const double beta0 = rng.next_unit() * (1.0 - alpha);
        const double beta1 = rng.next_unit() * (1.0 - alpha);
        const ScoringRule shrunk = ScoringRule::quadratic(alpha, beta0, beta1);
        double y1 = rng.next_unit(), y2 = rng.next_unit();
        const double t = rng.next_unit();
        if (expected_score(base, y1, t) < expected_score(base, y2, t)) std::swap(y1, y2);
        if (!(expected_score(base, y1, t) > expected_score(base, y2, t))) continue;
        ++done;
        const ReportMatrix reports = ReportMatrix::from_rows({{y1}, {y2}});
        const TrueDistribution theta = TrueDistribution::independent({t});
        const double p_norm =
            elf_selection_probability_closed_form(reports, theta, normalized, 0);
        const double p_shrunk =
            elf_selection_probability_closed_form(reports, theta, shrunk, 0);
        c.expect(p_norm >= p_shrunk - 1e-12,
                 "equivalent bounded rule beat the normalized rule");
        if (!c.ok) return;
    }
}

void pigeonhole_demo(Checker& c) {
    const std::vector<std::vector<double>> candidates = {{0.0}, {0.25}, {0.5}, {0.75}, {1.0}};
    const auto dup =
        pigeonhole_duplicate_winsets(Mechanism::Mpsr, ScoringRule::quadratic(), 1, candidates);
    c.expect(dup.has_value(), "no duplicate win-set pair found");
    if (dup) {
        const auto a = mpsr_win_set(ScoringRule::quadratic(), 2, 1, 1, candidates[dup->first]);
        const auto b = mpsr_win_set(ScoringRule::quadratic(), 2, 1, 1, candidates[dup->second]);
        c.expect(a == b, "reported pair has different win-sets");
    }
}

void footnote_rank_flip(Checker& c) {
    const ReportMatrix reports = ReportMatrix::from_rows({{0.9}, {0.51}});
    const TrueDistribution theta = TrueDistribution::independent({0.7});
    const AccuracyProfile sph = accuracy_profile(reports, theta, ScoringRule::spherical());
    c.expect_near(0.73, sph.expected_scores[0], 0.005, "spherical expected score 1");
    c.expect_near(0.71, sph.expected_scores[1], 0.005, "spherical expected score 2");
    const AccuracyProfile quad = accuracy_profile(reports, theta, ScoringRule::quadratic());
    c.expect(quad.best == 1 && sph.best == 0, "rules agree on the better forecaster");
}

void uniform_counterexample(Checker& c) {
    const std::size_t trials = 100000;
    const std::uint64_t seed = 62201;
    const double eps = 0.001;
    const double truthful = fcomp::detail::uniform_outcome_win_rate(0.5, trials, seed);
    c.expect_near(1.0 / 3.0, truthful, three_sigma(1.0 / 3.0, trials), "truthful win rate");
    const double shaded = fcomp::detail::uniform_outcome_win_rate(0.5 - eps, trials, seed + 1);
    c.expect_near(0.5 - eps, shaded, three_sigma(0.5 - eps, trials), "shaded win rate");
    c.expect(shaded > truthful, "shading did not beat truthfulness");
    const double extreme = fcomp::detail::uniform_outcome_win_rate(0.0, trials, seed + 2);
    c.expect_near(0.25, extreme, three_sigma(0.25, trials), "extreme-report win rate");
}

struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    std::function<void(Checker&)> run;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "appendix-d multiplicative-normalization counterexample", 1.0, appendix_d_reproduction},
        {2, "appendix-b highest-score counterexample", 1.0, appendix_b_reproduction},
        {3, "lottery distribution validity on 1e5 random instances", 30.0, elf_distribution_validity},
        {4, "score-difference lottery incentive compatibility (200 scenarios)", 300.0,
         elf_incentive_compatibility},
        {5, "per-event lottery incentive compatibility under belief independence", 600.0,
         ielf_incentive_compatibility},
        {6, "closed form vs outcome enumeration (1e3 instances)", 60.0,
         closed_form_oracle_equivalence},
        {7, "rank accuracy on 1e4 random instances", 60.0, rank_accuracy},
        {8, "limit accuracy sweep m in {1,10,100,740}", 120.0, limit_accuracy},
        {9, "infeasibility grid sweep at step 0.001", 1.0, prop7_grid_sweep},
        {10, "normalized rule dominance on 1e4 instances", 60.0, dominance_of_normalized_rule},
        {11, "pigeonhole duplicate win-sets (m=1, 5 candidates)", 1.0, pigeonhole_demo},
        {12, "spherical vs quadratic rank flip", 1.0, footnote_rank_flip},
        {13, "uniform real-outcome counterexample rates", 30.0, uniform_counterexample},
    };

    bool all_ok = true;
    for (const Criterion& criterion : criteria) {
        Checker checker;
        const auto start = std::chrono::steady_clock::now();
        criterion.run(checker);
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (seconds > criterion.budget_seconds) {
            checker.expect(false, "over the " + std::to_string(criterion.budget_seconds) +
                                      " s runtime budget");
        }
        std::printf("[%s] %02d %s (%.2f s)%s%s\n", checker.ok ? "PASS" : "FAIL", criterion.id,
                    criterion.name, seconds, checker.ok ? "" : " -- ",
                    checker.ok ? "" : checker.first_failure.c_str());
        all_ok = all_ok && checker.ok;
    }
    return all_ok ? 0 : 1;
}
