#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fcomp/accuracy.hpp"
#include "fcomp/incentives.hpp"
#include "fcomp/io.hpp"
#include "fcomp/mechanisms.hpp"
#include "fcomp/repro.hpp"
#include "fcomp/rng.hpp"
#include "fcomp/scoring.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFinding = 1;  // incentive violation found / repro failed
constexpr int kExitUsage = 2;

struct RunArgs {
    std::string mechanism;
    std::string rule;
    std::string reports_path;
    std::string outcomes_path;
    std::uint64_t seed = 0;
    bool ranking = false;
};

int cmd_run(const RunArgs& args) {
    const fcomp::Mechanism mech = fcomp::parse_mechanism(args.mechanism);
    const fcomp::ScoringRule rule = fcomp::parse_rule_spec(args.rule);
    if (args.ranking && mech != fcomp::Mechanism::Ielf)
        throw std::invalid_argument("--ranking is only available for mechanism ielf");
    if (rule.domain() == fcomp::OutcomeDomain::Categorical)
        throw std::invalid_argument("CSV reports are scalar; categorical rules are library-only");

    double lo = 0.0, hi = 1.0;
    if (rule.domain() == fcomp::OutcomeDomain::RealInterval) {
        lo = rule.interval_lo();
        hi = rule.interval_hi();
    }
    const fcomp::ReportMatrix reports = fcomp::parse_reports_csv_file(args.reports_path, lo, hi);
    const fcomp::OutcomeVector outcomes =
        fcomp::parse_outcomes_csv_file(args.outcomes_path, lo, hi);
    if (outcomes.size() != reports.m)
        throw std::invalid_argument("outcome count does not match report columns");

    fcomp::CompetitionResult result;
    fcomp::Ranking ranking;
    fcomp::Rng rng = fcomp::Rng::substream(args.seed, fcomp::StreamPurpose::Lottery, 0);
    switch (mech) {
        case fcomp::Mechanism::Mpsr:
            result.winner = fcomp::mpsr_select(reports, outcomes, rule);
            result.seed = args.seed;
            break;
        case fcomp::Mechanism::Multnorm: {
            const auto mn = fcomp::multnorm_distribution(reports, outcomes, rule);
            result.distribution = mn.dist;
            result.degenerate_normalization = mn.degenerate;
            result.winner = rng.sample(mn.dist.probs);
            result.seed = args.seed;
            break;
        }
        case fcomp::Mechanism::Elf:
            result = fcomp::elf_select(reports, outcomes, rule, rng);
            result.seed = args.seed;
            break;
        case fcomp::Mechanism::Ielf:
            result = fcomp::ielf_select(reports, outcomes, rule, rng);
            result.seed = args.seed;
            if (args.ranking) {
                // Same substream from the start: the ranking's event draws
                // coincide with the selection's, so its top is the winner.
                fcomp::Rng rng2 =
                    fcomp::Rng::substream(args.seed, fcomp::StreamPurpose::Lottery, 0);
                ranking = fcomp::ielf_ranking(reports, outcomes, rule, rng2);
            }
            break;
    }
    const fcomp::Json j = fcomp::competition_result_to_json(
        result, mech, args.rule, reports.labels, args.ranking ? &ranking : nullptr);
    std::cout << j.dump(2) << "\n";
    return kExitOk;
}

int cmd_audit(const std::string& mechanism, const std::string& rule_spec,
              const std::string& scenario_path, double grid) {
    const fcomp::Mechanism mech = fcomp::parse_mechanism(mechanism);
    const fcomp::ScoringRule rule = fcomp::parse_rule_spec(rule_spec);
    const fcomp::Scenario sc = fcomp::scenario_from_json_file(scenario_path);
    const fcomp::AuditReport report = fcomp::best_response(mech, rule, sc, grid);
    std::cout << fcomp::audit_report_to_json(report, mech, rule_spec).dump(2) << "\n";
    return report.violation ? kExitFinding : kExitOk;
}

int cmd_bound(std::size_t n, double delta, double pi) {
    const fcomp::LimitAccuracyParams params{n, delta, pi};
    fcomp::Json j;
    j["n"] = n;
    j["delta"] = delta;
    j["pi"] = pi;
    j["m"] = fcomp::hoeffding_m_bound(params);
    std::cout << j.dump(2) << "\n";
    return kExitOk;
}

int cmd_simulate(const std::string& config_path) {
    const fcomp::ExperimentConfig cfg = fcomp::parse_experiment_config_file(config_path);
    const fcomp::Json out = fcomp::run_experiment(cfg);
    const std::string text = out.dump(2) + "\n";
    std::cout << text;
    if (!cfg.output.empty()) {
        std::ofstream f(cfg.output, std::ios::binary);
        if (!f) throw std::invalid_argument("cannot write output file: " + cfg.output);
        f << text;
    }
    return kExitOk;
}

int cmd_repro(const std::string& case_id) {
    std::vector<std::string> ids =
        case_id.empty() ? fcomp::repro_case_ids() : std::vector<std::string>{case_id};
    bool all_passed = true;
    for (const auto& id : ids) {
        const fcomp::ReproResult result = fcomp::run_repro(id);
        std::cout << (result.passed ? "[PASS] " : "[FAIL] ") << result.case_id << "\n";
        for (const auto& check : result.checks) {
            if (check.pass) continue;
            char line[160];
            std::snprintf(line, sizeof line, "  %s: expected %.12g observed %.12g (tol %.3g)",
                          check.name.c_str(), check.expected, check.observed, check.tol);
            std::cout << line << "\n";
        }
        all_passed = all_passed && result.passed;
    }
    return all_passed ? kExitOk : kExitFinding;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fcomp: forecasting competition mechanisms, audits, and experiments"};
    app.require_subcommand(1);

    RunArgs run_args;
    CLI::App* run = app.add_subcommand("run", "Run one competition on reports and outcomes");
    run->add_option("--mechanism", run_args.mechanism, "mpsr|multnorm|elf|ielf")->required();
    run->add_option("--rule", run_args.rule, "scoring rule spec, e.g. quadratic or spherical:alpha=2:beta1=0.3")
        ->required();
    run->add_option("--reports", run_args.reports_path, "reports CSV (header forecaster,e1,...)")
        ->required();
    run->add_option("--outcomes", run_args.outcomes_path, "outcomes CSV (one row of m values)")
        ->required();
    run->add_option("--seed", run_args.seed, "64-bit lottery seed")->required();
    run->add_flag("--ranking", run_args.ranking, "also output a full ranking (ielf only)");

    std::string audit_mechanism, audit_rule, audit_scenario;
    double audit_grid = 0.01;
    CLI::App* audit = app.add_subcommand("audit", "Best-response search against a belief scenario");
    audit->add_option("--mechanism", audit_mechanism, "mpsr|multnorm|elf|ielf")->required();
    audit->add_option("--rule", audit_rule, "scoring rule spec")->required();
    audit->add_option("--scenario", audit_scenario, "scenario JSON file")->required();
    audit->add_option("--grid", audit_grid, "report grid step (default 0.01)");

    std::size_t bound_n = 2;
    double bound_delta = 0.0, bound_pi = 0.0;
    CLI::App* bound = app.add_subcommand("bound", "Events needed for a target selection rate");
    bound->add_option("--n", bound_n, "number of forecasters")->required();
    bound->add_option("--delta", bound_delta, "expected-score gap of the best forecaster")
        ->required();
    bound->add_option("--pi", bound_pi, "target selection probability in [0,1)")->required();

    std::string simulate_config;
    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo accuracy sweep from a config");
    simulate->add_option("--config", simulate_config, "experiment config JSON")->required();

    std::string repro_case;
    CLI::App* repro = app.add_subcommand("repro", "Run built-in reproduction cases");
    repro->add_option("--case", repro_case, "single case id (default: all)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (run->parsed()) return cmd_run(run_args);
        if (audit->parsed()) return cmd_audit(audit_mechanism, audit_rule, audit_scenario, audit_grid);
        if (bound->parsed()) return cmd_bound(bound_n, bound_delta, bound_pi);
        if (simulate->parsed()) return cmd_simulate(simulate_config);
        if (repro->parsed()) return cmd_repro(repro_case);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
