#pragma once

#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fcomp/accuracy.hpp"
#include "fcomp/errors.hpp"
#include "fcomp/incentives.hpp"
#include "fcomp/mechanisms.hpp"
#include "fcomp/types.hpp"

namespace fcomp {

using Json = nlohmann::ordered_json;

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

inline double parse_value(const std::string& cell, int line_no) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(cell, &pos);
        if (pos != cell.size()) throw ParseError("trailing characters in value: " + cell, line_no);
        return v;
    } catch (const std::invalid_argument&) {
        throw ParseError("not a number: '" + cell + "'", line_no);
    } catch (const std::out_of_range&) {
        throw ParseError("number out of range: '" + cell + "'", line_no);
    }
}

}  // namespace detail

/// Reads a report matrix from CSV with header `forecaster,e1,...,em` and one
/// row per forecaster. Values must lie in [lo, hi].
inline ReportMatrix parse_reports_csv(std::istream& in, double lo = 0.0, double hi = 1.0) {
    std::string line;
    int line_no = 0;
    if (!std::getline(in, line)) throw ParseError("empty reports file", 1);
    ++line_no;
    const auto header = detail::split_csv_line(line);
    if (header.empty() || header[0] != "forecaster")
        throw ParseError("reports header must start with 'forecaster'", line_no);
    const std::size_t m = header.size() - 1;
    if (m == 0) throw ParseError("reports header lists no events", line_no);

    std::vector<std::string> labels;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != m + 1)
            throw ParseError("expected " + std::to_string(m + 1) + " cells, found " +
                                 std::to_string(cells.size()),
                             line_no);
        labels.push_back(cells[0]);
        std::vector<double> row(m);
        for (std::size_t k = 0; k < m; ++k) {
            row[k] = detail::parse_value(cells[k + 1], line_no);
            if (!(row[k] >= lo && row[k] <= hi))
                throw ParseError("report value " + cells[k + 1] + " outside [" +
                                     std::to_string(lo) + "," + std::to_string(hi) + "]",
                                 line_no);
        }
        rows.push_back(std::move(row));
    }
    if (rows.size() < 2) throw ParseError("need at least 2 forecaster rows", line_no);
    ReportMatrix r = ReportMatrix::from_rows(rows);
    r.labels = std::move(labels);
    return r;
}

inline ReportMatrix parse_reports_csv_file(const std::string& path, double lo = 0.0,
                                           double hi = 1.0) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open reports file: " + path);
    return parse_reports_csv(in, lo, hi);
}

/// Writes reports in the same CSV dialect, 17 significant digits (lossless
/// round-trip for doubles).
inline std::string write_reports_csv(const ReportMatrix& reports) {
    std::ostringstream out;
    out << "forecaster";
    for (std::size_t k = 0; k < reports.m; ++k) out << ",e" << k + 1;
    out << "\n";
    char buf[64];
    for (std::size_t i = 0; i < reports.n; ++i) {
        out << reports.labels[i];
        for (std::size_t k = 0; k < reports.m; ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", reports.at(i, k));
            out << ',' << buf;
        }
        out << "\n";
    }
    return out.str();
}

/// Reads an outcome vector: a single CSV row of m values.
inline OutcomeVector parse_outcomes_csv(std::istream& in, double lo = 0.0, double hi = 1.0) {
    std::string line;
    if (!std::getline(in, line) || detail::trim(line).empty())
        throw ParseError("empty outcomes file", 1);
    const auto cells = detail::split_csv_line(line);
    OutcomeVector x(cells.size());
    for (std::size_t k = 0; k < cells.size(); ++k) {
        x[k] = detail::parse_value(cells[k], 1);
        if (!(x[k] >= lo && x[k] <= hi))
            throw ParseError("outcome value " + cells[k] + " outside [" + std::to_string(lo) +
                                 "," + std::to_string(hi) + "]",
                             1);
    }
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!detail::trim(line).empty())
            throw ParseError("outcomes file must be a single row", line_no);
    }
    return x;
}

inline OutcomeVector parse_outcomes_csv_file(const std::string& path, double lo = 0.0,
                                             double hi = 1.0) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open outcomes file: " + path);
    return parse_outcomes_csv(in, lo, hi);
}

// ---------------------------------------------------------------------------
// Scenario JSON
// ---------------------------------------------------------------------------

/// Scenario JSON uses 1-based forecaster indices:
/// { "i": 1, "n": 2, "m": 1,
///   "atoms": [ { "p": 0.5, "x": [1], "others": [[1.0]] }, ... ] }
inline Scenario scenario_from_json(const Json& j) {
    Scenario sc;
    try {
        const std::size_t i = j.at("i").get<std::size_t>();
        if (i == 0) throw ParseError("scenario index 'i' is 1-based");
        sc.audited = i - 1;
        sc.n = j.at("n").get<std::size_t>();
        sc.m = j.at("m").get<std::size_t>();
        for (const auto& atom_json : j.at("atoms")) {
            ScenarioAtom atom;
            atom.p = atom_json.at("p").get<double>();
            atom.outcome = atom_json.at("x").get<std::vector<double>>();
            atom.others = atom_json.at("others").get<std::vector<std::vector<double>>>();
            sc.atoms.push_back(std::move(atom));
        }
    } catch (const Json::exception& e) {
        throw ParseError(std::string("bad scenario JSON: ") + e.what());
    }
    sc.validate();
    return sc;
}

inline Scenario scenario_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open scenario file: " + path);
    Json j;
    try {
        in >> j;
    } catch (const Json::exception& e) {
        throw ParseError(std::string("bad scenario JSON: ") + e.what());
    }
    return scenario_from_json(j);
}

inline Json audit_report_to_json(const AuditReport& r, Mechanism mech,
                                 const std::string& rule_spec) {
    Json j;
    j["mechanism"] = mechanism_name(mech);
    j["rule"] = rule_spec;
    j["grid_step"] = r.grid_step;
    j["truthful_value"] = r.truthful_value;
    j["best_report"] = r.best_report;
    j["best_value"] = r.best_value;
    j["grid_best_report"] = r.grid_best_report;
    j["grid_best_value"] = r.grid_best_value;
    j["violation"] = r.violation;
    j["exact"] = r.exact;
    if (!r.exact) j["std_error"] = r.std_error;
    return j;
}

inline Json competition_result_to_json(const CompetitionResult& result, Mechanism mech,
                                       const std::string& rule_spec,
                                       const std::vector<std::string>& labels,
                                       const Ranking* ranking = nullptr) {
    Json j;
    j["mechanism"] = mechanism_name(mech);
    j["rule"] = rule_spec;
    j["seed"] = result.seed;
    j["winner"] = result.winner + 1;
    if (result.winner < labels.size()) j["winner_label"] = labels[result.winner];
    if (result.distribution) j["distribution"] = result.distribution->probs;
    if (result.event_winners) {
        std::vector<std::size_t> w1;
        for (std::size_t w : *result.event_winners) w1.push_back(w + 1);
        j["event_winners"] = w1;
    }
    if (result.win_counts) j["win_counts"] = *result.win_counts;
    if (mech == Mechanism::Multnorm)
        j["degenerate_normalization"] = result.degenerate_normalization;
    if (ranking) {
        std::vector<std::size_t> r1;
        for (std::size_t i : *ranking) r1.push_back(i + 1);
        j["ranking"] = r1;
    }
    return j;
}

// ---------------------------------------------------------------------------
// Experiment configs
// ---------------------------------------------------------------------------

/// Declarative Monte Carlo experiment: for each m in the sweep, single-column
/// reports and theta are replicated to m events and the best-selection rate
/// is measured. All randomness derives from the one seed.
struct ExperimentConfig {
    Mechanism mechanism = Mechanism::Ielf;
    std::string rule_spec = "quadratic";
    ReportMatrix reports;
    std::vector<double> theta;  // per-event occurrence probabilities
    std::size_t trials = 1;
    std::uint64_t seed = 0;
    std::vector<std::size_t> m_sweep;
    std::string output;  // optional path; empty = stdout only
    double shrink_eps = kIelfDefaultShrink;
};

inline ExperimentConfig parse_experiment_config(const Json& j) {
    ExperimentConfig cfg;
    try {
        cfg.mechanism = parse_mechanism(j.at("mechanism").get<std::string>());
        cfg.rule_spec = j.at("rule").get<std::string>();
        const Json& rj = j.at("reports");
        if (rj.contains("inline")) {
            cfg.reports =
                ReportMatrix::from_rows(rj.at("inline").get<std::vector<std::vector<double>>>());
        } else if (rj.contains("csv")) {
            cfg.reports = parse_reports_csv_file(rj.at("csv").get<std::string>());
        } else {
            throw ParseError("config reports need 'inline' or 'csv'");
        }
        const Json& tj = j.at("theta");
        if (tj.is_array()) cfg.theta = tj.get<std::vector<double>>();
        else cfg.theta = tj.at("independent").get<std::vector<double>>();
        cfg.trials = j.at("trials").get<std::size_t>();
        if (!j.contains("seed")) throw ParseError("config must pin a seed");
        cfg.seed = j.at("seed").get<std::uint64_t>();
        cfg.m_sweep = j.at("m_sweep").get<std::vector<std::size_t>>();
        if (j.contains("output")) cfg.output = j.at("output").get<std::string>();
        if (j.contains("shrink_eps")) cfg.shrink_eps = j.at("shrink_eps").get<double>();
    } catch (const Json::exception& e) {
        throw ParseError(std::string("bad experiment config: ") + e.what());
    }
    if (cfg.trials < 1) throw ParseError("config trials must be >= 1");
    if (cfg.m_sweep.empty()) throw ParseError("config m_sweep must be non-empty");
    for (std::size_t m : cfg.m_sweep)
        if (m < 1) throw ParseError("m_sweep entries must be >= 1");
    parse_rule_spec(cfg.rule_spec);
    return cfg;
}

inline ExperimentConfig parse_experiment_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open config file: " + path);
    Json j;
    try {
        in >> j;
    } catch (const Json::exception& e) {
        throw ParseError(std::string("bad config JSON: ") + e.what());
    }
    return parse_experiment_config(j);
}

inline std::uint64_t fnv1a_hash(const std::string& data) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

/// Runs the m-sweep and returns the result document. Each sweep entry gets
/// its own seed derived from (master seed, m); trials are substreams of
/// that, so output is independent of evaluation order.
inline Json run_experiment(const ExperimentConfig& cfg) {
    const ScoringRule rule = parse_rule_spec(cfg.rule_spec);

    Json j;
    j["mechanism"] = mechanism_name(cfg.mechanism);
    j["rule"] = cfg.rule_spec;
    j["seed"] = cfg.seed;
    j["trials"] = cfg.trials;
    j["m_sweep"] = cfg.m_sweep;
    {
        Json canon = j;
        canon["reports"] = cfg.reports.values;
        canon["theta"] = cfg.theta;
        char buf[32];
        std::snprintf(buf, sizeof buf, "%016llx",
                      static_cast<unsigned long long>(fnv1a_hash(canon.dump())));
        j["config_hash"] = std::string(buf);
    }

    j["rows"] = Json::array();
    for (std::size_t m : cfg.m_sweep) {
        const ReportMatrix reports_m = cfg.reports.replicated(m);
        std::vector<double> theta_m = cfg.theta;
        if (theta_m.size() == 1 && m > 1) theta_m.assign(m, cfg.theta[0]);
        if (theta_m.size() != m)
            throw std::invalid_argument("theta length must be 1 or match each sweep m");
        std::uint64_t s = cfg.seed ^ (0x51ed2701a2b3c4d5ULL * (m + 1));
        const std::uint64_t seed_m = splitmix64(s);
        const MonteCarloRate r = monte_carlo_best_selection_rate(
            cfg.mechanism, rule, reports_m, TrueDistribution::independent(theta_m), cfg.trials,
            seed_m, cfg.shrink_eps);
        Json row;
        row["m"] = m;
        row["rate"] = r.rate;
        row["stderr"] = r.std_error;
        j["rows"].push_back(std::move(row));
    }
    return j;
}

}  // namespace fcomp
