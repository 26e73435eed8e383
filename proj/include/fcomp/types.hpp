#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fcomp {

/// n x m matrix of reported forecasts, one row per forecaster. Entries are
/// scalar reports (probability for binary events, point estimate for real
/// outcomes). Row labels are kept for I/O round-trips.
struct ReportMatrix {
    std::size_t n = 0;
    std::size_t m = 0;
    std::vector<double> values;        // row-major, n * m
    std::vector<std::string> labels;   // size n, may be empty labels

    ReportMatrix() = default;
    ReportMatrix(std::size_t n_, std::size_t m_)
        : n(n_), m(m_), values(n_ * m_, 0.0), labels(n_) {
        for (std::size_t i = 0; i < n; ++i) labels[i] = std::to_string(i + 1);
    }

    static ReportMatrix from_rows(const std::vector<std::vector<double>>& rows) {
        if (rows.size() < 2) throw std::invalid_argument("need at least 2 forecasters");
        ReportMatrix r(rows.size(), rows.front().size());
        if (r.m == 0) throw std::invalid_argument("need at least 1 event");
        for (std::size_t i = 0; i < r.n; ++i) {
            if (rows[i].size() != r.m) throw std::invalid_argument("ragged report rows");
            for (std::size_t k = 0; k < r.m; ++k) r.at(i, k) = rows[i][k];
        }
        return r;
    }

    double& at(std::size_t i, std::size_t k) { return values[i * m + k]; }
    double at(std::size_t i, std::size_t k) const { return values[i * m + k]; }
    std::span<const double> row(std::size_t i) const { return {values.data() + i * m, m}; }

    /// Column k as a fresh vector (reports of all forecasters on one event).
    std::vector<double> column(std::size_t k) const {
        std::vector<double> c(n);
        for (std::size_t i = 0; i < n; ++i) c[i] = at(i, k);
        return c;
    }

    /// The same forecasters with every column repeated to width new_m.
    /// Requires m == 1 or new_m == m.
    ReportMatrix replicated(std::size_t new_m) const {
        if (new_m == m) return *this;
        if (m != 1) throw std::invalid_argument("can only replicate single-column reports");
        ReportMatrix r(n, new_m);
        r.labels = labels;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < new_m; ++k) r.at(i, k) = at(i, 0);
        return r;
    }
};

/// m materialized outcomes; 0/1 for binary events, reals for interval
/// outcomes.
using OutcomeVector = std::vector<double>;

/// Categorical variant: reports are per-event simplex vectors, outcomes are
/// class indices.
struct CategoricalReportMatrix {
    std::size_t n = 0;
    std::size_t m = 0;
    int classes = 2;
    std::vector<double> values;  // n * m * classes, row-major

    CategoricalReportMatrix(std::size_t n_, std::size_t m_, int classes_)
        : n(n_), m(m_), classes(classes_),
          values(n_ * m_ * static_cast<std::size_t>(classes_), 0.0) {}

    std::span<const double> report(std::size_t i, std::size_t k) const {
        return {values.data() + (i * m + k) * static_cast<std::size_t>(classes),
                static_cast<std::size_t>(classes)};
    }
    double& at(std::size_t i, std::size_t k, int c) {
        return values[(i * m + k) * static_cast<std::size_t>(classes) + static_cast<std::size_t>(c)];
    }
};

using CategoricalOutcomes = std::vector<int>;

/// Probability vector over the n forecasters. Mechanism outputs are
/// sanitized here: entries within -1e-12 of zero are clamped (with the
/// vector renormalized), anything more negative or a sum off from 1 by more
/// than 1e-10 signals a broken rule and is an internal error.
struct SelectionDistribution {
    std::vector<double> probs;

    static SelectionDistribution sanitized(std::vector<double> p) {
        double sum = 0.0;
        for (double v : p) sum += v;
        if (std::abs(sum - 1.0) > 1e-10)
            throw std::logic_error("selection distribution sum is off: rule outside [0,1]?");
        bool clamped = false;
        for (double& v : p) {
            if (v < 0.0) {
                if (v < -1e-12)
                    throw std::logic_error(
                        "selection probability below -1e-12: rule outside [0,1]?");
                v = 0.0;
                clamped = true;
            }
        }
        if (clamped) {
            double s2 = 0.0;
            for (double v : p) s2 += v;
            for (double& v : p) v /= s2;
        }
        return SelectionDistribution{std::move(p)};
    }

    std::size_t size() const { return probs.size(); }
    double operator[](std::size_t i) const { return probs[i]; }
};

/// Per-event lottery winners (forecaster index per event, 0-based).
using EventWinnerVector = std::vector<std::size_t>;

/// Descending-accuracy permutation of forecaster indices (0-based).
using Ranking = std::vector<std::size_t>;

/// Outcome of running one competition mechanism.
struct CompetitionResult {
    std::size_t winner = 0;  // 0-based forecaster index
    std::optional<SelectionDistribution> distribution;
    std::optional<EventWinnerVector> event_winners;
    std::optional<std::vector<std::size_t>> win_counts;
    std::uint64_t seed = 0;
    bool degenerate_normalization = false;  // multiplicative strawman only
};

}  // namespace fcomp
