#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "fcomp/errors.hpp"

namespace fcomp {

enum class Family {
    Quadratic,            // 1 - (y - x)^2
    Spherical,            // (yx + (1-y)(1-x)) / sqrt(y^2 + (1-y)^2), binary only
    Absolute,             // 1 - |y - x|, median elicitation on an interval
    CategoricalQuadratic  // multi-outcome quadratic, rescaled into [0,1]
};

enum class OutcomeDomain { Binary, Categorical, RealInterval };

struct ScoreBounds {
    double lower = 0.0;
    double upper = 1.0;
};

namespace detail {

/// Minimizes a strictly convex function on [lo, hi] by golden-section search.
/// Returns the minimum value; `argmin` (optional) receives the minimizer.
inline double golden_section_min(const std::function<double(double)>& f, double lo, double hi,
                                 double x_tol, double* argmin = nullptr) {
    static const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    while (b - a > x_tol) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    const double x = 0.5 * (a + b);
    if (argmin) *argmin = x;
    return f(x);
}

inline bool is_binary_outcome(double x) { return x == 0.0 || x == 1.0; }

}  // namespace detail

/// A bounded proper scoring rule: a built-in family composed with a positive
/// affine transform, score(y, x) = alpha * base(y, x) + beta(x).
///
/// Report/outcome domains by family:
///   Quadratic            binary {0,1} or a real interval [a,b]
///   Spherical            binary
///   Absolute             real interval [a,b]
///   CategoricalQuadratic class index in [0,c); reports are simplex vectors
///
/// Real-interval rules rescale both report and outcome into [0,1] before
/// evaluating the base family, so tighter intervals discriminate better.
/// All built-in bases take values in [0,1], with 1 at a perfect forecast of
/// a sure outcome. There is deliberately no logarithmic family: it is
/// unbounded and cannot back a selection lottery.
class ScoringRule {
  public:
    static ScoringRule quadratic(double alpha = 1.0, double beta0 = 0.0, double beta1 = 0.0) {
        return ScoringRule(Family::Quadratic, OutcomeDomain::Binary, alpha, {beta0, beta1});
    }
    static ScoringRule spherical(double alpha = 1.0, double beta0 = 0.0, double beta1 = 0.0) {
        return ScoringRule(Family::Spherical, OutcomeDomain::Binary, alpha, {beta0, beta1});
    }
    /// Quadratic rule on real outcomes in [a, b]; elicits the mean.
    static ScoringRule quadratic_real(double a = 0.0, double b = 1.0, double alpha = 1.0,
                                      double beta = 0.0) {
        ScoringRule r(Family::Quadratic, OutcomeDomain::RealInterval, alpha, {beta});
        r.set_interval(a, b);
        return r;
    }
    /// Absolute rule on real outcomes in [a, b]; elicits the median.
    static ScoringRule absolute(double a = 0.0, double b = 1.0, double alpha = 1.0,
                                double beta = 0.0) {
        ScoringRule r(Family::Absolute, OutcomeDomain::RealInterval, alpha, {beta});
        r.set_interval(a, b);
        return r;
    }
    /// Rescaled multi-outcome quadratic over `classes` categories:
    /// base(y, c) = 1 - 0.5 * sum_j (y_j - 1{j==c})^2, which lies in [0,1].
    static ScoringRule categorical_quadratic(int classes, double alpha = 1.0, double beta = 0.0) {
        if (classes < 2) throw std::invalid_argument("categorical rule needs >= 2 classes");
        ScoringRule r(Family::CategoricalQuadratic, OutcomeDomain::Categorical, alpha,
                      std::vector<double>(static_cast<std::size_t>(classes), beta));
        r.classes_ = classes;
        return r;
    }

    Family family() const { return family_; }
    OutcomeDomain domain() const { return domain_; }
    double alpha() const { return alpha_; }
    const std::vector<double>& betas() const { return betas_; }
    int classes() const { return classes_; }
    double interval_lo() const { return lo_; }
    double interval_hi() const { return hi_; }
    bool is_binary() const { return domain_ == OutcomeDomain::Binary; }

    ScoringRule with_affine(double alpha, std::vector<double> betas) const {
        if (alpha <= 0.0) throw std::invalid_argument("alpha must be positive");
        if (betas.size() != betas_.size())
            throw std::invalid_argument("beta vector size does not match outcome domain");
        ScoringRule r = *this;
        r.alpha_ = alpha;
        r.betas_ = std::move(betas);
        return r;
    }

    /// The rule scaled by a positive factor, (1-eps)-shrinks in particular.
    ScoringRule scaled(double factor) const {
        if (factor <= 0.0) throw std::invalid_argument("scale factor must be positive");
        ScoringRule r = *this;
        r.alpha_ = alpha_ * factor;
        for (double& b : r.betas_) b *= factor;
        return r;
    }

    /// Evaluates the rule on a scalar report and outcome (binary or real
    /// interval domains). Pure and deterministic.
    double score(double y, double x) const {
        switch (domain_) {
            case OutcomeDomain::Binary: {
                if (!(y >= 0.0 && y <= 1.0))
                    throw std::invalid_argument("report outside [0,1]");
                if (!detail::is_binary_outcome(x))
                    throw std::invalid_argument("outcome must be 0 or 1");
                const double base = family_ == Family::Quadratic ? quadratic_base(y, x)
                                                                 : spherical_base(y, x);
                return alpha_ * base + betas_[static_cast<std::size_t>(x)];
            }
            case OutcomeDomain::RealInterval: {
                if (!(y >= lo_ && y <= hi_) || !(x >= lo_ && x <= hi_))
                    throw std::invalid_argument("report or outcome outside the rule interval");
                const double ty = (y - lo_) / (hi_ - lo_);
                const double tx = (x - lo_) / (hi_ - lo_);
                const double base = family_ == Family::Quadratic
                                        ? quadratic_base(ty, tx)
                                        : 1.0 - std::abs(ty - tx);
                return alpha_ * base + betas_[0];
            }
            case OutcomeDomain::Categorical:
                throw std::invalid_argument("categorical rule needs a simplex report");
        }
        throw std::logic_error("unreachable");
    }

    /// Evaluates the categorical rule on a simplex report and a class index.
    double score(std::span<const double> y, int outcome_class) const {
        if (domain_ != OutcomeDomain::Categorical)
            throw std::invalid_argument("scalar-domain rule got a categorical report");
        if (static_cast<int>(y.size()) != classes_)
            throw std::invalid_argument("report simplex has wrong length");
        if (outcome_class < 0 || outcome_class >= classes_)
            throw std::invalid_argument("outcome class out of range");
        double sum = 0.0;
        for (double v : y) {
            if (!(v >= -1e-12)) throw std::invalid_argument("negative simplex entry");
            sum += v;
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw std::invalid_argument("report simplex does not sum to 1");
        double sq = 0.0;
        for (int j = 0; j < classes_; ++j) {
            const double d = y[static_cast<std::size_t>(j)] - (j == outcome_class ? 1.0 : 0.0);
            sq += d * d;
        }
        return alpha_ * (1.0 - 0.5 * sq) + betas_[static_cast<std::size_t>(outcome_class)];
    }

    /// Exact bounds of the rule over its whole domain. Every built-in base
    /// spans [0,1] for each fixed outcome, so the bounds follow from the
    /// affine transform alone.
    ScoreBounds bounds() const {
        const double bmin = *std::min_element(betas_.begin(), betas_.end());
        const double bmax = *std::max_element(betas_.begin(), betas_.end());
        return ScoreBounds{bmin, alpha_ + bmax};
    }

    bool is_in_unit_range(double tol = 1e-12) const {
        const ScoreBounds b = bounds();
        return b.lower >= -tol && b.upper <= 1.0 + tol;
    }

  private:
    ScoringRule(Family f, OutcomeDomain d, double alpha, std::vector<double> betas)
        : family_(f), domain_(d), alpha_(alpha), betas_(std::move(betas)) {
        if (alpha_ <= 0.0) throw std::invalid_argument("alpha must be positive");
    }

    void set_interval(double a, double b) {
        if (!(b > a)) throw std::invalid_argument("rule interval needs b > a");
        lo_ = a;
        hi_ = b;
    }

    static double quadratic_base(double y, double x) {
        const double d = y - x;
        return 1.0 - d * d;
    }
    static double spherical_base(double y, double x) {
        const double denom = std::sqrt(y * y + (1.0 - y) * (1.0 - y));
        return (y * x + (1.0 - y) * (1.0 - x)) / denom;
    }

    Family family_;
    OutcomeDomain domain_;
    double alpha_ = 1.0;
    std::vector<double> betas_;  // per binary outcome, per class, or constant
    int classes_ = 2;
    double lo_ = 0.0, hi_ = 1.0;
};

inline ScoreBounds bounds(const ScoringRule& rule) { return rule.bounds(); }

/// Ground-truth distribution over m binary events: either an independent
/// product of per-event occurrence probabilities, or an explicit finite joint
/// support.
class TrueDistribution {
  public:
    static TrueDistribution independent(std::vector<double> thetas) {
        if (thetas.empty()) throw std::invalid_argument("need at least one event");
        for (double t : thetas)
            if (!(t >= 0.0 && t <= 1.0))
                throw std::invalid_argument("event probability outside [0,1]");
        TrueDistribution d;
        d.thetas_ = std::move(thetas);
        return d;
    }

    static TrueDistribution joint(std::vector<std::vector<double>> outcomes,
                                  std::vector<double> probs) {
        if (outcomes.empty() || outcomes.size() != probs.size())
            throw std::invalid_argument("joint support and probabilities must match");
        const std::size_t m = outcomes.front().size();
        if (m == 0) throw std::invalid_argument("need at least one event");
        double total = 0.0;
        for (std::size_t a = 0; a < outcomes.size(); ++a) {
            if (outcomes[a].size() != m) throw std::invalid_argument("ragged joint support");
            for (double x : outcomes[a])
                if (!detail::is_binary_outcome(x))
                    throw std::invalid_argument("joint support entries must be 0 or 1");
            if (!(probs[a] >= 0.0)) throw std::invalid_argument("negative support probability");
            total += probs[a];
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw std::invalid_argument("joint support probabilities must sum to 1");
        TrueDistribution d;
        d.joint_outcomes_ = std::move(outcomes);
        d.joint_probs_ = std::move(probs);
        return d;
    }

    bool is_independent() const { return !thetas_.empty(); }
    std::size_t num_events() const {
        return is_independent() ? thetas_.size() : joint_outcomes_.front().size();
    }
    const std::vector<double>& thetas() const { return thetas_; }
    const std::vector<std::vector<double>>& joint_outcomes() const { return joint_outcomes_; }
    const std::vector<double>& joint_probs() const { return joint_probs_; }

    /// Marginal occurrence probability of event k.
    double marginal(std::size_t k) const {
        if (is_independent()) return thetas_.at(k);
        double p = 0.0;
        for (std::size_t a = 0; a < joint_probs_.size(); ++a)
            p += joint_probs_[a] * joint_outcomes_[a].at(k);
        return p;
    }

  private:
    std::vector<double> thetas_;
    std::vector<std::vector<double>> joint_outcomes_;
    std::vector<double> joint_probs_;
};

/// Expected per-event-averaged score of a binary report vector under theta:
/// the mean over events of E[R(y_k, X_k)].
inline double expected_score(const ScoringRule& rule, std::span<const double> y,
                             const TrueDistribution& theta) {
    if (!rule.is_binary())
        throw std::invalid_argument("expected_score over binary events needs a binary rule");
    const std::size_t m = theta.num_events();
    if (y.size() != m) throw std::invalid_argument("report length does not match event count");
    if (theta.is_independent()) {
        double total = 0.0;
        for (std::size_t k = 0; k < m; ++k) {
            const double t = theta.thetas()[k];
            total += t * rule.score(y[k], 1.0) + (1.0 - t) * rule.score(y[k], 0.0);
        }
        return total / static_cast<double>(m);
    }
    double total = 0.0;
    for (std::size_t a = 0; a < theta.joint_probs().size(); ++a) {
        double s = 0.0;
        for (std::size_t k = 0; k < m; ++k) s += rule.score(y[k], theta.joint_outcomes()[a][k]);
        total += theta.joint_probs()[a] * s / static_cast<double>(m);
    }
    return total;
}

inline double expected_score(const ScoringRule& rule, double y, double theta) {
    return expected_score(rule, std::span<const double>(&y, 1),
                          TrueDistribution::independent({theta}));
}

/// Normalizes a bounded binary rule into [0,1] with value 1 at perfect sure
/// forecasts and 0 attained. Steps: shift each outcome so that perfect sure
/// forecasts score 0 (beta'(x) = -R(x,x)), divide by the larger per-outcome
/// range r_x = R'(x,x) - R'(1-x,x), then add 1.
inline ScoringRule normalize(const ScoringRule& rule) {
    if (!rule.is_binary()) throw UnsupportedRuleError("normalize: rule must be binary-outcome");
    const double shift0 = -rule.score(0.0, 0.0);
    const double shift1 = -rule.score(1.0, 1.0);
    const double r0 = -(rule.score(1.0, 0.0) + shift0);
    const double r1 = -(rule.score(0.0, 1.0) + shift1);
    const double range = std::max(r0, r1);
    if (!(range > 0.0)) throw UnsupportedRuleError("normalize: degenerate score range");
    const auto& b = rule.betas();
    return rule.with_affine(rule.alpha() / range,
                            {(b[0] + shift0) / range + 1.0, (b[1] + shift1) / range + 1.0});
}

/// Truthful expected score of a binary rule as a function of the event
/// probability: g(t) = E_{X~t}[R(t, X)]. Strictly convex for strictly proper
/// rules.
inline double truthful_expected_score(const ScoringRule& rule, double t) {
    return t * rule.score(t, 1.0) + (1.0 - t) * rule.score(t, 0.0);
}

/// Canonical representative of the rule's positive-affine equivalence class:
/// perfect sure forecasts score 1 and the minimum truthful expected score is
/// 0. The minimum is located by golden-section search on the strictly convex
/// truthful expected-score curve.
inline ScoringRule canonical_form(const ScoringRule& rule, double x_tol = 1e-10) {
    if (!rule.is_binary())
        throw UnsupportedRuleError("canonical_form: rule must be binary-outcome");
    const double f0 = -rule.score(0.0, 0.0);
    const double f1 = -rule.score(1.0, 1.0);
    const auto g = [&](double t) {
        return t * (rule.score(t, 1.0) + f1) + (1.0 - t) * (rule.score(t, 0.0) + f0);
    };
    const double gmin = detail::golden_section_min(g, 0.0, 1.0, x_tol);
    if (!(gmin < 0.0))
        throw UnsupportedRuleError("canonical_form: truthful expected score has no interior dip");
    const double scale = 1.0 / (-gmin);
    const auto& b = rule.betas();
    return rule.with_affine(scale * rule.alpha(),
                            {scale * (b[0] + f0) + 1.0, scale * (b[1] + f1) + 1.0});
}

/// Two bounded binary rules are equivalent iff they are positive affine
/// transforms of each other, iff they share a canonical form. Decided by
/// comparing canonical forms on the fixed grid {0, 0.01, ..., 1} x {0, 1}.
inline bool are_equivalent(const ScoringRule& rule1, const ScoringRule& rule2, double tol) {
    const ScoringRule c1 = canonical_form(rule1);
    const ScoringRule c2 = canonical_form(rule2);
    for (int i = 0; i <= 100; ++i) {
        const double y = static_cast<double>(i) / 100.0;
        for (double x : {0.0, 1.0})
            if (std::abs(c1.score(y, x) - c2.score(y, x)) > tol) return false;
    }
    return true;
}

/// Parses a rule spec string: family[:key=value]*. Keys: alpha, beta0,
/// beta1, classes (categorical), a, b (real interval; presence of a or b on
/// a quadratic rule selects the real-interval domain).
inline ScoringRule parse_rule_spec(const std::string& spec) {
    std::vector<std::string> parts;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ':')) parts.push_back(item);
    if (parts.empty()) throw ParseError("empty rule spec");

    double alpha = 1.0, beta0 = 0.0, beta1 = 0.0, a = 0.0, b = 1.0;
    bool has_beta1 = false, has_interval = false;
    int classes = 3;
    for (std::size_t i = 1; i < parts.size(); ++i) {
        const auto eq = parts[i].find('=');
        if (eq == std::string::npos) throw ParseError("rule option missing '=': " + parts[i]);
        const std::string key = parts[i].substr(0, eq);
        const std::string val = parts[i].substr(eq + 1);
        try {
            if (key == "alpha") alpha = std::stod(val);
            else if (key == "beta0") beta0 = std::stod(val);
            else if (key == "beta1") { beta1 = std::stod(val); has_beta1 = true; }
            else if (key == "classes") classes = std::stoi(val);
            else if (key == "a") { a = std::stod(val); has_interval = true; }
            else if (key == "b") { b = std::stod(val); has_interval = true; }
            else throw ParseError("unknown rule option: " + key);
        } catch (const std::invalid_argument&) {
            throw ParseError("bad value for rule option " + key + ": " + val);
        } catch (const std::out_of_range&) {
            throw ParseError("value out of range for rule option " + key + ": " + val);
        }
    }

    const std::string& family = parts[0];
    if (family == "quadratic") {
        if (has_interval) {
            if (has_beta1) throw ParseError("real-interval rules take only beta0");
            return ScoringRule::quadratic_real(a, b, alpha, beta0);
        }
        return ScoringRule::quadratic(alpha, beta0, beta1);
    }
    if (family == "spherical") return ScoringRule::spherical(alpha, beta0, beta1);
    if (family == "absolute") {
        if (has_beta1) throw ParseError("real-interval rules take only beta0");
        return ScoringRule::absolute(a, b, alpha, beta0);
    }
    if (family == "categorical-quadratic") {
        if (has_beta1) throw ParseError("categorical rules take only beta0");
        return ScoringRule::categorical_quadratic(classes, alpha, beta0);
    }
    throw ParseError("unknown rule family: " + family);
}

inline std::string family_name(Family f) {
    switch (f) {
        case Family::Quadratic: return "quadratic";
        case Family::Spherical: return "spherical";
        case Family::Absolute: return "absolute";
        case Family::CategoricalQuadratic: return "categorical-quadratic";
    }
    return "?";
}

}  // namespace fcomp
