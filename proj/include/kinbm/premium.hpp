// Experience-rated premiums: posterior-mean rate premiums for the inflated
// Poisson / mixture-gamma frequency hierarchy (quadrature path plus the
// closed form available when there is no inflation mass) and closed-form base
// premiums for the exponential / inverse-gamma-mixture severity hierarchy.
// Reported rates are normalized so a policyholder with no history pays 1.
#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kinbm/distributions.hpp"
#include "kinbm/quadrature.hpp"
#include "kinbm/regression.hpp"
#include "kinbm/special_functions.hpp"

namespace kinbm {

struct ClaimHistory {
    std::vector<int> counts;                      // reported claims per year
    std::vector<std::vector<double>> severities;  // per-year claim sizes; may be empty

    int years() const { return static_cast<int>(counts.size()); }

    int total_claims() const {
        int k = 0;
        for (int c : counts) k += c;
        return k;
    }

    double total_severity() const {
        double s = 0.0;
        for (const auto& year : severities)
            for (double z : year) s += z;
        return s;
    }

    void validate(bool need_severities) const {
        for (int c : counts)
            if (c < 0) throw std::invalid_argument("ClaimHistory: negative count");
        if (severities.empty()) {
            if (need_severities && total_claims() > 0)
                throw std::invalid_argument(
                    "ClaimHistory: severities required for base premiums");
            return;
        }
        if (severities.size() != counts.size())
            throw std::invalid_argument("ClaimHistory: severity years do not match count years");
        for (std::size_t l = 0; l < counts.size(); ++l) {
            if (static_cast<int>(severities[l].size()) != counts[l])
                throw std::invalid_argument(
                    "ClaimHistory: severity cardinality does not match the count in year " +
                    std::to_string(l + 1));
            for (double z : severities[l])
                if (!(z > 0.0)) throw std::invalid_argument("ClaimHistory: severities must be positive");
        }
    }
};

struct PremiumQuote {
    double rate = 1.0;
    double base = 0.0;
    double pure = 0.0;
    std::string rate_method;
    std::string base_method;
};

struct RatePremiumResult {
    double reported = 1.0; // normalized so t = 0 gives exactly 1
    double raw = 0.0;      // posterior mean of next year's frequency parameter
    std::string method;
};

namespace detail {

// One gamma component of the prior on the Poisson rate.
struct RateComponent {
    double weight;
    double shape;
    double rate;
};

struct RateModel {
    double inflation_prob = 0.0;
    int k = 0;
    std::vector<RateComponent> components;

    double prior_mean() const {
        double m = 0.0;
        for (const auto& c : components) m += c.weight * c.shape / c.rate;
        return m;
    }
};

inline RateModel rate_model_from_reg(const KinbmRegParams& p, const Eigen::RowVectorXd& x) {
    if (x.size() != p.coef.cols())
        throw std::invalid_argument("rate_premium: covariate dimension mismatch");
    RateModel model;
    model.k = p.k;
    const std::vector<double> w = p.weights();
    const int offset = p.inflated ? 1 : 0;
    model.inflation_prob = p.inflated ? w[0] : 0.0;
    const double q = 1.0 - model.inflation_prob;
    if (!(q > 0.0))
        throw std::invalid_argument("rate_premium: model has no frequency component");
    for (int j = 0; j < p.nb_components(); ++j) {
        const double mu = std::exp(x.dot(p.coef.row(j)));
        model.components.push_back({w[j + offset] / q, p.shapes[j], p.shapes[j] / mu});
    }
    return model;
}

inline RateModel rate_model_from_dist(const KinbmParams& p) {
    RateModel model;
    model.k = p.k;
    model.inflation_prob = p.weights[0];
    const double q = 1.0 - model.inflation_prob;
    if (!(q > 0.0))
        throw std::invalid_argument("rate_premium: model has no frequency component");
    for (std::size_t j = 0; j < p.shapes.size(); ++j)
        model.components.push_back(
            {p.weights[j + 1] / q, p.shapes[j], p.rates[j] / p.shapes[j]});
    return model;
}

// log of prod_l [ p 1{y_l = k} + q Poisson(y_l; lambda) ]
inline double log_history_likelihood(double lambda, const std::vector<int>& counts, int k,
                                     double p, double q) {
    const double log_p = p > 0.0 ? std::log(p) : neg_inf;
    const double log_q = q > 0.0 ? std::log(q) : neg_inf;
    double acc = 0.0;
    for (int y : counts) {
        const double log_pois = log_q - lambda + y * std::log(lambda) - log_gamma(y + 1.0);
        acc += (y == k) ? log_sum_exp(log_p, log_pois) : log_pois;
    }
    return acc;
}

inline RatePremiumResult rate_posterior_mean(const RateModel& model,
                                             const std::vector<int>& counts,
                                             const QuadratureConfig& quad) {
    RatePremiumResult out;
    const double prior = model.prior_mean();
    if (counts.empty()) {
        out.reported = 1.0;
        out.raw = prior;
        out.method = "prior";
        return out;
    }
    const double q = 1.0 - model.inflation_prob;
    std::vector<double> log_num(model.components.size()), log_den(model.components.size());
    for (std::size_t j = 0; j < model.components.size(); ++j) {
        const auto& c = model.components[j];
        const double lw = c.weight > 0.0 ? std::log(c.weight) : neg_inf;
        auto log_posterior_kernel = [&](double lambda) {
            return c.shape * std::log(c.rate) - log_gamma(c.shape) +
                   (c.shape - 1.0) * std::log(lambda) - c.rate * lambda +
                   log_history_likelihood(lambda, counts, model.k, model.inflation_prob, q);
        };
        log_den[j] = lw + integrate_half_line_log(log_posterior_kernel, quad);
        log_num[j] = lw + integrate_half_line_log(
                              [&](double lambda) {
                                  return log_posterior_kernel(lambda) + std::log(lambda);
                              },
                              quad);
    }
    out.raw = std::exp(log_sum_exp(log_num) - log_sum_exp(log_den));
    out.reported = out.raw / prior;
    out.method = "quadrature";
    return out;
}

} // namespace detail

// Rate premium for a regression model: posterior mean of next year's
// frequency parameter given the claim counts, divided by the no-history value.
inline RatePremiumResult rate_premium_reg(const ClaimHistory& history,
                                          const Eigen::RowVectorXd& x, const KinbmRegParams& freq,
                                          const QuadratureConfig& quad = {}) {
    history.validate(false);
    return detail::rate_posterior_mean(detail::rate_model_from_reg(freq, x), history.counts,
                                       quad);
}

// Closed form for the no-inflation case: gamma-Poisson conjugacy collapses the
// posterior-mean integrals to gamma-function ratios. Contract error when the
// model carries inflation mass.
inline RatePremiumResult rate_premium_closed_q1(const ClaimHistory& history,
                                                const Eigen::RowVectorXd& x,
                                                const KinbmRegParams& freq) {
    history.validate(false);
    if (freq.inflated && freq.inflation_weight() > 1e-12)
        throw std::logic_error("rate_premium_closed_q1: model has inflation mass");
    const detail::RateModel model = detail::rate_model_from_reg(freq, x);
    RatePremiumResult out;
    const double prior = model.prior_mean();
    if (history.counts.empty()) {
        out.reported = 1.0;
        out.raw = prior;
        out.method = "prior";
        return out;
    }
    const double t = history.years();
    const double ysum = history.total_claims();
    std::vector<double> log_num(model.components.size()), log_den(model.components.size());
    for (std::size_t j = 0; j < model.components.size(); ++j) {
        const auto& c = model.components[j];
        const double lw = c.weight > 0.0 ? std::log(c.weight) : neg_inf;
        const double common = lw + c.shape * std::log(c.rate) - log_gamma(c.shape);
        log_den[j] = common + log_gamma(c.shape + ysum) -
                     (c.shape + ysum) * std::log(c.rate + t);
        log_num[j] = common + log_gamma(c.shape + ysum + 1.0) -
                     (c.shape + ysum + 1.0) * std::log(c.rate + t);
    }
    out.raw = std::exp(log_sum_exp(log_num) - log_sum_exp(log_den));
    out.reported = out.raw / prior;
    out.method = "closed-form";
    return out;
}

// Rate premium for a distribution model (no covariates); normalized by the
// prior mean so the no-history rate is 1.
inline RatePremiumResult rate_premium_dist(const ClaimHistory& history, const KinbmParams& freq,
                                           const QuadratureConfig& quad = {}) {
    history.validate(false);
    return detail::rate_posterior_mean(detail::rate_model_from_dist(freq), history.counts,
                                       quad);
}

namespace detail {

inline void check_base_premium_domain(double tail, int total_claims) {
    if (!(tail > 1.0))
        throw std::domain_error("base_premium: tail index <= 1, the model cannot price this risk");
    if (!(tail + total_claims - 1.0 > 0.0))
        throw std::domain_error("base_premium: undefined gamma ratio for this history");
}

} // namespace detail

// Base premium for a severity regression model: posterior mean of next year's
// exponential scale under the inverse-gamma mixture prior, evaluated with all
// gamma ratios in log space.
inline double base_premium_reg(const ClaimHistory& history, const Eigen::RowVectorXd& w,
                               const ParetoRegParams& sev) {
    history.validate(true);
    if (w.size() != sev.coef.cols())
        throw std::invalid_argument("base_premium_reg: covariate dimension mismatch");
    const int K = history.total_claims();
    const double total_z = history.total_severity();
    const int m = sev.component_count();
    std::vector<double> log_num(m), log_den(m);
    for (int j = 0; j < m; ++j) {
        const double eta = sev.tail_indices[j];
        detail::check_base_premium_domain(eta, K);
        const double b = w.dot(sev.coef.row(j));
        const double scaled = eta - 1.0 + std::exp(-b) * total_z;
        const double lw = sev.weights[j] > 0.0 ? std::log(sev.weights[j]) : neg_inf;
        const double common =
            lw + eta * std::log(eta - 1.0) - log_gamma(eta) - K * b;
        log_num[j] = common + b + log_gamma(eta + K - 1.0) - (eta + K - 1.0) * std::log(scaled);
        log_den[j] = common + log_gamma(eta + K) - (eta + K) * std::log(scaled);
    }
    return std::exp(log_sum_exp(log_num) - log_sum_exp(log_den));
}

// Base premium for a severity distribution model. The posterior-mean display
// this evaluates keeps the raw severity total in the denominator base (no
// offset of -1), which differs from the regression form; it is computed as
// stated, not harmonized.
inline double base_premium_dist(const ClaimHistory& history, const ParetoMixParams& sev) {
    history.validate(true);
    const int K = history.total_claims();
    const double total_z = history.total_severity();
    const int m = sev.component_count();
    std::vector<double> log_num(m), log_den(m);
    for (int j = 0; j < m; ++j) {
        const double eta = sev.tail_indices[j];
        detail::check_base_premium_domain(eta, K);
        const double lw = sev.weights[j] > 0.0 ? std::log(sev.weights[j]) : neg_inf;
        const double common = lw + eta * std::log(eta - 1.0) - log_gamma(eta);
        const double base = eta + total_z;
        log_num[j] = common + log_gamma(eta + K - 1.0) - (eta + K - 1.0) * std::log(base);
        log_den[j] = common + log_gamma(eta + K) - (eta + K) * std::log(base);
    }
    return std::exp(log_sum_exp(log_num) - log_sum_exp(log_den));
}

inline PremiumQuote pure_premium(double rate, double base, std::string rate_method = {},
                                 std::string base_method = {}) {
    if (!(rate > 0.0) || !(base > 0.0))
        throw std::invalid_argument("pure_premium: rate and base must be positive");
    PremiumQuote q;
    q.rate = rate;
    q.base = base;
    q.pure = rate * base;
    q.rate_method = std::move(rate_method);
    q.base_method = std::move(base_method);
    return q;
}

// ---------------------------------------------------------------------------
// scenario tables
// ---------------------------------------------------------------------------

// A pricing category: either "no covariate information" (priced with the
// distribution-form model) or a concrete covariate row.
struct ScenarioCategory {
    std::string label;
    std::optional<Eigen::RowVectorXd> covariates;
};

struct ClaimPattern {
    std::string label;
    std::vector<int> counts;
};

// A frequency model may carry a distribution form (for covariate-free
// categories), a regression form, or both.
struct FrequencyModel {
    std::string id;
    std::optional<KinbmParams> dist;
    std::optional<KinbmRegParams> reg;
};

struct SeverityModel {
    std::string id;
    std::optional<ParetoMixParams> dist;
    std::optional<ParetoRegParams> reg;
};

struct TableDoc {
    std::string title;
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;
};

// "cumulated claims" patterns: one row per total K for each year horizon
inline std::vector<ClaimPattern> cumulated_claim_patterns(int max_years, int max_claims) {
    std::vector<ClaimPattern> out;
    out.push_back({"t=0", {}});
    for (int t = 1; t <= max_years; ++t)
        for (int K = 0; K <= max_claims; ++K) {
            std::vector<int> counts(t, 0);
            counts[0] = K;
            out.push_back({"t=" + std::to_string(t) + " K=" + std::to_string(K), counts});
        }
    return out;
}

// per-year claim patterns: singles for t=1, pairs for t=2
inline std::vector<ClaimPattern> exact_claim_patterns(int first_year_max, int pair_max) {
    std::vector<ClaimPattern> out;
    out.push_back({"t=0", {}});
    for (int k1 = 0; k1 <= first_year_max; ++k1)
        out.push_back({"t=1 k1=" + std::to_string(k1), {k1}});
    for (int k1 = 0; k1 <= pair_max; ++k1)
        for (int k2 = 0; k2 <= pair_max; ++k2)
            out.push_back(
                {"t=2 k1=" + std::to_string(k1) + " k2=" + std::to_string(k2), {k1, k2}});
    return out;
}

namespace detail {

inline RatePremiumResult scenario_rate(const FrequencyModel& model,
                                       const ScenarioCategory& category,
                                       const ClaimHistory& history,
                                       const QuadratureConfig& quad) {
    if (!category.covariates) {
        if (!model.dist)
            throw std::invalid_argument("premium_table: category '" + category.label +
                                        "' needs a distribution-form fit for model " + model.id);
        return rate_premium_dist(history, *model.dist, quad);
    }
    if (!model.reg)
        throw std::invalid_argument("premium_table: category '" + category.label +
                                    "' needs a regression fit for model " + model.id);
    if (!model.reg->inflated || model.reg->inflation_weight() <= 1e-12)
        return rate_premium_closed_q1(history, *category.covariates, *model.reg);
    return rate_premium_reg(history, *category.covariates, *model.reg, quad);
}

inline double scenario_base(const SeverityModel& model, const ScenarioCategory& category,
                            const ClaimHistory& history) {
    if (!category.covariates) {
        if (!model.dist)
            throw std::invalid_argument("premium_table: category '" + category.label +
                                        "' needs a distribution-form severity fit");
        return base_premium_dist(history, *model.dist);
    }
    if (!model.reg)
        throw std::invalid_argument("premium_table: category '" + category.label +
                                    "' needs a severity regression fit");
    return base_premium_reg(history, *category.covariates, *model.reg);
}

inline std::string format_value(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

// spread a severity total equally over the claims of a pattern
inline ClaimHistory history_with_severities(const std::vector<int>& counts, double total) {
    ClaimHistory h;
    h.counts = counts;
    const int K = h.total_claims();
    h.severities.resize(counts.size());
    for (std::size_t l = 0; l < counts.size(); ++l)
        h.severities[l].assign(counts[l], K > 0 ? total / K : 0.0);
    return h;
}

} // namespace detail

// Rate-premium grid: one row per claim pattern, one column per model/category.
inline TableDoc rate_premium_table(const std::vector<FrequencyModel>& models,
                                   const std::vector<ScenarioCategory>& categories,
                                   const std::vector<ClaimPattern>& patterns,
                                   const QuadratureConfig& quad = {}) {
    TableDoc table;
    table.title = "rate premium";
    table.columns.push_back("pattern");
    for (const auto& model : models)
        for (const auto& cat : categories) table.columns.push_back(model.id + ":" + cat.label);
    for (const auto& pattern : patterns) {
        ClaimHistory history;
        history.counts = pattern.counts;
        std::vector<std::string> row{pattern.label};
        for (const auto& model : models)
            for (const auto& cat : categories)
                row.push_back(detail::format_value(
                    detail::scenario_rate(model, cat, history, quad).reported));
        table.rows.push_back(std::move(row));
    }
    return table;
}

// Pure-premium grid for a fixed severity total (rate times base per cell).
inline TableDoc pure_premium_table(const std::vector<FrequencyModel>& models,
                                   const SeverityModel& severity,
                                   const std::vector<ScenarioCategory>& categories,
                                   const std::vector<ClaimPattern>& patterns,
                                   double severity_total, const QuadratureConfig& quad = {}) {
    TableDoc table;
    table.title = "pure premium, total severity " + detail::format_value(severity_total);
    table.columns.push_back("pattern");
    for (const auto& model : models)
        for (const auto& cat : categories) table.columns.push_back(model.id + ":" + cat.label);
    for (const auto& pattern : patterns) {
        const ClaimHistory history =
            detail::history_with_severities(pattern.counts, severity_total);
        std::vector<std::string> row{pattern.label};
        for (const auto& model : models)
            for (const auto& cat : categories) {
                const RatePremiumResult rate =
                    detail::scenario_rate(model, cat, history, quad);
                const double base = detail::scenario_base(severity, cat, history);
                row.push_back(detail::format_value(pure_premium(rate.reported, base).pure));
            }
        table.rows.push_back(std::move(row));
    }
    return table;
}

} // namespace kinbm
