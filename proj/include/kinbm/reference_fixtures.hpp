// External reference values used as fixtures for serialization tests and the
// diagnostic premium comparison. They are printed estimates rounded to a few
// digits, so anything computed from them is compared at loose tolerances and
// never used as numeric ground truth.
#pragma once

#include <vector>

#include <Eigen/Dense>

#include "kinbm/distributions.hpp"
#include "kinbm/params.hpp"
#include "kinbm/regression.hpp"

namespace kinbm::fixtures {

// Single-component NB distribution estimate in the Poisson/gamma-rate
// parametrization (shape 5.717, gamma rate 23.390); prior mean 0.244.
inline KinbmParams nbm1_dist() {
    return kinbm_from_poisson_gamma_mixture(0, 0.0, {1.0}, {5.717}, {23.390});
}

// One-inflated single-NB distribution estimate; atom mass 0.136 at count 1,
// shape 0.217, gamma rate 1.755. Weights as printed sum to 0.997 and are
// renormalized on construction.
inline KinbmParams one_inflated_nbm1_dist() {
    const double total = 0.136 + 0.861;
    return kinbm_from_poisson_gamma_mixture(1, 0.136 / total, {1.0}, {0.217}, {1.755});
}

// The same printed numbers read directly as (weights, shape, rate) of the
// count mixture itself; kept for serialization and moment-oracle tests.
inline KinbmParams one_inflated_nbm1_dist_raw() {
    return KinbmParams(1, {0.136, 0.861}, {0.217}, {1.755});
}

inline ParetoMixParams pareto_m1_dist() { return ParetoMixParams({1.0}, {1.871}, {16.44}); }

// Regression estimates: coefficient order (intercept, gender, age, price, area),
// with non-significant covariates set to zero.
inline KinbmRegParams nbm1_reg() {
    Eigen::MatrixXd coef(1, 5);
    coef << -0.738, 0.0, -0.118, -0.189, 0.0;
    return KinbmRegParams(0, false, {}, {7.560}, coef);
}

inline KinbmRegParams one_inflated_nbm1_reg() {
    Eigen::MatrixXd coef(1, 5);
    coef << -0.887, 0.0, -0.213, -0.263, 0.0;
    // atom weight 0.111 against NB weight 0.889 -> logit log(0.889/0.111)
    return KinbmRegParams(1, true, {std::log(0.889 / 0.111)}, {0.440}, coef);
}

inline ParetoRegParams pareto_m1_reg() {
    Eigen::MatrixXd coef(1, 5);
    coef << 16.15, 0.0, 0.0, 0.157, 0.0;
    return ParetoRegParams({1.0}, {1.927}, coef);
}

// Scenario categories: no-covariate pricing, a young male driver with a
// mid-price car in a large city, and a mature female driver with a cheap car
// in a small town.
inline Eigen::RowVectorXd category_a2_row() {
    Eigen::RowVectorXd x(5);
    x << 1.0, 1.0, 1.0, 2.0, 4.0;
    return x;
}

inline Eigen::RowVectorXd category_a3_row() {
    Eigen::RowVectorXd x(5);
    x << 1.0, 0.0, 4.0, 1.0, 1.0;
    return x;
}

// Published rate premiums for the single-NB model under the cumulated-claims
// convention: rows are t=1 K=0..4 then t=2 K=0..4, columns A1/A2/A3.
struct ReferenceRateRow {
    int years;
    int total_claims;
    double a1, a2, a3;
};

inline std::vector<ReferenceRateRow> reference_rates_cumulated_nbm1() {
    return {
        {1, 0, 0.96, 0.96, 0.98}, {1, 1, 1.13, 1.08, 1.11}, {1, 2, 1.29, 1.21, 1.24},
        {1, 3, 1.46, 1.33, 1.37}, {1, 4, 1.63, 1.46, 1.50}, {2, 0, 0.92, 0.92, 0.96},
        {2, 1, 1.08, 1.04, 1.09}, {2, 2, 1.24, 1.16, 1.22}, {2, 3, 1.40, 1.28, 1.35},
        {2, 4, 1.57, 1.40, 1.47},
    };
}

// Published rate premiums for the one-inflated model under the per-year
// convention: t=1 patterns (k1), then t=2 patterns (k1,k2).
struct ReferenceExactRateRow {
    std::vector<int> counts;
    double a1, a2, a3;
};

inline std::vector<ReferenceExactRateRow> reference_rates_exact_1inbm1() {
    return {
        {{0}, 0.64, 0.63, 0.88},      {{1}, 1.81, 1.55, 1.54},    {{2}, 6.52, 3.91, 4.86},
        {{3}, 9.44, 4.94, 6.86},      {{4}, 12.37, 6.38, 8.85},   {{0, 0}, 0.48, 0.46, 0.78},
        {{0, 1}, 1.15, 1.03, 1.33},   {{0, 2}, 4.78, 2.56, 4.33}, {{1, 0}, 1.15, 1.03, 1.33},
        {{1, 1}, 2.87, 2.06, 2.31},   {{1, 2}, 6.79, 3.58, 5.63}, {{2, 0}, 4.78, 2.56, 4.33},
        {{2, 1}, 6.79, 3.58, 5.63},   {{2, 2}, 9.10, 4.67, 7.88},
    };
}

// New-policyholder pure premium for the single-NB frequency and single Pareto
// severity pair, category A1 (rate 1 at t=0, so pure equals base).
inline constexpr double reference_pure_premium_t0_a1 = 613.739;

} // namespace kinbm::fixtures
