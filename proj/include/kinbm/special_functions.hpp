// Scalar special functions shared by the statistical modules: log-gamma,
// digamma/trigamma, regularized incomplete beta and gamma, log-sum-exp,
// and a few tail probabilities built on top of them.
#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace kinbm {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();

namespace detail {

// Lanczos approximation, g = 7, 9 coefficients.
inline double lanczos_log_gamma(double x) {
    static constexpr double g = 7.0;
    static constexpr double coeff[9] = {
        0.99999999999980993,      676.5203681218851,     -1259.1392167224028,
        771.32342877765313,      -176.61502916214059,     12.507343278686905,
        -0.13857109526572012,     9.9843695780195716e-6,  1.5056327351493116e-7};
    const double z = x - 1.0;
    double a = coeff[0];
    for (int i = 1; i < 9; ++i) a += coeff[i] / (z + i);
    const double t = z + g + 0.5;
    return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t) - t + std::log(a);
}

} // namespace detail

// ln Gamma(x) for x > 0.
inline double log_gamma(double x) {
    if (!(x > 0.0))
        throw std::domain_error("log_gamma: argument must be positive, got " + std::to_string(x));
    if (x < 0.5) {
        // reflection keeps the Lanczos series in its accurate range
        return std::log(std::numbers::pi / std::sin(std::numbers::pi * x)) -
               detail::lanczos_log_gamma(1.0 - x);
    }
    return detail::lanczos_log_gamma(x);
}

// psi(x) = d/dx ln Gamma(x), x > 0. Recurrence shift into the asymptotic range.
inline double digamma(double x) {
    if (!(x > 0.0)) throw std::domain_error("digamma: argument must be positive");
    double result = 0.0;
    while (x < 10.0) {
        result -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x, inv2 = inv * inv;
    result += std::log(x) - 0.5 * inv -
              inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 / 132.0))));
    return result;
}

// psi'(x), x > 0.
inline double trigamma(double x) {
    if (!(x > 0.0)) throw std::domain_error("trigamma: argument must be positive");
    double result = 0.0;
    while (x < 10.0) {
        result += 1.0 / (x * x);
        x += 1.0;
    }
    const double inv = 1.0 / x, inv2 = inv * inv;
    result += inv * (1.0 + 0.5 * inv +
                     inv2 * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 / 30.0))));
    return result;
}

// log sum_i exp(v_i), overflow-safe for magnitudes up to ~1e300.
inline double log_sum_exp(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("log_sum_exp: empty input");
    double m = neg_inf;
    for (double v : values) {
        if (std::isnan(v)) throw std::domain_error("log_sum_exp: NaN input");
        m = std::max(m, v);
    }
    if (m == neg_inf) return neg_inf;
    double acc = 0.0;
    for (double v : values) acc += std::exp(v - m);
    return m + std::log(acc);
}

inline double log_sum_exp(std::initializer_list<double> values) {
    return log_sum_exp(std::span<const double>(values.begin(), values.size()));
}

inline double log_sum_exp(double a, double b) {
    if (a == neg_inf) return b;
    if (b == neg_inf) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(std::min(a, b) - m));
}

namespace detail {

// Continued fraction for the incomplete beta function (modified Lentz).
inline double beta_continued_fraction(double a, double b, double x) {
    constexpr int max_iter = 400;
    constexpr double eps = 3e-16, fpmin = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    int m = 1;
    for (; m <= max_iter; ++m) {
        const int m2 = 2 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    if (m > max_iter)
        throw std::runtime_error("regularized_incomplete_beta: continued fraction did not converge");
    return h;
}

} // namespace detail

// I_x(a, b) for x in [0,1], a, b > 0. Symmetry switch keeps the continued
// fraction in its fast-converging region.
inline double regularized_incomplete_beta(double x, double a, double b) {
    if (!(a > 0.0) || !(b > 0.0))
        throw std::domain_error("regularized_incomplete_beta: a and b must be positive");
    if (!(x >= 0.0 && x <= 1.0))
        throw std::domain_error("regularized_incomplete_beta: x must lie in [0,1]");
    if (x == 0.0) return 0.0;
    if (x == 1.0) return 1.0;
    const double log_front = log_gamma(a + b) - log_gamma(a) - log_gamma(b) +
                             a * std::log(x) + b * std::log1p(-x);
    if (x < (a + 1.0) / (a + b + 2.0))
        return std::exp(log_front) * detail::beta_continued_fraction(a, b, x) / a;
    return 1.0 - std::exp(log_front) * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

namespace detail {

inline double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a, del = sum;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::fabs(del) < std::fabs(sum) * 1e-16)
            return sum * std::exp(-x + a * std::log(x) - log_gamma(a));
    }
    throw std::runtime_error("regularized_gamma: series did not converge");
}

inline double gamma_q_continued_fraction(double a, double x) {
    constexpr double fpmin = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / fpmin;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = b + an / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16)
            return h * std::exp(-x + a * std::log(x) - log_gamma(a));
    }
    throw std::runtime_error("regularized_gamma: continued fraction did not converge");
}

} // namespace detail

// Lower regularized incomplete gamma P(a, x).
inline double regularized_gamma_p(double a, double x) {
    if (!(a > 0.0) || x < 0.0) throw std::domain_error("regularized_gamma_p: bad arguments");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return detail::gamma_p_series(a, x);
    return 1.0 - detail::gamma_q_continued_fraction(a, x);
}

// Upper regularized incomplete gamma Q(a, x) = 1 - P(a, x).
inline double regularized_gamma_q(double a, double x) {
    if (!(a > 0.0) || x < 0.0) throw std::domain_error("regularized_gamma_q: bad arguments");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - detail::gamma_p_series(a, x);
    return detail::gamma_q_continued_fraction(a, x);
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

// Two-sided normal tail probability.
inline double normal_two_sided_p(double z) { return std::erfc(std::fabs(z) / std::numbers::sqrt2); }

// P(Chi2_df > x).
inline double chi_square_sf(double x, double df) {
    if (x <= 0.0) return 1.0;
    return regularized_gamma_q(0.5 * df, 0.5 * x);
}

} // namespace kinbm
