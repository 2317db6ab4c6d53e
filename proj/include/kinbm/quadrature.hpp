// Half-line quadrature: Gauss-Laguerre rules with an adaptive Gauss-Kronrod
// fallback on the log-transformed axis. A log-integrand variant keeps mixture
// likelihood products representable.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <mutex>
#include <stdexcept>
#include <vector>

#include "kinbm/special_functions.hpp"

namespace kinbm {

struct QuadratureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct QuadratureConfig {
    enum class Method { gauss_laguerre, adaptive };

    int node_count = 128;
    Method method = Method::gauss_laguerre;
    double rel_tol = 1e-9;
    int max_subdivisions = 200;

    void validate() const {
        if (node_count < 2) throw std::invalid_argument("QuadratureConfig: node_count must be >= 2");
        if (!(rel_tol > 0.0)) throw std::invalid_argument("QuadratureConfig: rel_tol must be > 0");
        if (max_subdivisions < 1)
            throw std::invalid_argument("QuadratureConfig: max_subdivisions must be >= 1");
    }
};

// Nodes x_i and log of the modified weights w_i * exp(x_i), so that
// integral f = sum exp(log_weight_i) * f(x_i).
struct LaguerreRule {
    std::vector<double> nodes;
    std::vector<double> log_weights;
};

namespace detail {

inline LaguerreRule build_laguerre_rule(int n) {
    LaguerreRule rule;
    rule.nodes.resize(n);
    rule.log_weights.resize(n);
    for (int i = 0; i < n; ++i) {
        double z;
        if (i == 0)
            z = 3.0 / (1.0 + 2.4 * n);
        else if (i == 1)
            z = rule.nodes[0] + 15.0 / (1.0 + 2.5 * n);
        else {
            const double ai = i - 1;
            z = rule.nodes[i - 1] +
                ((1.0 + 2.55 * ai) / (1.9 * ai)) * (rule.nodes[i - 1] - rule.nodes[i - 2]);
        }
        double p1 = 0.0, p2 = 0.0, log_scale = 0.0;
        for (int iter = 0; iter < 200; ++iter) {
            // Laguerre recurrence with running rescale; values overflow for n ~ 200 otherwise.
            p1 = 1.0;
            p2 = 0.0;
            log_scale = 0.0;
            for (int j = 1; j <= n; ++j) {
                const double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j - 1.0 - z) * p2 - (j - 1.0) * p3) / j;
                if (std::fabs(p1) > 1e100) {
                    p1 *= 1e-100;
                    p2 *= 1e-100;
                    log_scale += 100.0 * std::log(10.0);
                }
            }
            const double pp = n * (p1 - p2) / z;
            const double z_old = z;
            z = z_old - p1 / pp;
            if (std::fabs(z - z_old) <= 1e-14 * std::max(1.0, std::fabs(z))) break;
        }
        // one more recurrence pass at the converged node for the weight
        p1 = 1.0;
        p2 = 0.0;
        log_scale = 0.0;
        for (int j = 1; j <= n; ++j) {
            const double p3 = p2;
            p2 = p1;
            p1 = ((2.0 * j - 1.0 - z) * p2 - (j - 1.0) * p3) / j;
            if (std::fabs(p1) > 1e100) {
                p1 *= 1e-100;
                p2 *= 1e-100;
                log_scale += 100.0 * std::log(10.0);
            }
        }
        const double pp = n * (p1 - p2) / z;
        // w_i = -1 / (pp * n * L_{n-1}); fold in exp(x_i) and work in logs
        rule.nodes[i] = z;
        rule.log_weights[i] =
            z - (std::log(static_cast<double>(n)) + std::log(std::fabs(pp)) +
                 std::log(std::fabs(p2)) + 2.0 * log_scale);
    }
    return rule;
}

} // namespace detail

inline const LaguerreRule& gauss_laguerre_rule(int n) {
    static std::map<int, LaguerreRule> cache;
    static std::mutex mutex;
    std::lock_guard<std::mutex> lock(mutex);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, detail::build_laguerre_rule(n)).first;
    return it->second;
}

namespace detail {

// 15-point Kronrod / 7-point Gauss pair on [-1, 1].
inline constexpr double gk_nodes[8] = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144838258730, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
inline constexpr double gk_weights_k[8] = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
inline constexpr double gk_weights_g[4] = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

template <class F>
inline void gauss_kronrod_15(const F& f, double a, double b, double& value, double& error) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double fv[15];
    for (int i = 0; i < 7; ++i) {
        fv[i] = f(center - half * gk_nodes[i]);
        fv[14 - i] = f(center + half * gk_nodes[i]);
    }
    fv[7] = f(center);
    double result_k = 0.0, result_g = 0.0;
    for (int i = 0; i < 7; ++i) result_k += gk_weights_k[i] * (fv[i] + fv[14 - i]);
    result_k += gk_weights_k[7] * fv[7];
    for (int i = 0; i < 3; ++i) result_g += gk_weights_g[i] * (fv[2 * i + 1] + fv[13 - 2 * i]);
    result_g += gk_weights_g[3] * fv[7];
    value = result_k * half;
    error = std::fabs((result_k - result_g) * half);
}

// Adaptive bisection driven by the Kronrod error estimate.
template <class F>
inline double adaptive_integrate(const F& f, double a, double b, double rel_tol,
                                 int max_subdivisions) {
    struct Interval {
        double a, b, value, error;
    };
    double value0, error0;
    gauss_kronrod_15(f, a, b, value0, error0);
    std::vector<Interval> intervals{{a, b, value0, error0}};
    int subdivisions = 0;
    while (true) {
        double total = 0.0, total_err = 0.0;
        std::size_t worst = 0;
        double worst_err = -1.0;
        for (std::size_t i = 0; i < intervals.size(); ++i) {
            total += intervals[i].value;
            total_err += intervals[i].error;
            if (intervals[i].error > worst_err) {
                worst_err = intervals[i].error;
                worst = i;
            }
        }
        const double target = rel_tol * std::max(std::fabs(total), 1e-300);
        if (total_err <= target) return total;
        if (++subdivisions > max_subdivisions)
            throw QuadratureError("adaptive quadrature: subdivision budget exhausted");
        const Interval cur = intervals[worst];
        const double mid = 0.5 * (cur.a + cur.b);
        Interval left{cur.a, mid, 0.0, 0.0}, right{mid, cur.b, 0.0, 0.0};
        gauss_kronrod_15(f, left.a, left.b, left.value, left.error);
        gauss_kronrod_15(f, right.a, right.b, right.value, right.error);
        intervals[worst] = left;
        intervals.push_back(right);
    }
}

// Scan the log-axis for the region that carries all of the integrand mass.
// `magnitude` must return log |g(v)| (or -inf).
template <class F>
inline bool scan_support(const F& magnitude, double& lo, double& hi) {
    constexpr double v_min = -700.0, v_max = 700.0, step = 1.0;
    double peak = neg_inf;
    for (double v = v_min; v <= v_max; v += step) peak = std::max(peak, magnitude(v));
    if (peak == neg_inf) return false;
    const double cutoff = peak - 55.0;
    lo = v_max;
    hi = v_min;
    for (double v = v_min; v <= v_max; v += step) {
        if (magnitude(v) > cutoff) {
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
    }
    lo = std::max(lo - 2.0, v_min);
    hi = std::min(hi + 2.0, v_max);
    return true;
}

} // namespace detail

// integral_0^inf f(u) du by adaptive quadrature on v = log u.
inline double integrate_half_line_adaptive(const std::function<double(double)>& f,
                                           const QuadratureConfig& cfg) {
    auto g = [&f](double v) { return f(std::exp(v)) * std::exp(v); };
    auto magnitude = [&g](double v) {
        const double gv = g(v);
        if (std::isnan(gv)) throw QuadratureError("integrand returned NaN");
        return gv == 0.0 ? neg_inf : std::log(std::fabs(gv));
    };
    double lo, hi;
    if (!detail::scan_support(magnitude, lo, hi)) return 0.0;
    return detail::adaptive_integrate(g, lo, hi, cfg.rel_tol, cfg.max_subdivisions);
}

// log of integral_0^inf exp(log_f(u)) du, all assembly done in log space.
inline double integrate_half_line_log_adaptive(const std::function<double(double)>& log_f,
                                               const QuadratureConfig& cfg) {
    auto phi = [&log_f](double v) {
        const double lf = log_f(std::exp(v));
        if (std::isnan(lf)) throw QuadratureError("log-integrand returned NaN");
        return lf + v;
    };
    double lo, hi;
    if (!detail::scan_support(phi, lo, hi)) return neg_inf;
    double shift = neg_inf;
    for (double v = lo; v <= hi; v += 0.5) shift = std::max(shift, phi(v));
    auto g = [&phi, shift](double v) { return std::exp(phi(v) - shift); };
    const double value = detail::adaptive_integrate(g, lo, hi, cfg.rel_tol, cfg.max_subdivisions);
    if (!(value > 0.0)) return neg_inf;
    return shift + std::log(value);
}

namespace detail {

template <class F>
inline double laguerre_sum(const F& f, int n) {
    const LaguerreRule& rule = gauss_laguerre_rule(n);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) acc += std::exp(rule.log_weights[i]) * f(rule.nodes[i]);
    return acc;
}

template <class F>
inline double laguerre_log_sum(const F& log_f, int n) {
    const LaguerreRule& rule = gauss_laguerre_rule(n);
    std::vector<double> terms(n);
    for (int i = 0; i < n; ++i) terms[i] = rule.log_weights[i] + log_f(rule.nodes[i]);
    return log_sum_exp(terms);
}

inline bool close_enough(double a, double b, double rel_tol) {
    const double scale = std::max({std::fabs(a), std::fabs(b), 1e-300});
    return std::fabs(a - b) <= rel_tol * scale;
}

} // namespace detail

// integral_0^inf f(u) du. The Laguerre route cross-checks node_count against
// 1.5 * node_count; disagreement beyond rel_tol falls back to the adaptive rule
// (small gamma shapes put an integrable singularity at 0 that Laguerre misses).
inline double integrate_half_line(const std::function<double(double)>& f,
                                  const QuadratureConfig& cfg = {}) {
    cfg.validate();
    if (cfg.method == QuadratureConfig::Method::gauss_laguerre) {
        const double coarse = detail::laguerre_sum(f, cfg.node_count);
        const double fine = detail::laguerre_sum(f, cfg.node_count + cfg.node_count / 2);
        if (detail::close_enough(coarse, fine, cfg.rel_tol)) return fine;
    }
    return integrate_half_line_adaptive(f, cfg);
}

// log-space variant: returns log of integral_0^inf exp(log_f(u)) du.
inline double integrate_half_line_log(const std::function<double(double)>& log_f,
                                      const QuadratureConfig& cfg = {}) {
    cfg.validate();
    if (cfg.method == QuadratureConfig::Method::gauss_laguerre) {
        const double coarse = detail::laguerre_log_sum(log_f, cfg.node_count);
        const double fine = detail::laguerre_log_sum(log_f, cfg.node_count + cfg.node_count / 2);
        if (std::isfinite(coarse) && std::isfinite(fine) &&
            std::fabs(std::expm1(fine - coarse)) <= cfg.rel_tol)
            return fine;
    }
    return integrate_half_line_log_adaptive(log_f, cfg);
}

} // namespace kinbm
