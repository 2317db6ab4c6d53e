// Independent oracles used by the test suites. These deliberately avoid the
// library's own quadrature and special-function code paths: the integrator is
// a long-double adaptive Simpson rule, and the log-gamma reference is a
// shifted Stirling series.
#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace oracle {

// ln Gamma(x) by upward recurrence into the Stirling range, long double.
inline long double log_gamma_reference(long double x) {
    long double shift = 0.0L;
    while (x < 20.0L) {
        shift -= std::log(x);
        x += 1.0L;
    }
    const long double inv = 1.0L / x, inv2 = inv * inv;
    // Stirling-de Moivre with Bernoulli terms up to 1/x^9
    const long double series =
        inv * (1.0L / 12.0L +
               inv2 * (-1.0L / 360.0L +
                       inv2 * (1.0L / 1260.0L + inv2 * (-1.0L / 1680.0L + inv2 / 1188.0L))));
    return shift + 0.5L * std::log(2.0L * 3.14159265358979323846264338327950288L) +
           (x - 0.5L) * std::log(x) - x + series;
}

// recursive adaptive Simpson in long double
inline long double adaptive_simpson_impl(const std::function<long double(long double)>& f,
                                         long double a, long double b, long double fa,
                                         long double fm, long double fb, long double whole,
                                         long double tol, int depth) {
    const long double m = 0.5L * (a + b);
    const long double lm = 0.5L * (a + m), rm = 0.5L * (m + b);
    const long double flm = f(lm), frm = f(rm);
    const long double left = (m - a) / 6.0L * (fa + 4.0L * flm + fm);
    const long double right = (b - m) / 6.0L * (fm + 4.0L * frm + fb);
    if (depth <= 0) return left + right;
    if (std::fabs(left + right - whole) <= 15.0L * tol)
        return left + right + (left + right - whole) / 15.0L;
    return adaptive_simpson_impl(f, a, m, fa, flm, fm, left, 0.5L * tol, depth - 1) +
           adaptive_simpson_impl(f, m, b, fm, frm, fb, right, 0.5L * tol, depth - 1);
}

inline long double integrate(const std::function<long double(long double)>& f, long double a,
                             long double b, long double tol = 1e-14L, int depth = 60) {
    const long double fa = f(a), fb = f(b), fm = f(0.5L * (a + b));
    const long double whole = (b - a) / 6.0L * (fa + 4.0L * fm + fb);
    return adaptive_simpson_impl(f, a, b, fa, fm, fb, whole, tol, depth);
}

// integral over (0, inf) via the substitution u = exp(v), windowed around the
// peak of the transformed integrand
inline long double integrate_half_line(const std::function<long double(long double)>& f,
                                       long double tol = 1e-14L) {
    auto g = [&f](long double v) { return f(std::exp(v)) * std::exp(v); };
    long double peak = 0.0L;
    bool found = false;
    long double v_peak = 0.0L;
    for (long double v = -400.0L; v <= 400.0L; v += 0.25L) {
        const long double m = std::fabs(g(v));
        if (!found || m > peak) {
            peak = m;
            v_peak = v;
            found = m > 0.0L;
        }
    }
    if (!found || peak == 0.0L) return 0.0L;
    long double lo = v_peak, hi = v_peak;
    while (lo > -400.0L && std::fabs(g(lo)) > peak * 1e-24L) lo -= 1.0L;
    while (hi < 400.0L && std::fabs(g(hi)) > peak * 1e-24L) hi += 1.0L;
    return integrate(g, lo, hi, tol * peak, 60);
}

} // namespace oracle
