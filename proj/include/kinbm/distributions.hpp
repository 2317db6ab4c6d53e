// Evaluators, moments, and samplers for the count-inflated negative binomial
// mixture, the mixture gamma, the Pareto mixture, and the inverse gamma
// mixture. Everything likelihood-shaped is computed in log space.
#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "kinbm/params.hpp"
#include "kinbm/rng.hpp"
#include "kinbm/special_functions.hpp"

namespace kinbm {

// log pmf of one negative binomial component in the (shape, rate) form used by
// KinbmParams: C(y+a-1, y) (t/(a+t))^a (a/(a+t))^y.
inline double nb_log_pmf(int y, double shape, double rate) {
    if (y < 0) return neg_inf;
    const double log_denom = std::log(shape + rate);
    return log_gamma(y + shape) - log_gamma(shape) - log_gamma(y + 1.0) +
           shape * (std::log(rate) - log_denom) + y * (std::log(shape) - log_denom);
}

inline double kinbm_log_pmf(int y, const KinbmParams& p) {
    if (y < 0) throw std::domain_error("kinbm_log_pmf: y must be non-negative");
    std::vector<double> terms;
    terms.reserve(p.weights.size());
    if (y == p.k && p.weights[0] > 0.0) terms.push_back(std::log(p.weights[0]));
    for (std::size_t j = 0; j < p.shapes.size(); ++j)
        if (p.weights[j + 1] > 0.0)
            terms.push_back(std::log(p.weights[j + 1]) + nb_log_pmf(y, p.shapes[j], p.rates[j]));
    if (terms.empty()) return neg_inf;
    return log_sum_exp(terms);
}

inline double kinbm_pmf(int y, const KinbmParams& p) { return std::exp(kinbm_log_pmf(y, p)); }

// E(Y) = p1 k + sum_j p_j shape_j^2 / rate_j
inline double kinbm_mean(const KinbmParams& p) {
    double m = p.weights[0] * p.k;
    for (std::size_t j = 0; j < p.shapes.size(); ++j)
        m += p.weights[j + 1] * p.shapes[j] * p.shapes[j] / p.rates[j];
    return m;
}

// Moment generating function; defined for t < min_j log((shape_j+rate_j)/shape_j).
inline double kinbm_mgf(double t, const KinbmParams& p) {
    for (std::size_t j = 0; j < p.shapes.size(); ++j)
        if (p.weights[j + 1] > 0.0 &&
            !(t < std::log((p.shapes[j] + p.rates[j]) / p.shapes[j])))
            throw std::domain_error("kinbm_mgf: t outside the convergence radius");
    double m = p.weights[0] * std::exp(p.k * t);
    for (std::size_t j = 0; j < p.shapes.size(); ++j) {
        const double a = p.shapes[j], r = p.rates[j];
        m += p.weights[j + 1] * std::pow(r / (r + a * (1.0 - std::exp(t))), a);
    }
    return m;
}

// CDF through the negative binomial / incomplete beta identity
// P(NB <= r) = I_{rate/(shape+rate)}(shape, r+1); must agree with the
// cumulative pmf sum, which is the definitional form.
inline double kinbm_cdf(int r, const KinbmParams& p) {
    if (r < 0) return 0.0;
    double c = (r >= p.k) ? p.weights[0] : 0.0;
    for (std::size_t j = 0; j < p.shapes.size(); ++j) {
        const double a = p.shapes[j], t = p.rates[j];
        c += p.weights[j + 1] * regularized_incomplete_beta(t / (a + t), a, r + 1.0);
    }
    return std::min(c, 1.0);
}

// Inversion-on-weights sampler: a uniform coordinate picks the atom or a
// negative binomial component, then the component is drawn. One counter-based
// stream per draw keeps output independent of fill order.
inline std::vector<int> kinbm_sample(std::size_t n, const KinbmParams& p, std::uint64_t seed) {
    std::vector<int> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(seed, i);
        const double s = rng.uniform();
        if (s <= p.weights[0]) {
            out[i] = p.k;
            continue;
        }
        double cum = p.weights[0];
        std::size_t j = 0;
        for (; j + 1 < p.shapes.size(); ++j) {
            cum += p.weights[j + 1];
            if (s <= cum) break;
        }
        out[i] = rng.negative_binomial(p.shapes[j], p.rates[j]);
    }
    return out;
}

// ---- mixture gamma (unit mean, rate = shape) --------------------------------

inline double mix_gamma_pdf(double u, const MixGammaParams& p) {
    if (!(u > 0.0)) throw std::domain_error("mix_gamma_pdf: u must be positive");
    double v = 0.0;
    for (std::size_t j = 0; j < p.shapes.size(); ++j) {
        const double a = p.shapes[j];
        v += p.weights[j] *
             std::exp((a - 1.0) * std::log(u) + a * std::log(a) - a * u - log_gamma(a));
    }
    return v;
}

inline double mix_gamma_log_pdf(double u, const MixGammaParams& p) {
    if (!(u > 0.0)) throw std::domain_error("mix_gamma_log_pdf: u must be positive");
    std::vector<double> terms(p.shapes.size());
    for (std::size_t j = 0; j < p.shapes.size(); ++j) {
        const double a = p.shapes[j];
        terms[j] = (p.weights[j] > 0.0 ? std::log(p.weights[j]) : neg_inf) +
                   (a - 1.0) * std::log(u) + a * std::log(a) - a * u - log_gamma(a);
    }
    return log_sum_exp(terms);
}

// draws (component index, u)
inline std::pair<int, double> mix_gamma_sample_one(const MixGammaParams& p, Rng& rng) {
    const double s = rng.uniform();
    double cum = 0.0;
    std::size_t j = 0;
    for (; j + 1 < p.shapes.size(); ++j) {
        cum += p.weights[j];
        if (s <= cum) break;
    }
    return {static_cast<int>(j), rng.gamma(p.shapes[j], p.shapes[j])};
}

// ---- Pareto mixture ----------------------------------------------------------

// Density sum_j rho_j a_j g_j^a_j / (z + g_j)^(a_j + 1); finite at z = 0.
inline double pareto_mix_pdf(double z, const ParetoMixParams& p) {
    if (!(z >= 0.0)) throw std::domain_error("pareto_mix_pdf: z must be non-negative");
    double v = 0.0;
    for (std::size_t j = 0; j < p.weights.size(); ++j) {
        const double a = p.tail_indices[j], g = p.scales[j];
        v += p.weights[j] * std::exp(std::log(a) + a * std::log(g) - (a + 1.0) * std::log(z + g));
    }
    return v;
}

inline double pareto_mix_cdf(double z, const ParetoMixParams& p) {
    if (z <= 0.0) return 0.0;
    double c = 0.0;
    for (std::size_t j = 0; j < p.weights.size(); ++j) {
        const double a = p.tail_indices[j], g = p.scales[j];
        c += p.weights[j] * (1.0 - std::pow(g / (z + g), a));
    }
    return c;
}

// mean = sum_j rho_j g_j / (a_j - 1); requires every tail index > 1
inline double pareto_mix_mean(const ParetoMixParams& p) {
    double m = 0.0;
    for (std::size_t j = 0; j < p.weights.size(); ++j) {
        if (!(p.tail_indices[j] > 1.0))
            throw std::domain_error("pareto_mix_mean: undefined for tail index <= 1");
        m += p.weights[j] * p.scales[j] / (p.tail_indices[j] - 1.0);
    }
    return m;
}

// component by weights, then inverse CDF z = g ((1-u)^(-1/a) - 1)
inline std::vector<double> pareto_mix_sample(std::size_t n, const ParetoMixParams& p,
                                             std::uint64_t seed) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(seed, i);
        const double s = rng.uniform();
        double cum = 0.0;
        std::size_t j = 0;
        for (; j + 1 < p.weights.size(); ++j) {
            cum += p.weights[j];
            if (s <= cum) break;
        }
        const double u = rng.uniform();
        out[i] = p.scales[j] * (std::pow(1.0 - u, -1.0 / p.tail_indices[j]) - 1.0);
    }
    return out;
}

// ---- inverse gamma mixture (scale = shape - 1, unit mean) --------------------

inline double inv_gamma_mix_pdf(double u, const InvGammaMixParams& p) {
    if (!(u > 0.0)) throw std::domain_error("inv_gamma_mix_pdf: u must be positive");
    double v = 0.0;
    for (std::size_t j = 0; j < p.shapes.size(); ++j) {
        const double e = p.shapes[j], s = e - 1.0;
        v += p.weights[j] *
             std::exp(e * std::log(s) - (e + 1.0) * std::log(u) - s / u - log_gamma(e));
    }
    return v;
}

// draws (component index, u); u = 1 / Gamma(shape, rate = shape - 1)
inline std::pair<int, double> inv_gamma_mix_sample_one(const InvGammaMixParams& p, Rng& rng) {
    const double s = rng.uniform();
    double cum = 0.0;
    std::size_t j = 0;
    for (; j + 1 < p.shapes.size(); ++j) {
        cum += p.weights[j];
        if (s <= cum) break;
    }
    return {static_cast<int>(j), 1.0 / rng.gamma(p.shapes[j], p.shapes[j] - 1.0)};
}

// ---- mixing representation ---------------------------------------------------

// A k-inflated Poisson with rate mixed over a finite gamma mixture
// (shape_j, gamma_rate_j) is the same count distribution as KinbmParams with
// component rate = shape_j * gamma_rate_j.
inline KinbmParams kinbm_from_poisson_gamma_mixture(int k, double inflation_mass,
                                                    std::vector<double> mix_weights,
                                                    std::vector<double> shapes,
                                                    std::vector<double> gamma_rates) {
    if (!(inflation_mass >= 0.0 && inflation_mass <= 1.0))
        throw std::invalid_argument("kinbm_from_poisson_gamma_mixture: bad inflation mass");
    if (mix_weights.size() != shapes.size() || shapes.size() != gamma_rates.size())
        throw std::invalid_argument("kinbm_from_poisson_gamma_mixture: inconsistent sizes");
    detail::normalize_weights(mix_weights, "kinbm_from_poisson_gamma_mixture");
    std::vector<double> weights(mix_weights.size() + 1);
    std::vector<double> rates(shapes.size());
    weights[0] = inflation_mass;
    for (std::size_t j = 0; j < shapes.size(); ++j) {
        weights[j + 1] = (1.0 - inflation_mass) * mix_weights[j];
        rates[j] = shapes[j] * gamma_rates[j];
    }
    return KinbmParams(k, std::move(weights), std::move(shapes), std::move(rates));
}

} // namespace kinbm
