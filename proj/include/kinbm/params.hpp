// Parameter sets for the count and severity distributions. Constructors
// validate, renormalize nearly-normalized weight vectors (published estimates
// are rounded), and order mixture components by ascending shape so fitted
// models are comparable across runs despite label switching.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace kinbm {

inline constexpr const char* params_version_tag = "kinbm-params-v1";

namespace detail {

inline bool logging_enabled() {
    static const bool enabled = [] {
        const char* v = std::getenv("KINBM_LOG");
        return v != nullptr && *v != '\0' && std::string(v) != "0" && std::string(v) != "silent";
    }();
    return enabled;
}

inline void log_note(const std::string& msg) {
    if (logging_enabled()) std::clog << "[kinbm] " << msg << '\n';
}

// Accepts sums within 1e-2 of one (rounded published values), rescales
// anything beyond 1e-9, rejects worse violations.
inline void normalize_weights(std::vector<double>& w, const char* who) {
    double sum = 0.0;
    for (double v : w) {
        if (v < 0.0) throw std::invalid_argument(std::string(who) + ": negative mixture weight");
        sum += v;
    }
    const double err = std::fabs(sum - 1.0);
    if (err > 1e-2)
        throw std::invalid_argument(std::string(who) + ": weights sum to " + std::to_string(sum));
    if (err > 1e-9) {
        for (double& v : w) v /= sum;
        log_note(std::string(who) + ": weights renormalized (sum was " + std::to_string(sum) + ")");
    }
}

template <class Swap>
inline void sort_components_by(std::vector<double>& key, Swap&& swap_at) {
    const std::size_t n = key.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
        std::size_t best = i;
        for (std::size_t j = i + 1; j < n; ++j)
            if (key[j] < key[best]) best = j;
        if (best != i) {
            std::swap(key[i], key[best]);
            swap_at(i, best);
        }
    }
}

inline void require_all_positive(const std::vector<double>& v, const char* who, const char* what) {
    for (double x : v)
        if (!(x > 0.0))
            throw std::invalid_argument(std::string(who) + ": " + what + " must be positive");
}

} // namespace detail

// Count distribution: an atom of mass weights[0] at the inflation point k plus
// negative binomial components with pmf
//   C(y + shape - 1, y) (rate/(shape+rate))^shape (shape/(shape+rate))^y.
struct KinbmParams {
    int k = 0;
    std::vector<double> weights; // size m, weights[0] is the atom mass
    std::vector<double> shapes;  // size m-1
    std::vector<double> rates;   // size m-1

    KinbmParams() = default;

    KinbmParams(int k_, std::vector<double> weights_, std::vector<double> shapes_,
                std::vector<double> rates_)
        : k(k_), weights(std::move(weights_)), shapes(std::move(shapes_)),
          rates(std::move(rates_)) {
        if (k < 0) throw std::invalid_argument("KinbmParams: k must be non-negative");
        if (weights.size() < 2 || shapes.size() != weights.size() - 1 ||
            rates.size() != shapes.size())
            throw std::invalid_argument("KinbmParams: inconsistent component counts");
        detail::require_all_positive(shapes, "KinbmParams", "shapes");
        detail::require_all_positive(rates, "KinbmParams", "rates");
        detail::normalize_weights(weights, "KinbmParams");
        detail::sort_components_by(shapes, [this](std::size_t i, std::size_t j) {
            std::swap(rates[i], rates[j]);
            std::swap(weights[i + 1], weights[j + 1]);
        });
    }

    int component_count() const { return static_cast<int>(weights.size()); }
    double inflation_mass() const { return weights[0]; }
};

// Finite mixture gamma in the unit-mean form: every component has rate equal
// to its shape, so E(U) = 1.
struct MixGammaParams {
    std::vector<double> weights;
    std::vector<double> shapes;

    MixGammaParams() = default;

    MixGammaParams(std::vector<double> weights_, std::vector<double> shapes_)
        : weights(std::move(weights_)), shapes(std::move(shapes_)) {
        if (weights.empty() || weights.size() != shapes.size())
            throw std::invalid_argument("MixGammaParams: inconsistent sizes");
        detail::require_all_positive(shapes, "MixGammaParams", "shapes");
        detail::normalize_weights(weights, "MixGammaParams");
        detail::sort_components_by(shapes, [this](std::size_t i, std::size_t j) {
            std::swap(weights[i], weights[j]);
        });
    }
};

// Mixture of Pareto (Lomax) components rho_j * a_j * g_j^a_j / (z + g_j)^(a_j+1).
// The regression form ties scale = tail_index - 1, which requires tail > 1.
struct ParetoMixParams {
    std::vector<double> weights;
    std::vector<double> tail_indices;
    std::vector<double> scales;

    ParetoMixParams() = default;

    ParetoMixParams(std::vector<double> weights_, std::vector<double> tail_indices_,
                    std::vector<double> scales_)
        : weights(std::move(weights_)), tail_indices(std::move(tail_indices_)),
          scales(std::move(scales_)) {
        if (weights.empty() || weights.size() != tail_indices.size() ||
            scales.size() != tail_indices.size())
            throw std::invalid_argument("ParetoMixParams: inconsistent sizes");
        detail::require_all_positive(tail_indices, "ParetoMixParams", "tail indices");
        detail::require_all_positive(scales, "ParetoMixParams", "scales");
        detail::normalize_weights(weights, "ParetoMixParams");
        detail::sort_components_by(tail_indices, [this](std::size_t i, std::size_t j) {
            std::swap(weights[i], weights[j]);
            std::swap(scales[i], scales[j]);
        });
    }

    static ParetoMixParams regression_form(std::vector<double> weights_,
                                           std::vector<double> tail_indices_) {
        for (double a : tail_indices_)
            if (!(a > 1.0))
                throw std::invalid_argument(
                    "ParetoMixParams: regression form requires tail indices > 1");
        std::vector<double> scales_(tail_indices_.size());
        for (std::size_t j = 0; j < tail_indices_.size(); ++j) scales_[j] = tail_indices_[j] - 1.0;
        return ParetoMixParams(std::move(weights_), std::move(tail_indices_), std::move(scales_));
    }

    int component_count() const { return static_cast<int>(weights.size()); }
};

// Finite mixture inverse gamma with scale tied to shape - 1, so E(U) = 1
// whenever every shape exceeds one.
struct InvGammaMixParams {
    std::vector<double> weights;
    std::vector<double> shapes; // each > 1

    InvGammaMixParams() = default;

    InvGammaMixParams(std::vector<double> weights_, std::vector<double> shapes_)
        : weights(std::move(weights_)), shapes(std::move(shapes_)) {
        if (weights.empty() || weights.size() != shapes.size())
            throw std::invalid_argument("InvGammaMixParams: inconsistent sizes");
        for (double s : shapes)
            if (!(s > 1.0)) throw std::invalid_argument("InvGammaMixParams: shapes must exceed 1");
        detail::normalize_weights(weights, "InvGammaMixParams");
        detail::sort_components_by(shapes, [this](std::size_t i, std::size_t j) {
            std::swap(weights[i], weights[j]);
        });
    }
};

// ---- JSON (de)serialization, tagged "kinbm-params-v1" -----------------------

inline void to_json(nlohmann::json& j, const KinbmParams& p) {
    j = {{"version", params_version_tag}, {"type", "kinbm"},       {"k", p.k},
         {"weights", p.weights},          {"shapes", p.shapes},    {"rates", p.rates}};
}

inline void from_json(const nlohmann::json& j, KinbmParams& p) {
    if (j.value("version", "") != params_version_tag)
        throw std::invalid_argument("KinbmParams: missing or unknown version tag");
    p = KinbmParams(j.at("k").get<int>(), j.at("weights").get<std::vector<double>>(),
                    j.at("shapes").get<std::vector<double>>(),
                    j.at("rates").get<std::vector<double>>());
}

inline void to_json(nlohmann::json& j, const MixGammaParams& p) {
    j = {{"version", params_version_tag},
         {"type", "mix_gamma"},
         {"weights", p.weights},
         {"shapes", p.shapes}};
}

inline void from_json(const nlohmann::json& j, MixGammaParams& p) {
    if (j.value("version", "") != params_version_tag)
        throw std::invalid_argument("MixGammaParams: missing or unknown version tag");
    p = MixGammaParams(j.at("weights").get<std::vector<double>>(),
                       j.at("shapes").get<std::vector<double>>());
}

inline void to_json(nlohmann::json& j, const ParetoMixParams& p) {
    j = {{"version", params_version_tag},
         {"type", "pareto_mix"},
         {"rho", p.weights},
         {"alpha", p.tail_indices},
         {"gamma", p.scales}};
}

inline void from_json(const nlohmann::json& j, ParetoMixParams& p) {
    if (j.value("version", "") != params_version_tag)
        throw std::invalid_argument("ParetoMixParams: missing or unknown version tag");
    p = ParetoMixParams(j.at("rho").get<std::vector<double>>(),
                        j.at("alpha").get<std::vector<double>>(),
                        j.at("gamma").get<std::vector<double>>());
}

inline void to_json(nlohmann::json& j, const InvGammaMixParams& p) {
    j = {{"version", params_version_tag},
         {"type", "inv_gamma_mix"},
         {"weights", p.weights},
         {"shapes", p.shapes}};
}

inline void from_json(const nlohmann::json& j, InvGammaMixParams& p) {
    if (j.value("version", "") != params_version_tag)
        throw std::invalid_argument("InvGammaMixParams: missing or unknown version tag");
    p = InvGammaMixParams(j.at("weights").get<std::vector<double>>(),
                          j.at("shapes").get<std::vector<double>>());
}

} // namespace kinbm
