#include <catch2/catch.hpp>

#include <cmath>
#include <map>
#include <vector>

#include <json.hpp>

#include "kinbm/distributions.hpp"
#include "kinbm/reference_fixtures.hpp"
#include "test_oracles.hpp"

using namespace kinbm;

namespace {

// chi-square goodness of fit of sampled counts against a pmf; cells with
// expected mass below 5 are merged into the tail
double gof_p_value(const std::vector<int>& sample, const KinbmParams& params) {
    const std::size_t n = sample.size();
    int y_hi = 0;
    for (int v : sample) y_hi = std::max(y_hi, v);
    std::vector<double> expected;
    std::vector<long> observed;
    std::map<int, long> counts;
    for (int v : sample) ++counts[v];
    double tail_exp = static_cast<double>(n);
    long tail_obs = static_cast<long>(n);
    for (int y = 0; y <= y_hi + 1; ++y) {
        const double e = n * kinbm_pmf(y, params);
        if (tail_exp - e < 5.0 || e < 5.0) break;
        expected.push_back(e);
        const long o = counts.count(y) ? counts[y] : 0;
        observed.push_back(o);
        tail_exp -= e;
        tail_obs -= o;
    }
    expected.push_back(tail_exp);
    observed.push_back(tail_obs);
    double stat = 0.0;
    for (std::size_t c = 0; c < expected.size(); ++c) {
        const double d = observed[c] - expected[c];
        stat += d * d / expected[c];
    }
    return chi_square_sf(stat, static_cast<double>(expected.size() - 1));
}

} // namespace

TEST_CASE("pmf: pure inflation and the hand-evaluated mixture", "[distributions]") {
    KinbmParams pure(4, {1.0, 0.0}, {2.0}, {3.0});
    CHECK(kinbm_log_pmf(4, pure) == Approx(0.0).margin(1e-15));
    CHECK(kinbm_log_pmf(3, pure) == neg_inf);

    KinbmParams p(1, {0.3, 0.7}, {2.0}, {3.0});
    // 0.3 + 0.7 * C(2,1) * (3/5)^2 * (2/5) = 0.5016
    CHECK(kinbm_log_pmf(1, p) == Approx(std::log(0.5016)).epsilon(1e-13));
    CHECK(kinbm_pmf(0, p) == Approx(0.7 * 0.36).epsilon(1e-13));

    // Monte Carlo cross-check of the same cell
    const auto sample = kinbm_sample(1000000, p, 97);
    long hits = 0;
    for (int v : sample) hits += (v == 1);
    CHECK(static_cast<double>(hits) / sample.size() == Approx(0.5016).margin(0.002));
}

TEST_CASE("mean: closed form vs truncated summation", "[distributions]") {
    KinbmParams pure(4, {1.0, 0.0}, {2.0}, {3.0});
    CHECK(kinbm_mean(pure) == Approx(4.0).margin(1e-12));

    KinbmParams p(1, {0.3, 0.7}, {2.0}, {3.0});
    CHECK(kinbm_mean(p) == Approx(0.3 + 0.7 * 4.0 / 3.0).epsilon(1e-13));

    auto truncated_mean = [](const KinbmParams& q) {
        double m = 0.0;
        for (int y = 0; y <= 500; ++y) m += y * kinbm_pmf(y, q);
        return m;
    };
    CHECK(kinbm_mean(p) == Approx(truncated_mean(p)).epsilon(1e-10));

    // published fixture values read literally; consistency of the two routes
    // is all that is asserted
    const KinbmParams fixture = fixtures::one_inflated_nbm1_dist_raw();
    CHECK(kinbm_mean(fixture) == Approx(truncated_mean(fixture)).epsilon(1e-10));
}

TEST_CASE("mgf: normalization, atom case, truncated-series oracle", "[distributions]") {
    KinbmParams p(1, {0.3, 0.7}, {2.0}, {3.0});
    CHECK(kinbm_mgf(0.0, p) == Approx(1.0).epsilon(1e-14));

    KinbmParams pure(2, {1.0, 0.0}, {2.0}, {3.0});
    CHECK(kinbm_mgf(0.1, pure) == Approx(std::exp(0.2)).epsilon(1e-14));

    double series = 0.0;
    for (int y = 0; y <= 400; ++y) series += std::exp(0.05 * y) * kinbm_pmf(y, p);
    CHECK(kinbm_mgf(0.05, p) == Approx(series).epsilon(1e-10));

    // outside the convergence radius log((a+t)/a) = log(5/2)
    CHECK_THROWS_AS(kinbm_mgf(std::log(2.5) + 0.01, p), std::domain_error);
}

TEST_CASE("mgf derivative at zero equals the mean", "[distributions]") {
    for (auto params : {KinbmParams(1, {0.3, 0.7}, {2.0}, {3.0}),
                        KinbmParams(0, {0.1, 0.5, 0.4}, {1.2, 6.0}, {2.0, 9.0})}) {
        const double h = 1e-5;
        const double deriv = (kinbm_mgf(h, params) - kinbm_mgf(-h, params)) / (2.0 * h);
        CHECK(deriv == Approx(kinbm_mean(params)).epsilon(1e-5));
    }
}

TEST_CASE("cdf: summation oracle, increments, total mass", "[distributions]") {
    KinbmParams p(1, {0.3, 0.7}, {2.0}, {3.0});
    double cum = 0.0;
    for (int r = 0; r <= 50; ++r) {
        cum += kinbm_pmf(r, p);
        CHECK(kinbm_cdf(r, p) == Approx(cum).margin(1e-10));
        if (r > 0)
            CHECK(kinbm_cdf(r, p) - kinbm_cdf(r - 1, p) == Approx(kinbm_pmf(r, p)).margin(1e-10));
    }
    CHECK(kinbm_cdf(10000, p) == Approx(1.0).margin(1e-9));

    KinbmParams pure(3, {1.0, 0.0}, {2.0}, {3.0});
    CHECK(kinbm_cdf(2, pure) == 0.0);
    CHECK(kinbm_cdf(3, pure) == Approx(1.0).margin(1e-14));
}

TEST_CASE("pmf sums to one over the effective support", "[distributions]") {
    for (auto params : {KinbmParams(1, {0.3, 0.7}, {2.0}, {3.0}),
                        KinbmParams(2, {0.15, 0.5, 0.35}, {0.4, 7.0}, {0.9, 3.0}),
                        fixtures::one_inflated_nbm1_dist()}) {
        double total = 0.0;
        int y = 0;
        for (; y < 100000; ++y) {
            const double q = kinbm_pmf(y, params);
            CHECK(q >= 0.0);
            total += q;
            if (kinbm_cdf(y, params) >= 1.0 - 1e-12) break;
        }
        CHECK(total >= 1.0 - 1e-9);
    }
}

TEST_CASE("mixing representation: integral of inflated Poisson against the gamma mixture",
          "[distributions][mixing]") {
    Rng rng(1234);
    for (int trial = 0; trial < 10; ++trial) {
        const int m_nb = 1 + static_cast<int>(rng.uniform() * 2.0);
        const int k = static_cast<int>(rng.uniform() * 3.0);
        const double p = 0.5 * rng.uniform();
        std::vector<double> phi(m_nb), shape(m_nb), grate(m_nb);
        double s = 0.0;
        for (int j = 0; j < m_nb; ++j) {
            phi[j] = 0.2 + rng.uniform();
            s += phi[j];
            shape[j] = 0.3 + 7.0 * rng.uniform();
            grate[j] = 0.3 + 4.0 * rng.uniform();
        }
        for (double& v : phi) v /= s;
        const KinbmParams params = kinbm_from_poisson_gamma_mixture(k, p, phi, shape, grate);
        for (int y = 0; y <= 20; ++y) {
            long double integral = 0.0L;
            for (int j = 0; j < m_nb; ++j) {
                auto f = [&, j](long double lam) {
                    const long double log_pois =
                        -lam + y * std::log(lam) -
                        static_cast<long double>(oracle::log_gamma_reference(y + 1.0L));
                    const long double log_gam =
                        shape[j] * std::log((long double)grate[j]) +
                        (shape[j] - 1.0L) * std::log(lam) - grate[j] * lam -
                        oracle::log_gamma_reference(shape[j]);
                    return std::exp(log_pois + log_gam);
                };
                integral += phi[j] * oracle::integrate_half_line(f);
            }
            const double expected = (y == k ? p : 0.0) + (1.0 - p) * static_cast<double>(integral);
            CHECK(kinbm_pmf(y, params) == Approx(expected).margin(1e-6));
        }
    }
}

TEST_CASE("sampler: reproducibility and goodness of fit", "[distributions][sampler]") {
    KinbmParams p(1, {0.3, 0.7}, {2.0}, {3.0});
    const auto a = kinbm_sample(5000, p, 7);
    const auto b = kinbm_sample(5000, p, 7);
    CHECK(a == b);
    const auto c = kinbm_sample(5000, p, 8);
    CHECK(a != c);

    CHECK(gof_p_value(kinbm_sample(1000000, p, 13), p) > 0.01);

    KinbmParams pure(2, {1.0, 0.0}, {2.0}, {3.0});
    for (int v : kinbm_sample(100, pure, 3)) CHECK(v == 2);
}

TEST_CASE("replicate frequency diagnostic on the published fixture", "[distributions][.slow]") {
    const KinbmParams params = fixtures::one_inflated_nbm1_dist();
    std::map<int, double> mean_freq;
    const int reps = 200;
    for (int rep = 0; rep < reps; ++rep) {
        const auto sample = kinbm_sample(8874, params, Rng(555, rep).next_u64());
        for (int v : sample) mean_freq[std::min(v, 7)] += 1.0 / reps;
    }
    double total = 0.0;
    for (auto [cell, freq] : mean_freq) total += freq;
    CHECK(total == Approx(8874.0).margin(1e-6));
    WARN("mean simulated frequencies (cells 0..6, >6): "
         << [&] {
                std::string s;
                for (int cell = 0; cell <= 7; ++cell)
                    s += std::to_string(mean_freq.count(cell) ? mean_freq[cell] : 0.0) + " ";
                return s;
            }());
}

TEST_CASE("mixture gamma density", "[distributions]") {
    MixGammaParams expo({1.0}, {1.0});
    for (double u : {0.1, 1.0, 3.7}) CHECK(mix_gamma_pdf(u, expo) == Approx(std::exp(-u)).epsilon(1e-13));

    // frozen from a term-by-term oracle evaluation
    MixGammaParams two({0.4, 0.6}, {2.0, 5.0});
    CHECK(mix_gamma_pdf(1.3, two) == Approx(0.4899556582376304609).epsilon(1e-12));

    for (double a : {0.5, 3.0, 20.0}) {
        MixGammaParams single({1.0}, {a});
        auto f = [&single](long double u) {
            return (long double)mix_gamma_pdf(static_cast<double>(u), single);
        };
        CHECK(static_cast<double>(oracle::integrate_half_line(f)) == Approx(1.0).margin(1e-9));
    }
    CHECK_THROWS_AS(mix_gamma_pdf(0.0, expo), std::domain_error);
}

TEST_CASE("Pareto mixture density and moments", "[distributions]") {
    ParetoMixParams m1({1.0}, {1.871}, {16.44});
    CHECK(pareto_mix_pdf(0.0, m1) == Approx(1.871 / 16.44).epsilon(1e-12)); // 0.1138

    ParetoMixParams m2({0.5, 0.5}, {2.0, 3.0}, {1.0, 2.0});
    // 0.5*2*1/(2.5)^3 + 0.5*3*8/(3.5)^4
    const double hand = 0.5 * 2.0 / std::pow(2.5, 3) + 0.5 * 3.0 * 8.0 / std::pow(3.5, 4);
    CHECK(pareto_mix_pdf(1.5, m2) == Approx(hand).epsilon(1e-12));

    auto f = [&m2](long double z) {
        return (long double)pareto_mix_pdf(static_cast<double>(z), m2);
    };
    CHECK(static_cast<double>(oracle::integrate_half_line(f)) == Approx(1.0).margin(1e-9));
    CHECK_THROWS_AS(pareto_mix_pdf(-0.5, m2), std::domain_error);
}

TEST_CASE("Pareto mixture sampler", "[distributions][sampler]") {
    ParetoMixParams unit({1.0}, {2.0}, {1.0});
    const auto s = pareto_mix_sample(1000000, unit, 31);
    double mean = 0.0;
    for (double z : s) mean += z;
    mean /= s.size();
    CHECK(mean == Approx(1.0).epsilon(0.01)); // gamma/(alpha-1)

    ParetoMixParams fitted = fixtures::pareto_m1_dist();
    const auto s2 = pareto_mix_sample(1000000, fitted, 32);
    double mean2 = 0.0;
    for (double z : s2) mean2 += z;
    mean2 /= s2.size();
    CHECK(mean2 == Approx(16.44 / 0.871).epsilon(0.03));

    // Kolmogorov-Smirnov against the analytic CDF
    ParetoMixParams mix({0.6, 0.4}, {2.2, 4.0}, {1.5, 3.0});
    auto sample = pareto_mix_sample(20000, mix, 33);
    std::sort(sample.begin(), sample.end());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double fz = pareto_mix_cdf(sample[i], mix);
        d = std::max(d, std::fabs(fz - static_cast<double>(i) / sample.size()));
        d = std::max(d, std::fabs(static_cast<double>(i + 1) / sample.size() - fz));
    }
    const double lambda = (std::sqrt(20000.0) + 0.12 + 0.11 / std::sqrt(20000.0)) * d;
    double p_ks = 0.0;
    for (int j = 1; j <= 100; ++j)
        p_ks += 2.0 * ((j % 2 == 1) ? 1.0 : -1.0) * std::exp(-2.0 * j * j * lambda * lambda);
    CHECK(p_ks > 0.01);

    CHECK(pareto_mix_sample(100, mix, 5) == pareto_mix_sample(100, mix, 5));
}

TEST_CASE("inverse gamma mixture density", "[distributions]") {
    for (double eta : {1.5, 2.0, 5.0}) {
        InvGammaMixParams single({1.0}, {eta});
        auto f = [&single](long double u) {
            return (long double)inv_gamma_mix_pdf(static_cast<double>(u), single);
        };
        CHECK(static_cast<double>(oracle::integrate_half_line(f)) == Approx(1.0).margin(1e-8));
    }
    for (double eta : {2.5, 5.0, 12.0}) {
        InvGammaMixParams single({1.0}, {eta});
        auto f = [&single](long double u) {
            return u * (long double)inv_gamma_mix_pdf(static_cast<double>(u), single);
        };
        CHECK(static_cast<double>(oracle::integrate_half_line(f)) == Approx(1.0).margin(1e-8));
    }
    InvGammaMixParams ig({1.0}, {3.0});
    // frozen oracle value of (eta-1)^eta u^(-eta-1) e^(-(eta-1)/u) / Gamma(eta)
    CHECK(inv_gamma_mix_pdf(0.8, ig) == Approx(0.80161131468651167158).epsilon(1e-12));
    CHECK_THROWS_AS(InvGammaMixParams({1.0}, {0.9}), std::invalid_argument);
}

TEST_CASE("parameter validation, renormalization, canonical order", "[distributions][params]") {
    // printed weights that sum to 0.997 are renormalized
    KinbmParams fx = fixtures::one_inflated_nbm1_dist_raw();
    CHECK(fx.weights[0] + fx.weights[1] == Approx(1.0).margin(1e-12));
    CHECK(fx.weights[0] == Approx(0.136 / 0.997).epsilon(1e-12));

    CHECK_THROWS_AS(KinbmParams(1, {0.5, 0.3}, {2.0}, {3.0}), std::invalid_argument);
    CHECK_THROWS_AS(KinbmParams(1, {0.3, 0.7}, {-2.0}, {3.0}), std::invalid_argument);
    CHECK_THROWS_AS(KinbmParams(-1, {0.3, 0.7}, {2.0}, {3.0}), std::invalid_argument);

    KinbmParams unsorted(0, {0.2, 0.5, 0.3}, {6.0, 1.5}, {2.0, 4.0});
    CHECK(unsorted.shapes[0] == 1.5);
    CHECK(unsorted.shapes[1] == 6.0);
    CHECK(unsorted.rates[0] == 4.0);
    CHECK(unsorted.weights[1] == 0.3);

    ParetoMixParams reg = ParetoMixParams::regression_form({1.0}, {2.5});
    CHECK(reg.scales[0] == Approx(1.5));
    CHECK_THROWS_AS(ParetoMixParams::regression_form({1.0}, {0.9}), std::invalid_argument);
}

TEST_CASE("JSON round trips are bit-faithful", "[distributions][json]") {
    Rng rng(2024);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> w{rng.uniform(), rng.uniform(), rng.uniform()};
        double s = w[0] + w[1] + w[2];
        for (double& v : w) v /= s;
        KinbmParams p(trial % 4, w, {0.2 + 5.0 * rng.uniform(), 0.2 + 5.0 * rng.uniform()},
                      {0.1 + 9.0 * rng.uniform(), 0.1 + 9.0 * rng.uniform()});
        const nlohmann::json j = p;
        const KinbmParams q = j.get<KinbmParams>();
        CHECK(q.k == p.k);
        CHECK(q.weights == p.weights);
        CHECK(q.shapes == p.shapes);
        CHECK(q.rates == p.rates);
        // string round trip as well
        const KinbmParams r = nlohmann::json::parse(j.dump()).get<KinbmParams>();
        CHECK(r.weights == p.weights);
        CHECK(r.rates == p.rates);
    }

    // 17-significant-digit decimal strings survive parse -> dump -> parse
    const std::string text = R"({"version":"kinbm-params-v1","type":"kinbm","k":1,
        "weights":[0.12345678901234567,0.87654321098765433],
        "shapes":[1.2345678901234567],"rates":[9.8765432109876545]})";
    const KinbmParams a = nlohmann::json::parse(text).get<KinbmParams>();
    const KinbmParams b = nlohmann::json::parse(nlohmann::json(a).dump()).get<KinbmParams>();
    CHECK(a.weights == b.weights);
    CHECK(a.shapes == b.shapes);
    CHECK(a.rates == b.rates);

    const nlohmann::json pj = ParetoMixParams({0.4, 0.6}, {1.9, 3.3}, {16.44, 2.0});
    const auto pq = pj.get<ParetoMixParams>();
    CHECK(pq.tail_indices == std::vector<double>{1.9, 3.3});
    const nlohmann::json untagged{{"type", "kinbm"}};
    CHECK_THROWS_AS(untagged.get<KinbmParams>(), std::invalid_argument);
}
