#include <catch2/catch.hpp>

#include <cmath>
#include <vector>

#include "kinbm/distributions.hpp"
#include "kinbm/model_selection.hpp"

using namespace kinbm;

namespace {

FitResult synthetic_fit(const std::string& family, double loglik, int df, int n_obs) {
    FitResult fit;
    fit.family = family;
    fit.params = KinbmParams(0, {0.0, 1.0}, {1.0}, {1.0});
    fit.loglik_trace = {loglik};
    fit.df = df;
    fit.n_obs = n_obs;
    fit.converged = true;
    fit.iterations = 1;
    return fit;
}

} // namespace

TEST_CASE("information criteria arithmetic", "[selection]") {
    CHECK(aic(synthetic_fit("a", 0.0, 3, 100)) == Approx(6.0));
    // ln(e^2) = 2 gives SBIC = 6 when n = e^2
    FitResult near_e2 = synthetic_fit("a", 0.0, 3, 100);
    near_e2.n_obs = 7; // closest integer to e^2
    CHECK(sbic(near_e2) == Approx(3.0 * std::log(7.0)));
    CHECK(sbic(synthetic_fit("a", 0.0, 3, 100)) == Approx(3.0 * std::log(100.0)));
    CHECK(aic(synthetic_fit("b", -5321.0, 7, 8874)) == Approx(2.0 * 5321.0 + 14.0));
}

TEST_CASE("likelihood ratio test basics", "[selection][lr]") {
    const FitResult nested = synthetic_fit("nested", -5000.0, 3, 8874);
    const FitResult same = synthetic_fit("full", -5000.0, 5, 8874);
    const ComparisonReport equal = lr_test(nested, same);
    CHECK(equal.statistic == Approx(0.0));
    CHECK(equal.p_value == Approx(1.0));
    CHECK(equal.winner == "nested");

    // a statistic of 105 at one degree of freedom is decisive
    const FitResult big = synthetic_fit("full", -5000.0 + 52.5, 4, 8874);
    const ComparisonReport decisive = lr_test(nested, big);
    CHECK(decisive.statistic == Approx(105.0));
    CHECK(decisive.p_value < 1e-20);
    CHECK(decisive.winner == "full");

    CHECK_THROWS_AS(lr_test(same, nested), std::invalid_argument); // df order
    const FitResult other_n = synthetic_fit("full", -4000.0, 5, 100);
    CHECK_THROWS_AS(lr_test(nested, other_n), std::invalid_argument);

    const ComparisonReport flagged = lr_test(nested, big, true);
    CHECK(flagged.boundary_caveat);
}

TEST_CASE("likelihood ratio Monte Carlo size on a regular nested pair", "[selection][lr]") {
    // truth: intercept-only NB; full model adds one covariate with zero effect
    const double alpha_true = 1.6, mu_true = 0.8;
    int rejections = 0;
    const int reps = 200;
    FitConfig cfg;
    cfg.n_restarts = 0;
    cfg.loglik_tol = 1e-9;
    for (int rep = 0; rep < reps; ++rep) {
        const int n = 800;
        CountData full_data;
        full_data.X.resize(n, 2);
        full_data.y.resize(n);
        for (int i = 0; i < n; ++i) {
            Rng rng(Rng(40000, rep).next_u64(), i);
            full_data.X(i, 0) = 1.0;
            full_data.X(i, 1) = 1.0 + static_cast<int>(rng.uniform() * 4.0);
            full_data.y[i] = rng.negative_binomial(alpha_true, alpha_true * alpha_true / mu_true);
        }
        CountData nested_data;
        nested_data.X = full_data.X.leftCols(1);
        nested_data.y = full_data.y;
        const FitResult nested = em_fit_nbm_reg(nested_data, 1, cfg);
        const FitResult full = em_fit_nbm_reg(full_data, 1, cfg);
        if (lr_test(nested, full).p_value < 0.05) ++rejections;
    }
    const double rate = static_cast<double>(rejections) / reps;
    CHECK(rate >= 0.02);
    CHECK(rate <= 0.08);
}

TEST_CASE("Vuong test: equal fits, antisymmetry, sign convention", "[selection][vuong]") {
    std::vector<double> ll(1000);
    Rng rng(51);
    for (double& v : ll) v = -1.0 - rng.uniform();
    const ComparisonReport same = vuong_test(ll, ll, "f", "g");
    CHECK(same.statistic == 0.0);
    CHECK(same.winner == "inconclusive");

    std::vector<double> ll2(1000);
    for (std::size_t i = 0; i < ll2.size(); ++i) ll2[i] = ll[i] - 0.05 * (1.0 + 0.5 * rng.uniform());
    const ComparisonReport fwd = vuong_test(ll, ll2, "f", "g");
    const ComparisonReport bwd = vuong_test(ll2, ll, "g", "f");
    CHECK(fwd.statistic == -bwd.statistic); // exact antisymmetry
    CHECK(fwd.statistic > 0.0);             // first model fits better pointwise
    CHECK(fwd.winner == "f");
    CHECK(bwd.winner == "f");

    std::vector<double> shifted(ll);
    for (double& v : shifted) v -= 1e-3; // constant shift: zero variance of differences
    CHECK_THROWS_AS(vuong_test(ll, shifted), std::invalid_argument);
    CHECK_THROWS_AS(vuong_test(ll, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("Vuong power probe: data from the inflated model", "[selection][vuong]") {
    const KinbmParams truth(1, {0.15, 0.85}, {1.5}, {4.0});
    // moment-matched plain NB competitor
    const KinbmParams competitor(0, {0.0, 1.0}, {1.5}, {1.5 * 1.5 / kinbm_mean(truth)});
    int positive = 0;
    for (int rep = 0; rep < 100; ++rep) {
        const auto y = kinbm_sample(8874, truth, Rng(60000, rep).next_u64());
        std::vector<double> ll1(y.size()), ll2(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) {
            ll1[i] = kinbm_log_pmf(y[i], truth);
            ll2[i] = kinbm_log_pmf(y[i], competitor);
        }
        if (vuong_test(ll1, ll2).statistic > 0.0) ++positive;
    }
    CHECK(positive >= 95);
}

TEST_CASE("frequency table binning", "[selection]") {
    const std::vector<int> counts{0, 0, 1, 2, 6, 7, 40};
    const FrequencyTable t = FrequencyTable::from_counts(counts);
    CHECK(t.cells[0] == 2);
    CHECK(t.cells[1] == 1);
    CHECK(t.cells[6] == 1);
    CHECK(t.cells[7] == 2); // ">6" is one closed bin
    CHECK(t.total() == 7);
    CHECK(FrequencyTable::cell_label(7) == ">6");
    CHECK_THROWS_AS(FrequencyTable::from_counts(std::vector<int>{-1}), std::invalid_argument);
}

TEST_CASE("simulation MSE harness semantics", "[selection][mse]") {
    // observed sample frozen from the one-inflated generator
    const KinbmParams gen(1, {0.16, 0.84}, {1.1}, {4.5});
    const auto observed_counts = kinbm_sample(8874, gen, 777);
    const FrequencyTable observed = FrequencyTable::from_counts(observed_counts);
    const std::size_t n = observed_counts.size();

    SECTION("empirical resampler reproduces the observed table") {
        // sampler draws from the observed empirical distribution
        auto empirical = [&observed_counts](std::size_t m, std::uint64_t seed) {
            std::vector<int> out(m);
            for (std::size_t i = 0; i < m; ++i) {
                Rng rng(seed, i);
                out[i] = observed_counts[static_cast<std::size_t>(rng.uniform() *
                                                                  observed_counts.size())];
            }
            return out;
        };
        const auto cells = simulation_mse(empirical, observed, 200, n, 2);
        for (const auto& cell : cells) {
            const double p = static_cast<double>(cell.observed) / static_cast<double>(n);
            if (cell.observed == 0) continue;
            const double sd = std::sqrt(n * p * (1.0 - p));
            CHECK(std::fabs(cell.mean - cell.observed) <= 4.0 * sd / std::sqrt(200.0) + 1.0);
            const double expected_mse = n * p * (1.0 - p);
            if (cell.observed >= 20)
                CHECK(cell.mse == Approx(expected_mse).epsilon(0.25));
        }
    }

    SECTION("degenerate sampler is deterministic") {
        auto all_zero = [](std::size_t m, std::uint64_t) { return std::vector<int>(m, 0); };
        const auto cells = simulation_mse(all_zero, observed, 50, n, 1);
        CHECK(cells[0].mean == Approx(static_cast<double>(n)));
        const double gap = static_cast<double>(n) - static_cast<double>(observed.cells[0]);
        CHECK(cells[0].mse == Approx(gap * gap));
        CHECK(cells[3].mean == 0.0);
    }

    SECTION("replicates reduce identically across thread counts") {
        auto model_sampler = [&gen](std::size_t m, std::uint64_t seed) {
            return kinbm_sample(m, gen, seed);
        };
        const auto serial = simulation_mse(model_sampler, observed, 32, 2000, 5, 1);
        const auto parallel = simulation_mse(model_sampler, observed, 32, 2000, 5, 4);
        for (std::size_t c = 0; c < serial.size(); ++c) {
            CHECK(serial[c].mean == parallel[c].mean);
            CHECK(serial[c].mse == parallel[c].mse);
        }
    }

    SECTION("same seed gives identical tables, means converge to the pmf") {
        auto model_sampler = [&gen](std::size_t m, std::uint64_t seed) {
            return kinbm_sample(m, gen, seed);
        };
        const auto a = simulation_mse(model_sampler, observed, 40, 3000, 9);
        const auto b = simulation_mse(model_sampler, observed, 40, 3000, 9);
        for (std::size_t c = 0; c < a.size(); ++c) {
            CHECK(a[c].mean == b[c].mean);
            CHECK(a[c].mse == b[c].mse);
        }
        // with many replicates the cell means approach n * pmf(cell)
        const auto big = simulation_mse(model_sampler, observed, 2000, 3000, 10);
        for (int cell = 0; cell <= 3; ++cell) {
            const double p = kinbm_pmf(cell, gen);
            const double se = std::sqrt(3000.0 * p * (1.0 - p) / 2000.0);
            CHECK(std::fabs(big[cell].mean - 3000.0 * p) <= 3.0 * se + 0.05);
        }
    }
}
