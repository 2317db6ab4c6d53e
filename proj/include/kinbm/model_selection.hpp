// Model comparison: information criteria, likelihood-ratio and Vuong tests,
// and the replicate-simulation frequency-table harness.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "kinbm/parallel.hpp"
#include "kinbm/regression.hpp"
#include "kinbm/rng.hpp"
#include "kinbm/special_functions.hpp"

namespace kinbm {

inline double aic(const FitResult& fit) { return -2.0 * fit.loglik() + 2.0 * fit.df; }

inline double sbic(const FitResult& fit) {
    return -2.0 * fit.loglik() + fit.df * std::log(static_cast<double>(fit.n_obs));
}

struct ComparisonReport {
    std::string model1;
    std::string model2;
    double statistic = 0.0;
    double p_value = 1.0;
    std::string winner; // model id or "inconclusive"
    std::string test_kind;
    bool boundary_caveat = false; // mixture-order pairs sit on a parameter boundary
};

// Likelihood ratio test for nested fits on the same data; winner at the 5% level.
inline ComparisonReport lr_test(const FitResult& nested, const FitResult& full,
                                bool boundary_caveat = false) {
    if (!(nested.df < full.df)) throw std::invalid_argument("lr_test: models are not nested by df");
    if (nested.n_obs != full.n_obs) throw std::invalid_argument("lr_test: different data sizes");
    ComparisonReport r;
    r.model1 = nested.family;
    r.model2 = full.family;
    r.test_kind = "lr";
    r.boundary_caveat = boundary_caveat;
    r.statistic = 2.0 * (full.loglik() - nested.loglik());
    const int df_diff = full.df - nested.df;
    r.p_value = (r.statistic <= 0.0) ? 1.0 : chi_square_sf(r.statistic, df_diff);
    r.winner = (r.p_value < 0.05) ? r.model2 : r.model1;
    return r;
}

// Vuong statistic from per-observation loglikelihood vectors of two non-nested
// models on identical data. Positive values favor the first model, negative
// the second; |stat| below the 5% normal quantile is inconclusive.
inline ComparisonReport vuong_test(std::span<const double> loglik1,
                                   std::span<const double> loglik2,
                                   const std::string& model1 = "model1",
                                   const std::string& model2 = "model2") {
    if (loglik1.size() != loglik2.size() || loglik1.empty())
        throw std::invalid_argument("vuong_test: mismatched per-observation vectors");
    const std::size_t n = loglik1.size();
    double mean = 0.0, max_abs = 0.0;
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) {
        d[i] = loglik1[i] - loglik2[i];
        mean += d[i];
        max_abs = std::max(max_abs, std::fabs(d[i]));
    }
    mean /= n;
    ComparisonReport r;
    r.model1 = model1;
    r.model2 = model2;
    r.test_kind = "vuong";
    if (max_abs < 1e-14) { // identical pointwise fits
        r.statistic = 0.0;
        r.p_value = 1.0;
        r.winner = "inconclusive";
        return r;
    }
    double var = 0.0;
    for (std::size_t i = 0; i < n; ++i) var += (d[i] - mean) * (d[i] - mean);
    var /= n;
    if (!(var > 0.0)) throw std::invalid_argument("vuong_test: zero variance of loglik ratios");
    r.statistic = std::sqrt(static_cast<double>(n)) * mean / std::sqrt(var);
    r.p_value = normal_two_sided_p(r.statistic);
    constexpr double z_5pct = 1.959963984540054;
    if (r.statistic > z_5pct)
        r.winner = model1;
    else if (r.statistic < -z_5pct)
        r.winner = model2;
    else
        r.winner = "inconclusive";
    return r;
}

// Claim-count frequency table over the classes 0..6 and ">6".
struct FrequencyTable {
    static constexpr int cell_count = 8;
    std::array<long, cell_count> cells{};

    static int cell_of(int count) { return count > 6 ? 7 : count; }

    static std::string cell_label(int cell) {
        return cell == 7 ? std::string(">6") : std::to_string(cell);
    }

    static FrequencyTable from_counts(std::span<const int> counts) {
        FrequencyTable t;
        for (int c : counts) {
            if (c < 0) throw std::invalid_argument("FrequencyTable: negative count");
            ++t.cells[cell_of(c)];
        }
        return t;
    }

    long total() const {
        long s = 0;
        for (long c : cells) s += c;
        return s;
    }
};

struct SimulationMseCell {
    std::string label;
    long observed = 0;
    double mean = 0.0;
    double mse = 0.0;
};

using CountSampler = std::function<std::vector<int>(std::size_t n, std::uint64_t seed)>;

// Replicate simulation comparison: draw `reps` samples of size n from the
// fitted model, bin each into the frequency classes, and report the per-cell
// mean simulated frequency and the mean squared deviation from the observed
// frequency. Replicates use derived seeds and reduce in replicate order.
inline std::vector<SimulationMseCell> simulation_mse(const CountSampler& sampler,
                                                     const FrequencyTable& observed, int reps,
                                                     std::size_t n, std::uint64_t seed,
                                                     int threads = 1) {
    if (reps < 1) throw std::invalid_argument("simulation_mse: reps must be positive");
    std::array<double, FrequencyTable::cell_count> sum{}, sum_sq_err{};
    std::vector<std::array<long, FrequencyTable::cell_count>> tables(reps);
    chunked_sum(static_cast<std::size_t>(reps), threads, [&](std::size_t lo, std::size_t hi) {
        for (std::size_t rep = lo; rep < hi; ++rep) {
            const std::uint64_t rep_seed = Rng(seed, 3000 + rep).next_u64();
            tables[rep] = FrequencyTable::from_counts(sampler(n, rep_seed)).cells;
        }
        return 0.0;
    });
    for (int rep = 0; rep < reps; ++rep)
        for (int cell = 0; cell < FrequencyTable::cell_count; ++cell) {
            const double f = static_cast<double>(tables[rep][cell]);
            const double err = f - static_cast<double>(observed.cells[cell]);
            sum[cell] += f;
            sum_sq_err[cell] += err * err;
        }
    std::vector<SimulationMseCell> out(FrequencyTable::cell_count);
    for (int cell = 0; cell < FrequencyTable::cell_count; ++cell) {
        out[cell].label = FrequencyTable::cell_label(cell);
        out[cell].observed = observed.cells[cell];
        out[cell].mean = sum[cell] / reps;
        out[cell].mse = sum_sq_err[cell] / reps;
    }
    return out;
}

} // namespace kinbm
