// EM fitting for the inflated negative binomial mixture regression /
// distribution and the Pareto mixture regression / distribution.
//
// The M-step takes scored Newton steps (score over expected information;
// observed information where the expectation has no closed form, i.e. the
// shape updates), with backtracking so the expected complete-data loglik never
// decreases. That makes every sweep a generalized EM step, which is what keeps
// the observed-data loglikelihood monotone.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "kinbm/distributions.hpp"
#include "kinbm/parallel.hpp"
#include "kinbm/params.hpp"
#include "kinbm/rng.hpp"
#include "kinbm/special_functions.hpp"

namespace kinbm {

struct SingularInformationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataTooSmallError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Count observations: design matrix with a leading column of ones.
struct CountData {
    Eigen::MatrixXd X;
    Eigen::VectorXi y;

    int n() const { return static_cast<int>(y.size()); }

    void validate() const {
        if (X.rows() != y.size()) throw std::invalid_argument("CountData: row count mismatch");
        if (X.cols() < 1 || (X.col(0).array() != 1.0).any())
            throw std::invalid_argument("CountData: design matrix needs a leading intercept column");
        if ((y.array() < 0).any()) throw std::invalid_argument("CountData: negative count");
    }
};

// Per-claim severity observations with covariate rows.
struct SeverityData {
    Eigen::MatrixXd W;
    Eigen::VectorXd z;

    int n() const { return static_cast<int>(z.size()); }

    void validate() const {
        if (W.rows() != z.size()) throw std::invalid_argument("SeverityData: row count mismatch");
        if (W.cols() < 1 || (W.col(0).array() != 1.0).any())
            throw std::invalid_argument("SeverityData: design matrix needs a leading intercept column");
        if (!(z.array() > 0.0).all()) throw std::invalid_argument("SeverityData: severities must be positive");
    }
};

struct FitConfig {
    enum class Init { random_responsibilities, moment_split };

    int max_iter = 500;
    double loglik_tol = 1e-8;
    int irls_max_inner = 25;
    double irls_step_damping = 1.0; // halved on likelihood decrease
    Init init_strategy = Init::moment_split;
    int n_restarts = 3;
    std::uint64_t seed = default_seed;
    int threads = 1;

    void validate() const {
        if (max_iter < 1 || irls_max_inner < 0 || n_restarts < 0 || threads < 1)
            throw std::invalid_argument("FitConfig: counts must be positive");
        if (!(loglik_tol > 0.0) || !(irls_step_damping > 0.0 && irls_step_damping <= 1.0))
            throw std::invalid_argument("FitConfig: bad tolerance or damping");
    }
};

// Regression parameters. Weight logits are relative to a fixed baseline:
// the inflation atom when `inflated`, otherwise the first component; the
// baseline logit is pinned at zero, so `omega` holds m-1 free logits.
struct KinbmRegParams {
    int k = 0;
    bool inflated = true;
    std::vector<double> omega;
    std::vector<double> shapes;
    Eigen::MatrixXd coef; // one row per negative binomial component

    KinbmRegParams() = default;

    KinbmRegParams(int k_, bool inflated_, std::vector<double> omega_, std::vector<double> shapes_,
                   Eigen::MatrixXd coef_)
        : k(k_), inflated(inflated_), omega(std::move(omega_)), shapes(std::move(shapes_)),
          coef(std::move(coef_)) {
        const std::size_t m_nb = shapes.size();
        if (m_nb == 0 || coef.rows() != static_cast<Eigen::Index>(m_nb))
            throw std::invalid_argument("KinbmRegParams: inconsistent component counts");
        if (omega.size() != m_nb - (inflated ? 0 : 1))
            throw std::invalid_argument("KinbmRegParams: wrong number of weight logits");
        if (k < 0) throw std::invalid_argument("KinbmRegParams: k must be non-negative");
        detail::require_all_positive(shapes, "KinbmRegParams", "shapes");
        canonicalize();
    }

    int nb_components() const { return static_cast<int>(shapes.size()); }
    int total_components() const { return nb_components() + (inflated ? 1 : 0); }
    int covariate_columns() const { return static_cast<int>(coef.cols()); }

    // full logit vector, entry 0 is the baseline (fixed at zero)
    std::vector<double> full_logits() const {
        std::vector<double> l(total_components(), 0.0);
        for (std::size_t j = 0; j < omega.size(); ++j) l[j + 1] = omega[j];
        return l;
    }

    // softmax of the logits; sums to one exactly, the baseline entry absorbs
    // the rounding residual
    std::vector<double> weights() const {
        const std::vector<double> l = full_logits();
        double mx = l[0];
        for (double v : l) mx = std::max(mx, v);
        double s = 0.0;
        for (double v : l) s += std::exp(v - mx);
        std::vector<double> w(l.size());
        double tail = 0.0;
        for (std::size_t c = 1; c < l.size(); ++c) {
            w[c] = std::exp(l[c] - mx) / s;
            tail += w[c];
        }
        w[0] = std::max(0.0, 1.0 - tail);
        return w;
    }

    double inflation_weight() const { return inflated ? weights()[0] : 0.0; }

private:
    void canonicalize() {
        std::vector<double> l = full_logits();
        const int offset = inflated ? 1 : 0; // the atom never moves
        std::vector<int> order(shapes.size());
        for (std::size_t j = 0; j < order.size(); ++j) order[j] = static_cast<int>(j);
        std::stable_sort(order.begin(), order.end(),
                         [this](int a, int b) { return shapes[a] < shapes[b]; });
        std::vector<double> new_shapes(shapes.size()), new_l(l.size());
        Eigen::MatrixXd new_coef(coef.rows(), coef.cols());
        if (inflated) new_l[0] = l[0];
        for (std::size_t j = 0; j < order.size(); ++j) {
            new_shapes[j] = shapes[order[j]];
            new_coef.row(static_cast<Eigen::Index>(j)) = coef.row(order[j]);
            new_l[j + offset] = l[order[j] + offset];
        }
        // re-anchor the baseline at zero; weights are invariant under the shift
        const double base = new_l[0];
        for (double& v : new_l) v -= base;
        shapes = std::move(new_shapes);
        coef = std::move(new_coef);
        omega.assign(new_l.begin() + 1, new_l.end());
    }
};

// Pareto mixture regression parameters; the scale of component j is
// tail_indices[j] - 1 and covariates act through exp(w * coef_j).
struct ParetoRegParams {
    std::vector<double> weights;
    std::vector<double> tail_indices; // each > 1
    Eigen::MatrixXd coef;

    ParetoRegParams() = default;

    ParetoRegParams(std::vector<double> weights_, std::vector<double> tail_indices_,
                    Eigen::MatrixXd coef_)
        : weights(std::move(weights_)), tail_indices(std::move(tail_indices_)),
          coef(std::move(coef_)) {
        if (weights.empty() || weights.size() != tail_indices.size() ||
            coef.rows() != static_cast<Eigen::Index>(weights.size()))
            throw std::invalid_argument("ParetoRegParams: inconsistent sizes");
        for (double a : tail_indices)
            if (!(a > 1.0)) throw std::invalid_argument("ParetoRegParams: tail indices must exceed 1");
        detail::normalize_weights(weights, "ParetoRegParams");
        std::vector<int> order(weights.size());
        for (std::size_t j = 0; j < order.size(); ++j) order[j] = static_cast<int>(j);
        std::stable_sort(order.begin(), order.end(),
                         [this](int a, int b) { return tail_indices[a] < tail_indices[b]; });
        std::vector<double> w(weights.size()), a(weights.size());
        Eigen::MatrixXd c(coef.rows(), coef.cols());
        for (std::size_t j = 0; j < order.size(); ++j) {
            w[j] = weights[order[j]];
            a[j] = tail_indices[order[j]];
            c.row(static_cast<Eigen::Index>(j)) = coef.row(order[j]);
        }
        weights = std::move(w);
        tail_indices = std::move(a);
        coef = std::move(c);
    }

    int component_count() const { return static_cast<int>(weights.size()); }
};

struct FitResult {
    std::string family;
    std::variant<KinbmParams, KinbmRegParams, ParetoMixParams, ParetoRegParams> params;
    std::vector<double> loglik_trace;        // observed-data loglikelihood per iteration
    std::vector<double> complete_data_trace; // expected complete-data loglik after each M-step
    Eigen::MatrixXd responsibilities;        // n x m, column 0 = inflation atom when present
    bool converged = false;
    int iterations = 0;
    int df = 0;
    int n_obs = 0;
    std::vector<int> degenerate_components;

    double loglik() const {
        if (loglik_trace.empty()) throw std::logic_error("FitResult: empty trace");
        return loglik_trace.back();
    }
};

// log pmf of the regression model at covariate row x (leading 1 included).
inline double kinbm_reg_log_pmf(int y, const Eigen::RowVectorXd& x, const KinbmRegParams& p) {
    if (x.size() != p.coef.cols())
        throw std::invalid_argument("kinbm_reg_log_pmf: covariate dimension mismatch");
    if (y < 0) throw std::domain_error("kinbm_reg_log_pmf: y must be non-negative");
    const std::vector<double> logits = p.full_logits();
    std::vector<double> terms;
    terms.reserve(logits.size());
    const int offset = p.inflated ? 1 : 0;
    if (p.inflated && y == p.k) terms.push_back(logits[0]);
    for (int j = 0; j < p.nb_components(); ++j) {
        const double a = p.shapes[j];
        const double xb = x.dot(p.coef.row(j));
        const double log_ap_mu = log_sum_exp(std::log(a), xb); // log(a + e^xb), overflow-safe
        terms.push_back(logits[j + offset] + log_gamma(y + a) - log_gamma(a) -
                        log_gamma(y + 1.0) + a * (std::log(a) - log_ap_mu) +
                        y * (xb - log_ap_mu));
    }
    const double log_norm = log_sum_exp(logits);
    if (terms.empty()) return neg_inf;
    return log_sum_exp(terms) - log_norm;
}

namespace detail {

// Shared machinery for the count mixture EM. Component 0 is the inflation
// atom when `inflated`; negative binomial components follow.
class CountMixtureFitter {
public:
    CountMixtureFitter(const CountData& data, int m_nb, int k, bool inflated,
                       const FitConfig& cfg)
        : data_(data), m_nb_(m_nb), k_(k), inflated_(inflated), cfg_(cfg),
          n_(data.n()), q_(static_cast<int>(data.X.cols())),
          m_total_(m_nb + (inflated ? 1 : 0)) {
        data_.validate();
        cfg_.validate();
        if (m_nb_ < 1) throw std::invalid_argument("em_fit: need at least one NB component");
        y_max_ = data_.y.maxCoeff();
        lgamma_y1_.resize(y_max_ + 1);
        for (int y = 0; y <= y_max_; ++y) lgamma_y1_[y] = log_gamma(y + 1.0);
        alpha_.assign(m_nb_, 1.0);
        logits_.assign(m_total_, 0.0);
        B_ = Eigen::MatrixXd::Zero(m_nb_, q_);
        xb_ = Eigen::MatrixXd::Zero(n_, m_nb_);
        lg_alpha_.resize(m_nb_);
        dg_alpha_.resize(m_nb_);
        tg_alpha_.resize(m_nb_);
        frozen_.assign(m_nb_, false);
        low_mass_streak_.assign(m_nb_, 0);
        resp_ = Eigen::MatrixXd::Zero(n_, m_total_);
    }

    void set_params(const KinbmRegParams& p) {
        if (p.nb_components() != m_nb_ || p.inflated != inflated_ || p.k != k_ ||
            p.coef.cols() != q_)
            throw std::invalid_argument("em_fit: parameter shape mismatch");
        const std::vector<double> l = p.full_logits();
        logits_.assign(l.begin(), l.end());
        alpha_ = p.shapes;
        B_ = p.coef;
        for (int j = 0; j < m_nb_; ++j) refresh_component_cache(j);
    }

    KinbmRegParams params() const {
        std::vector<double> omega(logits_.begin() + 1, logits_.end());
        return KinbmRegParams(k_, inflated_, std::move(omega), alpha_, B_);
    }

    const Eigen::MatrixXd& responsibilities() const { return resp_; }
    void set_responsibilities(const Eigen::MatrixXd& r) {
        if (r.rows() != n_ || r.cols() != m_total_)
            throw std::invalid_argument("em_fit: responsibility shape mismatch");
        resp_ = r;
    }

    // E-step: posterior component membership given current parameters.
    // Also returns the observed-data loglikelihood as a by-product.
    double e_step() {
        const double log_norm = logit_normalizer();
        const double ll = chunked_sum(n_, cfg_.threads, [&](std::size_t lo, std::size_t hi) {
            double acc = 0.0;
            std::vector<double> t(m_total_);
            for (std::size_t i = lo; i < hi; ++i) {
                row_log_terms(static_cast<int>(i), t);
                const double li = log_sum_exp(t);
                for (int c = 0; c < m_total_; ++c)
                    resp_(static_cast<Eigen::Index>(i), c) =
                        (t[c] == neg_inf) ? 0.0 : std::exp(t[c] - li);
                acc += li - log_norm;
            }
            return acc;
        });
        return ll;
    }

    double observed_loglik() {
        const double log_norm = logit_normalizer();
        return chunked_sum(n_, cfg_.threads, [&](std::size_t lo, std::size_t hi) {
            double acc = 0.0;
            std::vector<double> t(m_total_);
            for (std::size_t i = lo; i < hi; ++i) {
                row_log_terms(static_cast<int>(i), t);
                acc += log_sum_exp(t) - log_norm;
            }
            return acc;
        });
    }

    // One M-step: up to cfg.irls_max_inner sweeps of scored Newton updates over
    // the weight logits, the coefficient blocks, and the shapes.
    void m_step() {
        update_degeneracy_flags();
        double q_prev = q_weights() + q_components();
        for (int sweep = 0; sweep < cfg_.irls_max_inner; ++sweep) {
            update_weights();
            for (int j = 0; j < m_nb_; ++j) {
                if (frozen_[j]) continue;
                update_coefficients(j);
                update_shape(j);
            }
            const double q_now = q_weights() + q_components();
            if (q_now - q_prev < 1e-10 * (1.0 + std::fabs(q_now))) break;
            q_prev = q_now;
        }
    }

    // expected complete-data loglikelihood under the current responsibilities
    double complete_data_loglik() { return q_weights() + q_components(); }

    void initialize_responsibilities(std::uint64_t seed, FitConfig::Init strategy) {
        if (strategy == FitConfig::Init::random_responsibilities) {
            for (int i = 0; i < n_; ++i) {
                Rng rng(seed, static_cast<std::uint64_t>(i));
                double s = 0.0;
                for (int c = 0; c < m_total_; ++c) {
                    resp_(i, c) = -std::log(rng.uniform());
                    s += resp_(i, c);
                }
                resp_.row(i) /= s;
            }
        } else {
            moment_split_responsibilities();
        }
        params_from_responsibilities();
    }

    const std::vector<int>& degenerate_components() const { return degenerate_list_; }

    // Conditional standard errors of the coefficient rows from the expected
    // information of the weighted NB blocks at the current state.
    Eigen::MatrixXd coef_standard_errors() {
        Eigen::MatrixXd se(m_nb_, q_);
        const int offset = inflated_ ? 1 : 0;
        for (int j = 0; j < m_nb_; ++j) {
            Eigen::MatrixXd info = Eigen::MatrixXd::Zero(q_, q_);
            for (int i = 0; i < n_; ++i) {
                const double mu = std::exp(xb_(i, j));
                const double w = resp_(i, j + offset) * alpha_[j] * mu / (alpha_[j] + mu);
                info.noalias() += w * data_.X.row(i).transpose() * data_.X.row(i);
            }
            const Eigen::MatrixXd cov =
                info.ldlt().solve(Eigen::MatrixXd::Identity(q_, q_));
            se.row(j) = cov.diagonal().array().max(0.0).sqrt();
        }
        return se;
    }

private:
    const CountData& data_;
    int m_nb_, k_;
    bool inflated_;
    FitConfig cfg_;
    int n_, q_, m_total_;
    int y_max_ = 0;

    std::vector<double> lgamma_y1_;
    std::vector<double> logits_; // index 0 fixed at zero
    std::vector<double> alpha_;
    Eigen::MatrixXd B_;
    Eigen::MatrixXd xb_;
    Eigen::MatrixXd resp_;
    // per-component tables over y = 0..y_max of lgamma/digamma/trigamma(y + alpha)
    std::vector<std::vector<double>> lg_alpha_, dg_alpha_, tg_alpha_;
    std::vector<bool> frozen_;
    std::vector<int> low_mass_streak_;
    std::vector<int> degenerate_list_;

    void refresh_component_cache(int j) {
        xb_.col(j) = data_.X * B_.row(j).transpose();
        rebuild_shape_tables(j);
    }

    void rebuild_shape_tables(int j) {
        const double a = alpha_[j];
        auto& lg = lg_alpha_[j];
        auto& dg = dg_alpha_[j];
        auto& tg = tg_alpha_[j];
        lg.resize(y_max_ + 1);
        dg.resize(y_max_ + 1);
        tg.resize(y_max_ + 1);
        lg[0] = log_gamma(a);
        dg[0] = digamma(a);
        tg[0] = trigamma(a);
        for (int y = 0; y < y_max_; ++y) {
            lg[y + 1] = lg[y] + std::log(y + a);
            dg[y + 1] = dg[y] + 1.0 / (y + a);
            tg[y + 1] = tg[y] - 1.0 / ((y + a) * (y + a));
        }
    }

    double logit_normalizer() const {
        return log_sum_exp(std::span<const double>(logits_.data(), logits_.size()));
    }

    // component log density of the NB part: tables + cached linear predictor
    double nb_log_density(int i, int j) const {
        const int y = data_.y[i];
        const double a = alpha_[j];
        const double xb = xb_(i, j);
        const double log_ap_mu = log_sum_exp(std::log(a), xb);
        return lg_alpha_[j][y] - lg_alpha_[j][0] - lgamma_y1_[y] + a * (std::log(a) - log_ap_mu) +
               y * (xb - log_ap_mu);
    }

    void row_log_terms(int i, std::vector<double>& t) const {
        const int offset = inflated_ ? 1 : 0;
        if (inflated_) t[0] = (data_.y[i] == k_) ? logits_[0] : neg_inf;
        for (int j = 0; j < m_nb_; ++j) t[j + offset] = logits_[j + offset] + nb_log_density(i, j);
    }

    double q_weights() const {
        const double log_norm = logit_normalizer();
        double q = 0.0;
        for (int c = 0; c < m_total_; ++c) {
            const double v = resp_.col(c).sum();
            if (v > 0.0) q += v * (logits_[c] - log_norm);
        }
        return q;
    }

    double q_component(int j) const {
        const int offset = inflated_ ? 1 : 0;
        return chunked_sum(n_, cfg_.threads, [&](std::size_t lo, std::size_t hi) {
            double acc = 0.0;
            for (std::size_t i = lo; i < hi; ++i) {
                const double v = resp_(static_cast<Eigen::Index>(i), j + offset);
                if (v > 0.0) acc += v * nb_log_density(static_cast<int>(i), j);
            }
            return acc;
        });
    }

    double q_components() const {
        double q = 0.0;
        for (int j = 0; j < m_nb_; ++j) q += q_component(j);
        return q;
    }

    // scored Newton on each free logit; expected information n pi (1 - pi)
    void update_weights() {
        std::vector<double> colsum(m_total_);
        for (int c = 0; c < m_total_; ++c) colsum[c] = resp_.col(c).sum();
        for (int c = 1; c < m_total_; ++c) {
            double q0 = q_weights();
            const std::vector<double> w = softmax(logits_);
            const double score = colsum[c] - n_ * w[c];
            const double info = std::max(n_ * w[c] * (1.0 - w[c]), 1e-12);
            double step = cfg_.irls_step_damping * score / info;
            const double saved = logits_[c];
            for (int half = 0; half < 40; ++half) {
                logits_[c] = std::clamp(saved + step, -80.0, 80.0);
                if (q_weights() >= q0 - 1e-12 * (1.0 + std::fabs(q0))) break;
                step *= 0.5;
                logits_[c] = saved;
            }
        }
    }

    // coefficient block: scored Newton with the expected NB information
    void update_coefficients(int j) {
        const int offset = inflated_ ? 1 : 0;
        Eigen::VectorXd score = Eigen::VectorXd::Zero(q_);
        Eigen::MatrixXd info = Eigen::MatrixXd::Zero(q_, q_);
        const double a = alpha_[j];
        for (int i = 0; i < n_; ++i) {
            const double v = resp_(i, j + offset);
            if (v <= 0.0) continue;
            const double mu = std::exp(xb_(i, j));
            const double denom = a + mu;
            score.noalias() += v * a * (data_.y[i] - mu) / denom * data_.X.row(i).transpose();
            info.noalias() += v * a * mu / denom * data_.X.row(i).transpose() * data_.X.row(i);
        }
        const double tr = info.trace();
        if (!(tr > 0.0) || !std::isfinite(tr)) return; // empty component; degeneracy guard reports it
        info.diagonal().array() += 1e-8 * tr / q_;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
        Eigen::VectorXd delta = ldlt.solve(score);
        if (ldlt.info() != Eigen::Success || !delta.allFinite())
            throw SingularInformationError("em_fit: expected information not invertible");
        const double q0 = q_component(j);
        const Eigen::RowVectorXd saved = B_.row(j);
        double damp = cfg_.irls_step_damping;
        for (int half = 0; half < 40; ++half) {
            B_.row(j) = saved + damp * delta.transpose();
            xb_.col(j) = data_.X * B_.row(j).transpose();
            if (q_component(j) >= q0 - 1e-12 * (1.0 + std::fabs(q0))) return;
            damp *= 0.5;
        }
        B_.row(j) = saved;
        xb_.col(j) = data_.X * B_.row(j).transpose();
    }

    // shape update on the log scale; observed information with a ridge
    void update_shape(int j) {
        const int offset = inflated_ ? 1 : 0;
        const double a = alpha_[j];
        double score_a = 0.0, hess_a = 0.0;
        for (int i = 0; i < n_; ++i) {
            const double v = resp_(i, j + offset);
            if (v <= 0.0) continue;
            const int y = data_.y[i];
            const double mu = std::exp(xb_(i, j));
            const double denom = a + mu;
            const double d1 = dg_alpha_[j][y] - dg_alpha_[j][0] + std::log(a) + 1.0 -
                              std::log(denom) - (a + y) / denom;
            const double d2 = tg_alpha_[j][y] - tg_alpha_[j][0] + 1.0 / a - 1.0 / denom -
                              (mu - y) / (denom * denom);
            score_a += v * d1;
            hess_a += v * d2;
        }
        // chain rule to theta = log(alpha)
        const double score_t = a * score_a;
        double info_t = -(a * score_a + a * a * hess_a);
        info_t += 1e-8 * std::fabs(info_t);
        if (!(info_t > 0.0) || !std::isfinite(info_t))
            info_t = std::max(std::fabs(score_t), 1.0); // fall back to a bounded gradient step
        double step = std::clamp(cfg_.irls_step_damping * score_t / info_t, -2.0, 2.0);
        const double q0 = q_component(j);
        const double saved = a;
        for (int half = 0; half < 40; ++half) {
            alpha_[j] = std::clamp(saved * std::exp(step), 1e-8, 1e8);
            rebuild_shape_tables(j);
            if (q_component(j) >= q0 - 1e-12 * (1.0 + std::fabs(q0))) return;
            step *= 0.5;
        }
        alpha_[j] = saved;
        rebuild_shape_tables(j);
    }

    void update_degeneracy_flags() {
        const int offset = inflated_ ? 1 : 0;
        for (int j = 0; j < m_nb_; ++j) {
            const double mass = resp_.col(j + offset).sum();
            if (mass < 1e-3 * n_)
                ++low_mass_streak_[j];
            else
                low_mass_streak_[j] = 0;
            if (low_mass_streak_[j] >= 3 && !frozen_[j]) {
                frozen_[j] = true;
                degenerate_list_.push_back(j + offset);
            }
        }
    }

    static std::vector<double> softmax(const std::vector<double>& l) {
        double mx = l[0];
        for (double v : l) mx = std::max(mx, v);
        double s = 0.0;
        for (double v : l) s += std::exp(v - mx);
        std::vector<double> w(l.size());
        for (std::size_t c = 0; c < l.size(); ++c) w[c] = std::exp(l[c] - mx) / s;
        return w;
    }

    void moment_split_responsibilities() {
        // y = k rows lean on the atom; the rest split by count quantiles
        std::vector<int> sorted_y(data_.y.data(), data_.y.data() + n_);
        std::sort(sorted_y.begin(), sorted_y.end());
        std::vector<int> edges(m_nb_);
        for (int j = 0; j < m_nb_; ++j)
            edges[j] = sorted_y[std::min<std::size_t>(sorted_y.size() - 1,
                                                      sorted_y.size() * (j + 1) / m_nb_)];
        const int offset = inflated_ ? 1 : 0;
        for (int i = 0; i < n_; ++i) {
            resp_.row(i).setZero();
            double nb_share = 1.0;
            if (inflated_ && data_.y[i] == k_) {
                resp_(i, 0) = 0.8;
                nb_share = 0.2;
            }
            int band = 0;
            while (band + 1 < m_nb_ && data_.y[i] > edges[band]) ++band;
            if (m_nb_ == 1) {
                resp_(i, offset) = nb_share;
            } else {
                for (int j = 0; j < m_nb_; ++j)
                    resp_(i, j + offset) = nb_share * (j == band ? 0.7 : 0.3 / (m_nb_ - 1));
            }
        }
    }

    // moment-matched starting point so the first M-step Newton is sane
    void params_from_responsibilities() {
        const int offset = inflated_ ? 1 : 0;
        std::vector<double> colsum(m_total_);
        for (int c = 0; c < m_total_; ++c) colsum[c] = std::max(resp_.col(c).sum(), 1e-12);
        for (int c = 1; c < m_total_; ++c)
            logits_[c] = std::clamp(std::log(colsum[c] / colsum[0]), -80.0, 80.0);
        logits_[0] = 0.0;
        for (int j = 0; j < m_nb_; ++j) {
            double wy = 0.0;
            for (int i = 0; i < n_; ++i) wy += resp_(i, j + offset) * data_.y[i];
            const double mean_j = std::max(wy / colsum[j + offset], 0.05);
            alpha_[j] = 1.0;
            B_.row(j).setZero();
            B_(j, 0) = std::log(mean_j);
            refresh_component_cache(j);
        }
    }
};

inline int kinbm_df(bool inflated, int m_nb, int design_cols, bool distribution_form) {
    if (distribution_form)
        return inflated ? 3 * m_nb : (m_nb - 1) + 2 * m_nb;
    return inflated ? m_nb * (2 + design_cols) : (m_nb - 1) + m_nb * (1 + design_cols);
}

inline FitResult run_count_em(const CountData& data, int m_nb, int k, bool inflated,
                              const FitConfig& cfg, const std::string& family, int df) {
    if (data.n() < 10 * df)
        throw DataTooSmallError("em_fit: need at least 10 observations per free parameter (df=" +
                                std::to_string(df) + ", n=" + std::to_string(data.n()) + ")");
    std::optional<FitResult> best;
    for (int restart = 0; restart <= cfg.n_restarts; ++restart) {
        CountMixtureFitter fitter(data, m_nb, k, inflated, cfg);
        const std::uint64_t restart_seed = Rng(cfg.seed, 1000 + restart).next_u64();
        fitter.initialize_responsibilities(
            restart_seed,
            restart == 0 ? cfg.init_strategy : FitConfig::Init::random_responsibilities);
        FitResult result;
        result.family = family;
        result.df = df;
        result.n_obs = data.n();
        fitter.m_step();
        double prev_ll = -std::numeric_limits<double>::infinity();
        for (int iter = 0; iter < cfg.max_iter; ++iter) {
            const double ll = fitter.e_step();
            result.loglik_trace.push_back(ll);
            result.iterations = iter + 1;
            if (std::fabs(ll - prev_ll) < cfg.loglik_tol) {
                result.converged = true;
                break;
            }
            prev_ll = ll;
            fitter.m_step();
            result.complete_data_trace.push_back(fitter.complete_data_loglik());
        }
        result.params = fitter.params();
        result.responsibilities = fitter.responsibilities();
        result.degenerate_components = fitter.degenerate_components();
        if (!best || result.loglik() > best->loglik()) best = std::move(result);
    }
    return std::move(*best);
}

} // namespace detail

// Posterior component-membership probabilities under the given parameters.
inline Eigen::MatrixXd e_step(const CountData& data, const KinbmRegParams& params,
                              const FitConfig& cfg = {}) {
    detail::CountMixtureFitter fitter(data, params.nb_components(), params.k, params.inflated,
                                      cfg);
    fitter.set_params(params);
    fitter.e_step();
    return fitter.responsibilities();
}

// One M-step from the given responsibilities; cfg.irls_max_inner = 0 returns
// the previous parameters unchanged.
inline KinbmRegParams m_step(const CountData& data, const Eigen::MatrixXd& responsibilities,
                             const KinbmRegParams& prev, const FitConfig& cfg = {}) {
    detail::CountMixtureFitter fitter(data, prev.nb_components(), prev.k, prev.inflated, cfg);
    fitter.set_params(prev);
    fitter.set_responsibilities(responsibilities);
    fitter.m_step();
    return fitter.params();
}

// Inflated NB mixture regression; m counts the atom plus the NB components.
inline FitResult em_fit_kinbm_reg(const CountData& data, int m, int k, const FitConfig& cfg = {}) {
    if (m < 2) throw std::invalid_argument("em_fit_kinbm_reg: m must be >= 2");
    const int df = detail::kinbm_df(true, m - 1, static_cast<int>(data.X.cols()), false);
    return detail::run_count_em(data, m - 1, k, true, cfg, "kinbm_reg", df);
}

// NB mixture regression (the zero-inflation special case); m_nb components.
inline FitResult em_fit_nbm_reg(const CountData& data, int m_nb, const FitConfig& cfg = {}) {
    if (m_nb < 1) throw std::invalid_argument("em_fit_nbm_reg: need at least one component");
    const int df = detail::kinbm_df(false, m_nb, static_cast<int>(data.X.cols()), false);
    return detail::run_count_em(data, m_nb, 0, false, cfg, "nbm_reg", df);
}

namespace detail {

inline KinbmParams dist_params_from_intercept_fit(const KinbmRegParams& reg) {
    // intercept-only NB regression and the free-rate distribution form are the
    // same family: rate = shape^2 * exp(-intercept)
    std::vector<double> weights = reg.weights();
    std::vector<double> shapes = reg.shapes;
    std::vector<double> rates(shapes.size());
    for (std::size_t j = 0; j < shapes.size(); ++j)
        rates[j] = shapes[j] * shapes[j] * std::exp(-reg.coef(static_cast<Eigen::Index>(j), 0));
    if (!reg.inflated) weights.insert(weights.begin(), 0.0);
    return KinbmParams(reg.k, std::move(weights), std::move(shapes), std::move(rates));
}

inline FitResult fit_count_dist(const std::vector<int>& y, int m_nb, int k, bool inflated,
                                const FitConfig& cfg, const std::string& family) {
    CountData data;
    data.X = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(y.size()), 1);
    data.y = Eigen::Map<const Eigen::VectorXi>(y.data(), static_cast<Eigen::Index>(y.size()));
    const int df = kinbm_df(inflated, m_nb, 1, true);
    FitResult result = run_count_em(data, m_nb, k, inflated, cfg, family, df);
    result.params = dist_params_from_intercept_fit(std::get<KinbmRegParams>(result.params));
    return result;
}

} // namespace detail

// Distribution-form fits (no covariates, free per-component rates).
inline FitResult em_fit_kinbm_dist(const std::vector<int>& y, int m, int k,
                                   const FitConfig& cfg = {}) {
    if (m < 2) throw std::invalid_argument("em_fit_kinbm_dist: m must be >= 2");
    return detail::fit_count_dist(y, m - 1, k, true, cfg, "kinbm_dist");
}

inline FitResult em_fit_nbm_dist(const std::vector<int>& y, int m_nb, const FitConfig& cfg = {}) {
    if (m_nb < 1) throw std::invalid_argument("em_fit_nbm_dist: need at least one component");
    return detail::fit_count_dist(y, m_nb, 0, false, cfg, "nbm_dist");
}

inline double kinbm_dist_log_pmf(int y, const KinbmParams& p) { return kinbm_log_pmf(y, p); }

// Conditional coefficient standard errors from the expected information at the
// fitted parameters.
inline Eigen::MatrixXd kinbm_reg_coef_se(const CountData& data, const KinbmRegParams& params,
                                         const FitConfig& cfg = {}) {
    detail::CountMixtureFitter fitter(data, params.nb_components(), params.k, params.inflated,
                                      cfg);
    fitter.set_params(params);
    fitter.e_step();
    return fitter.coef_standard_errors();
}

// ---------------------------------------------------------------------------
// Pareto mixture EM
// ---------------------------------------------------------------------------

namespace detail {

// Severity mixture EM over per-claim observations. Regression form ties
// scale = tail - 1 and scales claims by exp(-w coef); the distribution form
// fits free (tail, scale) pairs.
class ParetoMixtureFitter {
public:
    ParetoMixtureFitter(const SeverityData& data, int m, bool regression, const FitConfig& cfg)
        : data_(data), m_(m), regression_(regression), cfg_(cfg), n_(data.n()),
          q_(static_cast<int>(data.W.cols())) {
        data_.validate();
        cfg_.validate();
        if (m_ < 1) throw std::invalid_argument("em_fit_pareto: need at least one component");
        weights_.assign(m_, 1.0 / m_);
        tail_.assign(m_, 2.0);
        scale_.assign(m_, 1.0);
        D_ = Eigen::MatrixXd::Zero(m_, q_);
        wd_ = Eigen::MatrixXd::Zero(n_, m_);
        resp_ = Eigen::MatrixXd::Constant(n_, m_, 1.0 / m_);
        frozen_.assign(m_, false);
        low_mass_streak_.assign(m_, 0);
    }

    void set_regression_params(const ParetoRegParams& p) {
        if (!regression_ || p.component_count() != m_ || p.coef.cols() != q_)
            throw std::invalid_argument("em_fit_pareto: parameter shape mismatch");
        weights_ = p.weights;
        tail_ = p.tail_indices;
        D_ = p.coef;
        refresh_linear_predictors();
    }

    void set_distribution_params(const ParetoMixParams& p) {
        if (regression_ || p.component_count() != m_)
            throw std::invalid_argument("em_fit_pareto: parameter shape mismatch");
        weights_ = p.weights;
        tail_ = p.tail_indices;
        scale_ = p.scales;
    }

    ParetoRegParams regression_params() const { return ParetoRegParams(weights_, tail_, D_); }
    ParetoMixParams distribution_params() const {
        return ParetoMixParams(weights_, tail_, scale_);
    }

    const Eigen::MatrixXd& responsibilities() const { return resp_; }
    const std::vector<int>& degenerate_components() const { return degenerate_list_; }

    double e_step() {
        return chunked_sum(n_, cfg_.threads, [&](std::size_t lo, std::size_t hi) {
            double acc = 0.0;
            std::vector<double> t(m_);
            for (std::size_t i = lo; i < hi; ++i) {
                for (int j = 0; j < m_; ++j)
                    t[j] = (weights_[j] > 0.0 ? std::log(weights_[j]) : neg_inf) +
                           log_density(static_cast<int>(i), j);
                const double li = log_sum_exp(t);
                for (int j = 0; j < m_; ++j)
                    resp_(static_cast<Eigen::Index>(i), j) =
                        (t[j] == neg_inf) ? 0.0 : std::exp(t[j] - li);
                acc += li;
            }
            return acc;
        });
    }

    void m_step() {
        update_degeneracy_flags();
        // mixing weights: the stationary point of the weight part of Q is the
        // mean responsibility, take it directly
        for (int j = 0; j < m_; ++j) weights_[j] = resp_.col(j).sum() / n_;
        for (int sweep = 0; sweep < cfg_.irls_max_inner; ++sweep) {
            double moved = 0.0;
            for (int j = 0; j < m_; ++j) {
                if (frozen_[j]) continue;
                if (regression_) {
                    moved += update_coefficients(j);
                    moved += update_tail_regression(j);
                } else {
                    moved += update_tail_scale(j);
                }
            }
            if (moved < 1e-10) break;
        }
    }

    double complete_data_loglik() {
        double q = 0.0;
        for (int j = 0; j < m_; ++j) {
            const double lw = weights_[j] > 0.0 ? std::log(weights_[j]) : neg_inf;
            for (int i = 0; i < n_; ++i) {
                const double v = resp_(i, j);
                if (v > 0.0) q += v * (lw + log_density(i, j));
            }
        }
        return q;
    }

    void initialize(std::uint64_t seed, FitConfig::Init strategy) {
        if (strategy == FitConfig::Init::random_responsibilities && m_ > 1) {
            for (int i = 0; i < n_; ++i) {
                Rng rng(seed, static_cast<std::uint64_t>(i));
                double s = 0.0;
                for (int j = 0; j < m_; ++j) {
                    resp_(i, j) = -std::log(rng.uniform());
                    s += resp_(i, j);
                }
                resp_.row(i) /= s;
            }
        } else {
            // split by severity quantiles
            std::vector<double> sorted(data_.z.data(), data_.z.data() + n_);
            std::sort(sorted.begin(), sorted.end());
            for (int i = 0; i < n_; ++i) {
                int band = 0;
                while (band + 1 < m_ &&
                       data_.z[i] > sorted[sorted.size() * (band + 1) / m_ - 1])
                    ++band;
                for (int j = 0; j < m_; ++j)
                    resp_(i, j) = (m_ == 1) ? 1.0 : (j == band ? 0.7 : 0.3 / (m_ - 1));
            }
        }
        for (int j = 0; j < m_; ++j) {
            double wz = 0.0, wsum = 0.0;
            for (int i = 0; i < n_; ++i) {
                wz += resp_(i, j) * data_.z[i];
                wsum += resp_(i, j);
            }
            const double mean_j = std::max(wz / std::max(wsum, 1e-12), 1e-8);
            tail_[j] = 2.0;
            if (regression_) {
                D_.row(j).setZero();
                D_(j, 0) = std::log(mean_j); // exponential-scale intercept
            } else {
                scale_[j] = mean_j; // Pareto(2, g) has mean g
            }
            weights_[j] = std::max(wsum / n_, 1e-6);
        }
        double s = 0.0;
        for (double w : weights_) s += w;
        for (double& w : weights_) w /= s;
        if (regression_) refresh_linear_predictors();
    }

    bool tail_pinned() const {
        for (int j = 0; j < m_; ++j)
            if (tail_[j] >= tail_cap_) return true;
        return false;
    }

    Eigen::MatrixXd coef_standard_errors() {
        Eigen::MatrixXd se(m_, q_);
        for (int j = 0; j < m_; ++j) {
            Eigen::MatrixXd info = Eigen::MatrixXd::Zero(q_, q_);
            const double a = tail_[j], g = a - 1.0;
            for (int i = 0; i < n_; ++i) {
                const double s = data_.z[i] * std::exp(-wd_(i, j));
                const double w = resp_(i, j) * (a + 1.0) * g * s / ((s + g) * (s + g));
                info.noalias() += w * data_.W.row(i).transpose() * data_.W.row(i);
            }
            const Eigen::MatrixXd cov = info.ldlt().solve(Eigen::MatrixXd::Identity(q_, q_));
            se.row(j) = cov.diagonal().array().max(0.0).sqrt();
        }
        return se;
    }

private:
    const SeverityData& data_;
    int m_;
    bool regression_;
    FitConfig cfg_;
    int n_, q_;
    static constexpr double tail_cap_ = 1e6;

    std::vector<double> weights_, tail_, scale_;
    Eigen::MatrixXd D_, wd_, resp_;
    std::vector<bool> frozen_;
    std::vector<int> low_mass_streak_;
    std::vector<int> degenerate_list_;

    void refresh_linear_predictors() { wd_ = data_.W * D_.transpose(); }

    double log_density(int i, int j) const {
        const double a = tail_[j];
        if (regression_) {
            const double b = wd_(i, j);
            const double s = data_.z[i] * std::exp(-b);
            const double g = a - 1.0;
            return -b + std::log(a) + a * std::log(g) - (a + 1.0) * std::log(s + g);
        }
        const double g = scale_[j];
        return std::log(a) + a * std::log(g) - (a + 1.0) * std::log(data_.z[i] + g);
    }

    double q_component(int j) const {
        double q = 0.0;
        for (int i = 0; i < n_; ++i) {
            const double v = resp_(i, j);
            if (v > 0.0) q += v * log_density(i, j);
        }
        return q;
    }

    double update_coefficients(int j) {
        Eigen::VectorXd score = Eigen::VectorXd::Zero(q_);
        Eigen::MatrixXd info = Eigen::MatrixXd::Zero(q_, q_);
        const double a = tail_[j], g = a - 1.0;
        for (int i = 0; i < n_; ++i) {
            const double v = resp_(i, j);
            if (v <= 0.0) continue;
            const double s = data_.z[i] * std::exp(-wd_(i, j));
            score.noalias() +=
                v * (-1.0 + (a + 1.0) * s / (s + g)) * data_.W.row(i).transpose();
            info.noalias() += v * (a + 1.0) * g * s / ((s + g) * (s + g)) *
                              data_.W.row(i).transpose() * data_.W.row(i);
        }
        const double tr = info.trace();
        if (!(tr > 0.0) || !std::isfinite(tr)) return 0.0;
        info.diagonal().array() += 1e-8 * tr / q_;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(info);
        Eigen::VectorXd delta = ldlt.solve(score);
        if (ldlt.info() != Eigen::Success || !delta.allFinite())
            throw SingularInformationError("em_fit_pareto: information not invertible");
        const double q0 = q_component(j);
        const Eigen::RowVectorXd saved = D_.row(j);
        double damp = cfg_.irls_step_damping;
        for (int half = 0; half < 40; ++half) {
            D_.row(j) = saved + damp * delta.transpose();
            wd_.col(j) = data_.W * D_.row(j).transpose();
            const double q1 = q_component(j);
            if (q1 >= q0 - 1e-12 * (1.0 + std::fabs(q0))) return std::fabs(q1 - q0);
            damp *= 0.5;
        }
        D_.row(j) = saved;
        wd_.col(j) = data_.W * D_.row(j).transpose();
        return 0.0;
    }

    // tail update for the regression form, on theta = log(tail - 1)
    double update_tail_regression(int j) {
        const double a = tail_[j], g = a - 1.0;
        double score_a = 0.0, hess_a = 0.0;
        for (int i = 0; i < n_; ++i) {
            const double v = resp_(i, j);
            if (v <= 0.0) continue;
            const double s = data_.z[i] * std::exp(-wd_(i, j));
            const double d = s + g;
            score_a += v * (1.0 / a + std::log(g) + a / g - std::log(d) - (a + 1.0) / d);
            hess_a += v * (-1.0 / (a * a) + 1.0 / g - 1.0 / (g * g) - 1.0 / d -
                           (s - 2.0) / (d * d));
        }
        const double score_t = g * score_a;
        double info_t = -(g * score_a + g * g * hess_a);
        info_t += 1e-8 * std::fabs(info_t);
        if (!(info_t > 0.0) || !std::isfinite(info_t)) info_t = std::max(std::fabs(score_t), 1.0);
        double step = std::clamp(cfg_.irls_step_damping * score_t / info_t, -2.0, 2.0);
        const double q0 = q_component(j);
        const double saved = tail_[j];
        for (int half = 0; half < 40; ++half) {
            tail_[j] = std::min(1.0 + (saved - 1.0) * std::exp(step), tail_cap_);
            const double q1 = q_component(j);
            if (q1 >= q0 - 1e-12 * (1.0 + std::fabs(q0))) return std::fabs(q1 - q0);
            step *= 0.5;
        }
        tail_[j] = saved;
        return 0.0;
    }

    // joint (log tail, log scale) Newton for the distribution form
    double update_tail_scale(int j) {
        const double a = tail_[j], g = scale_[j];
        double s_a = 0.0, s_g = 0.0, h_aa = 0.0, h_gg = 0.0, h_ag = 0.0;
        for (int i = 0; i < n_; ++i) {
            const double v = resp_(i, j);
            if (v <= 0.0) continue;
            const double d = data_.z[i] + g;
            s_a += v * (1.0 / a + std::log(g) - std::log(d));
            s_g += v * (a / g - (a + 1.0) / d);
            h_aa += v * (-1.0 / (a * a));
            h_gg += v * (-a / (g * g) + (a + 1.0) / (d * d));
            h_ag += v * (1.0 / g - 1.0 / d);
        }
        Eigen::Vector2d score(a * s_a, g * s_g);
        Eigen::Matrix2d info;
        info(0, 0) = -(a * s_a + a * a * h_aa);
        info(1, 1) = -(g * s_g + g * g * h_gg);
        info(0, 1) = info(1, 0) = -(a * g * h_ag);
        const double tr = info.trace();
        if (!std::isfinite(tr)) return 0.0;
        info.diagonal().array() += 1e-8 * std::fabs(tr) + 1e-12;
        Eigen::Vector2d delta = info.ldlt().solve(score);
        if (!delta.allFinite()) throw SingularInformationError("em_fit_pareto: singular information");
        delta = delta.cwiseMax(-2.0).cwiseMin(2.0);
        const double q0 = q_component(j);
        const double saved_a = a, saved_g = g;
        double damp = cfg_.irls_step_damping;
        for (int half = 0; half < 40; ++half) {
            tail_[j] = std::min(saved_a * std::exp(damp * delta[0]), tail_cap_);
            scale_[j] = saved_g * std::exp(damp * delta[1]);
            const double q1 = q_component(j);
            if (q1 >= q0 - 1e-12 * (1.0 + std::fabs(q0))) return std::fabs(q1 - q0);
            damp *= 0.5;
        }
        tail_[j] = saved_a;
        scale_[j] = saved_g;
        return 0.0;
    }

    void update_degeneracy_flags() {
        for (int j = 0; j < m_; ++j) {
            const double mass = resp_.col(j).sum();
            if (mass < 1e-3 * n_)
                ++low_mass_streak_[j];
            else
                low_mass_streak_[j] = 0;
            if ((low_mass_streak_[j] >= 3 || tail_[j] >= tail_cap_) && !frozen_[j]) {
                frozen_[j] = true;
                degenerate_list_.push_back(j);
            }
        }
    }
};

inline FitResult run_pareto_em(const SeverityData& data, int m, bool regression,
                               const FitConfig& cfg, const std::string& family, int df) {
    if (data.n() < 10 * df)
        throw DataTooSmallError("em_fit_pareto: need at least 10 observations per free parameter");
    std::optional<FitResult> best;
    for (int restart = 0; restart <= cfg.n_restarts; ++restart) {
        ParetoMixtureFitter fitter(data, m, regression, cfg);
        const std::uint64_t restart_seed = Rng(cfg.seed, 2000 + restart).next_u64();
        fitter.initialize(restart_seed, restart == 0 ? cfg.init_strategy
                                                     : FitConfig::Init::random_responsibilities);
        FitResult result;
        result.family = family;
        result.df = df;
        result.n_obs = data.n();
        fitter.m_step();
        double prev_ll = -std::numeric_limits<double>::infinity();
        for (int iter = 0; iter < cfg.max_iter; ++iter) {
            const double ll = fitter.e_step();
            result.loglik_trace.push_back(ll);
            result.iterations = iter + 1;
            if (std::fabs(ll - prev_ll) < cfg.loglik_tol) {
                result.converged = true;
                break;
            }
            prev_ll = ll;
            fitter.m_step();
            result.complete_data_trace.push_back(fitter.complete_data_loglik());
        }
        if (regression)
            result.params = fitter.regression_params();
        else
            result.params = fitter.distribution_params();
        result.responsibilities = fitter.responsibilities();
        result.degenerate_components = fitter.degenerate_components();
        if (fitter.tail_pinned() &&
            result.degenerate_components.empty())
            result.degenerate_components.push_back(-1); // tail pinned at the cap
        if (!best || result.loglik() > best->loglik()) best = std::move(result);
    }
    return std::move(*best);
}

} // namespace detail

inline FitResult em_fit_pareto_reg(const SeverityData& data, int m, const FitConfig& cfg = {}) {
    const int df = (m - 1) + m * (1 + static_cast<int>(data.W.cols()));
    return detail::run_pareto_em(data, m, true, cfg, "pareto_reg", df);
}

inline FitResult em_fit_pareto_dist(const std::vector<double>& z, int m,
                                    const FitConfig& cfg = {}) {
    SeverityData data;
    data.W = Eigen::MatrixXd::Ones(static_cast<Eigen::Index>(z.size()), 1);
    data.z = Eigen::Map<const Eigen::VectorXd>(z.data(), static_cast<Eigen::Index>(z.size()));
    const int df = (m - 1) + 2 * m;
    return detail::run_pareto_em(data, m, false, cfg, "pareto_dist", df);
}

inline Eigen::MatrixXd pareto_reg_coef_se(const SeverityData& data, const ParetoRegParams& params,
                                          const FitConfig& cfg = {}) {
    detail::ParetoMixtureFitter fitter(data, params.component_count(), true, cfg);
    fitter.set_regression_params(params);
    fitter.e_step();
    return fitter.coef_standard_errors();
}

// per-claim mixture Pareto regression log density (with the change-of-variable
// factor exp(-w coef) so it is a proper density in z)
inline double pareto_reg_log_pdf(double z, const Eigen::RowVectorXd& w,
                                 const ParetoRegParams& p) {
    if (!(z > 0.0)) throw std::domain_error("pareto_reg_log_pdf: z must be positive");
    std::vector<double> terms(p.component_count());
    for (int j = 0; j < p.component_count(); ++j) {
        const double a = p.tail_indices[j], g = a - 1.0;
        const double b = w.dot(p.coef.row(j));
        const double s = z * std::exp(-b);
        terms[j] = (p.weights[j] > 0.0 ? std::log(p.weights[j]) : neg_inf) - b + std::log(a) +
                   a * std::log(g) - (a + 1.0) * std::log(s + g);
    }
    return log_sum_exp(terms);
}

// ---- fit serialization, tagged "kinbm-fit-v1" --------------------------------

inline constexpr const char* fit_version_tag = "kinbm-fit-v1";

inline void to_json(nlohmann::json& j, const KinbmRegParams& p) {
    std::vector<std::vector<double>> coef(p.coef.rows());
    for (Eigen::Index r = 0; r < p.coef.rows(); ++r)
        coef[r].assign(p.coef.row(r).data(), p.coef.row(r).data() + p.coef.cols());
    j = {{"version", params_version_tag},
         {"type", "kinbm_reg"},
         {"k", p.k},
         {"inflated", p.inflated},
         {"omega", p.omega},
         {"shapes", p.shapes},
         {"coef", coef}};
}

inline void from_json(const nlohmann::json& j, KinbmRegParams& p) {
    if (j.value("version", "") != params_version_tag)
        throw std::invalid_argument("KinbmRegParams: missing or unknown version tag");
    const auto coef_rows = j.at("coef").get<std::vector<std::vector<double>>>();
    Eigen::MatrixXd coef(coef_rows.size(), coef_rows.empty() ? 0 : coef_rows[0].size());
    for (std::size_t r = 0; r < coef_rows.size(); ++r)
        coef.row(static_cast<Eigen::Index>(r)) = Eigen::Map<const Eigen::RowVectorXd>(
            coef_rows[r].data(), static_cast<Eigen::Index>(coef_rows[r].size()));
    p = KinbmRegParams(j.at("k").get<int>(), j.at("inflated").get<bool>(),
                       j.at("omega").get<std::vector<double>>(),
                       j.at("shapes").get<std::vector<double>>(), std::move(coef));
}

inline void to_json(nlohmann::json& j, const ParetoRegParams& p) {
    std::vector<std::vector<double>> coef(p.coef.rows());
    for (Eigen::Index r = 0; r < p.coef.rows(); ++r)
        coef[r].assign(p.coef.row(r).data(), p.coef.row(r).data() + p.coef.cols());
    j = {{"version", params_version_tag},
         {"type", "pareto_reg"},
         {"rho", p.weights},
         {"alpha", p.tail_indices},
         {"coef", coef}};
}

inline void from_json(const nlohmann::json& j, ParetoRegParams& p) {
    if (j.value("version", "") != params_version_tag)
        throw std::invalid_argument("ParetoRegParams: missing or unknown version tag");
    const auto coef_rows = j.at("coef").get<std::vector<std::vector<double>>>();
    Eigen::MatrixXd coef(coef_rows.size(), coef_rows.empty() ? 0 : coef_rows[0].size());
    for (std::size_t r = 0; r < coef_rows.size(); ++r)
        coef.row(static_cast<Eigen::Index>(r)) = Eigen::Map<const Eigen::RowVectorXd>(
            coef_rows[r].data(), static_cast<Eigen::Index>(coef_rows[r].size()));
    p = ParetoRegParams(j.at("rho").get<std::vector<double>>(),
                        j.at("alpha").get<std::vector<double>>(), std::move(coef));
}

inline void to_json(nlohmann::json& j, const FitResult& r) {
    nlohmann::json params;
    std::visit([&params](const auto& p) { params = p; }, r.params);
    j = {{"version", fit_version_tag},
         {"family", r.family},
         {"params", params},
         {"loglik_trace", r.loglik_trace},
         {"complete_data_trace", r.complete_data_trace},
         {"converged", r.converged},
         {"iterations", r.iterations},
         {"df", r.df},
         {"n_obs", r.n_obs},
         {"degenerate_components", r.degenerate_components}};
}

inline void from_json(const nlohmann::json& j, FitResult& r) {
    if (j.value("version", "") != fit_version_tag)
        throw std::invalid_argument("FitResult: missing or unknown version tag");
    r.family = j.at("family").get<std::string>();
    const std::string type = j.at("params").at("type").get<std::string>();
    if (type == "kinbm")
        r.params = j.at("params").get<KinbmParams>();
    else if (type == "kinbm_reg")
        r.params = j.at("params").get<KinbmRegParams>();
    else if (type == "pareto_mix")
        r.params = j.at("params").get<ParetoMixParams>();
    else if (type == "pareto_reg")
        r.params = j.at("params").get<ParetoRegParams>();
    else
        throw std::invalid_argument("FitResult: unknown params type " + type);
    r.loglik_trace = j.at("loglik_trace").get<std::vector<double>>();
    r.complete_data_trace = j.value("complete_data_trace", std::vector<double>{});
    r.converged = j.at("converged").get<bool>();
    r.iterations = j.at("iterations").get<int>();
    r.df = j.at("df").get<int>();
    r.n_obs = j.at("n_obs").get<int>();
    r.degenerate_components = j.value("degenerate_components", std::vector<int>{});
}

} // namespace kinbm
