#pragma once
// Reference implementations for tests.  Nothing here calls into the library's numerics: each
// oracle recomputes its quantity from the model definition with dense inverses and plain loops.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "hlmgibbs/model.hpp"

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/** Intercept-only model without random effects:
 *     y_i ~ N(beta, 1/lambda), beta ~ N(b0, 1/tau), lambda ~ Gamma(r1, r2).
 * Integrating beta out leaves a one-dimensional posterior for lambda, tabulated on a grid in
 * t = log(lambda) and integrated with the trapezoid rule.
 */
class ScalarConjugate {
    public:
        ScalarConjugate(VectorXd y, double tau, double b0, double r1, double r2, int grid = 40001)
            : y_(std::move(y)), tau_(tau), b0_(b0), r1_(r1), r2_(r2) {
            const double n = static_cast<double>(y_.size());
            ybar_ = y_.mean();
            ss_ = (y_.array() - ybar_).square().sum();
            auto log_density_t = [&](double t) {
                const double lam = std::exp(t);
                return (r1_ + 0.5 * n) * t - r2_ * lam - 0.5 * lam * ss_ - 0.5 * std::log(lam * n + tau_) -
                       0.5 * lam * n * tau_ / (lam * n + tau_) * (ybar_ - b0_) * (ybar_ - b0_);
            };
            // locate the bulk on a coarse grid, then tabulate finely around it
            double best_t = 0, best = -INFINITY;
            for (double t = -40; t <= 40; t += 0.01) {
                const double v = log_density_t(t);
                if (v > best) best = v, best_t = t;
            }
            double lo = best_t, hi = best_t;
            while (log_density_t(lo) > best - 60) lo -= 0.01;
            while (log_density_t(hi) > best - 60) hi += 0.01;
            t_.resize(grid);
            w_.resize(grid);
            const double h = (hi - lo) / (grid - 1);
            double total = 0;
            for (int g = 0; g < grid; ++g) {
                t_[g] = lo + h * g;
                w_[g] = std::exp(log_density_t(t_[g]) - best) * ((g == 0 || g == grid - 1) ? 0.5 : 1.0);
                total += w_[g];
            }
            for (auto& w : w_) w /= total;
            cdf_.resize(grid);
            std::partial_sum(w_.begin(), w_.end(), cdf_.begin());
        }

        double cond_mean(double lam) const {
            const double n = static_cast<double>(y_.size());
            return (lam * n * ybar_ + tau_ * b0_) / (lam * n + tau_);
        }
        double cond_var(double lam) const { return 1.0 / (lam * static_cast<double>(y_.size()) + tau_); }

        double posterior_mean_beta() const {
            double m = 0;
            for (std::size_t g = 0; g < t_.size(); ++g) m += w_[g] * cond_mean(std::exp(t_[g]));
            return m;
        }
        double posterior_var_beta() const {
            const double m = posterior_mean_beta();
            double v = 0;
            for (std::size_t g = 0; g < t_.size(); ++g) {
                const double lam = std::exp(t_[g]);
                v += w_[g] * (cond_var(lam) + (cond_mean(lam) - m) * (cond_mean(lam) - m));
            }
            return v;
        }
        double posterior_mean_lambda() const {
            double m = 0;
            for (std::size_t g = 0; g < t_.size(); ++g) m += w_[g] * std::exp(t_[g]);
            return m;
        }

        /// Exact posterior draw of (beta, lambda): lambda by grid inversion, then beta | lambda.
        template <typename Engine>
        std::pair<double, double> draw(Engine& eng) const {
            std::uniform_real_distribution<double> unif(0.0, 1.0);
            std::normal_distribution<double> normal(0.0, 1.0);
            const double u = unif(eng);
            const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
            const std::size_t g = std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), t_.size() - 1);
            double t = t_[g];
            if (g > 0 && cdf_[g] > cdf_[g - 1])
                t = t_[g - 1] + (t_[g] - t_[g - 1]) * (u - cdf_[g - 1]) / (cdf_[g] - cdf_[g - 1]);
            const double lam = std::exp(t);
            return {cond_mean(lam) + std::sqrt(cond_var(lam)) * normal(eng), lam};
        }

        hlm::ModelSpec spec() const {
            hlm::ModelSpec s;
            s.y = y_;
            s.X = MatrixXd::Ones(y_.size(), 1);
            s.Z = MatrixXd(y_.size(), 0);
            s.beta_prior = {{1.0, VectorXd::Constant(1, b0_)}};
            s.B = MatrixXd::Constant(1, 1, tau_);
            s.lambda_R_prior = {{1.0, r1_, r2_}};
            return s;
        }

    private:
        VectorXd y_;
        double tau_, b0_, r1_, r2_;
        double ybar_ = 0, ss_ = 0;
        std::vector<double> t_, w_, cdf_;
};

/// Batch means written out term by term from the estimator's definition.
struct BruteBatchMeans {
    std::size_t b = 0, a = 0;
    double sigma2 = 0;
};

inline BruteBatchMeans brute_batch_means(const std::vector<double>& x, double a_exponent) {
    BruteBatchMeans out;
    const std::size_t n = x.size();
    std::size_t b = 1;
    while (static_cast<double>(b + 1) <= std::pow(static_cast<double>(n), a_exponent) * (1 + 1e-15)) ++b;
    out.b = b;
    out.a = n / b;
    std::vector<double> means(out.a, 0.0);
    long double total = 0;
    for (std::size_t j = 0; j < out.a; ++j) {
        long double s = 0;
        for (std::size_t i = j * b; i < (j + 1) * b; ++i) s += x[i];
        means[j] = static_cast<double>(s / b);
        total += s;
    }
    const long double gbar = total / (out.a * b);
    long double ss = 0;
    for (double m : means) ss += (m - gbar) * (m - gbar);
    out.sigma2 = static_cast<double>(static_cast<long double>(b) / (out.a - 1) * ss);
    return out;
}

/** G(lambda) = g(lambda) + h(lambda) for b = 0, using the closed forms
 *     g = y'y - lR y'X Ag^-1 B Ag^-1 X'y - lR y'X Ag^-1 X'y,          Ag = lR X'X + B
 *     h = (lR^2 - lR lD) y'Z Ah^-2 Z'y - lR y'Z Ah^-1 Z'y,             Ah = lR Z'Z + lD I
 */
inline double g_plus_h(const hlm::ModelSpec& s, double lR, double lD) {
    const VectorXd& y = s.y;
    const MatrixXd Ag_inv = (lR * s.X.transpose() * s.X + s.B).fullPivLu().inverse();
    const VectorXd Xty = s.X.transpose() * y;
    const double g = y.dot(y) - lR * Xty.dot(Ag_inv * s.B * Ag_inv * Xty) - lR * Xty.dot(Ag_inv * Xty);
    double h = 0;
    if (s.Z.cols() > 0) {
        const MatrixXd Ah_inv =
            (lR * s.Z.transpose() * s.Z + lD * MatrixXd::Identity(s.Z.cols(), s.Z.cols())).fullPivLu().inverse();
        const VectorXd Zty = s.Z.transpose() * y;
        h = (lR * lR - lR * lD) * Zty.dot(Ah_inv * Ah_inv * Zty) - lR * Zty.dot(Ah_inv * Zty);
    }
    return g + h;
}

/// Random model with X'Z = 0 exactly up to rounding: X is projected off the column space of Z.
template <typename Engine>
hlm::ModelSpec random_spec(Engine& eng, int N, int p, int k, bool zero_prior_mean = true) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.5, 3.0);
    auto rnd = [&](int r, int c) {
        MatrixXd M(r, c);
        for (int i = 0; i < r; ++i)
            for (int j = 0; j < c; ++j) M(i, j) = normal(eng);
        return M;
    };
    hlm::ModelSpec s;
    s.Z = rnd(N, k);
    MatrixXd X = rnd(N, p);
    if (k > 0) {
        const MatrixXd Q = s.Z.householderQr().householderQ() * MatrixXd::Identity(N, k);
        X -= Q * (Q.transpose() * X);
    }
    s.X = X;
    s.y = rnd(N, 1).col(0) * 2.0;
    const MatrixXd R = rnd(p, p);
    s.B = R * R.transpose() + MatrixXd::Identity(p, p);
    s.beta_prior = {{1.0, zero_prior_mean ? VectorXd(VectorXd::Zero(p)) : VectorXd(rnd(p, 1).col(0))}};
    s.lambda_R_prior = {{1.0, unif(eng), unif(eng)}};
    if (k > 0) s.lambda_D_prior = {{1.0, unif(eng) + 1.0, unif(eng)}};
    return s;
}

/// Random symmetric positive definite n x n matrix with eigenvalues spread over a few decades.
template <typename Engine>
MatrixXd random_spd(Engine& eng, int n) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> logeig(-2.0, 2.0);
    MatrixXd G(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) G(i, j) = normal(eng);
    const MatrixXd Q = G.householderQr().householderQ();
    VectorXd d(n);
    for (int i = 0; i < n; ++i) d(i) = std::pow(10.0, logeig(eng));
    MatrixXd A = Q * d.asDiagonal() * Q.transpose();
    return 0.5 * (A + A.transpose());
}

/// AR(1) x_t = phi x_{t-1} + e_t, e_t ~ N(0, 1), started in stationarity.  Asymptotic variance of
/// the sample mean is 1 / (1 - phi)^2.
template <typename Engine>
std::vector<double> ar1(Engine& eng, std::size_t n, double phi) {
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> x(n);
    double prev = normal(eng) / std::sqrt(1 - phi * phi);
    for (std::size_t t = 0; t < n; ++t) {
        prev = phi * prev + normal(eng);
        x[t] = prev;
    }
    return x;
}

/// Balanced random intercept design: k subjects, m observations each, one within-subject
/// covariate centred to sum zero in every subject.
inline hlm::ModelSpec balanced_random_intercept(int k, int m, double r1, double d1, unsigned seed = 1) {
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const int N = k * m;
    hlm::ModelSpec s;
    s.Z = MatrixXd::Zero(N, k);
    s.X = MatrixXd::Zero(N, 1);
    s.y.resize(N);
    for (int i = 0; i < k; ++i) {
        const double a = normal(eng);
        for (int j = 0; j < m; ++j) {
            const int row = i * m + j;
            s.Z(row, i) = 1.0;
            s.X(row, 0) = j - 0.5 * (m - 1);
            s.y(row) = a + 0.5 * s.X(row, 0) + 0.7 * normal(eng);
        }
    }
    s.B = MatrixXd::Identity(1, 1);
    s.beta_prior = {{1.0, VectorXd::Zero(1)}};
    s.lambda_R_prior = {{1.0, r1, 1.0}};
    s.lambda_D_prior = {{1.0, d1, 1.0}};
    return s;
}

}
