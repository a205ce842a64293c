#pragma once
#include <cstdint>
#include <string_view>

#include "hlmgibbs/model.hpp"

namespace hlm {

/// Ordinary least squares fit of y on X.
struct LeastSquaresFit {
    VectorXd estimates;
    VectorXd standard_errors;  ///< sqrt(mse * [(X^T X)^{-1}]_ii)
    double sse = 0;
    double mse = 0;  ///< sse / df
    Eigen::Index df = 0;  ///< N - p
    bool exact_fit = false;  ///< residuals vanish (mse == 0 up to round-off)
};

/// Throws DimensionError when N <= p and ValidationError for rank-deficient X.
LeastSquaresFit least_squares(const MatrixXd& X, const VectorXd& y);

/// How prior variances of beta are derived from the squared standard errors.
enum class VarianceRounding { none, nearest, ceil };
VarianceRounding parse_variance_rounding(std::string_view text);

struct HyperparameterOptions {
    VarianceRounding rounding = VarianceRounding::none;
    double lambda_R_variance = 1.0;  ///< prior Var(lambda_R)
};

/** Empirical-Bayes hyperparameters: beta prior centred at the LS estimates with diagonal
 * covariance B^{-1} = diag(SE_i^2) (optionally rounded), and a Gamma(r1, r2) prior on lambda_R
 * with mean 1/mse and variance `lambda_R_variance`:
 *
 *     r1 / r2 = 1 / mse,  r1 / r2^2 = V   =>   r2 = 1 / (mse V),  r1 = r2 / mse.
 */
struct EmpiricalBayesPrior {
    VectorXd b;
    VectorXd B_inv_diag;
    MatrixXd B;
    double r1 = 0;
    double r2 = 0;
};

EmpiricalBayesPrior derive_hyperparameters(const LeastSquaresFit& fit,
                                           const HyperparameterOptions& options = {});

/// Single-component k = 0 model built from the derived prior; validated before it is returned.
ModelSpec assemble_reduced_model(const LeastSquaresFit& fit, const MatrixXd& X, const VectorXd& y,
                                 const HyperparameterOptions& options = {});

/// (x - mean(x)) / divisor, the covariate transform used before fitting.
VectorXd center_and_scale(const VectorXd& x, double divisor = 1000.0);

/** Synthetic stand-in for a 341-plan health-plan premium data set: average hospital expense per
 * admission in dollars, a New England indicator, and a monthly premium generated from
 * premium = 165 + 3.9 (expense - mean)/1000 + 32.8 new_england + N(0, 23.79^2).
 */
struct HmoAnalogue {
    VectorXd premium;
    VectorXd expense;
    VectorXd new_england;
};

HmoAnalogue synthetic_hmo_analogue(std::uint64_t seed, Eigen::Index n = 341);

/// Design matrix [1, (expense - mean)/1000, new_england] and response for the analogue data.
void hmo_design(const HmoAnalogue& data, MatrixXd& X, VectorXd& y);

}
