#include "hlmgibbs/eb_pipeline.hpp"

#include <Eigen/QR>
#include <cmath>
#include <string>

#include "hlmgibbs/random.hpp"

namespace hlm {

LeastSquaresFit least_squares(const MatrixXd& X, const VectorXd& y) {
    if (X.rows() != y.size()) throw DimensionError("least_squares: X rows differ from y length");
    if (X.rows() <= X.cols()) throw DimensionError("least_squares: need more observations than columns");

    Eigen::ColPivHouseholderQR<MatrixXd> qr(X);
    qr.setThreshold(static_cast<double>(X.rows()) * 1e-12);
    if (qr.rank() < X.cols()) throw ValidationError("least_squares: X is rank deficient");

    LeastSquaresFit fit;
    fit.estimates = qr.solve(y);
    const VectorXd resid = y - X * fit.estimates;
    fit.sse = resid.squaredNorm();
    fit.df = X.rows() - X.cols();
    fit.mse = fit.sse / static_cast<double>(fit.df);
    fit.exact_fit = fit.sse <= 1e-24 * std::max(1.0, y.squaredNorm());
    if (fit.exact_fit) fit.mse = 0.0;
    const MatrixXd xtx_inv = spd_inverse(MatrixXd(X.transpose() * X), "X^T X");
    fit.standard_errors = (fit.mse * xtx_inv.diagonal().array()).sqrt().matrix();
    return fit;
}

VarianceRounding parse_variance_rounding(std::string_view text) {
    if (text == "none") return VarianceRounding::none;
    if (text == "nearest") return VarianceRounding::nearest;
    if (text == "ceil") return VarianceRounding::ceil;
    throw std::invalid_argument("unknown rounding '" + std::string(text) + "'");
}

EmpiricalBayesPrior derive_hyperparameters(const LeastSquaresFit& fit, const HyperparameterOptions& options) {
    if (!(fit.mse > 0) || fit.exact_fit)
        throw DomainError("derive_hyperparameters: mse must be positive (exact fit?)");
    if (!(options.lambda_R_variance > 0)) throw DomainError("lambda_R prior variance must be positive");

    EmpiricalBayesPrior prior;
    prior.b = fit.estimates;
    prior.B_inv_diag = fit.standard_errors.array().square().matrix();
    switch (options.rounding) {
        case VarianceRounding::none: break;
        case VarianceRounding::nearest: prior.B_inv_diag = prior.B_inv_diag.array().round().matrix(); break;
        case VarianceRounding::ceil: prior.B_inv_diag = prior.B_inv_diag.array().ceil().matrix(); break;
    }
    if ((prior.B_inv_diag.array() <= 0).any())
        throw DomainError("derived prior variance is not positive (rounded to zero?)");
    prior.B = prior.B_inv_diag.cwiseInverse().asDiagonal();
    prior.r2 = 1.0 / (fit.mse * options.lambda_R_variance);
    prior.r1 = prior.r2 / fit.mse;
    return prior;
}

ModelSpec assemble_reduced_model(const LeastSquaresFit& fit, const MatrixXd& X, const VectorXd& y,
                                 const HyperparameterOptions& options) {
    const auto prior = derive_hyperparameters(fit, options);
    ModelSpec spec;
    spec.y = y;
    spec.X = X;
    spec.Z = MatrixXd(X.rows(), 0);
    spec.beta_prior = {{1.0, prior.b}};
    spec.B = prior.B;
    spec.lambda_R_prior = {{1.0, prior.r1, prior.r2}};
    require_valid(spec);
    return spec;
}

VectorXd center_and_scale(const VectorXd& x, double divisor) {
    if (divisor == 0) throw DomainError("center_and_scale: divisor must be nonzero");
    return (x.array() - x.mean()) / divisor;
}

HmoAnalogue synthetic_hmo_analogue(std::uint64_t seed, Eigen::Index n) {
    RandomStream rng(seed);
    HmoAnalogue d;
    d.premium.resize(n);
    d.expense.resize(n);
    d.new_england.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        // roughly 1 plan in 12 is in New England, where expenses run higher
        const bool ne = rng.uniform() < 1.0 / 12.0;
        d.new_england(i) = ne ? 1.0 : 0.0;
        d.expense(i) = std::round(1800.0 + 650.0 * rng.normal() + (ne ? 500.0 : 0.0));
    }
    const double mean_expense = d.expense.mean();
    for (Eigen::Index i = 0; i < n; ++i) {
        d.premium(i) = 165.0 + 3.9 * (d.expense(i) - mean_expense) / 1000.0 +
                       32.8 * d.new_england(i) + 23.79 * rng.normal();
        d.premium(i) = std::round(d.premium(i) * 100.0) / 100.0;
    }
    return d;
}

void hmo_design(const HmoAnalogue& data, MatrixXd& X, VectorXd& y) {
    const auto n = data.premium.size();
    X.resize(n, 3);
    X.col(0).setOnes();
    X.col(1) = center_and_scale(data.expense, 1000.0);
    X.col(2) = data.new_england;
    y = data.premium;
}

}
