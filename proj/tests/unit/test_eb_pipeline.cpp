#include <doctest.h>

#include <random>

#include "hlmgibbs/eb_pipeline.hpp"
#include "hlmgibbs/ergodicity.hpp"
#include "hlmgibbs/errors.hpp"
#include "hlmgibbs/output_analysis.hpp"
#include "oracles.hpp"

using hlm::MatrixXd;
using hlm::VectorXd;

namespace {

hlm::LeastSquaresFit fit_with_mse(double mse) {
    hlm::LeastSquaresFit f;
    f.estimates = VectorXd::Zero(1);
    f.standard_errors = VectorXd::Ones(1);
    f.mse = mse;
    f.df = 10;
    f.sse = 10 * mse;
    return f;
}

}

TEST_CASE("least squares, two observations on an intercept") {
    VectorXd y(2);
    y << 1, 3;
    const auto f = hlm::least_squares(MatrixXd::Ones(2, 1), y);
    CHECK(f.estimates(0) == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(f.df == 1);
    CHECK(f.sse == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(f.mse == doctest::Approx(2.0).epsilon(1e-15));
    CHECK(f.standard_errors(0) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_FALSE(f.exact_fit);
}

TEST_CASE("exact fit is flagged and refused by the hyperparameter step") {
    MatrixXd X(4, 2);
    X << 1, 0, 1, 1, 1, 2, 1, 3;
    const VectorXd y = X * VectorXd::Constant(2, 1.5);
    const auto f = hlm::least_squares(X, y);
    CHECK(f.exact_fit);
    CHECK(f.mse == 0.0);
    CHECK_THROWS_AS(hlm::derive_hyperparameters(f), hlm::DomainError);
}

TEST_CASE("residuals are orthogonal to the design") {
    std::mt19937_64 eng(41);
    std::normal_distribution<double> normal;
    for (int rep = 0; rep < 50; ++rep) {
        MatrixXd X(40, 1 + rep % 5);
        for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = normal(eng);
        VectorXd y(40);
        for (auto& v : y) v = normal(eng);
        const auto f = hlm::least_squares(X, y);
        const VectorXd r = y - X * f.estimates;
        CHECK((X.transpose() * r).norm() <= 1e-10 * y.norm() * X.norm());
        // against the normal equations
        const VectorXd ref = (X.transpose() * X).fullPivLu().solve(X.transpose() * y);
        CHECK((f.estimates - ref).norm() <= 1e-9 * (1 + ref.norm()));
        const MatrixXd cov = f.mse * (X.transpose() * X).inverse();
        CHECK((f.standard_errors.array().square() - cov.diagonal().array()).abs().maxCoeff() <= 1e-10 * cov.norm());
    }
}

TEST_CASE("least squares input errors") {
    CHECK_THROWS_AS(hlm::least_squares(MatrixXd::Ones(2, 2), VectorXd::Ones(2)), hlm::DimensionError);
    CHECK_THROWS_AS(hlm::least_squares(MatrixXd::Ones(3, 1), VectorXd::Ones(4)), hlm::DimensionError);
    MatrixXd X(5, 2);
    X << 1, 2, 1, 2, 1, 2, 1, 2, 1, 2;
    CHECK_THROWS_AS(hlm::least_squares(X, VectorXd::LinSpaced(5, 0, 1)), hlm::ValidationError);
}

TEST_CASE("lambda_R prior from the residual variance") {
    SUBCASE("mse = 23.79^2") {
        const double mse = 23.79 * 23.79;
        const auto p = hlm::derive_hyperparameters(fit_with_mse(mse));
        CHECK(p.r2 == doctest::Approx(0.0017669).epsilon(1e-4));
        CHECK(p.r1 == doctest::Approx(3.122e-6).epsilon(1e-3));
        CHECK(p.r1 / p.r2 == doctest::Approx(1 / mse).epsilon(1e-14));
        CHECK(p.r1 / (p.r2 * p.r2) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("mse = 1") {
        const auto p = hlm::derive_hyperparameters(fit_with_mse(1.0));
        CHECK(p.r1 == 1.0);
        CHECK(p.r2 == 1.0);
    }
    SUBCASE("gamma moments are reproduced for any mse and variance") {
        std::mt19937_64 eng(42);
        std::uniform_real_distribution<double> logu(-3, 3);
        for (int rep = 0; rep < 200; ++rep) {
            const double mse = std::pow(10.0, logu(eng));
            hlm::HyperparameterOptions opt;
            opt.lambda_R_variance = std::pow(10.0, logu(eng));
            const auto p = hlm::derive_hyperparameters(fit_with_mse(mse), opt);
            CHECK(std::abs(p.r1 / p.r2 - 1 / mse) <= 1e-12 / mse);
            CHECK(std::abs(p.r1 / (p.r2 * p.r2) - opt.lambda_R_variance) <= 1e-12 * opt.lambda_R_variance);
        }
    }
    SUBCASE("nonpositive variance") {
        hlm::HyperparameterOptions opt;
        opt.lambda_R_variance = 0;
        CHECK_THROWS_AS(hlm::derive_hyperparameters(fit_with_mse(1.0), opt), hlm::DomainError);
    }
}

TEST_CASE("rounding of prior variances") {
    auto f = fit_with_mse(4.0);
    f.estimates = VectorXd::Zero(3);
    f.standard_errors = VectorXd(3);
    f.standard_errors << std::sqrt(1.4), std::sqrt(2.6), std::sqrt(35.2);

    hlm::HyperparameterOptions opt;
    auto p = hlm::derive_hyperparameters(f, opt);
    CHECK(p.B_inv_diag(1) == doctest::Approx(2.6).epsilon(1e-14));
    opt.rounding = hlm::VarianceRounding::nearest;
    p = hlm::derive_hyperparameters(f, opt);
    CHECK(p.B_inv_diag == VectorXd((VectorXd(3) << 1, 3, 35).finished()));
    opt.rounding = hlm::VarianceRounding::ceil;
    p = hlm::derive_hyperparameters(f, opt);
    CHECK(p.B_inv_diag == VectorXd((VectorXd(3) << 2, 3, 36).finished()));
    CHECK(p.B.diagonal()(2) == doctest::Approx(1.0 / 36));

    f.standard_errors(0) = 0.1;
    opt.rounding = hlm::VarianceRounding::nearest;
    CHECK_THROWS_AS(hlm::derive_hyperparameters(f, opt), hlm::DomainError);

    CHECK(hlm::parse_variance_rounding("ceil") == hlm::VarianceRounding::ceil);
    CHECK_THROWS_AS(hlm::parse_variance_rounding("floor"), std::invalid_argument);
}

TEST_CASE("centering and scaling") {
    VectorXd x(4);
    x << 1000, 2000, 3000, 6000;
    const VectorXd c = hlm::center_and_scale(x);
    CHECK(c.sum() == doctest::Approx(0.0));
    CHECK(c(3) == doctest::Approx(3.0));
    CHECK(hlm::center_and_scale(x, 1.0)(0) == -2000.0);
    CHECK_THROWS_AS(hlm::center_and_scale(x, 0.0), hlm::DomainError);
}

TEST_CASE("health-plan analogue: assembled model is valid and certified") {
    const auto d = hlm::synthetic_hmo_analogue(20240601);
    CHECK(d.premium.size() == 341);
    const auto d2 = hlm::synthetic_hmo_analogue(20240601);
    CHECK(d.premium == d2.premium);
    CHECK(d.expense == d2.expense);
    CHECK(hlm::synthetic_hmo_analogue(20240602).premium != d.premium);

    MatrixXd X;
    VectorXd y;
    hlm::hmo_design(d, X, y);
    CHECK(X.cols() == 3);
    CHECK(X.col(1).sum() == doctest::Approx(0.0).epsilon(1e-12));
    const auto fit = hlm::least_squares(X, y);
    // generating coefficients are recovered within a few standard errors
    CHECK(std::abs(fit.estimates(0) - 165.0) < 4 * fit.standard_errors(0));
    CHECK(std::abs(fit.estimates(1) - 3.9) < 4 * fit.standard_errors(1));
    CHECK(std::abs(fit.estimates(2) - 32.8) < 4 * fit.standard_errors(2));
    CHECK(std::sqrt(fit.mse) == doctest::Approx(23.79).epsilon(0.1));

    hlm::HyperparameterOptions opt;
    opt.rounding = hlm::VarianceRounding::ceil;
    const auto s = hlm::assemble_reduced_model(fit, X, y, opt);
    CHECK(hlm::validate_model(s).passed());
    CHECK(s.k() == 0);
    CHECK(s.beta_prior[0].mean == fit.estimates);
    const auto r = hlm::drift_certificate(s);
    CHECK(r.certified());
    REQUIRE(r.k.has_value());
    CHECK(r.k->rigorous);
}

TEST_CASE("posterior mean under the derived prior matches quadrature") {
    std::mt19937_64 eng(43);
    std::normal_distribution<double> normal(10.0, 3.0);
    VectorXd y(30);
    for (auto& v : y) v = normal(eng);
    const MatrixXd X = MatrixXd::Ones(30, 1);
    const auto fit = hlm::least_squares(X, y);
    const auto s = hlm::assemble_reduced_model(fit, X, y);
    const oracle::ScalarConjugate oc(y, s.B(0, 0), fit.estimates(0), s.lambda_R_prior[0].shape,
                                     s.lambda_R_prior[0].rate);

    hlm::SamplerConfig cfg;
    cfg.seed = 44;
    cfg.initial_state = hlm::prior_mean_state(s);
    cfg.n_iterations = 100'000;
    cfg.functionals = {hlm::make_functional(s, "beta[0]"), hlm::make_functional(s, "lambda_R")};
    const auto sum = hlm::summarize_chain(hlm::run_chain(hlm::Posterior(s), cfg));
    CHECK(std::abs(sum.functionals[0].estimate - oc.posterior_mean_beta()) < 4 * sum.functionals[0].mcse);
    CHECK(std::abs(sum.functionals[1].estimate - oc.posterior_mean_lambda()) < 4 * sum.functionals[1].mcse);
}
