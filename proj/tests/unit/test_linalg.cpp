#include <doctest.h>

#include <random>

#include "hlmgibbs/errors.hpp"
#include "hlmgibbs/linalg.hpp"
#include "oracles.hpp"

using Eigen::MatrixXd;
using Eigen::VectorXd;

TEST_CASE("woodbury quadratic, identity case") {
    const MatrixXd I = MatrixXd::Identity(2, 2);
    const auto q = hlm::woodbury_quadratic(I, I, I, VectorXd::Unit(2, 0));
    CHECK(q.full == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(q.bound == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("quarter-sum bound is attained when both matrices agree") {
    const MatrixXd A = 2 * MatrixXd::Identity(2, 2);
    const auto q = hlm::quarter_sum_quadratic(A, A, VectorXd::Ones(2));
    CHECK(q.full == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(q.bound == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("woodbury matches a dense inverse on random 3x3 instances") {
    std::mt19937_64 eng(11);
    std::normal_distribution<double> normal;
    for (int rep = 0; rep < 200; ++rep) {
        const MatrixXd A = oracle::random_spd(eng, 3);
        const MatrixXd C = oracle::random_spd(eng, 2);
        MatrixXd U(3, 2);
        for (int i = 0; i < 6; ++i) U.data()[i] = normal(eng);
        VectorXd x(3);
        for (int i = 0; i < 3; ++i) x(i) = normal(eng);
        const auto q = hlm::woodbury_quadratic(A, U, C, x);
        const double direct = x.dot((A + U * C * U.transpose()).fullPivLu().inverse() * x);
        CHECK(std::abs(q.full - direct) <= 1e-10 * std::abs(direct));
        CHECK(q.full <= q.bound * (1 + 1e-12));
    }
}

TEST_CASE("matrix inequalities hold on random instances") {
    std::mt19937_64 eng(12);
    std::normal_distribution<double> normal;
    std::uniform_int_distribution<int> dim(1, 6);
    for (int rep = 0; rep < 1000; ++rep) {
        const int n = dim(eng), s = dim(eng);
        const MatrixXd A = oracle::random_spd(eng, n);
        const MatrixXd C = oracle::random_spd(eng, s);
        const MatrixXd C2 = oracle::random_spd(eng, n);
        MatrixXd U(n, s);
        for (int i = 0; i < n * s; ++i) U.data()[i] = normal(eng);
        VectorXd x(n);
        for (int i = 0; i < n; ++i) x(i) = normal(eng);
        const auto w = hlm::woodbury_quadratic(A, U, C, x);
        CHECK(w.full <= w.bound + 1e-10 * std::abs(w.bound));
        const auto q = hlm::quarter_sum_quadratic(A, C2, x);
        CHECK(q.full <= q.bound + 1e-10 * std::abs(q.bound));
    }
}

TEST_CASE("templates work for other scalar types") {
    const Eigen::Matrix2f A = Eigen::Matrix2f::Identity();
    const auto q = hlm::woodbury_quadratic(A, A, A, Eigen::Vector2f(1, 0));
    CHECK(q.full == doctest::Approx(0.5f));
    const Eigen::Matrix<long double, 2, 2> L = Eigen::Matrix<long double, 2, 2>::Identity() * 2;
    const auto r = hlm::quarter_sum_quadratic(L, L, Eigen::Matrix<long double, 2, 1>(1, 1));
    CHECK(static_cast<double>(r.full) == doctest::Approx(0.5));
}

TEST_CASE("row quadratic sum is the trace of the hat matrix") {
    std::mt19937_64 eng(13);
    std::normal_distribution<double> normal;
    MatrixXd X(40, 4);
    for (int i = 0; i < X.size(); ++i) X.data()[i] = normal(eng);
    const MatrixXd XtX = X.transpose() * X;
    CHECK(hlm::row_quadratic_sum(X, XtX) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(hlm::row_quadratic_sum(MatrixXd(5, 0), MatrixXd(0, 0)) == 0.0);
}

TEST_CASE("errors") {
    const MatrixXd I2 = MatrixXd::Identity(2, 2);
    const MatrixXd I3 = MatrixXd::Identity(3, 3);
    CHECK_THROWS_AS(hlm::woodbury_quadratic(I2, I3, I3, VectorXd::Ones(2)), hlm::DimensionError);
    CHECK_THROWS_AS(hlm::quarter_sum_quadratic(I2, I3, VectorXd::Ones(2)), hlm::DimensionError);
    MatrixXd S = MatrixXd::Zero(2, 2);
    S(0, 0) = 1;
    CHECK_THROWS_AS(hlm::woodbury_quadratic(S, I2, I2, VectorXd::Ones(2)), hlm::SingularityError);
    CHECK_THROWS_AS(hlm::spd_inverse(S), hlm::SingularityError);
}
