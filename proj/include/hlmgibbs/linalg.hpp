#pragma once
#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <string>

#include "hlmgibbs/errors.hpp"

namespace hlm {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/** Cholesky factorization that throws SingularityError instead of silently returning garbage.
 * `what` names the matrix in the error message.
 */
template <typename Derived>
Eigen::LLT<Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>>
checked_llt(const Eigen::MatrixBase<Derived>& A, const std::string& what = "matrix") {
    using Mat = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    Eigen::LLT<Mat> llt(A.derived());
    if (llt.info() != Eigen::Success)
        throw SingularityError(what + " is not numerically positive definite");
    return llt;
}

/// Inverse of an SPD matrix through its Cholesky factor.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>
spd_inverse(const Eigen::MatrixBase<Derived>& A, const std::string& what = "matrix") {
    using Mat = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    auto llt = checked_llt(A, what);
    return llt.solve(Mat::Identity(A.rows(), A.cols()));
}

/** Sum over rows of M of the quadratic forms m_i S^{-1} m_i^T, i.e. trace(M S^{-1} M^T), for
 * SPD S.  With S = M^T M this is the trace of the hat matrix.
 */
template <typename DerivedM, typename DerivedS>
typename DerivedM::Scalar row_quadratic_sum(const Eigen::MatrixBase<DerivedM>& M,
                                            const Eigen::MatrixBase<DerivedS>& S,
                                            const std::string& what = "matrix") {
    using Scalar = typename DerivedM::Scalar;
    if (M.cols() == 0) return Scalar(0);
    auto llt = checked_llt(S, what);
    // S^{-1} M^T, one column per row of M
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> W = llt.solve(M.transpose());
    return (M.derived().array() * W.transpose().array()).sum();
}

template <typename Scalar>
struct QuadraticComparison {
    Scalar full;   ///< the quadratic form being bounded
    Scalar bound;  ///< its upper bound
};

/** Evaluates x^T (A + U C U^T)^{-1} x through the Woodbury identity together with the bound
 * x^T A^{-1} x that it never exceeds (A, C SPD).  Only A and the small s×s capacitance matrix
 * C^{-1} + U^T A^{-1} U are factorized; A + U C U^T is never formed.
 */
template <typename DA, typename DU, typename DC, typename Dx>
QuadraticComparison<typename DA::Scalar> woodbury_quadratic(const Eigen::MatrixBase<DA>& A,
                                                            const Eigen::MatrixBase<DU>& U,
                                                            const Eigen::MatrixBase<DC>& C,
                                                            const Eigen::MatrixBase<Dx>& x) {
    using Scalar = typename DA::Scalar;
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
    if (A.rows() != A.cols() || U.rows() != A.rows() || C.rows() != C.cols() ||
        C.rows() != U.cols() || x.size() != A.rows())
        throw DimensionError("woodbury_quadratic: nonconformable arguments");

    auto llt_a = checked_llt(A, "A");
    const Vec a_inv_x = llt_a.solve(x.derived());
    const Mat a_inv_u = llt_a.solve(U.derived());
    Mat capacitance = spd_inverse(C, "C");
    capacitance.noalias() += U.transpose() * a_inv_u;
    const Vec w = U.transpose() * a_inv_x;
    auto llt_cap = checked_llt(capacitance, "capacitance matrix");

    const Scalar bound = x.dot(a_inv_x);
    const Scalar full = bound - w.dot(llt_cap.solve(w));
    return {full, bound};
}

/** x^T (A + C)^{-1} x together with its convexity bound (1/4) x^T (A^{-1} + C^{-1}) x for SPD
 * A, C of the same shape.  Equality holds at A = C.
 */
template <typename DA, typename DC, typename Dx>
QuadraticComparison<typename DA::Scalar> quarter_sum_quadratic(const Eigen::MatrixBase<DA>& A,
                                                               const Eigen::MatrixBase<DC>& C,
                                                               const Eigen::MatrixBase<Dx>& x) {
    using Scalar = typename DA::Scalar;
    using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
    if (A.rows() != A.cols() || C.rows() != A.rows() || C.cols() != A.cols() ||
        x.size() != A.rows())
        throw DimensionError("quarter_sum_quadratic: nonconformable arguments");

    const Mat sum = A.derived() + C.derived();
    auto llt_sum = checked_llt(sum, "A + C");
    auto llt_a = checked_llt(A, "A");
    auto llt_c = checked_llt(C, "C");
    const Scalar full = x.dot(llt_sum.solve(x.derived()));
    const Scalar bound =
        Scalar(0.25) * (x.dot(llt_a.solve(x.derived())) + x.dot(llt_c.solve(x.derived())));
    return {full, bound};
}

}
