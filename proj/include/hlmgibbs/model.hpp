#pragma once
#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "hlmgibbs/linalg.hpp"

namespace hlm {

/// One component of the normal mixture prior on beta.  All components share the precision B.
struct BetaComponent {
    double weight;
    VectorXd mean;
};

/// One component of a gamma mixture prior; Gamma(shape, rate) has density ∝ w^{shape-1} e^{-rate w}.
struct GammaComponent {
    double weight;
    double shape;
    double rate;
};

/** Bayesian hierarchical general linear model
 *
 *     y | beta, u, lambda  ~ N_N(X beta + Z u, lambda_R^{-1} I)
 *     beta | lambda        ~ sum_i eta_i N_p(b_i, B^{-1})
 *     u | lambda           ~ N_k(0, lambda_D^{-1} I)
 *     lambda_R             ~ sum_j phi_j Gamma(r_j1, r_j2)
 *     lambda_D             ~ sum_l psi_l Gamma(d_l1, d_l2)
 *
 * A model with k = Z.cols() == 0 has no random effects: u, lambda_D and lambda_D_prior are
 * structurally absent.
 */
struct ModelSpec {
    VectorXd y;
    MatrixXd X;
    MatrixXd Z;  ///< N×k; k = 0 for the reduced model
    std::vector<BetaComponent> beta_prior;
    MatrixXd B;  ///< shared prior precision of beta (p×p SPD)
    std::vector<GammaComponent> lambda_R_prior;
    std::vector<GammaComponent> lambda_D_prior;  ///< empty iff k == 0

    Eigen::Index N() const { return y.size(); }
    Eigen::Index p() const { return X.cols(); }
    Eigen::Index k() const { return Z.cols(); }
    bool hasRandomEffects() const { return Z.cols() > 0; }
};

/// Precision block lambda = (lambda_R, lambda_D); lambda_D is absent for k = 0 models.
struct Precisions {
    double lambda_R;
    std::optional<double> lambda_D;
};

/// Location block xi = (u, beta).
struct XiBlock {
    VectorXd u;
    VectorXd beta;
};

/// Current state (xi, lambda) of the two-block Gibbs chain.
struct ChainState {
    VectorXd u;
    VectorXd beta;
    double lambda_R = 1.0;
    std::optional<double> lambda_D;

    XiBlock xi() const { return {u, beta}; }
    Precisions lambda() const { return {lambda_R, lambda_D}; }
};

/// Throws std::invalid_argument unless the state has the model's shape, positive precisions and finite entries.
void check_state(const ModelSpec& spec, const ChainState& state);

/** Parameters of xi | lambda, y.  The two covariance blocks are independent (X^T Z = 0), so no
 * cross-block term exists.  `means[i]` is the (u, beta) mean of mixture component i and
 * `weights` are the beta-prior weights, unchanged by conditioning.
 */
struct ConditionalXiParams {
    MatrixXd cov_u;     ///< (lambda_R Z^T Z + lambda_D I_k)^{-1}
    MatrixXd cov_beta;  ///< (lambda_R X^T X + B)^{-1}
    std::vector<XiBlock> means;
    std::vector<double> weights;
};

struct ValidationCheck {
    std::string name;
    bool passed;
    double measured;     ///< the quantity the check was decided on
    double threshold;    ///< tolerance / bound it was compared against (NaN when not numeric)
    std::string detail;
};

struct ValidationReport {
    std::vector<ValidationCheck> checks;

    bool passed() const;
    /// The check with the given name, or nullptr.
    const ValidationCheck* find(const std::string& name) const;
};

/** Checks every model invariant and reports each with its measured value.  Throws DimensionError
 * if the pieces do not fit together at all (those are not report entries).
 */
ValidationReport validate_model(const ModelSpec& spec);

/// Like validate_model, but throws ValidationError listing the failed checks.
void require_valid(const ModelSpec& spec);

/// Residual sum of squares v1 = |y - X beta - Z u|^2 and v2 = |u|^2; V = v1 + v2 is the drift function.
struct DriftValues {
    double v1;
    double v2;
    double V() const { return v1 + v2; }
};

DriftValues drift_v(const ModelSpec& spec, const XiBlock& xi);
inline DriftValues drift_v(const ModelSpec& spec, const ChainState& state) {
    return drift_v(spec, state.xi());
}

/** Data summaries reused by every conditional draw: X^T X, Z^T Z, X^T y, Z^T y, y^T y and
 * B b_i.  Building one costs O(N (p + k)^2); after that the per-iteration work is two small
 * Cholesky factorizations.
 */
class Posterior {
    public:
        /// Validates the model (throws ValidationError) and precomputes the summaries.
        explicit Posterior(ModelSpec spec);

        const ModelSpec& spec() const { return spec_; }
        const MatrixXd& XtX() const { return xtx_; }
        const MatrixXd& ZtZ() const { return ztz_; }
        const VectorXd& Xty() const { return xty_; }
        const VectorXd& Zty() const { return zty_; }
        double yty() const { return yty_; }
        /// B b_i for each beta-prior component
        const std::vector<VectorXd>& Bb() const { return bb_; }

    private:
        ModelSpec spec_;
        MatrixXd xtx_, ztz_;
        VectorXd xty_, zty_;
        double yty_;
        std::vector<VectorXd> bb_;
};

/** Cholesky factors of the two conditional precision matrices
 * lambda_R Z^T Z + lambda_D I and lambda_R X^T X + B, plus the component means.  This is the
 * form the sampler consumes; conditional_xi_params() inverts the factors for reporting.
 */
struct ConditionalXiFactors {
    Eigen::LLT<MatrixXd> prec_u;
    Eigen::LLT<MatrixXd> prec_beta;
    VectorXd mean_u;
    std::vector<VectorXd> mean_beta;  ///< one per beta-prior component
};

/// Throws SingularityError naming lambda if either block is not numerically SPD.
ConditionalXiFactors conditional_xi_factors(const Posterior& post, const Precisions& lambda);

ConditionalXiParams conditional_xi_params(const Posterior& post, const Precisions& lambda);
ConditionalXiParams conditional_xi_params(const ModelSpec& spec, const Precisions& lambda);

/** Leverage-type sums entering the drift constants.
 *
 * - `sum_x_lev`  = sum_i x_i (X^T X)^{-1} x_i^T  (= p for full-rank X)
 * - `sum_z_lev`  = sum_i z_i (Z^T Z)^{-1} z_i^T, absent when Z^T Z is singular; 0 when k = 0
 * - `frob_z_sq`  = sum_i z_i z_i^T
 */
struct LeverageSums {
    double sum_x_lev;
    std::optional<double> sum_z_lev;
    double frob_z_sq;
};

LeverageSums leverage_sums(const ModelSpec& spec);

/// Whether Z^T Z is numerically nonsingular (reciprocal condition estimate above 1e-12); true for k = 0.
bool ztz_nonsingular(const ModelSpec& spec);

/// Prior mean of (u, beta, lambda): u = 0, beta = sum eta_i b_i, lambda = mixture gamma means.
ChainState prior_mean_state(const ModelSpec& spec);

}
