#pragma once
#include <optional>
#include <string>
#include <vector>

#include "hlmgibbs/model.hpp"

namespace hlm {

struct DeltaValue {
    double value = 0;
    bool valid = false;
    std::string reason;  ///< why the entry is invalid; empty when valid
};

/** Drift-rate constants.  Index j runs over lambda_R prior components, l over lambda_D prior
 * components:
 *
 *     delta1[j] = sum_z_lev / (2 r_j1 + N - 2)
 *     delta2[l] = k / (2 d_l1 + k - 2)
 *     delta3[j] = sum_x_lev / (4 (2 r_j1 + N - 2))
 *     delta4[l] = (k + frob_z_sq) / (2 d_l1 + k - 2)
 *
 * Entries with a nonpositive denominator (or, for delta1, a singular Z^T Z) are marked invalid.
 */
struct DeltaTable {
    std::vector<DeltaValue> delta1, delta3;
    std::vector<DeltaValue> delta2, delta4;
    LeverageSums sums;
};

DeltaTable delta_constants(const ModelSpec& spec);
/// Same table from precomputed leverage sums, for designs too large to hold densely.
DeltaTable delta_constants(const LeverageSums& sums, Eigen::Index N, Eigen::Index k,
                           const std::vector<GammaComponent>& lambda_R_prior,
                           const std::vector<GammaComponent>& lambda_D_prior);

/** G_i(lambda) = sum_m [E_i(y_m - x_m beta - z_m u | lambda, y)]^2 + sum_m [E_i(u_m | lambda, y)]^2
 * where E_i is the expectation under mixture component i of xi | lambda, y.
 */
double g_eval(const Posterior& post, const Precisions& lambda, std::size_t component);
double g_eval(const ModelSpec& spec, const Precisions& lambda, std::size_t component);

enum class KProvenance {
    analytic_Z0,           ///< no random effects: G_i <= max(y^T y, max_i |y - X b_i|^2)
    analytic_nonsingular,  ///< b_i = 0, Z^T Z nonsingular: G_i <= y^T y + y^T Z (Z^T Z)^{-2} Z^T y
    numeric_search,        ///< grid + golden-section maximum, not a proof
};

std::string to_string(KProvenance p);

/** Uniform bound on G_i over lambda and i.  `g_bound` bounds G itself and `K` is its square root,
 * so G_i(lambda) <= K^2 = g_bound.
 */
struct KBound {
    double K = 0;
    double g_bound = 0;
    KProvenance provenance = KProvenance::numeric_search;
    bool rigorous = false;
    /// log10 of the maximizing (lambda_R[, lambda_D]) for numeric searches
    std::vector<double> argmax_log10_lambda;
};

/** Analytic bound when one applies, otherwise a numeric maximization of max_i G_i over
 * log10 lambda in [-8, 8] (65 grid points per axis, then coordinate-wise golden-section
 * refinement), returned as maximum × (1 + 1e-6) and flagged non-rigorous.  Throws
 * UnboundedSuspectedError when the grid maximum sits on the box edge and is still increasing.
 */
KBound k_bound(const Posterior& post);
KBound k_bound(const ModelSpec& spec);

/// Named inequality `lhs > rhs`.
struct Condition {
    std::string name;
    double lhs;
    double rhs;
    bool holds;
    double margin() const { return lhs - rhs; }
};

struct DriftCase {
    bool applicable = false;
    std::vector<Condition> conditions;
    std::optional<double> gamma;  ///< max of the case's deltas, when all are valid
    std::optional<double> L;      ///< needs gamma and a finite G bound
};

enum class Verdict { certified_geometric, not_certified };
std::string to_string(Verdict v);

/** Drift certificate for V(xi) = v1(xi) + v2(xi).
 *
 * Case 1 needs Z^T Z nonsingular, d_l1 > 1 and r_j1 > max(0, (sum_z_lev - N + 2)/2); its rate is
 * gamma = max_{j,l}{delta1, delta2} with
 *     L = sum_i x_i B^{-1} x_i^T + max_{j,l}{2 r_j2 delta1_j + 2 d_l2 delta2_l} + sup G.
 * Case 2 needs r_j1 > max(0, (sum_x_lev/4 - N + 2)/2) and d_l1 > (2 + frob_z_sq)/2; its rate is
 * gamma = max_{j,l}{delta3, delta4} with the leverage term of L scaled by 1/4.
 * For k = 0 all lambda_D conditions and terms are vacuous and Z^T Z counts as nonsingular.
 *
 * The chain is certified geometrically ergodic when either case applies and G is bounded.
 */
struct DriftReport {
    DeltaTable deltas;
    std::optional<KBound> k;
    std::string k_failure;  ///< why no bound on G was found
    double sum_x_binv = 0;  ///< sum_i x_i B^{-1} x_i^T
    DriftCase case1, case2;
    Verdict verdict = Verdict::not_certified;
    std::vector<std::string> reasons;

    bool certified() const { return verdict == Verdict::certified_geometric; }
    /// The smallest gamma among applicable cases.
    std::optional<double> best_gamma() const;
};

DriftReport drift_certificate(const Posterior& post);
DriftReport drift_certificate(const ModelSpec& spec);

}
