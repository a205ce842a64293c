#pragma once
#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hlmgibbs/model.hpp"
#include "hlmgibbs/random.hpp"

namespace hlm {

/// Update order within one Gibbs iteration.
enum class ScanOrder {
    xi_then_lambda,  ///< (xi', lambda') -> (xi, lambda') -> (xi, lambda)
    lambda_then_xi,  ///< (xi', lambda') -> (xi', lambda) -> (xi, lambda)
};

std::string to_string(ScanOrder order);
/// Accepts "xi_then_lambda"/"xi-lambda" and "lambda_then_xi"/"lambda-xi".
ScanOrder parse_scan_order(std::string_view text);

/// A named real-valued function of the chain state whose trace is recorded.
struct Functional {
    std::string name;
    std::function<double(const ChainState&)> eval;
};

/** Builds a functional from its name: `beta[i]`, `u[i]`, `lambda_R`, `lambda_D` or `V` (the drift
 * function v1 + v2).  Throws std::invalid_argument for unknown names or out-of-range indices.
 */
Functional make_functional(const ModelSpec& spec, const std::string& name);

/// `beta[0]`, ..., `beta[p-1]`.
std::vector<Functional> beta_functionals(const ModelSpec& spec);

struct SamplerConfig {
    ScanOrder scan_order = ScanOrder::xi_then_lambda;
    std::uint64_t seed = 0;
    ChainState initial_state;
    std::size_t n_iterations = 1;
    std::vector<Functional> functionals;
};

/** Recorded traces: column f of `traces` is the trace of functionals[f], evaluated at states
 * 0, ..., n-1 where state 0 is the initial state.  `final_state` is state n, i.e. the state after
 * n Gibbs steps, so a chain resumed from it continues the same trajectory.
 */
struct ChainOutput {
    std::vector<std::string> names;
    MatrixXd traces;  ///< n × (number of functionals)
    ChainState final_state;
    std::uint64_t seed = 0;
    ScanOrder scan_order = ScanOrder::xi_then_lambda;

    std::span<const double> trace(Eigen::Index f) const {
        return {traces.col(f).data(), static_cast<std::size_t>(traces.rows())};
    }
};

namespace detail {

/// Index drawn with probability proportional to `weight(items[i])`; consumes no randomness for a single item.
template <typename Items, typename Weight, GibbsRandom R>
std::size_t pick_component(const Items& items, Weight weight, R& rng) {
    if (items.size() == 1) return 0;
    double total = 0;
    for (const auto& it : items) total += weight(it);
    const double target = rng.uniform() * total;
    double acc = 0;
    for (std::size_t i = 0; i < items.size(); ++i) {
        acc += weight(items[i]);
        if (target < acc) return i;
    }
    // round-off: return the last component with positive weight
    for (std::size_t i = items.size(); i-- > 0;)
        if (weight(items[i]) > 0) return i;
    return items.size() - 1;
}

}

/** Draws lambda | xi, y.  The mixture component (j, l) is chosen with probability phi_j psi_l,
 * then
 *
 *     lambda_R ~ Gamma(r_j1 + N/2, r_j2 + v1(xi)/2)
 *     lambda_D ~ Gamma(d_l1 + k/2, d_l2 + v2(xi)/2)      (k > 0 only)
 */
template <GibbsRandom R>
Precisions sample_lambda(const Posterior& post, const XiBlock& xi, R& rng) {
    const auto& spec = post.spec();
    const auto v = drift_v(spec, xi);
    auto w = [](const GammaComponent& c) { return c.weight; };

    const auto& cr = spec.lambda_R_prior[detail::pick_component(spec.lambda_R_prior, w, rng)];
    Precisions out;
    out.lambda_R = rng.gamma(cr.shape + 0.5 * static_cast<double>(spec.N())) / (cr.rate + 0.5 * v.v1);
    if (spec.hasRandomEffects()) {
        const auto& cd = spec.lambda_D_prior[detail::pick_component(spec.lambda_D_prior, w, rng)];
        out.lambda_D =
            rng.gamma(cd.shape + 0.5 * static_cast<double>(spec.k())) / (cd.rate + 0.5 * v.v2);
    }
    return out;
}

/** Draws xi | lambda, y: component i with probability eta_i, then u and beta independently from
 * their normal blocks.  With P = L L^T the conditional precision of a block, the draw is
 * mean + L^{-T} z, whose covariance is P^{-1}.
 */
template <GibbsRandom R>
XiBlock sample_xi(const Posterior& post, const Precisions& lambda, R& rng) {
    const auto& spec = post.spec();
    const auto f = conditional_xi_factors(post, lambda);
    const auto i = detail::pick_component(
        spec.beta_prior, [](const BetaComponent& c) { return c.weight; }, rng);

    XiBlock xi;
    VectorXd z(spec.k());
    for (Eigen::Index m = 0; m < z.size(); ++m) z(m) = rng.normal();
    xi.u = spec.hasRandomEffects() ? VectorXd(f.mean_u + f.prec_u.matrixU().solve(z)) : VectorXd(0);
    z.resize(spec.p());
    for (Eigen::Index m = 0; m < z.size(); ++m) z(m) = rng.normal();
    xi.beta = f.mean_beta[i] + f.prec_beta.matrixU().solve(z);
    return xi;
}

/// One Gibbs iteration; exactly one xi draw and one lambda draw in the given order.
template <GibbsRandom R>
ChainState gibbs_step(const Posterior& post, const ChainState& state, ScanOrder order, R& rng) {
    ChainState next;
    if (order == ScanOrder::xi_then_lambda) {
        auto xi = sample_xi(post, state.lambda(), rng);
        const auto lambda = sample_lambda(post, xi, rng);
        next.u = std::move(xi.u);
        next.beta = std::move(xi.beta);
        next.lambda_R = lambda.lambda_R;
        next.lambda_D = lambda.lambda_D;
    } else {
        const auto lambda = sample_lambda(post, state.xi(), rng);
        auto xi = sample_xi(post, lambda, rng);
        next.u = std::move(xi.u);
        next.beta = std::move(xi.beta);
        next.lambda_R = lambda.lambda_R;
        next.lambda_D = lambda.lambda_D;
    }
    return next;
}

/// A running chain owning its state and random stream.
class GibbsChain {
    public:
        GibbsChain(const Posterior& post, ChainState initial, ScanOrder order, std::uint64_t seed);

        const ChainState& state() const { return state_; }
        /// Number of steps taken so far.
        std::size_t steps() const { return steps_; }
        const ChainState& step();

    private:
        const Posterior* post_;
        ChainState state_;
        ScanOrder order_;
        RandomStream rng_;
        std::size_t steps_ = 0;
};

/// Runs a fixed-length chain; see ChainOutput for the recording convention.
ChainOutput run_chain(const Posterior& post, const SamplerConfig& config);

/// Throws std::invalid_argument if functional names repeat or are empty.
void check_functionals(const std::vector<Functional>& functionals);

}
