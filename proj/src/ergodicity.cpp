#include "hlmgibbs/ergodicity.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

namespace hlm {

namespace {

constexpr double kLogLambdaMin = -8.0;
constexpr double kLogLambdaMax = 8.0;
constexpr int kGridPoints = 65;
constexpr double kBoundaryClimbTolerance = 1e-6;
constexpr double kSearchInflation = 1e-6;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

DeltaValue ratio(double num, double den, const char* what) {
    if (den > 0) return {num / den, true, ""};
    std::ostringstream msg;
    msg << "nonpositive denominator " << den << " in " << what;
    return {std::numeric_limits<double>::quiet_NaN(), false, msg.str()};
}

bool all_means_zero(const ModelSpec& spec) {
    return std::all_of(spec.beta_prior.begin(), spec.beta_prior.end(),
                       [](const BetaComponent& c) { return c.mean.cwiseAbs().maxCoeff() == 0.0; });
}

double max_g(const Posterior& post, const Precisions& lambda) {
    const auto f = conditional_xi_factors(post, lambda);
    const auto& spec = post.spec();
    double best = kNegInf;
    for (const auto& mb : f.mean_beta) {
        VectorXd resid = spec.y - spec.X * mb;
        if (spec.hasRandomEffects()) resid.noalias() -= spec.Z * f.mean_u;
        best = std::max(best, resid.squaredNorm() + f.mean_u.squaredNorm());
    }
    return best;
}

// max_i G_i at log10 lambda; -inf where a conditional precision is numerically singular
double max_g_log(const Posterior& post, const std::vector<double>& log_lambda) {
    Precisions lambda{std::pow(10.0, log_lambda[0]), std::nullopt};
    if (log_lambda.size() > 1) lambda.lambda_D = std::pow(10.0, log_lambda[1]);
    try {
        return max_g(post, lambda);
    } catch (const SingularityError&) {
        return kNegInf;
    }
}

double golden_max(const std::function<double(double)>& f, double lo, double hi, double& fbest) {
    const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - invphi * (b - a), d = a + invphi * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 60 && b - a > 1e-10; ++it) {
        if (fc >= fd) {
            b = d; d = c; fd = fc;
            c = b - invphi * (b - a); fc = f(c);
        } else {
            a = c; c = d; fc = fd;
            d = a + invphi * (b - a); fd = f(d);
        }
    }
    if (fc >= fd) { fbest = fc; return c; }
    fbest = fd;
    return d;
}

KBound numeric_k_search(const Posterior& post) {
    const std::size_t dims = post.spec().hasRandomEffects() ? 2 : 1;
    const double step = (kLogLambdaMax - kLogLambdaMin) / (kGridPoints - 1);
    auto coord = [&](int i) { return kLogLambdaMin + step * i; };

    std::vector<int> best_idx(dims, 0);
    double best = kNegInf;
    std::vector<double> grid(dims == 2 ? kGridPoints * kGridPoints : kGridPoints, kNegInf);
    auto at = [&](int i, int j) -> double& { return grid[dims == 2 ? i * kGridPoints + j : i]; };
    for (int i = 0; i < kGridPoints; ++i) {
        for (int j = 0; j < (dims == 2 ? kGridPoints : 1); ++j) {
            std::vector<double> x{coord(i)};
            if (dims == 2) x.push_back(coord(j));
            const double g = max_g_log(post, x);
            at(i, j) = g;
            if (g > best) {
                best = g;
                best_idx = dims == 2 ? std::vector<int>{i, j} : std::vector<int>{i};
            }
        }
    }
    if (!std::isfinite(best))
        throw UnboundedSuspectedError("G could not be evaluated anywhere on the search grid");

    // Edge maximum that is still climbing outward suggests G is unbounded.
    for (std::size_t d = 0; d < dims; ++d) {
        const int idx = best_idx[d];
        if (idx != 0 && idx != kGridPoints - 1) continue;
        auto inner_idx = best_idx;
        inner_idx[d] = idx == 0 ? 1 : kGridPoints - 2;
        const double inner = at(inner_idx[0], dims == 2 ? inner_idx[1] : 0);
        if (best > inner + kBoundaryClimbTolerance * std::max(std::abs(best), 1e-300)) {
            std::ostringstream msg;
            msg << "max G is still increasing at the edge log10(lambda) = " << coord(idx)
                << " of the search box (" << inner << " -> " << best << ")";
            throw UnboundedSuspectedError(msg.str());
        }
    }

    std::vector<double> x;
    for (std::size_t d = 0; d < dims; ++d) x.push_back(coord(best_idx[d]));
    for (int sweep = 0; sweep < 3; ++sweep) {
        for (std::size_t d = 0; d < dims; ++d) {
            const double lo = std::max(kLogLambdaMin, x[d] - step);
            const double hi = std::min(kLogLambdaMax, x[d] + step);
            double fbest = kNegInf;
            const double arg = golden_max(
                [&](double t) {
                    auto y = x;
                    y[d] = t;
                    return max_g_log(post, y);
                },
                lo, hi, fbest);
            if (fbest > best) {
                best = fbest;
                x[d] = arg;
            }
        }
    }

    KBound kb;
    kb.g_bound = best * (1.0 + kSearchInflation);
    kb.K = std::sqrt(std::max(kb.g_bound, 0.0));
    kb.provenance = KProvenance::numeric_search;
    kb.rigorous = false;
    kb.argmax_log10_lambda = x;
    return kb;
}

}

std::string to_string(KProvenance p) {
    switch (p) {
        case KProvenance::analytic_Z0: return "analytic_Z0";
        case KProvenance::analytic_nonsingular: return "analytic_nonsingular";
        case KProvenance::numeric_search: return "numeric_search";
    }
    return "unknown";
}

std::string to_string(Verdict v) {
    return v == Verdict::certified_geometric ? "certified_geometric" : "not_certified";
}

DeltaTable delta_constants(const LeverageSums& sums, Eigen::Index N_, Eigen::Index k_,
                           const std::vector<GammaComponent>& lambda_R_prior,
                           const std::vector<GammaComponent>& lambda_D_prior) {
    DeltaTable t;
    t.sums = sums;
    const double N = static_cast<double>(N_);
    const double k = static_cast<double>(k_);
    for (const auto& c : lambda_R_prior) {
        const double den = 2.0 * c.shape + N - 2.0;
        if (t.sums.sum_z_lev)
            t.delta1.push_back(ratio(*t.sums.sum_z_lev, den, "delta1"));
        else
            t.delta1.push_back({std::numeric_limits<double>::quiet_NaN(), false, "Z^T Z is singular"});
        t.delta3.push_back(ratio(t.sums.sum_x_lev, 4.0 * den, "delta3"));
    }
    for (const auto& c : lambda_D_prior) {
        const double den = 2.0 * c.shape + k - 2.0;
        t.delta2.push_back(ratio(k, den, "delta2"));
        t.delta4.push_back(ratio(k + t.sums.frob_z_sq, den, "delta4"));
    }
    return t;
}

DeltaTable delta_constants(const ModelSpec& spec) {
    return delta_constants(leverage_sums(spec), spec.N(), spec.k(), spec.lambda_R_prior, spec.lambda_D_prior);
}

double g_eval(const Posterior& post, const Precisions& lambda, std::size_t component) {
    const auto& spec = post.spec();
    if (component >= spec.beta_prior.size()) throw std::out_of_range("g_eval: component index");
    const auto f = conditional_xi_factors(post, lambda);
    VectorXd resid = spec.y - spec.X * f.mean_beta[component];
    if (spec.hasRandomEffects()) resid.noalias() -= spec.Z * f.mean_u;
    return resid.squaredNorm() + f.mean_u.squaredNorm();
}

double g_eval(const ModelSpec& spec, const Precisions& lambda, std::size_t component) {
    return g_eval(Posterior(spec), lambda, component);
}

KBound k_bound(const Posterior& post) {
    const auto& spec = post.spec();
    KBound kb;
    kb.rigorous = true;
    if (!spec.hasRandomEffects()) {
        // G_i(lambda) = |y - X b_i|^2 - (shrinkage toward the LS fit) <= |y - X b_i|^2, equal to y^T y at b_i = 0
        double g = post.yty();
        for (const auto& c : spec.beta_prior) g = std::max(g, (spec.y - spec.X * c.mean).squaredNorm());
        kb.g_bound = g;
        kb.provenance = KProvenance::analytic_Z0;
    } else if (all_means_zero(spec) && ztz_nonsingular(spec)) {
        auto llt = checked_llt(post.ZtZ(), "Z^T Z");
        const VectorXd w = llt.solve(post.Zty());  // (Z^T Z)^{-1} Z^T y
        kb.g_bound = post.yty() + w.squaredNorm();
        kb.provenance = KProvenance::analytic_nonsingular;
    } else {
        return numeric_k_search(post);
    }
    kb.K = std::sqrt(kb.g_bound);
    return kb;
}

KBound k_bound(const ModelSpec& spec) { return k_bound(Posterior(spec)); }

std::optional<double> DriftReport::best_gamma() const {
    std::optional<double> g;
    for (const auto* c : {&case1, &case2})
        if (c->applicable && c->gamma && (!g || *c->gamma < *g)) g = c->gamma;
    return g;
}

namespace {

std::string indexed(const char* base, std::size_t i) {
    return std::string(base) + "[" + std::to_string(i) + "]";
}

// max over entries; nullopt if any is invalid
std::optional<double> max_valid(const std::vector<DeltaValue>& a, const std::vector<DeltaValue>& b) {
    double m = 0;
    for (const auto* v : {&a, &b})
        for (const auto& d : *v) {
            if (!d.valid) return std::nullopt;
            m = std::max(m, d.value);
        }
    return m;
}

std::optional<double> max_rate_term(const ModelSpec& spec, const std::vector<DeltaValue>& dj,
                                    const std::vector<DeltaValue>& dl) {
    double best = kNegInf;
    for (std::size_t j = 0; j < spec.lambda_R_prior.size(); ++j) {
        if (!dj[j].valid) return std::nullopt;
        const double rterm = 2.0 * spec.lambda_R_prior[j].rate * dj[j].value;
        if (spec.lambda_D_prior.empty()) {
            best = std::max(best, rterm);
            continue;
        }
        for (std::size_t l = 0; l < spec.lambda_D_prior.size(); ++l) {
            if (!dl[l].valid) return std::nullopt;
            best = std::max(best, rterm + 2.0 * spec.lambda_D_prior[l].rate * dl[l].value);
        }
    }
    return best;
}

void finish_case(DriftCase& c, std::optional<double> gamma, std::optional<double> rate_term,
                 double leverage_term, const std::optional<KBound>& k) {
    c.gamma = gamma;
    if (gamma) {
        c.conditions.push_back({"1 > gamma", 1.0, *gamma, 1.0 > *gamma});
        if (k && rate_term) c.L = leverage_term + *rate_term + k->g_bound;
    } else {
        c.conditions.push_back({"all deltas valid", 0.0, 0.0, false});
    }
    c.applicable = std::all_of(c.conditions.begin(), c.conditions.end(),
                               [](const Condition& x) { return x.holds; });
}

}

DriftReport drift_certificate(const Posterior& post) {
    const auto& spec = post.spec();
    DriftReport r;
    r.deltas = delta_constants(spec);
    r.sum_x_binv = row_quadratic_sum(spec.X, spec.B, "B");
    try {
        r.k = k_bound(post);
    } catch (const UnboundedSuspectedError& e) {
        r.k_failure = e.what();
    }

    const double N = static_cast<double>(spec.N());
    const auto& sums = r.deltas.sums;

    // Case 1
    {
        auto& c = r.case1;
        double rcond = 1.0;
        if (spec.hasRandomEffects()) {
            Eigen::LLT<MatrixXd> llt(post.ZtZ());
            rcond = llt.info() == Eigen::Success ? llt.rcond() : 0.0;
        }
        c.conditions.push_back({"Z^T Z nonsingular (rcond > 1e-12)", rcond, 1e-12, rcond > 1e-12});
        for (std::size_t l = 0; l < spec.lambda_D_prior.size(); ++l) {
            const double d = spec.lambda_D_prior[l].shape;
            c.conditions.push_back({indexed("lambda_D shape", l) + " > 1", d, 1.0, d > 1.0});
        }
        if (sums.sum_z_lev) {
            const double bound = std::max(0.0, 0.5 * (*sums.sum_z_lev - N + 2.0));
            for (std::size_t j = 0; j < spec.lambda_R_prior.size(); ++j) {
                const double rj = spec.lambda_R_prior[j].shape;
                c.conditions.push_back({indexed("lambda_R shape", j) + " > max(0, (sum_z_lev - N + 2)/2)",
                                        rj, bound, rj > bound});
            }
        }
        finish_case(c, max_valid(r.deltas.delta1, r.deltas.delta2),
                    max_rate_term(spec, r.deltas.delta1, r.deltas.delta2), r.sum_x_binv, r.k);
    }
    // Case 2
    {
        auto& c = r.case2;
        const double rbound = std::max(0.0, 0.5 * (0.25 * sums.sum_x_lev - N + 2.0));
        for (std::size_t j = 0; j < spec.lambda_R_prior.size(); ++j) {
            const double rj = spec.lambda_R_prior[j].shape;
            c.conditions.push_back({indexed("lambda_R shape", j) + " > max(0, (sum_x_lev/4 - N + 2)/2)",
                                    rj, rbound, rj > rbound});
        }
        const double dbound = 0.5 * (2.0 + sums.frob_z_sq);
        for (std::size_t l = 0; l < spec.lambda_D_prior.size(); ++l) {
            const double d = spec.lambda_D_prior[l].shape;
            c.conditions.push_back({indexed("lambda_D shape", l) + " > (2 + frob_z_sq)/2", d, dbound,
                                    d > dbound});
        }
        finish_case(c, max_valid(r.deltas.delta3, r.deltas.delta4),
                    max_rate_term(spec, r.deltas.delta3, r.deltas.delta4), 0.25 * r.sum_x_binv, r.k);
    }

    std::ostringstream msg;
    if (r.k) {
        msg << "G bounded by " << r.k->g_bound << " (" << to_string(r.k->provenance)
            << (r.k->rigorous ? ")" : ", numeric search, not a proof)");
        r.reasons.push_back(msg.str());
    } else {
        r.reasons.push_back("no finite bound on G: " + r.k_failure);
    }
    for (int i = 0; i < 2; ++i) {
        const auto& c = i == 0 ? r.case1 : r.case2;
        std::ostringstream m;
        m << "drift case " << (i + 1) << (c.applicable ? " holds" : " does not hold");
        if (c.applicable && c.gamma) m << " with gamma = " << *c.gamma;
        else
            for (const auto& cond : c.conditions)
                if (!cond.holds) m << "; fails " << cond.name;
        r.reasons.push_back(m.str());
    }
    const bool any_case = r.case1.applicable || r.case2.applicable;
    r.verdict = any_case && r.k ? Verdict::certified_geometric : Verdict::not_certified;
    return r;
}

DriftReport drift_certificate(const ModelSpec& spec) { return drift_certificate(Posterior(spec)); }

}
