#include "hlmgibbs/model.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace hlm {

namespace {

constexpr double kWeightTolerance = 1e-12;
constexpr double kRankTolerance = 1e-12;
constexpr double kOrthogonalityTolerance = 1e-10;
constexpr double kSingularRcond = 1e-12;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_dimensions(const ModelSpec& spec) {
    const auto N = spec.y.size();
    if (N == 0) throw DimensionError("model has no observations");
    if (spec.X.rows() != N) {
        std::ostringstream msg;
        msg << "X has " << spec.X.rows() << " rows but y has length " << N;
        throw DimensionError(msg.str());
    }
    if (spec.X.cols() == 0) throw DimensionError("X has no columns");
    if (spec.Z.cols() > 0 && spec.Z.rows() != N) {
        std::ostringstream msg;
        msg << "Z has " << spec.Z.rows() << " rows but y has length " << N;
        throw DimensionError(msg.str());
    }
    if (spec.B.rows() != spec.X.cols() || spec.B.cols() != spec.X.cols())
        throw DimensionError("B must be p x p with p = X.cols()");
    if (spec.beta_prior.empty()) throw DimensionError("beta prior has no components");
    if (spec.lambda_R_prior.empty()) throw DimensionError("lambda_R prior has no components");
    for (const auto& c : spec.beta_prior)
        if (c.mean.size() != spec.X.cols())
            throw DimensionError("beta prior mean length differs from X.cols()");
}

template <typename Components, typename Weight>
double weight_deviation(const Components& cs, Weight weight) {
    double s = 0;
    for (const auto& c : cs) s += weight(c);
    return std::abs(s - 1.0);
}

bool all_finite(const ModelSpec& spec) {
    if (!spec.y.allFinite() || !spec.X.allFinite() || !spec.Z.allFinite() || !spec.B.allFinite())
        return false;
    for (const auto& c : spec.beta_prior)
        if (!c.mean.allFinite() || !std::isfinite(c.weight)) return false;
    for (const auto* prior : {&spec.lambda_R_prior, &spec.lambda_D_prior})
        for (const auto& c : *prior)
            if (!std::isfinite(c.weight) || !std::isfinite(c.shape) || !std::isfinite(c.rate))
                return false;
    return true;
}

}

bool ValidationReport::passed() const {
    return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const ValidationCheck* ValidationReport::find(const std::string& name) const {
    for (const auto& c : checks)
        if (c.name == name) return &c;
    return nullptr;
}

ValidationReport validate_model(const ModelSpec& spec) {
    check_dimensions(spec);
    ValidationReport report;
    const double N = static_cast<double>(spec.N());
    const bool has_u = spec.hasRandomEffects();

    {
        const bool finite = all_finite(spec);
        report.checks.push_back({"finite entries", finite, finite ? 1.0 : 0.0, kNaN,
                                 finite ? "" : "data or hyperparameters contain NaN/inf"});
    }
    {
        double dev = weight_deviation(spec.beta_prior, [](const auto& c) { return c.weight; });
        dev = std::max(dev, weight_deviation(spec.lambda_R_prior, [](const auto& c) { return c.weight; }));
        if (has_u && !spec.lambda_D_prior.empty())
            dev = std::max(dev, weight_deviation(spec.lambda_D_prior, [](const auto& c) { return c.weight; }));
        report.checks.push_back({"mixture weights sum to 1", dev <= kWeightTolerance, dev,
                                 kWeightTolerance, "largest |sum of weights - 1| over the three priors"});
    }
    {
        double min_w = std::numeric_limits<double>::infinity();
        for (const auto& c : spec.beta_prior) min_w = std::min(min_w, c.weight);
        for (const auto& c : spec.lambda_R_prior) min_w = std::min(min_w, c.weight);
        for (const auto& c : spec.lambda_D_prior) min_w = std::min(min_w, c.weight);
        report.checks.push_back({"mixture weights nonnegative", min_w >= 0.0, min_w, 0.0, ""});
    }
    {
        Eigen::JacobiSVD<MatrixXd> svd(spec.X);
        const auto& sv = svd.singularValues();
        const double threshold = N * sv(0) * kRankTolerance;
        const auto rank = (sv.array() > threshold).count();
        std::ostringstream detail;
        detail << "numeric rank " << rank << " of p = " << spec.p();
        report.checks.push_back({"full column rank", rank == spec.p(), static_cast<double>(rank),
                                 threshold, detail.str()});
    }
    {
        double max_cross = 0, threshold = 0;
        if (has_u) {
            max_cross = (spec.X.transpose() * spec.Z).cwiseAbs().maxCoeff();
            threshold = kOrthogonalityTolerance * spec.X.cwiseAbs().maxCoeff() *
                        spec.Z.cwiseAbs().maxCoeff() * N;
        }
        report.checks.push_back({"X^T Z = 0", max_cross <= threshold, max_cross, threshold,
                                 has_u ? "largest |entry| of X^T Z" : "no random effects"});
    }
    {
        const double scale = std::max(spec.B.cwiseAbs().maxCoeff(), 1e-300);
        const double asym = (spec.B - spec.B.transpose()).cwiseAbs().maxCoeff();
        Eigen::LLT<MatrixXd> llt(spec.B);
        const bool spd = asym <= 1e-12 * scale && llt.info() == Eigen::Success &&
                         llt.rcond() > std::numeric_limits<double>::epsilon();
        report.checks.push_back({"B symmetric positive definite", spd, asym, 1e-12 * scale,
                                 spd ? "" : "B is asymmetric or its Cholesky factorization failed"});
    }
    {
        double min_param = std::numeric_limits<double>::infinity();
        for (const auto* prior : {&spec.lambda_R_prior, &spec.lambda_D_prior})
            for (const auto& c : *prior) min_param = std::min({min_param, c.shape, c.rate});
        report.checks.push_back({"shapes and rates positive", min_param > 0.0, min_param, 0.0, ""});
    }
    {
        const bool ok = has_u == !spec.lambda_D_prior.empty();
        report.checks.push_back({"lambda_D prior present iff k > 0", ok,
                                 static_cast<double>(spec.lambda_D_prior.size()), kNaN,
                                 has_u ? "k > 0 requires a lambda_D prior"
                                       : "k = 0 model must not carry a lambda_D prior"});
    }
    return report;
}

void require_valid(const ModelSpec& spec) {
    const auto report = validate_model(spec);
    if (report.passed()) return;
    std::ostringstream msg;
    msg << "model failed validation:";
    for (const auto& c : report.checks)
        if (!c.passed) msg << " [" << c.name << "]";
    throw ValidationError(msg.str());
}

void check_state(const ModelSpec& spec, const ChainState& state) {
    if (state.beta.size() != spec.p()) throw DimensionError("state beta has wrong length");
    if (state.u.size() != spec.k()) throw DimensionError("state u has wrong length");
    if (!(state.lambda_R > 0) || !std::isfinite(state.lambda_R))
        throw DomainError("lambda_R must be positive and finite");
    if (spec.hasRandomEffects()) {
        if (!state.lambda_D) throw DomainError("lambda_D required when k > 0");
        if (!(*state.lambda_D > 0) || !std::isfinite(*state.lambda_D))
            throw DomainError("lambda_D must be positive and finite");
    } else if (state.lambda_D) {
        throw DomainError("lambda_D must be absent when k = 0");
    }
    if (!state.beta.allFinite() || !state.u.allFinite())
        throw DomainError("state has non-finite entries");
}

DriftValues drift_v(const ModelSpec& spec, const XiBlock& xi) {
    VectorXd resid = spec.y - spec.X * xi.beta;
    if (spec.hasRandomEffects()) resid.noalias() -= spec.Z * xi.u;
    return {resid.squaredNorm(), xi.u.squaredNorm()};
}

Posterior::Posterior(ModelSpec spec) : spec_(std::move(spec)) {
    require_valid(spec_);
    xtx_ = spec_.X.transpose() * spec_.X;
    xty_ = spec_.X.transpose() * spec_.y;
    if (spec_.hasRandomEffects()) {
        ztz_ = spec_.Z.transpose() * spec_.Z;
        zty_ = spec_.Z.transpose() * spec_.y;
    } else {
        ztz_.resize(0, 0);
        zty_.resize(0);
    }
    yty_ = spec_.y.squaredNorm();
    bb_.reserve(spec_.beta_prior.size());
    for (const auto& c : spec_.beta_prior) bb_.push_back(spec_.B * c.mean);
}

ConditionalXiFactors conditional_xi_factors(const Posterior& post, const Precisions& lambda) {
    const auto& spec = post.spec();
    if (!(lambda.lambda_R > 0) || !std::isfinite(lambda.lambda_R))
        throw DomainError("lambda_R must be positive and finite");
    const double lambda_D = lambda.lambda_D.value_or(kNaN);

    auto singular = [&](const char* block) {
        std::ostringstream msg;
        msg << block << " conditional precision is singular at lambda_R = " << lambda.lambda_R;
        if (lambda.lambda_D) msg << ", lambda_D = " << *lambda.lambda_D;
        return SingularityError(msg.str(), lambda.lambda_R, lambda_D);
    };

    ConditionalXiFactors f;
    {
        MatrixXd prec = lambda.lambda_R * post.XtX() + spec.B;
        f.prec_beta.compute(prec);
        if (f.prec_beta.info() != Eigen::Success ||
            !(f.prec_beta.rcond() > std::numeric_limits<double>::epsilon()))
            throw singular("beta");
        f.mean_beta.reserve(post.Bb().size());
        for (const auto& bb : post.Bb())
            f.mean_beta.push_back(f.prec_beta.solve(lambda.lambda_R * post.Xty() + bb));
    }
    if (spec.hasRandomEffects()) {
        if (!lambda.lambda_D) throw DomainError("lambda_D required when k > 0");
        if (!(*lambda.lambda_D > 0) || !std::isfinite(*lambda.lambda_D))
            throw DomainError("lambda_D must be positive and finite");
        MatrixXd prec = lambda.lambda_R * post.ZtZ();
        prec.diagonal().array() += *lambda.lambda_D;
        f.prec_u.compute(prec);
        if (f.prec_u.info() != Eigen::Success ||
            !(f.prec_u.rcond() > std::numeric_limits<double>::epsilon()))
            throw singular("u");
        f.mean_u = lambda.lambda_R * f.prec_u.solve(post.Zty());
    } else {
        f.mean_u.resize(0);
    }
    return f;
}

ConditionalXiParams conditional_xi_params(const Posterior& post, const Precisions& lambda) {
    const auto f = conditional_xi_factors(post, lambda);
    const auto& spec = post.spec();
    ConditionalXiParams params;
    params.cov_beta = f.prec_beta.solve(MatrixXd::Identity(spec.p(), spec.p()));
    params.cov_u = spec.hasRandomEffects() ? MatrixXd(f.prec_u.solve(MatrixXd::Identity(spec.k(), spec.k())))
                                           : MatrixXd(0, 0);
    for (std::size_t i = 0; i < f.mean_beta.size(); ++i) {
        params.means.push_back({f.mean_u, f.mean_beta[i]});
        params.weights.push_back(spec.beta_prior[i].weight);
    }
    return params;
}

ConditionalXiParams conditional_xi_params(const ModelSpec& spec, const Precisions& lambda) {
    return conditional_xi_params(Posterior(spec), lambda);
}

bool ztz_nonsingular(const ModelSpec& spec) {
    if (!spec.hasRandomEffects()) return true;
    Eigen::LLT<MatrixXd> llt(spec.Z.transpose() * spec.Z);
    return llt.info() == Eigen::Success && llt.rcond() > kSingularRcond;
}

LeverageSums leverage_sums(const ModelSpec& spec) {
    LeverageSums s;
    s.sum_x_lev = row_quadratic_sum(spec.X, spec.X.transpose() * spec.X, "X^T X");
    s.frob_z_sq = spec.hasRandomEffects() ? spec.Z.squaredNorm() : 0.0;
    if (!spec.hasRandomEffects())
        s.sum_z_lev = 0.0;
    else if (ztz_nonsingular(spec))
        s.sum_z_lev = row_quadratic_sum(spec.Z, spec.Z.transpose() * spec.Z, "Z^T Z");
    return s;
}

ChainState prior_mean_state(const ModelSpec& spec) {
    ChainState s;
    s.u = VectorXd::Zero(spec.k());
    s.beta = VectorXd::Zero(spec.p());
    for (const auto& c : spec.beta_prior) s.beta += c.weight * c.mean;
    s.lambda_R = 0;
    for (const auto& c : spec.lambda_R_prior) s.lambda_R += c.weight * c.shape / c.rate;
    if (spec.hasRandomEffects()) {
        double d = 0;
        for (const auto& c : spec.lambda_D_prior) d += c.weight * c.shape / c.rate;
        s.lambda_D = d;
    }
    return s;
}

}
