#include <doctest.h>

#include <random>
#include <string>
#include <vector>

#include "hlmgibbs/output_analysis.hpp"
#include "hlmgibbs/sampler.hpp"
#include "oracles.hpp"

using hlm::MatrixXd;
using hlm::VectorXd;

namespace {

/// Records every call; returns fixed values so draws equal their conditional means/scales.
struct RecordingRandom {
    std::vector<std::string> calls;
    std::vector<double> gamma_shapes;
    double uniform() {
        calls.push_back("uniform");
        return 0.5;
    }
    double normal() {
        calls.push_back("normal");
        return 0.0;
    }
    double gamma(double shape) {
        calls.push_back("gamma");
        gamma_shapes.push_back(shape);
        return 1.0;
    }
};
static_assert(hlm::GibbsRandom<RecordingRandom>);

oracle::ScalarConjugate scalar_model() {
    std::mt19937_64 eng(99);
    std::normal_distribution<double> normal(3.0, 2.0);
    VectorXd y(20);
    for (auto& v : y) v = normal(eng);
    return oracle::ScalarConjugate(y, 0.5, 0.0, 2.0, 1.0);
}

hlm::ModelSpec two_obs() {
    hlm::ModelSpec s;
    s.y = VectorXd::Zero(2);
    s.X = MatrixXd::Ones(2, 1);
    s.Z = MatrixXd(2, 0);
    s.B = MatrixXd::Identity(1, 1);
    s.beta_prior = {{1.0, VectorXd::Zero(1)}};
    s.lambda_R_prior = {{1.0, 1.0, 1.0}};
    return s;
}

}

TEST_CASE("lambda draw parameters") {
    SUBCASE("hand example: Gamma(2, 3)") {
        auto s = two_obs();
        s.y << std::sqrt(2.0), -std::sqrt(2.0);  // v1 = 4 at beta = 0
        const hlm::Posterior post(s);
        RecordingRandom rng;
        const auto lam = hlm::sample_lambda(post, {VectorXd(0), VectorXd::Zero(1)}, rng);
        REQUIRE(rng.gamma_shapes.size() == 1);
        CHECK(rng.gamma_shapes[0] == 2.0);
        CHECK(lam.lambda_R == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
        CHECK_FALSE(lam.lambda_D.has_value());
    }
    SUBCASE("zero residual leaves prior rates") {
        const auto s = oracle::balanced_random_intercept(3, 2, 1.5, 2.5);
        auto t = s;
        t.y.setZero();
        const hlm::Posterior post(t);
        RecordingRandom rng;
        const auto lam = hlm::sample_lambda(post, {VectorXd::Zero(3), VectorXd::Zero(1)}, rng);
        REQUIRE(rng.gamma_shapes.size() == 2);
        CHECK(rng.gamma_shapes[0] == 1.5 + 3.0);
        CHECK(rng.gamma_shapes[1] == 2.5 + 1.5);
        CHECK(lam.lambda_R == 1.0);
        CHECK(lam.lambda_D.value() == 1.0);
    }
    SUBCASE("Monte Carlo mean") {
        auto s = two_obs();
        s.y << 1, 3;
        const hlm::Posterior post(s);
        hlm::RandomStream rng(5);
        const hlm::XiBlock xi{VectorXd(0), VectorXd::Zero(1)};  // v1 = 10
        double sum = 0;
        const int n = 1'000'000;
        for (int i = 0; i < n; ++i) sum += hlm::sample_lambda(post, xi, rng).lambda_R;
        CHECK(sum / n == doctest::Approx((1.0 + 1.0) / (1.0 + 5.0)).epsilon(0.01));
    }
}

TEST_CASE("xi draws") {
    SUBCASE("zero data, zero prior mean") {
        std::mt19937_64 eng(6);
        auto s = oracle::random_spec(eng, 15, 2, 3);
        s.y.setZero();
        const hlm::Posterior post(s);
        hlm::RandomStream rng(7);
        const hlm::Precisions lam{1.3, 0.7};
        const auto c = hlm::conditional_xi_params(s, lam);
        const int n = 100'000;
        VectorXd su = VectorXd::Zero(3), sb = VectorXd::Zero(2);
        for (int i = 0; i < n; ++i) {
            const auto xi = hlm::sample_xi(post, lam, rng);
            su += xi.u;
            sb += xi.beta;
        }
        for (int m = 0; m < 3; ++m) CHECK(std::abs(su(m) / n) < 4 * std::sqrt(c.cov_u(m, m) / n));
        for (int m = 0; m < 2; ++m) CHECK(std::abs(sb(m) / n) < 4 * std::sqrt(c.cov_beta(m, m) / n));
    }
    SUBCASE("scalar reduction") {
        const auto oc = scalar_model();
        const hlm::Posterior post(oc.spec());
        hlm::RandomStream rng(8);
        const double lam = 0.4;
        const int n = 100'000;
        double s = 0, ss = 0;
        for (int i = 0; i < n; ++i) {
            const double b = hlm::sample_xi(post, {lam, std::nullopt}, rng).beta(0);
            s += b;
            ss += b * b;
        }
        const double mean = s / n, var = ss / n - mean * mean;
        CHECK(std::abs(mean - oc.cond_mean(lam)) < 4 * std::sqrt(oc.cond_var(lam) / n));
        CHECK(var == doctest::Approx(oc.cond_var(lam)).epsilon(0.02));
    }
    SUBCASE("u covariance") {
        const auto s = oracle::balanced_random_intercept(3, 4, 1, 2);
        const hlm::Posterior post(s);
        hlm::RandomStream rng(9);
        const hlm::Precisions lam{0.8, 1.9};
        const auto c = hlm::conditional_xi_params(s, lam);
        const int n = 100'000;
        MatrixXd draws(n, 3);
        for (int i = 0; i < n; ++i) draws.row(i) = hlm::sample_xi(post, lam, rng).u.transpose();
        const MatrixXd centred = draws.rowwise() - draws.colwise().mean();
        const MatrixXd cov = centred.transpose() * centred / (n - 1);
        CHECK((cov - c.cov_u).norm() / c.cov_u.norm() < 0.05);
    }
}

TEST_CASE("scan order fixes the order of the two conditional draws") {
    const auto s = oracle::balanced_random_intercept(2, 2, 1, 2);
    const hlm::Posterior post(s);
    const auto init = hlm::prior_mean_state(s);
    const std::vector<std::string> xi_draws{"normal", "normal", "normal"};  // k = 2, p = 1
    const std::vector<std::string> lambda_draws{"gamma", "gamma"};

    RecordingRandom phi1;
    hlm::gibbs_step(post, init, hlm::ScanOrder::xi_then_lambda, phi1);
    std::vector<std::string> expect = xi_draws;
    expect.insert(expect.end(), lambda_draws.begin(), lambda_draws.end());
    CHECK(phi1.calls == expect);

    RecordingRandom phi2;
    hlm::gibbs_step(post, init, hlm::ScanOrder::lambda_then_xi, phi2);
    expect = lambda_draws;
    expect.insert(expect.end(), xi_draws.begin(), xi_draws.end());
    CHECK(phi2.calls == expect);
}

TEST_CASE("component selection consumes a uniform only for mixtures") {
    auto s = two_obs();
    s.beta_prior = {{0.5, VectorXd::Zero(1)}, {0.5, VectorXd::Ones(1)}};
    const hlm::Posterior post(s);
    RecordingRandom rng;
    hlm::sample_xi(post, {1.0, std::nullopt}, rng);
    CHECK(rng.calls == std::vector<std::string>{"uniform", "normal"});
}

TEST_CASE("scan order names") {
    CHECK(hlm::parse_scan_order("xi_then_lambda") == hlm::ScanOrder::xi_then_lambda);
    CHECK(hlm::parse_scan_order("lambda-xi") == hlm::ScanOrder::lambda_then_xi);
    CHECK(hlm::to_string(hlm::ScanOrder::lambda_then_xi) == "lambda_then_xi");
    CHECK_THROWS_AS(hlm::parse_scan_order("sideways"), std::invalid_argument);
}

TEST_CASE("functionals") {
    const auto s = oracle::balanced_random_intercept(3, 2, 1, 2);
    hlm::ChainState st;
    st.u = VectorXd(3);
    st.u << 1, 2, 3;
    st.beta = VectorXd::Constant(1, -4);
    st.lambda_R = 0.5;
    st.lambda_D = 2.5;
    CHECK(hlm::make_functional(s, "beta[0]").eval(st) == -4);
    CHECK(hlm::make_functional(s, "u[2]").eval(st) == 3);
    CHECK(hlm::make_functional(s, "lambda_R").eval(st) == 0.5);
    CHECK(hlm::make_functional(s, "lambda_D").eval(st) == 2.5);
    CHECK(hlm::make_functional(s, "V").eval(st) == doctest::Approx(hlm::drift_v(s, st).V()));
    CHECK_THROWS_AS(hlm::make_functional(s, "beta[1]"), std::invalid_argument);
    CHECK_THROWS_AS(hlm::make_functional(s, "gamma"), std::invalid_argument);
    CHECK_THROWS_AS(hlm::make_functional(two_obs(), "lambda_D"), std::invalid_argument);

    const auto f = hlm::make_functional(s, "beta[0]");
    CHECK_THROWS_AS(hlm::check_functionals({f, f}), std::invalid_argument);
}

TEST_CASE("run_chain recording convention and shape") {
    const auto s = oracle::balanced_random_intercept(3, 3, 1, 2);
    const hlm::Posterior post(s);
    hlm::SamplerConfig cfg;
    cfg.seed = 17;
    cfg.initial_state = hlm::prior_mean_state(s);
    cfg.initial_state.beta(0) = 123.0;
    cfg.functionals = {hlm::make_functional(s, "beta[0]"), hlm::make_functional(s, "lambda_R")};

    cfg.n_iterations = 1;
    const auto one = hlm::run_chain(post, cfg);
    REQUIRE(one.traces.rows() == 1);
    CHECK(one.traces(0, 0) == 123.0);
    CHECK(one.final_state.beta(0) != 123.0);

    cfg.n_iterations = 1000;
    const auto a = hlm::run_chain(post, cfg);
    CHECK(a.traces.rows() == 1000);
    CHECK(a.traces.cols() == 2);
    CHECK(a.names == std::vector<std::string>{"beta[0]", "lambda_R"});
    CHECK(a.seed == 17);

    const auto b = hlm::run_chain(post, cfg);
    CHECK(a.traces == b.traces);
    CHECK(a.final_state.beta == b.final_state.beta);

    cfg.seed = 18;
    CHECK(hlm::run_chain(post, cfg).traces != a.traces);

    // GibbsChain walks the same path
    auto init = hlm::prior_mean_state(s);
    init.beta(0) = 123.0;
    hlm::GibbsChain chain2(post, init, hlm::ScanOrder::xi_then_lambda, 17);
    for (int i = 1; i < 1000; ++i) {
        chain2.step();
        CHECK(chain2.state().beta(0) == a.traces(i, 0));
    }
    chain2.step();
    CHECK(chain2.state().lambda_R == a.final_state.lambda_R);
    CHECK(chain2.steps() == 1000);

    cfg.n_iterations = 0;
    CHECK_THROWS(hlm::run_chain(post, cfg));
}

TEST_CASE("ergodic average matches the quadrature posterior mean") {
    const auto oc = scalar_model();
    const hlm::Posterior post(oc.spec());
    hlm::SamplerConfig cfg;
    cfg.scan_order = hlm::ScanOrder::lambda_then_xi;
    cfg.seed = 2718;
    cfg.initial_state = hlm::prior_mean_state(oc.spec());
    cfg.n_iterations = 200'000;
    cfg.functionals = {hlm::make_functional(oc.spec(), "beta[0]")};
    const auto out = hlm::run_chain(post, cfg);
    const auto sum = hlm::summarize_chain(out);
    const auto& f = sum.functionals[0];
    CHECK(std::abs(f.estimate - oc.posterior_mean_beta()) < 3 * f.mcse);
}

TEST_CASE("one step from the exact posterior stays at the posterior") {
    const auto oc = scalar_model();
    const hlm::Posterior post(oc.spec());
    std::mt19937_64 eng(31);
    const int chains = 10'000;
    for (auto order : {hlm::ScanOrder::xi_then_lambda, hlm::ScanOrder::lambda_then_xi}) {
        hlm::RandomStream rng(32);
        double s = 0, ss = 0;
        for (int c = 0; c < chains; ++c) {
            const auto [beta, lam] = oc.draw(eng);
            hlm::ChainState st;
            st.u = VectorXd(0);
            st.beta = VectorXd::Constant(1, beta);
            st.lambda_R = lam;
            const double b = hlm::gibbs_step(post, st, order, rng).beta(0);
            s += b;
            ss += b * b;
        }
        const double mean = s / chains, var = ss / chains - mean * mean;
        const double pv = oc.posterior_var_beta();
        CHECK(std::abs(mean - oc.posterior_mean_beta()) < 4 * std::sqrt(pv / chains));
        CHECK(std::abs(var - pv) < 4 * pv * std::sqrt(2.0 / (chains - 1)));
    }
}

TEST_CASE("both scan orders agree") {
    const auto oc = scalar_model();
    const hlm::Posterior post(oc.spec());
    hlm::SamplerConfig cfg;
    cfg.initial_state = hlm::prior_mean_state(oc.spec());
    cfg.n_iterations = 100'000;
    cfg.functionals = {hlm::make_functional(oc.spec(), "beta[0]")};
    cfg.seed = 41;
    cfg.scan_order = hlm::ScanOrder::xi_then_lambda;
    const auto a = hlm::summarize_chain(hlm::run_chain(post, cfg)).functionals[0];
    cfg.seed = 42;
    cfg.scan_order = hlm::ScanOrder::lambda_then_xi;
    const auto b = hlm::summarize_chain(hlm::run_chain(post, cfg)).functionals[0];
    CHECK(std::abs(a.estimate - b.estimate) < 3 * std::hypot(a.mcse, b.mcse));
}
