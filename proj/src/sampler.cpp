#include "hlmgibbs/sampler.hpp"

#include <charconv>
#include <memory>
#include <set>
#include <stdexcept>

namespace hlm {

std::string to_string(ScanOrder order) {
    return order == ScanOrder::xi_then_lambda ? "xi_then_lambda" : "lambda_then_xi";
}

ScanOrder parse_scan_order(std::string_view text) {
    if (text == "xi_then_lambda" || text == "xi-lambda") return ScanOrder::xi_then_lambda;
    if (text == "lambda_then_xi" || text == "lambda-xi") return ScanOrder::lambda_then_xi;
    throw std::invalid_argument("unknown scan order '" + std::string(text) + "'");
}

namespace {

// "beta[12]" -> ("beta", 12); returns false when there is no bracketed index
bool split_indexed(const std::string& name, std::string& base, Eigen::Index& index) {
    const auto open = name.find('[');
    if (open == std::string::npos || name.back() != ']') return false;
    base = name.substr(0, open);
    const char* first = name.data() + open + 1;
    const char* last = name.data() + name.size() - 1;
    long long value = -1;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || value < 0)
        throw std::invalid_argument("bad index in functional '" + name + "'");
    index = static_cast<Eigen::Index>(value);
    return true;
}

}

Functional make_functional(const ModelSpec& spec, const std::string& name) {
    if (name == "lambda_R") return {name, [](const ChainState& s) { return s.lambda_R; }};
    if (name == "lambda_D") {
        if (!spec.hasRandomEffects())
            throw std::invalid_argument("lambda_D is not part of a model without random effects");
        return {name, [](const ChainState& s) { return *s.lambda_D; }};
    }
    if (name == "V") {
        auto model = std::make_shared<const ModelSpec>(spec);
        return {name, [model](const ChainState& s) { return drift_v(*model, s).V(); }};
    }
    std::string base;
    Eigen::Index index = 0;
    if (split_indexed(name, base, index)) {
        if (base == "beta") {
            if (index >= spec.p()) throw std::invalid_argument("index out of range in '" + name + "'");
            return {name, [index](const ChainState& s) { return s.beta(index); }};
        }
        if (base == "u") {
            if (index >= spec.k()) throw std::invalid_argument("index out of range in '" + name + "'");
            return {name, [index](const ChainState& s) { return s.u(index); }};
        }
    }
    throw std::invalid_argument("unknown functional '" + name + "'");
}

std::vector<Functional> beta_functionals(const ModelSpec& spec) {
    std::vector<Functional> out;
    for (Eigen::Index i = 0; i < spec.p(); ++i)
        out.push_back(make_functional(spec, "beta[" + std::to_string(i) + "]"));
    return out;
}

void check_functionals(const std::vector<Functional>& functionals) {
    std::set<std::string> seen;
    for (const auto& f : functionals) {
        if (f.name.empty()) throw std::invalid_argument("functional with empty name");
        if (!seen.insert(f.name).second)
            throw std::invalid_argument("duplicate functional name '" + f.name + "'");
        if (!f.eval) throw std::invalid_argument("functional '" + f.name + "' has no evaluator");
    }
}

GibbsChain::GibbsChain(const Posterior& post, ChainState initial, ScanOrder order, std::uint64_t seed)
    : post_(&post), state_(std::move(initial)), order_(order), rng_(seed) {
    check_state(post.spec(), state_);
}

const ChainState& GibbsChain::step() {
    state_ = gibbs_step(*post_, state_, order_, rng_);
    ++steps_;
    return state_;
}

ChainOutput run_chain(const Posterior& post, const SamplerConfig& config) {
    if (config.n_iterations < 1) throw std::invalid_argument("n_iterations must be at least 1");
    check_functionals(config.functionals);

    GibbsChain chain(post, config.initial_state, config.scan_order, config.seed);
    const auto n = static_cast<Eigen::Index>(config.n_iterations);
    const auto F = static_cast<Eigen::Index>(config.functionals.size());

    ChainOutput out;
    out.seed = config.seed;
    out.scan_order = config.scan_order;
    out.traces.resize(n, F);
    for (const auto& f : config.functionals) out.names.push_back(f.name);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index f = 0; f < F; ++f) out.traces(i, f) = config.functionals[f].eval(chain.state());
        chain.step();
    }
    out.final_state = chain.state();
    return out;
}

}
