#include "hlmgibbs/output_analysis.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "hlmgibbs/students_t.hpp"

namespace hlm {

std::size_t batch_size_for(std::size_t n, double a_exponent) {
    const double raw = std::pow(static_cast<double>(n), a_exponent);
    const double nearest = std::round(raw);
    if (std::abs(raw - nearest) <= 1e-9 * std::max(1.0, raw)) return static_cast<std::size_t>(nearest);
    return static_cast<std::size_t>(std::floor(raw));
}

void check_exponent(double a_exponent, ExponentPolicy policy) {
    if (policy == ExponentPolicy::enforce) {
        if (!(a_exponent > 0.5 && a_exponent < 1.0))
            throw std::invalid_argument(
                "batch size exponent must lie in (1/2, 1); pass the unsafe override to go below");
    } else if (!(a_exponent > 0.0 && a_exponent < 1.0)) {
        throw std::invalid_argument("batch size exponent must lie in (0, 1)");
    }
}

BatchMeansEstimate batch_means(std::span<const double> trace, double a_exponent, ExponentPolicy policy) {
    check_exponent(a_exponent, policy);
    const std::size_t n = trace.size();
    if (n < 4) throw InsufficientDataError("batch means needs at least 4 observations");
    const std::size_t b = std::max<std::size_t>(1, batch_size_for(n, a_exponent));
    const std::size_t a = n / b;
    if (a < 2) throw InsufficientDataError("batch means needs at least two batches");

    BatchMeansEstimate est;
    est.n = n;
    est.a_exponent = a_exponent;
    est.batch_size = b;
    est.batch_count = a;
    // extended precision: nearly equal batch means otherwise lose digits to cancellation
    std::vector<long double> means(a);
    long double total = 0;
    for (std::size_t j = 0; j < a; ++j) {
        long double s = 0;
        for (std::size_t i = j * b; i < (j + 1) * b; ++i) s += trace[i];
        total += s;
        means[j] = s / static_cast<long double>(b);
    }
    const long double centre = total / static_cast<long double>(a * b);
    long double ss = 0;
    est.batch_means.resize(static_cast<Eigen::Index>(a));
    for (std::size_t j = 0; j < a; ++j) {
        est.batch_means(static_cast<Eigen::Index>(j)) = static_cast<double>(means[j]);
        ss += (means[j] - centre) * (means[j] - centre);
    }
    est.batched_mean = static_cast<double>(centre);
    est.sigma2_hat = static_cast<double>(static_cast<long double>(b) / static_cast<long double>(a - 1) * ss);
    return est;
}

Interval interval(double mean, const BatchMeansEstimate& est, double level, std::size_t bonferroni_m) {
    if (!(level > 0.0 && level < 1.0)) throw DomainError("confidence level must lie in (0, 1)");
    if (bonferroni_m < 1) throw DomainError("Bonferroni count must be at least 1");
    if (est.batch_count < 2 || est.n == 0) throw InsufficientDataError("interval needs a batch means estimate");
    const double tail = (1.0 - level) / (2.0 * static_cast<double>(bonferroni_m));
    const double t = t_quantile(static_cast<double>(est.batch_count - 1), 1.0 - tail);
    const double half = t * std::sqrt(est.sigma2_hat) / std::sqrt(static_cast<double>(est.n));
    return {half, mean - half, mean + half};
}

StopDecision stopping_check(double half_width, double epsilon, std::size_t n, std::size_t n_star) {
    if (n < n_star || n == 0) return StopDecision::keep_going;
    return half_width + 1.0 / static_cast<double>(n) <= epsilon ? StopDecision::stop
                                                                 : StopDecision::keep_going;
}

DriftSummary summarize_drift(const DriftReport& report) {
    DriftSummary s;
    s.verdict = report.verdict;
    if (report.case1.applicable) s.case_fired = 1;
    else if (report.case2.applicable) s.case_fired = 2;
    s.gamma = report.best_gamma();
    if (report.k) {
        s.K = report.k->K;
        s.k_provenance = report.k->provenance;
        s.k_rigorous = report.k->rigorous;
    }
    return s;
}

RunSummary summarize_chain(const ChainOutput& out, double a_exponent, double level,
                           std::size_t bonferroni_m, ExponentPolicy policy) {
    RunSummary s;
    s.mode = "fixed";
    s.n_total = static_cast<std::size_t>(out.traces.rows());
    s.stopped = false;
    s.seed = out.seed;
    s.scan_order = out.scan_order;
    s.a_exponent = a_exponent;
    s.level = level;
    s.bonferroni_m = bonferroni_m == 0 ? std::max<std::size_t>(1, out.names.size()) : bonferroni_m;
    for (Eigen::Index f = 0; f < out.traces.cols(); ++f) {
        const auto trace = out.trace(f);
        const auto est = batch_means(trace, a_exponent, policy);
        const double mean = out.traces.col(f).mean();
        const auto ci = interval(mean, est, level, s.bonferroni_m);
        s.functionals.push_back({out.names[static_cast<std::size_t>(f)], mean,
                                 std::sqrt(est.sigma2_hat / static_cast<double>(est.n)), ci.half_width,
                                 std::nullopt, est.sigma2_hat, est.batch_size, est.batch_count});
    }
    return s;
}

namespace {

/** Running prefix sums of one functional, shifted by its first value to limit cancellation.
 * Batch means for any n come out in O(n / b_n) instead of O(n).
 */
class PrefixTrace {
    public:
        void push(double x) {
            if (sums_.empty()) {
                shift_ = x;
                sums_.push_back(0.0);
            }
            sums_.push_back(sums_.back() + (x - shift_));
        }
        std::size_t size() const { return sums_.empty() ? 0 : sums_.size() - 1; }
        double mean() const { return shift_ + sums_.back() / static_cast<double>(size()); }

        /// Same estimate batch_means() computes on the first size() values.
        BatchMeansEstimate batch_means(double a_exponent) const {
            const std::size_t n = size();
            BatchMeansEstimate est;
            est.n = n;
            est.a_exponent = a_exponent;
            if (n < 4) return est;
            const std::size_t b = std::max<std::size_t>(1, batch_size_for(n, a_exponent));
            const std::size_t a = n / b;
            est.batch_size = b;
            est.batch_count = a;
            if (a < 2) return est;
            est.batch_means.resize(static_cast<Eigen::Index>(a));
            for (std::size_t j = 0; j < a; ++j)
                est.batch_means(static_cast<Eigen::Index>(j)) =
                    (sums_[(j + 1) * b] - sums_[j * b]) / static_cast<double>(b);
            const double centred = sums_[a * b] / static_cast<double>(a * b);
            est.sigma2_hat = static_cast<double>(b) / static_cast<double>(a - 1) *
                             (est.batch_means.array() - centred).square().sum();
            est.batch_means.array() += shift_;
            est.batched_mean = centred + shift_;
            return est;
        }

    private:
        double shift_ = 0;
        std::vector<double> sums_;
};

}

RunSummary sequential_run(const Posterior& post, const SamplerConfig& config,
                          const StoppingConfig& stopping, const std::optional<DriftReport>& drift,
                          MatrixXd* traces) {
    const auto start = std::chrono::steady_clock::now();
    check_functionals(config.functionals);
    check_exponent(stopping.a_exponent, stopping.exponent_policy);
    const std::size_t F = config.functionals.size();
    if (F == 0) throw std::invalid_argument("sequential run needs at least one functional");
    if (stopping.epsilons.size() != F)
        throw std::invalid_argument("need one epsilon per functional");
    for (double e : stopping.epsilons)
        if (!(e > 0)) throw std::invalid_argument("epsilons must be positive");
    if (stopping.n_star < 1) throw std::invalid_argument("n_star must be at least 1");
    if (!(stopping.level > 0 && stopping.level < 1)) throw std::invalid_argument("level must lie in (0, 1)");
    if (stopping.check_interval < 1) throw std::invalid_argument("check_interval must be at least 1");
    if (stopping.max_iterations < 1) throw std::invalid_argument("max_iterations must be at least 1");

    RunSummary s;
    s.mode = "sequential";
    s.seed = config.seed;
    s.scan_order = config.scan_order;
    s.a_exponent = stopping.a_exponent;
    s.level = stopping.level;
    s.bonferroni_m = stopping.bonferroni_m == 0 ? F : stopping.bonferroni_m;
    s.n_star = stopping.n_star;
    s.check_interval = stopping.check_interval;
    s.max_iterations = stopping.max_iterations;
    s.initial_state = config.initial_state;

    std::optional<DriftReport> report = drift;
    if (!report) {
        try {
            report = drift_certificate(post);
        } catch (const std::exception& e) {
            s.warnings.push_back(std::string("drift certificate could not be computed: ") + e.what());
        }
    }
    if (report) {
        s.drift = summarize_drift(*report);
        if (!report->certified())
            s.warnings.push_back(
                "model is not certified geometrically ergodic; the CLT behind these intervals is not guaranteed");
        else if (report->k && !report->k->rigorous)
            s.warnings.push_back("bound on G comes from a numeric search and is not a proof");
    }

    GibbsChain chain(post, config.initial_state, config.scan_order, config.seed);
    std::vector<PrefixTrace> sums(F);
    std::vector<std::vector<double>> raw(traces ? F : 0);
    auto record = [&] {
        for (std::size_t f = 0; f < F; ++f) {
            const double g = config.functionals[f].eval(chain.state());
            sums[f].push(g);
            if (traces) raw[f].push_back(g);
        }
    };

    auto fill_summary = [&](std::size_t n) {
        s.n_total = n;
        s.functionals.clear();
        for (std::size_t f = 0; f < F; ++f) {
            FunctionalSummary fs;
            fs.name = config.functionals[f].name;
            fs.estimate = sums[f].mean();
            fs.epsilon = stopping.epsilons[f];
            const auto est = sums[f].batch_means(stopping.a_exponent);
            if (est.batch_count >= 2) {
                fs.sigma2_hat = est.sigma2_hat;
                fs.mcse = std::sqrt(est.sigma2_hat / static_cast<double>(n));
                fs.half_width = interval(fs.estimate, est, stopping.level, s.bonferroni_m).half_width;
                fs.batch_size = est.batch_size;
                fs.batch_count = est.batch_count;
            } else {
                fs.half_width = std::numeric_limits<double>::infinity();
            }
            s.functionals.push_back(fs);
        }
    };

    auto all_stop = [&](std::size_t n) {
        for (std::size_t f = 0; f < F; ++f) {
            const auto est = sums[f].batch_means(stopping.a_exponent);
            if (est.batch_count < 2) return false;
            const double half = interval(0.0, est, stopping.level, s.bonferroni_m).half_width;
            if (stopping_check(half, stopping.epsilons[f], n, stopping.n_star) != StopDecision::stop)
                return false;
        }
        return true;
    };

    auto export_traces = [&] {
        if (!traces) return;
        const auto n = static_cast<Eigen::Index>(raw.empty() ? 0 : raw[0].size());
        traces->resize(n, static_cast<Eigen::Index>(F));
        for (std::size_t f = 0; f < F; ++f)
            for (Eigen::Index i = 0; i < n; ++i) (*traces)(i, static_cast<Eigen::Index>(f)) = raw[f][static_cast<std::size_t>(i)];
    };

    record();
    for (;;) {
        const std::size_t n = sums[0].size();
        if (n >= stopping.n_star && (n - stopping.n_star) % stopping.check_interval == 0 && all_stop(n)) {
            fill_summary(n);
            s.stopped = true;
            break;
        }
        if (n >= stopping.max_iterations) {
            fill_summary(n);
            s.stopped = false;
            s.wall_clock_seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            export_traces();
            std::ostringstream msg;
            msg << "iteration budget of " << stopping.max_iterations
                << " reached before the stopping rule was met";
            throw BudgetExceededError(msg.str(), s);
        }
        chain.step();
        record();
    }
    export_traces();
    s.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return s;
}

}
