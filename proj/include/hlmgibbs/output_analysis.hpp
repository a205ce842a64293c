#pragma once
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hlmgibbs/ergodicity.hpp"
#include "hlmgibbs/sampler.hpp"

namespace hlm {

/// Whether batch_means insists on a batch-size exponent in (1/2, 1).
enum class ExponentPolicy { enforce, allow_unsafe };

/** Non-overlapping batch means estimate of the asymptotic variance sigma_g^2 in
 * sqrt(n)(mean - E g) -> N(0, sigma_g^2).
 *
 * The batch size is b_n = floor(n^a) and the batch count a_n = floor(n / b_n); only the first
 * a_n b_n observations enter, and the centring mean `batched_mean` is taken over exactly those.
 */
struct BatchMeansEstimate {
    std::size_t n = 0;
    double a_exponent = 0;
    std::size_t batch_size = 0;
    std::size_t batch_count = 0;
    VectorXd batch_means;
    double batched_mean = 0;
    double sigma2_hat = 0;
};

/// floor(n^a), robust to pow() landing just below an exact integer.
std::size_t batch_size_for(std::size_t n, double a_exponent);

/// Throws std::invalid_argument for an exponent outside (1/2, 1), or outside (0, 1) when unsafe.
void check_exponent(double a_exponent, ExponentPolicy policy);

/** sigma2_hat = b_n / (a_n - 1) * sum_j (Ybar_j - batched_mean)^2.  Throws InsufficientDataError
 * for n < 4 or fewer than two batches.
 */
BatchMeansEstimate batch_means(std::span<const double> trace, double a_exponent = 0.501,
                               ExponentPolicy policy = ExponentPolicy::enforce);

struct Interval {
    double half_width;
    double lo;
    double hi;
};

/** mean ± t_{a_n - 1, 1 - (1 - level)/(2m)} sigma_hat / sqrt(n), m simultaneous intervals
 * (Bonferroni).
 */
Interval interval(double mean, const BatchMeansEstimate& est, double level = 0.95,
                  std::size_t bonferroni_m = 1);

enum class StopDecision { stop, keep_going };

/// stop iff n >= n_star and half_width + 1/n <= epsilon.
StopDecision stopping_check(double half_width, double epsilon, std::size_t n, std::size_t n_star);

struct StoppingConfig {
    std::vector<double> epsilons;  ///< one target half-width per functional
    std::size_t n_star = 1000;
    double level = 0.95;
    std::size_t bonferroni_m = 0;  ///< 0: number of functionals
    std::size_t check_interval = 1;
    std::size_t max_iterations = 100'000'000;
    double a_exponent = 0.501;
    ExponentPolicy exponent_policy = ExponentPolicy::enforce;
};

struct FunctionalSummary {
    std::string name;
    double estimate = 0;  ///< mean over all n recorded values
    double mcse = 0;      ///< sigma_hat / sqrt(n)
    double half_width = 0;
    std::optional<double> epsilon;
    double sigma2_hat = 0;
    std::size_t batch_size = 0;
    std::size_t batch_count = 0;
};

/// Digest of the drift certificate the run was made under.
struct DriftSummary {
    Verdict verdict = Verdict::not_certified;
    int case_fired = 0;  ///< 1 or 2; 0 when neither case applies
    std::optional<double> gamma;
    std::optional<double> K;
    std::optional<KProvenance> k_provenance;
    bool k_rigorous = false;
};

DriftSummary summarize_drift(const DriftReport& report);

struct RunSummary {
    int schema_version = 1;
    std::string mode;  ///< "fixed" or "sequential"
    std::vector<FunctionalSummary> functionals;
    std::size_t n_total = 0;
    bool stopped = false;
    std::uint64_t seed = 0;
    ScanOrder scan_order = ScanOrder::xi_then_lambda;
    double a_exponent = 0.501;
    double level = 0.95;
    std::size_t bonferroni_m = 1;
    std::optional<std::size_t> n_star;
    std::optional<std::size_t> check_interval;
    std::optional<std::size_t> max_iterations;
    std::optional<DriftSummary> drift;
    std::vector<std::string> warnings;
    ChainState initial_state;
    std::string model_source;
    double wall_clock_seconds = 0;
};

/// The iteration cap was hit before the stopping rule fired.  Carries the summary at the cap.
class BudgetExceededError : public std::runtime_error {
    public:
        BudgetExceededError(const std::string& what, RunSummary partial)
            : std::runtime_error(what), partial_(std::move(partial)) {}
        const RunSummary& partial() const { return partial_; }

    private:
        RunSummary partial_;
};

/// Batch means summaries of a fixed-length chain.
RunSummary summarize_chain(const ChainOutput& out, double a_exponent = 0.501, double level = 0.95,
                           std::size_t bonferroni_m = 0,
                           ExponentPolicy policy = ExponentPolicy::enforce);

/** Runs the chain until every functional satisfies the fixed-width rule
 *
 *     t_{a_n - 1} sigma_hat_n / sqrt(n) + 1/n <= epsilon,   n >= n_star,
 *
 * evaluated every `check_interval` iterations from n_star on.  `config.n_iterations` is ignored.
 * When `drift` is not supplied it is computed; an uncertified model adds a warning to the
 * summary but still runs.  Throws BudgetExceededError at `max_iterations`.  When `traces` is
 * non-null it receives the recorded values (n × functionals).
 */
RunSummary sequential_run(const Posterior& post, const SamplerConfig& config,
                          const StoppingConfig& stopping,
                          const std::optional<DriftReport>& drift = std::nullopt,
                          MatrixXd* traces = nullptr);

}
