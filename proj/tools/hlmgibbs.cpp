// hlmgibbs: command-line front end.  Exit codes: 0 ok, 1 validation failure, 2 runtime or usage
// error, 3 iteration budget exceeded.  Errors are reported as a JSON document on stderr.

#include <algorithm>
#include <atomic>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "hlmgibbs/eb_pipeline.hpp"
#include "hlmgibbs/ergodicity.hpp"
#include "hlmgibbs/errors.hpp"
#include "hlmgibbs/io/csv.hpp"
#include "hlmgibbs/io/json_report.hpp"
#include "hlmgibbs/io/model_file.hpp"
#include "hlmgibbs/io/svg_plot.hpp"
#include "hlmgibbs/output_analysis.hpp"
#include "hlmgibbs/sampler.hpp"

namespace fs = std::filesystem;
using hlm::io::Json;

namespace {

enum Exit { ok = 0, validation_failure = 1, runtime_error = 2, budget_exceeded = 3 };

/// Thrown for bad flag values that CLI11 cannot check on its own.
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void emit(const Json& j, const std::string& out_path) {
    const std::string text = hlm::io::dump(j);
    if (out_path.empty() || out_path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << text;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto a = item.find_first_not_of(" \t");
        const auto b = item.find_last_not_of(" \t");
        if (a != std::string::npos) out.push_back(item.substr(a, b - a + 1));
    }
    return out;
}

std::vector<hlm::Functional> functionals_for(const hlm::ModelSpec& spec, const std::string& list) {
    if (list.empty()) return hlm::beta_functionals(spec);
    std::vector<hlm::Functional> fs;
    for (const auto& name : split_list(list)) {
        try {
            fs.push_back(hlm::make_functional(spec, name));
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }
    return fs;
}

hlm::ScanOrder scan_order_for(const std::string& text) {
    try {
        return hlm::parse_scan_order(text);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

/// HLMGIBBS_BUDGET replaces the iteration cap when set.
std::size_t iteration_budget(std::size_t flag_value) {
    const char* env = std::getenv("HLMGIBBS_BUDGET");
    if (!env || !*env) return flag_value;
    std::size_t value = 0;
    const std::string text(env);
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || value == 0)
        throw UsageError("HLMGIBBS_BUDGET must be a positive integer, got '" + text + "'");
    return value;
}

void write_trace(const std::string& path, const std::vector<hlm::Functional>& fs, const hlm::MatrixXd& traces) {
    std::vector<std::string> header;
    for (const auto& f : fs) header.push_back(f.name);
    hlm::io::write_csv(path, header, traces);
}

std::string replicate_path(const std::string& path, std::size_t r) {
    fs::path p(path);
    return (p.parent_path() / (p.stem().string() + ".rep" + std::to_string(r) + p.extension().string())).string();
}

// ---- subcommands ----

struct ValidateArgs {
    std::string model, out;
};

int cmd_validate(const ValidateArgs& a) {
    const auto spec = hlm::io::load_model(a.model);
    hlm::ValidationReport report;
    try {
        report = hlm::validate_model(spec);
    } catch (const hlm::DimensionError& e) {
        report.checks.push_back({"conformable dimensions", false, std::numeric_limits<double>::quiet_NaN(),
                                 std::numeric_limits<double>::quiet_NaN(), e.what()});
    }
    emit(hlm::io::to_json(report, a.model), a.out);
    return report.passed() ? ok : validation_failure;
}

struct DiagnoseArgs {
    std::string model, out;
};

int cmd_diagnose(const DiagnoseArgs& a) {
    const hlm::Posterior post(hlm::io::load_model(a.model));
    emit(hlm::io::to_json(hlm::drift_certificate(post), a.model), a.out);
    return ok;
}

struct RunArgs {
    std::string model, out, trace, functionals, order = "xi_then_lambda";
    std::size_t n = 0;
    std::uint64_t seed = 0;
    double a_exponent = 0.501, level = 0.95;
    bool unsafe_exponent = false;
    std::size_t max_iter = 100'000'000;
};

int cmd_run(const RunArgs& a) {
    const auto budget = iteration_budget(a.max_iter);
    const hlm::Posterior post(hlm::io::load_model(a.model));
    const auto& spec = post.spec();

    hlm::SamplerConfig config;
    config.scan_order = scan_order_for(a.order);
    config.seed = a.seed;
    config.initial_state = hlm::prior_mean_state(spec);
    config.n_iterations = a.n;
    config.functionals = functionals_for(spec, a.functionals);
    const auto policy = a.unsafe_exponent ? hlm::ExponentPolicy::allow_unsafe : hlm::ExponentPolicy::enforce;
    try {
        hlm::check_exponent(a.a_exponent, policy);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    if (a.n > budget)
        throw hlm::BudgetExceededError("requested " + std::to_string(a.n) + " iterations exceeds the budget of " +
                                           std::to_string(budget),
                                       hlm::RunSummary{});

    const auto start = std::chrono::steady_clock::now();
    const auto drift = hlm::drift_certificate(post);
    const auto chain = hlm::run_chain(post, config);
    auto summary = hlm::summarize_chain(chain, a.a_exponent, a.level, 0, policy);
    summary.initial_state = config.initial_state;
    summary.model_source = a.model;
    summary.max_iterations = budget;
    summary.drift = hlm::summarize_drift(drift);
    if (!drift.certified()) summary.warnings.push_back("drift certificate not established; intervals may be invalid");
    summary.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    if (!a.trace.empty()) write_trace(a.trace, config.functionals, chain.traces);
    emit(hlm::io::to_json(summary), a.out);
    return ok;
}

struct RunSeqArgs {
    std::string model, out, trace, functionals, eps, order = "xi_then_lambda";
    std::uint64_t seed = 0;
    std::size_t n_star = 1000, check_interval = 1, replications = 1, max_iter = 100'000'000;
    double a_exponent = 0.501, level = 0.95;
    bool unsafe_exponent = false;
};

struct ReplicateResult {
    hlm::RunSummary summary;
    hlm::MatrixXd traces;
    bool over_budget = false;
    std::string error;  ///< non-budget failure
    int error_code = ok;
};

int cmd_run_seq(const RunSeqArgs& a) {
    const auto budget = iteration_budget(a.max_iter);
    if (a.replications == 0) throw UsageError("--replications must be at least 1");
    const hlm::Posterior post(hlm::io::load_model(a.model));
    const auto& spec = post.spec();

    hlm::SamplerConfig base;
    base.scan_order = scan_order_for(a.order);
    base.initial_state = hlm::prior_mean_state(spec);
    base.functionals = functionals_for(spec, a.functionals);

    hlm::StoppingConfig stopping;
    for (const auto& e : split_list(a.eps)) {
        try {
            stopping.epsilons.push_back(std::stod(e));
        } catch (const std::exception&) {
            throw UsageError("--eps: not a number: '" + e + "'");
        }
    }
    if (stopping.epsilons.size() == 1 && base.functionals.size() > 1)
        stopping.epsilons.assign(base.functionals.size(), stopping.epsilons.front());
    if (stopping.epsilons.size() != base.functionals.size())
        throw UsageError("--eps needs one value per functional (" + std::to_string(base.functionals.size()) + ")");
    stopping.n_star = a.n_star;
    stopping.level = a.level;
    stopping.check_interval = a.check_interval;
    stopping.max_iterations = budget;
    stopping.a_exponent = a.a_exponent;
    stopping.exponent_policy = a.unsafe_exponent ? hlm::ExponentPolicy::allow_unsafe : hlm::ExponentPolicy::enforce;
    try {
        hlm::check_exponent(stopping.a_exponent, stopping.exponent_policy);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }

    const auto drift = hlm::drift_certificate(post);
    std::vector<ReplicateResult> results(a.replications);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t r; (r = next.fetch_add(1)) < a.replications;) {
            auto config = base;
            config.seed = a.seed + r;
            auto& res = results[r];
            try {
                res.summary = hlm::sequential_run(post, config, stopping, drift, a.trace.empty() ? nullptr : &res.traces);
            } catch (const hlm::BudgetExceededError& e) {
                res.summary = e.partial();
                res.over_budget = true;
            } catch (const std::exception& e) {
                res.error = e.what();
                res.error_code = runtime_error;
            }
            res.summary.model_source = a.model;
        }
    };
    const std::size_t n_threads =
        std::min<std::size_t>(a.replications, std::max(1u, std::thread::hardware_concurrency()));
    {
        std::vector<std::jthread> pool;
        for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
        worker();
    }

    for (const auto& res : results)
        if (res.error_code != ok) throw std::runtime_error(res.error);

    if (!a.trace.empty()) {
        for (std::size_t r = 0; r < results.size(); ++r)
            if (!results[r].over_budget)
                write_trace(a.replications == 1 ? a.trace : replicate_path(a.trace, r), base.functionals,
                            results[r].traces);
    }

    std::vector<hlm::RunSummary> summaries;
    for (auto& res : results) summaries.push_back(res.summary);
    emit(a.replications == 1 ? hlm::io::to_json(summaries.front()) : hlm::io::replicated_json(summaries), a.out);

    std::size_t over = 0;
    for (const auto& res : results) over += res.over_budget;
    if (over > 0) {
        std::cerr << hlm::io::dump(hlm::io::error_json(
            "budget_exceeded",
            std::to_string(over) + " of " + std::to_string(a.replications) +
                " chains hit the iteration budget of " + std::to_string(budget) + " before the stopping rule fired",
            budget_exceeded));
        return budget_exceeded;
    }
    return ok;
}

struct EbFitArgs {
    std::string data, response, covariates, rounding = "none", out;
    std::vector<std::string> center_scale;
    bool no_intercept = false;
    double lambda_var = 1.0;
};

int cmd_eb_fit(const EbFitArgs& a) {
    const auto table = hlm::io::read_csv(a.data);
    std::vector<std::string> covs = split_list(a.covariates);
    if (covs.empty())
        for (const auto& h : table.header)
            if (h != a.response) covs.push_back(h);

    std::map<std::string, double> scale;
    for (const auto& item : a.center_scale) {
        const auto colon = item.find(':');
        const std::string col = item.substr(0, colon);
        double div = 1000.0;
        if (colon != std::string::npos) {
            try {
                div = std::stod(item.substr(colon + 1));
            } catch (const std::exception&) {
                throw UsageError("--center-scale: bad divisor in '" + item + "'");
            }
        }
        scale[col] = div;
    }

    const auto n = table.values.rows();
    const auto p = static_cast<Eigen::Index>(covs.size()) + (a.no_intercept ? 0 : 1);
    hlm::MatrixXd X(n, p);
    Eigen::Index c = 0;
    if (!a.no_intercept) X.col(c++).setOnes();
    for (const auto& name : covs) {
        hlm::VectorXd col = table.col(name);
        if (auto it = scale.find(name); it != scale.end()) col = hlm::center_and_scale(col, it->second);
        X.col(c++) = col;
    }
    for (const auto& [name, div] : scale)
        if (std::find(covs.begin(), covs.end(), name) == covs.end())
            throw UsageError("--center-scale names '" + name + "', which is not a covariate");
    const hlm::VectorXd y = table.col(a.response);

    hlm::HyperparameterOptions opts;
    try {
        opts.rounding = hlm::parse_variance_rounding(a.rounding);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
    opts.lambda_R_variance = a.lambda_var;

    const auto fit = hlm::least_squares(X, y);
    const auto prior = hlm::derive_hyperparameters(fit, opts);
    const auto spec = hlm::assemble_reduced_model(fit, X, y, opts);
    hlm::io::save_model(spec, a.out);

    std::vector<std::string> names;
    if (!a.no_intercept) names.push_back("intercept");
    names.insert(names.end(), covs.begin(), covs.end());
    Json j;
    j["schema_version"] = hlm::io::report_schema_version;
    j["kind"] = "eb_fit";
    j["data_source"] = a.data;
    j["model_file"] = a.out;
    j["n"] = n;
    j["columns"] = names;
    j["estimates"] = std::vector<double>(fit.estimates.data(), fit.estimates.data() + fit.estimates.size());
    j["standard_errors"] =
        std::vector<double>(fit.standard_errors.data(), fit.standard_errors.data() + fit.standard_errors.size());
    j["mse"] = fit.mse;
    j["df"] = fit.df;
    j["rounding"] = a.rounding;
    j["B_inv_diag"] = std::vector<double>(prior.B_inv_diag.data(), prior.B_inv_diag.data() + prior.B_inv_diag.size());
    j["r1"] = prior.r1;
    j["r2"] = prior.r2;
    emit(j, "");
    return ok;
}

struct ReportArgs {
    std::string trace, summary, out_dir = ".";
    bool plot = false;
};

std::string file_stem_for(const std::string& name) {
    std::string out;
    for (char ch : name) {
        if (std::isalnum(static_cast<unsigned char>(ch)) || ch == '_' || ch == '-') out += ch;
        else if (ch == '[') out += '_';
    }
    return out.empty() ? "functional" : out;
}

int cmd_report(const ReportArgs& a) {
    if (!a.plot) throw UsageError("report: nothing to do (pass --plot)");
    if (a.trace.empty() && a.summary.empty()) throw UsageError("report --plot needs --trace and/or --summary");
    fs::create_directories(a.out_dir);
    Json written = Json::array();
    auto write = [&](const std::string& file, const std::string& text) {
        const auto path = fs::path(a.out_dir) / file;
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write " + path.string());
        out << text;
        written.push_back(path.string());
    };
    if (!a.trace.empty()) {
        const auto table = hlm::io::read_csv(a.trace);
        for (Eigen::Index f = 0; f < table.values.cols(); ++f) {
            const hlm::VectorXd col = table.values.col(f);
            write("trace_" + file_stem_for(table.header[static_cast<std::size_t>(f)]) + ".svg",
                  hlm::io::trace_svg(table.header[static_cast<std::size_t>(f)],
                                     std::span<const double>(col.data(), static_cast<std::size_t>(col.size()))));
        }
    }
    if (!a.summary.empty()) {
        std::ifstream in(a.summary);
        if (!in) throw hlm::ParseError("cannot open " + a.summary);
        Json j;
        try {
            j = Json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw hlm::ParseError(a.summary + ": " + e.what());
        }
        write("estimates.svg", hlm::io::estimates_svg(hlm::io::run_summary_from_json(j).functionals));
    }
    Json j;
    j["schema_version"] = hlm::io::report_schema_version;
    j["kind"] = "plot_report";
    j["files"] = written;
    emit(j, "");
    return ok;
}

int fail(const std::string& category, const std::string& message, int code) {
    std::cerr << hlm::io::dump(hlm::io::error_json(category, message, code));
    return code;
}

}

int main(int argc, char** argv) {
    CLI::App app{"Block Gibbs sampling for Bayesian hierarchical linear models"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "hlmgibbs 1.0");

    ValidateArgs va;
    auto* validate = app.add_subcommand("validate", "check a model file; exit 1 if any check fails");
    validate->add_option("model", va.model, "model file")->required();
    validate->add_option("-o,--out", va.out, "write the JSON report here instead of stdout");

    DiagnoseArgs da;
    auto* diagnose = app.add_subcommand("diagnose", "drift certificate (geometric ergodicity conditions) as JSON");
    diagnose->add_option("model", da.model, "model file")->required();
    diagnose->add_option("-o,--out", da.out, "write the JSON report here instead of stdout");

    RunArgs ra;
    auto* run = app.add_subcommand("run", "fixed-length chain with batch means summaries");
    run->add_option("model", ra.model, "model file")->required();
    run->add_option("--n", ra.n, "number of iterations")->required()->check(CLI::PositiveNumber);
    run->add_option("--seed", ra.seed, "random seed")->required();
    run->add_option("--order", ra.order, "xi_then_lambda or lambda_then_xi")->capture_default_str();
    run->add_option("--functionals", ra.functionals, "comma list, e.g. beta[0],lambda_R,V (default: all beta)");
    run->add_option("--trace", ra.trace, "write recorded traces to this CSV");
    run->add_option("-o,--out", ra.out, "write the JSON summary here instead of stdout");
    run->add_option("--a", ra.a_exponent, "batch size exponent")->capture_default_str();
    run->add_option("--level", ra.level, "interval level")->capture_default_str()->check(CLI::Range(0.0, 1.0));
    run->add_flag("--unsafe-exponent", ra.unsafe_exponent, "allow a batch size exponent outside (1/2, 1)");
    run->add_option("--max-iter", ra.max_iter, "iteration cap (HLMGIBBS_BUDGET overrides)")->capture_default_str();

    RunSeqArgs sa;
    auto* run_seq = app.add_subcommand("run-seq", "run until the fixed-width stopping rule fires");
    run_seq->add_option("model", sa.model, "model file")->required();
    run_seq->add_option("--eps", sa.eps, "target half-widths, one per functional (comma list)")->required();
    run_seq->add_option("--nstar", sa.n_star, "minimum run length")->capture_default_str();
    run_seq->add_option("--seed", sa.seed, "random seed; replication r uses seed + r")->required();
    run_seq->add_option("--order", sa.order, "xi_then_lambda or lambda_then_xi")->capture_default_str();
    run_seq->add_option("--functionals", sa.functionals, "comma list (default: all beta)");
    run_seq->add_option("--level", sa.level, "interval level")->capture_default_str()->check(CLI::Range(0.0, 1.0));
    run_seq->add_option("--check-interval", sa.check_interval, "iterations between checks")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    run_seq->add_option("--replications", sa.replications, "independent chains run concurrently")
        ->capture_default_str();
    run_seq->add_option("--max-iter", sa.max_iter, "iteration cap (HLMGIBBS_BUDGET overrides)")
        ->capture_default_str();
    run_seq->add_option("--a", sa.a_exponent, "batch size exponent")->capture_default_str();
    run_seq->add_flag("--unsafe-exponent", sa.unsafe_exponent, "allow a batch size exponent outside (1/2, 1)");
    run_seq->add_option("--trace", sa.trace, "write recorded traces to this CSV (.repR suffix per replication)");
    run_seq->add_option("-o,--out", sa.out, "write the JSON summary here instead of stdout");

    EbFitArgs ea;
    auto* eb_fit = app.add_subcommand("eb-fit", "least squares empirical Bayes prior; writes a model file");
    eb_fit->add_option("data", ea.data, "CSV data file")->required();
    eb_fit->add_option("--response", ea.response, "response column")->required();
    eb_fit->add_option("--covariates", ea.covariates, "comma list (default: every other column)");
    eb_fit->add_flag("--no-intercept", ea.no_intercept, "omit the intercept column");
    eb_fit->add_option("--center-scale", ea.center_scale, "center a covariate and divide by DIV: col[:DIV], DIV=1000");
    eb_fit->add_option("--round", ea.rounding, "prior variance rounding: none, nearest or ceil")->capture_default_str();
    eb_fit->add_option("--lambda-var", ea.lambda_var, "prior variance of lambda_R")->capture_default_str();
    eb_fit->add_option("-o,--out", ea.out, "model file to write")->required();

    ReportArgs pa;
    auto* report = app.add_subcommand("report", "static figures from a run");
    report->add_flag("--plot", pa.plot, "write SVG figures");
    report->add_option("--trace", pa.trace, "trace CSV from run/run-seq");
    report->add_option("--summary", pa.summary, "run summary JSON");
    report->add_option("--out-dir", pa.out_dir, "directory for the figures")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail("usage", e.what(), runtime_error);
    }

    try {
        if (validate->parsed()) return cmd_validate(va);
        if (diagnose->parsed()) return cmd_diagnose(da);
        if (run->parsed()) return cmd_run(ra);
        if (run_seq->parsed()) return cmd_run_seq(sa);
        if (eb_fit->parsed()) return cmd_eb_fit(ea);
        if (report->parsed()) return cmd_report(pa);
    } catch (const hlm::BudgetExceededError& e) {
        return fail("budget_exceeded", e.what(), budget_exceeded);
    } catch (const UsageError& e) {
        return fail("usage", e.what(), runtime_error);
    } catch (const hlm::ValidationError& e) {
        return fail("validation", e.what(), validation_failure);
    } catch (const hlm::ParseError& e) {
        return fail("validation", e.what(), validation_failure);
    } catch (const hlm::DimensionError& e) {
        return fail("validation", e.what(), validation_failure);
    } catch (const std::exception& e) {
        return fail("runtime", e.what(), runtime_error);
    }
    return fail("usage", "no subcommand", runtime_error);
}
