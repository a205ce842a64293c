#include "hlmgibbs/io/json_report.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hlmgibbs/errors.hpp"

namespace hlm::io {

namespace {

Json number(double v) {
    if (std::isnan(v)) return "NaN";
    if (std::isinf(v)) return v > 0 ? "Infinity" : "-Infinity";
    return v;
}

Json optional_number(const std::optional<double>& v) { return v ? number(*v) : Json(nullptr); }

Json vector_json(const VectorXd& v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(number(v(i)));
    return out;
}

double read_number(const Json& j) {
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "NaN") return std::numeric_limits<double>::quiet_NaN();
        if (s == "Infinity") return std::numeric_limits<double>::infinity();
        if (s == "-Infinity") return -std::numeric_limits<double>::infinity();
    }
    throw ParseError("expected a number, got " + j.dump());
}

std::optional<double> read_optional_number(const Json& j) {
    if (j.is_null()) return std::nullopt;
    return read_number(j);
}

VectorXd read_vector(const Json& j) {
    VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = read_number(j.at(i));
    return v;
}

Json delta_list(const std::vector<DeltaValue>& ds) {
    Json out = Json::array();
    for (const auto& d : ds) {
        Json e;
        e["value"] = d.valid ? number(d.value) : Json(nullptr);
        e["valid"] = d.valid;
        e["reason"] = d.reason;
        out.push_back(e);
    }
    return out;
}

Json case_json(const DriftCase& c) {
    Json out;
    out["applicable"] = c.applicable;
    out["gamma"] = optional_number(c.gamma);
    out["L"] = optional_number(c.L);
    out["conditions"] = Json::array();
    for (const auto& cond : c.conditions) {
        Json e;
        e["name"] = cond.name;
        e["lhs"] = number(cond.lhs);
        e["rhs"] = number(cond.rhs);
        e["holds"] = cond.holds;
        e["margin"] = number(cond.margin());
        out["conditions"].push_back(e);
    }
    return out;
}

KProvenance parse_provenance(const std::string& s) {
    for (auto p : {KProvenance::analytic_Z0, KProvenance::analytic_nonsingular, KProvenance::numeric_search})
        if (to_string(p) == s) return p;
    throw ParseError("unknown K provenance '" + s + "'");
}

Verdict parse_verdict(const std::string& s) {
    for (auto v : {Verdict::certified_geometric, Verdict::not_certified})
        if (to_string(v) == s) return v;
    throw ParseError("unknown verdict '" + s + "'");
}

Json optional_size(const std::optional<std::size_t>& v) { return v ? Json(*v) : Json(nullptr); }

std::optional<std::size_t> read_optional_size(const Json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<std::size_t>();
}

}

Json to_json(const ValidationReport& report, const std::string& model_source) {
    Json j;
    j["schema_version"] = report_schema_version;
    j["kind"] = "validation_report";
    j["model_source"] = model_source;
    j["passed"] = report.passed();
    j["checks"] = Json::array();
    for (const auto& c : report.checks) {
        Json e;
        e["name"] = c.name;
        e["passed"] = c.passed;
        e["measured"] = number(c.measured);
        e["threshold"] = number(c.threshold);
        e["detail"] = c.detail;
        j["checks"].push_back(e);
    }
    return j;
}

Json to_json(const DriftReport& report, const std::string& model_source) {
    Json j;
    j["schema_version"] = report_schema_version;
    j["kind"] = "drift_report";
    j["model_source"] = model_source;
    j["verdict"] = to_string(report.verdict);
    j["certified"] = report.certified();
    j["best_gamma"] = optional_number(report.best_gamma());
    j["reasons"] = report.reasons;

    const auto& s = report.deltas.sums;
    j["leverage"] = {{"sum_x_lev", number(s.sum_x_lev)},
                     {"sum_z_lev", optional_number(s.sum_z_lev)},
                     {"frob_z_sq", number(s.frob_z_sq)}};
    j["deltas"] = {{"delta1", delta_list(report.deltas.delta1)},
                   {"delta2", delta_list(report.deltas.delta2)},
                   {"delta3", delta_list(report.deltas.delta3)},
                   {"delta4", delta_list(report.deltas.delta4)}};
    j["sum_x_binv"] = number(report.sum_x_binv);
    if (report.k) {
        Json argmax = Json::array();
        for (double v : report.k->argmax_log10_lambda) argmax.push_back(number(v));
        j["k_bound"] = {{"K", number(report.k->K)},
                        {"g_bound", number(report.k->g_bound)},
                        {"provenance", to_string(report.k->provenance)},
                        {"rigorous", report.k->rigorous},
                        {"argmax_log10_lambda", argmax}};
    } else {
        j["k_bound"] = nullptr;
    }
    j["k_failure"] = report.k_failure;
    j["case1"] = case_json(report.case1);
    j["case2"] = case_json(report.case2);
    return j;
}

Json to_json(const RunSummary& s) {
    Json j;
    j["schema_version"] = s.schema_version;
    j["kind"] = "run_summary";
    j["mode"] = s.mode;
    j["model_source"] = s.model_source;
    j["seed"] = s.seed;
    j["scan_order"] = to_string(s.scan_order);
    j["a_exponent"] = number(s.a_exponent);
    j["level"] = number(s.level);
    j["bonferroni_m"] = s.bonferroni_m;
    j["n_star"] = optional_size(s.n_star);
    j["check_interval"] = optional_size(s.check_interval);
    j["max_iterations"] = optional_size(s.max_iterations);
    j["n_total"] = s.n_total;
    j["stopped"] = s.stopped;
    j["functionals"] = Json::array();
    for (const auto& f : s.functionals) {
        Json e;
        e["name"] = f.name;
        e["estimate"] = number(f.estimate);
        e["mcse"] = number(f.mcse);
        e["half_width"] = number(f.half_width);
        e["epsilon"] = optional_number(f.epsilon);
        e["sigma2_hat"] = number(f.sigma2_hat);
        e["batch_size"] = f.batch_size;
        e["batch_count"] = f.batch_count;
        j["functionals"].push_back(e);
    }
    if (s.drift) {
        j["drift"] = {{"verdict", to_string(s.drift->verdict)},
                      {"case_fired", s.drift->case_fired},
                      {"gamma", optional_number(s.drift->gamma)},
                      {"K", optional_number(s.drift->K)},
                      {"k_provenance", s.drift->k_provenance ? Json(to_string(*s.drift->k_provenance))
                                                             : Json(nullptr)},
                      {"k_rigorous", s.drift->k_rigorous}};
    } else {
        j["drift"] = nullptr;
    }
    j["warnings"] = s.warnings;
    j["initial_state"] = {{"u", vector_json(s.initial_state.u)},
                          {"beta", vector_json(s.initial_state.beta)},
                          {"lambda_R", number(s.initial_state.lambda_R)},
                          {"lambda_D", optional_number(s.initial_state.lambda_D)}};
    j["wall_clock_seconds"] = number(s.wall_clock_seconds);
    return j;
}

RunSummary run_summary_from_json(const Json& j) {
    try {
        if (j.at("kind") != "run_summary") throw ParseError("not a run_summary document");
        RunSummary s;
        s.schema_version = j.at("schema_version").get<int>();
        if (s.schema_version != report_schema_version)
            throw ParseError("unsupported schema_version " + std::to_string(s.schema_version));
        s.mode = j.at("mode").get<std::string>();
        s.model_source = j.at("model_source").get<std::string>();
        s.seed = j.at("seed").get<std::uint64_t>();
        s.scan_order = parse_scan_order(j.at("scan_order").get<std::string>());
        s.a_exponent = read_number(j.at("a_exponent"));
        s.level = read_number(j.at("level"));
        s.bonferroni_m = j.at("bonferroni_m").get<std::size_t>();
        s.n_star = read_optional_size(j.at("n_star"));
        s.check_interval = read_optional_size(j.at("check_interval"));
        s.max_iterations = read_optional_size(j.at("max_iterations"));
        s.n_total = j.at("n_total").get<std::size_t>();
        s.stopped = j.at("stopped").get<bool>();
        for (const auto& e : j.at("functionals")) {
            FunctionalSummary f;
            f.name = e.at("name").get<std::string>();
            f.estimate = read_number(e.at("estimate"));
            f.mcse = read_number(e.at("mcse"));
            f.half_width = read_number(e.at("half_width"));
            f.epsilon = read_optional_number(e.at("epsilon"));
            f.sigma2_hat = read_number(e.at("sigma2_hat"));
            f.batch_size = e.at("batch_size").get<std::size_t>();
            f.batch_count = e.at("batch_count").get<std::size_t>();
            s.functionals.push_back(std::move(f));
        }
        if (const auto& d = j.at("drift"); !d.is_null()) {
            DriftSummary ds;
            ds.verdict = parse_verdict(d.at("verdict").get<std::string>());
            ds.case_fired = d.at("case_fired").get<int>();
            ds.gamma = read_optional_number(d.at("gamma"));
            ds.K = read_optional_number(d.at("K"));
            if (!d.at("k_provenance").is_null())
                ds.k_provenance = parse_provenance(d.at("k_provenance").get<std::string>());
            ds.k_rigorous = d.at("k_rigorous").get<bool>();
            s.drift = ds;
        }
        s.warnings = j.at("warnings").get<std::vector<std::string>>();
        const auto& init = j.at("initial_state");
        s.initial_state.u = read_vector(init.at("u"));
        s.initial_state.beta = read_vector(init.at("beta"));
        s.initial_state.lambda_R = read_number(init.at("lambda_R"));
        s.initial_state.lambda_D = read_optional_number(init.at("lambda_D"));
        s.wall_clock_seconds = read_number(j.at("wall_clock_seconds"));
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed run summary: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ParseError(std::string("malformed run summary: ") + e.what());
    }
}

Json replicated_json(const std::vector<RunSummary>& runs) {
    Json j;
    j["schema_version"] = report_schema_version;
    j["kind"] = "replicated_run";
    j["all_stopped"] = std::all_of(runs.begin(), runs.end(), [](const RunSummary& r) { return r.stopped; });
    j["replications"] = Json::array();
    for (const auto& r : runs) j["replications"].push_back(to_json(r));
    return j;
}

Json error_json(const std::string& category, const std::string& message, int exit_code) {
    Json j;
    j["schema_version"] = report_schema_version;
    j["kind"] = "error";
    j["error"] = category;
    j["message"] = message;
    j["exit_code"] = exit_code;
    return j;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

}
