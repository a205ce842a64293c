#pragma once
#include <string>
#include <vector>

#include <json.hpp>

#include "hlmgibbs/ergodicity.hpp"
#include "hlmgibbs/model.hpp"
#include "hlmgibbs/output_analysis.hpp"

namespace hlm::io {

using Json = nlohmann::ordered_json;

inline constexpr int report_schema_version = 1;

/** Every report carries `schema_version` and a `kind` tag.  Numbers are written with enough digits
 * to read back exactly; non-finite values become the strings "Infinity", "-Infinity" and "NaN".
 */
Json to_json(const ValidationReport& report, const std::string& model_source = "");
Json to_json(const DriftReport& report, const std::string& model_source = "");
Json to_json(const RunSummary& summary);

/// Inverse of to_json(RunSummary); throws ParseError on a malformed document.
RunSummary run_summary_from_json(const Json& j);

Json replicated_json(const std::vector<RunSummary>& runs);

/// `kind: "error"` document; `category` is one of validation, runtime, usage, budget_exceeded.
Json error_json(const std::string& category, const std::string& message, int exit_code);

/// Two-space indented dump with a trailing newline.
std::string dump(const Json& j);

}
