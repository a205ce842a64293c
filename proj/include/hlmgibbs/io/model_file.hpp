#pragma once
#include <filesystem>
#include <istream>
#include <string>

#include "hlmgibbs/model.hpp"

namespace hlm::io {

/** Model files are flat `key = value` text.  `#` starts a comment.  Top-level keys:
 *
 *     schema_version = 1
 *     y = y.csv                 # one column
 *     X = X.csv                 # p columns
 *     Z = Z.csv                 # k columns; omit for a model without random effects
 *     B = B.csv                 # p×p prior precision of beta, or instead:
 *     B_diag = 0.5, 0.25        # its diagonal
 *
 * followed by one section per mixture component, repeated as needed:
 *
 *     [beta_component]          # keys: weight, mean = b_1, ..., b_p
 *     [lambda_R_component]      # keys: weight, shape, rate
 *     [lambda_D_component]      # keys: weight, shape, rate
 *
 * CSV paths are resolved relative to the model file's directory.
 */
ModelSpec parse_model(std::istream& in, const std::filesystem::path& base_dir,
                      const std::string& source = "<stream>");
ModelSpec load_model(const std::filesystem::path& path);

/** Writes `path` plus CSV files `<stem>.y.csv`, `<stem>.X.csv`, and when needed `<stem>.Z.csv`
 * and `<stem>.B.csv` next to it.  All numbers round-trip exactly.
 */
void save_model(const ModelSpec& spec, const std::filesystem::path& path);

}
