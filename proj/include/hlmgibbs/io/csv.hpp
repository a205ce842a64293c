#pragma once
#include <Eigen/Core>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

namespace hlm::io {

/** Numeric table with a header row.  Format: comma separated, one header line, '.' as decimal
 * point, no quoting, no locale handling.  Blank lines are skipped.
 */
struct CsvTable {
    std::vector<std::string> header;
    Eigen::MatrixXd values;

    /// Index of the named column; throws ParseError if absent.
    Eigen::Index column(const std::string& name) const;
    Eigen::VectorXd col(const std::string& name) const { return values.col(column(name)); }
};

CsvTable parse_csv(std::istream& in, const std::string& source = "<stream>");
CsvTable read_csv(const std::filesystem::path& path);

/// Writes the shortest decimal form of each value that reads back bit-for-bit.
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values);

}
