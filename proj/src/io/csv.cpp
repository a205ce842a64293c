#include "hlmgibbs/io/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "hlmgibbs/errors.hpp"

namespace hlm::io {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto comma = line.find(',', start);
        out.push_back(trim(std::string_view(line).substr(start, comma - start)));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    return out;
}

double parse_number(const std::string& cell, const std::string& where) {
    double value = 0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (cell.empty() || ec != std::errc() || ptr != last)
        throw ParseError(where + ": not a number: '" + cell + "'");
    return value;
}

}

Eigen::Index CsvTable::column(const std::string& name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return static_cast<Eigen::Index>(i);
    throw ParseError("no column named '" + name + "'");
}

CsvTable parse_csv(std::istream& in, const std::string& source) {
    CsvTable table;
    std::string line;
    std::size_t line_no = 0;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto cells = split(line);
        if (table.header.empty()) {
            table.header = std::move(cells);
            for (const auto& h : table.header)
                if (h.empty()) throw ParseError(source + ": empty column name in header");
            continue;
        }
        const std::string where = source + ":" + std::to_string(line_no);
        if (cells.size() != table.header.size())
            throw ParseError(where + ": expected " + std::to_string(table.header.size()) + " fields, got " +
                             std::to_string(cells.size()));
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto& c : cells) row.push_back(parse_number(c, where));
        rows.push_back(std::move(row));
    }
    if (table.header.empty()) throw ParseError(source + ": missing header row");
    table.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(table.header.size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            table.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open CSV file " + path.string());
    return parse_csv(in, path.string());
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values) {
    if (static_cast<Eigen::Index>(header.size()) != values.cols())
        throw DimensionError("write_csv: header size differs from column count");
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write CSV file " + path.string());
    for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
    out << '\n';
    char buf[32];
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, values(i, j));
            (void)ec;
            if (j) out << ',';
            out.write(buf, ptr - buf);
        }
        out << '\n';
    }
}

}
