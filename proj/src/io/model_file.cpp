#include "hlmgibbs/io/model_file.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "hlmgibbs/errors.hpp"
#include "hlmgibbs/io/csv.hpp"

namespace hlm::io {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double to_number(const std::string& text, const std::string& where) {
    const std::string t = trim(text);
    double v = 0;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (t.empty() || ec != std::errc() || ptr != last) throw ParseError(where + ": not a number: '" + t + "'");
    return v;
}

Eigen::VectorXd to_vector(const std::string& text, const std::string& where) {
    std::vector<double> vals;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) vals.push_back(to_number(item, where));
    if (vals.empty()) throw ParseError(where + ": empty list");
    return Eigen::Map<Eigen::VectorXd>(vals.data(), static_cast<Eigen::Index>(vals.size()));
}

std::string format_number(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, ptr);
}

std::string format_vector(const Eigen::VectorXd& v) {
    std::string out;
    for (Eigen::Index i = 0; i < v.size(); ++i) out += (i ? ", " : "") + format_number(v(i));
    return out;
}

struct Section {
    std::string kind;
    std::map<std::string, std::string> values;
    std::string where;

    const std::string& get(const std::string& key) const {
        auto it = values.find(key);
        if (it == values.end()) throw ParseError(where + ": [" + kind + "] is missing '" + key + "'");
        return it->second;
    }
};

GammaComponent gamma_component(const Section& s) {
    for (const auto& [k, v] : s.values)
        if (k != "weight" && k != "shape" && k != "rate")
            throw ParseError(s.where + ": unknown key '" + k + "' in [" + s.kind + "]");
    return {to_number(s.get("weight"), s.where), to_number(s.get("shape"), s.where),
            to_number(s.get("rate"), s.where)};
}

}

ModelSpec parse_model(std::istream& in, const std::filesystem::path& base_dir, const std::string& source) {
    std::map<std::string, std::string> top;
    std::map<std::string, std::string> top_where;
    std::vector<Section> sections;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string where = source + ":" + std::to_string(line_no);
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ParseError(where + ": malformed section header");
            const std::string kind = trim(line.substr(1, line.size() - 2));
            if (kind != "beta_component" && kind != "lambda_R_component" && kind != "lambda_D_component")
                throw ParseError(where + ": unknown section [" + kind + "]");
            sections.push_back({kind, {}, where});
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ParseError(where + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        auto& target = sections.empty() ? top : sections.back().values;
        if (!target.emplace(key, value).second) throw ParseError(where + ": duplicate key '" + key + "'");
        if (sections.empty()) top_where[key] = where;
    }

    for (const auto& [k, v] : top)
        if (k != "schema_version" && k != "y" && k != "X" && k != "Z" && k != "B" && k != "B_diag")
            throw ParseError(top_where[k] + ": unknown key '" + k + "'");
    if (auto it = top.find("schema_version"); it != top.end() && trim(it->second) != "1")
        throw ParseError(source + ": unsupported schema_version " + it->second);
    for (const char* key : {"y", "X"})
        if (!top.count(key)) throw ParseError(source + ": missing '" + key + "'");
    if (top.count("B") == top.count("B_diag"))
        throw ParseError(source + ": give exactly one of 'B' and 'B_diag'");

    auto resolve = [&](const std::string& rel) { return base_dir / rel; };
    ModelSpec spec;
    {
        const auto t = read_csv(resolve(top["y"]));
        if (t.values.cols() != 1) throw ParseError(top["y"] + ": response file must have one column");
        spec.y = t.values.col(0);
    }
    spec.X = read_csv(resolve(top["X"])).values;
    spec.Z = top.count("Z") ? read_csv(resolve(top["Z"])).values : Eigen::MatrixXd(spec.y.size(), 0);
    if (top.count("B")) {
        spec.B = read_csv(resolve(top["B"])).values;
    } else {
        spec.B = to_vector(top["B_diag"], top_where["B_diag"]).asDiagonal();
    }

    for (const auto& s : sections) {
        if (s.kind == "beta_component") {
            for (const auto& [k, v] : s.values)
                if (k != "weight" && k != "mean")
                    throw ParseError(s.where + ": unknown key '" + k + "' in [beta_component]");
            spec.beta_prior.push_back({to_number(s.get("weight"), s.where), to_vector(s.get("mean"), s.where)});
        } else if (s.kind == "lambda_R_component") {
            spec.lambda_R_prior.push_back(gamma_component(s));
        } else {
            spec.lambda_D_prior.push_back(gamma_component(s));
        }
    }
    return spec;
}

ModelSpec load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open model file " + path.string());
    return parse_model(in, path.parent_path(), path.string());
}

void save_model(const ModelSpec& spec, const std::filesystem::path& path) {
    const auto dir = path.parent_path();
    const std::string stem = path.stem().string();
    auto sibling = [&](const std::string& what) { return stem + "." + what + ".csv"; };
    auto columns = [](const char* base, Eigen::Index n) {
        std::vector<std::string> h;
        for (Eigen::Index i = 0; i < n; ++i) h.push_back(std::string(base) + std::to_string(i));
        return h;
    };

    write_csv(dir / sibling("y"), {"y"}, spec.y);
    write_csv(dir / sibling("X"), columns("x", spec.p()), spec.X);
    if (spec.hasRandomEffects()) write_csv(dir / sibling("Z"), columns("z", spec.k()), spec.Z);

    const bool diagonal = spec.B.isDiagonal(0.0);
    if (!diagonal) write_csv(dir / sibling("B"), columns("b", spec.p()), spec.B);

    std::ofstream out(path);
    if (!out) throw ParseError("cannot write model file " + path.string());
    out << "schema_version = 1\n";
    out << "y = " << sibling("y") << "\n";
    out << "X = " << sibling("X") << "\n";
    if (spec.hasRandomEffects()) out << "Z = " << sibling("Z") << "\n";
    if (diagonal) out << "B_diag = " << format_vector(spec.B.diagonal()) << "\n";
    else out << "B = " << sibling("B") << "\n";
    for (const auto& c : spec.beta_prior)
        out << "\n[beta_component]\nweight = " << format_number(c.weight) << "\nmean = " << format_vector(c.mean)
            << "\n";
    for (const auto& c : spec.lambda_R_prior)
        out << "\n[lambda_R_component]\nweight = " << format_number(c.weight) << "\nshape = "
            << format_number(c.shape) << "\nrate = " << format_number(c.rate) << "\n";
    for (const auto& c : spec.lambda_D_prior)
        out << "\n[lambda_D_component]\nweight = " << format_number(c.weight) << "\nshape = "
            << format_number(c.shape) << "\nrate = " << format_number(c.rate) << "\n";
}

}
