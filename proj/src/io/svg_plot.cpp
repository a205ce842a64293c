#include "hlmgibbs/io/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace hlm::io {

namespace {

constexpr double width = 720, left = 70, right = 20;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

struct Range {
    double lo, hi;
    double map(double v, double top, double bottom) const {
        return bottom - (v - lo) / (hi - lo) * (bottom - top);
    }
};

Range padded(double lo, double hi) {
    if (!(hi > lo)) {
        const double pad = std::max(std::abs(lo) * 0.05, 1e-9);
        return {lo - pad, hi + pad};
    }
    const double pad = (hi - lo) * 0.05;
    return {lo - pad, hi + pad};
}

}

std::string trace_svg(const std::string& name, std::span<const double> trace, std::size_t max_points) {
    constexpr double height = 320, top = 30, bottom = 280;
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"" << left << "\" y=\"18\">" << escape(name) << " (n = " << trace.size() << ")</text>\n";
    if (trace.empty()) {
        svg << "</svg>\n";
        return svg.str();
    }

    const auto [mn, mx] = std::minmax_element(trace.begin(), trace.end());
    const Range yr = padded(*mn, *mx);
    const double n = static_cast<double>(trace.size());
    auto xpos = [&](std::size_t i) { return left + (width - left - right) * (trace.size() == 1 ? 0.5 : i / (n - 1)); };

    svg << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << width - right << "\" y2=\"" << bottom
        << "\" stroke=\"black\"/>\n";
    svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << bottom
        << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << left - 6 << "\" y=\"" << top + 4 << "\" text-anchor=\"end\">" << fmt(yr.hi) << "</text>\n";
    svg << "<text x=\"" << left - 6 << "\" y=\"" << bottom << "\" text-anchor=\"end\">" << fmt(yr.lo) << "</text>\n";
    svg << "<text x=\"" << width - right << "\" y=\"" << bottom + 16 << "\" text-anchor=\"end\">iteration</text>\n";

    const std::size_t stride = std::max<std::size_t>(1, (trace.size() + max_points - 1) / std::max<std::size_t>(max_points, 1));
    svg << "<polyline fill=\"none\" stroke=\"#7a9cc6\" stroke-width=\"0.8\" points=\"";
    for (std::size_t i = 0; i < trace.size(); i += stride)
        svg << fmt(xpos(i)) << ',' << fmt(yr.map(trace[i], top, bottom)) << ' ';
    svg << "\"/>\n";

    svg << "<polyline fill=\"none\" stroke=\"#c0392b\" stroke-width=\"1.6\" points=\"";
    double sum = 0;
    for (std::size_t i = 0; i < trace.size(); ++i) {
        sum += trace[i];
        if (i % stride == 0 || i + 1 == trace.size())
            svg << fmt(xpos(i)) << ',' << fmt(yr.map(sum / static_cast<double>(i + 1), top, bottom)) << ' ';
    }
    svg << "\"/>\n";
    svg << "<text x=\"" << width - right << "\" y=\"18\" text-anchor=\"end\" fill=\"#c0392b\">running mean "
        << fmt(sum / n) << "</text>\n";
    svg << "</svg>\n";
    return svg.str();
}

std::string estimates_svg(const std::vector<FunctionalSummary>& functionals) {
    constexpr double row = 50, top = 30;
    const double height = top + row * static_cast<double>(functionals.size()) + 20;
    const double plot_left = 160;
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    svg << "<text x=\"10\" y=\"18\">estimate ± half-width</text>\n";
    for (std::size_t r = 0; r < functionals.size(); ++r) {
        const auto& f = functionals[r];
        const double cy = top + row * (static_cast<double>(r) + 0.5);
        const bool finite = std::isfinite(f.half_width);
        const double half = finite ? f.half_width : 0.0;
        const Range xr = padded(f.estimate - 2 * half, f.estimate + 2 * half);
        auto xpos = [&](double v) { return plot_left + (v - xr.lo) / (xr.hi - xr.lo) * (width - plot_left - right); };

        svg << "<text x=\"10\" y=\"" << cy + 4 << "\">" << escape(f.name) << "</text>\n";
        svg << "<line x1=\"" << plot_left << "\" y1=\"" << cy + 14 << "\" x2=\"" << width - right << "\" y2=\""
            << cy + 14 << "\" stroke=\"#999\"/>\n";
        svg << "<text x=\"" << plot_left << "\" y=\"" << cy + 26 << "\" font-size=\"10\">" << fmt(xr.lo)
            << "</text>\n";
        svg << "<text x=\"" << width - right << "\" y=\"" << cy + 26 << "\" font-size=\"10\" text-anchor=\"end\">"
            << fmt(xr.hi) << "</text>\n";
        if (finite) {
            svg << "<line x1=\"" << fmt(xpos(f.estimate - half)) << "\" y1=\"" << cy << "\" x2=\""
                << fmt(xpos(f.estimate + half)) << "\" y2=\"" << cy << "\" stroke=\"black\" stroke-width=\"2\"/>\n";
        }
        svg << "<circle cx=\"" << fmt(xpos(f.estimate)) << "\" cy=\"" << cy << "\" r=\"4\" fill=\"#c0392b\"/>\n";
        svg << "<text x=\"" << fmt(xpos(f.estimate)) << "\" y=\"" << cy - 8 << "\" text-anchor=\"middle\">"
            << fmt(f.estimate) << " ± " << (finite ? fmt(f.half_width) : std::string("inf")) << "</text>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

}
