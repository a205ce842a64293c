#pragma once
#include <span>
#include <string>
#include <vector>

#include "hlmgibbs/output_analysis.hpp"

namespace hlm::io {

/** Static SVG figure of one functional's trace with its running mean drawn over it.  Traces longer
 * than `max_points` are thinned to every k-th value for the trace line; the running mean always
 * uses every value.
 */
std::string trace_svg(const std::string& name, std::span<const double> trace, std::size_t max_points = 2000);

/// One row per functional: the estimate with a ±half-width bar, each row on its own scale.
std::string estimates_svg(const std::vector<FunctionalSummary>& functionals);

}
