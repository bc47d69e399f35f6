#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "priceaudit/pipeline.hpp"

namespace priceaudit {

/// Renders one assessment's quadrant chart as an SVG document: net
/// utility on the horizontal axis, relative price gap on the vertical
/// (pricier neighbors up, cheaper down, matching the quadrant framing),
/// padding bands shaded, points colored by zone, verdict annotated.
std::string render_quadrant_svg(const AssessmentRecord& record);

/// Structured twin of the chart: exactly the trace's QuadrantPoints plus
/// the verdict and padding. Pure view of the record, nothing recomputed.
nlohmann::json quadrant_plot_data(const AssessmentRecord& record);

} // namespace priceaudit
