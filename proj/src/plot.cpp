#include "priceaudit/plot.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace priceaudit {

using nlohmann::json;

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 520.0;
constexpr double kLeft = 70.0, kRight = 30.0, kTop = 56.0, kBottom = 56.0;

struct Scale {
    double u_max; // symmetric utility range [-u_max, u_max]
    double g_max; // symmetric rel_gap range [-g_max, g_max]

    double x(double net_utility) const {
        const double w = kWidth - kLeft - kRight;
        return kLeft + (net_utility + u_max) / (2.0 * u_max) * w;
    }
    // Cheaper neighbors (positive rel_gap) plot downward.
    double y(double rel_gap) const {
        const double h = kHeight - kTop - kBottom;
        return kTop + (rel_gap + g_max) / (2.0 * g_max) * h;
    }
};

const char* zone_fill(Zone zone) {
    switch (zone) {
    case Zone::AP: return "#c0392b";
    case Zone::NOT_AP: return "#27ae60";
    case Zone::TRADEOFF: return "#b7950b";
    case Zone::UNINFORMATIVE: return "#7f8c8d";
    }
    return "#7f8c8d";
}

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.1f", v);
    return buf;
}

std::string escape(const std::string& text) {
    std::string out;
    for (char c : text) {
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

void rect(std::ostringstream& out, double x0, double y0, double x1, double y1,
          const char* fill, const char* label) {
    out << "  <rect x=\"" << num(std::min(x0, x1)) << "\" y=\"" << num(std::min(y0, y1))
        << "\" width=\"" << num(std::abs(x1 - x0)) << "\" height=\"" << num(std::abs(y1 - y0))
        << "\" fill=\"" << fill << "\"><title>" << label << "</title></rect>\n";
}

} // namespace

std::string render_quadrant_svg(const AssessmentRecord& record) {
    const double pp = record.effective_price_padding;
    const double up = static_cast<double>(record.config.padding.utility_padding);

    Scale scale{3.0, 1.0};
    for (const auto& point : record.points) {
        scale.u_max = std::max(scale.u_max, std::abs(static_cast<double>(point.net_utility)) + 1.0);
        scale.g_max = std::max(scale.g_max, std::abs(point.rel_gap) + 0.1);
    }
    scale.u_max = std::max(scale.u_max, up + 1.0);

    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    out << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";

    const double x_min = scale.x(-scale.u_max), x_max = scale.x(scale.u_max);
    const double y_min = scale.y(-scale.g_max), y_max = scale.y(scale.g_max);

    // Zone shading: AP (similar-or-better utility, cheaper past the price
    // padding), NOT_AP (worse utility, priced at or above target),
    // trade-off band between them.
    rect(out, scale.x(-up), scale.y(pp), x_max, y_max, "#fdecea", "AP zone");
    rect(out, x_min, scale.y(0.0), scale.x(-up), y_min, "#eaf7ee", "NOT-AP zone");
    rect(out, scale.x(-up), scale.y(-std::min(pp, scale.g_max)),
         scale.x(std::min(up, scale.u_max)), scale.y(std::min(pp, scale.g_max)), "#fbf7e4",
         "trade-off band");

    // Padding band boundaries.
    out << "  <line x1=\"" << num(x_min) << "\" y1=\"" << num(scale.y(pp)) << "\" x2=\""
        << num(x_max) << "\" y2=\"" << num(scale.y(pp))
        << "\" stroke=\"#c0392b\" stroke-dasharray=\"5,4\"/>\n";
    out << "  <line x1=\"" << num(x_min) << "\" y1=\"" << num(scale.y(-pp)) << "\" x2=\""
        << num(x_max) << "\" y2=\"" << num(scale.y(-pp))
        << "\" stroke=\"#b7950b\" stroke-dasharray=\"5,4\"/>\n";

    // Axes through the target at the origin.
    out << "  <line x1=\"" << num(x_min) << "\" y1=\"" << num(scale.y(0)) << "\" x2=\""
        << num(x_max) << "\" y2=\"" << num(scale.y(0)) << "\" stroke=\"#444\"/>\n";
    out << "  <line x1=\"" << num(scale.x(0)) << "\" y1=\"" << num(y_min) << "\" x2=\""
        << num(scale.x(0)) << "\" y2=\"" << num(y_max) << "\" stroke=\"#444\"/>\n";

    out << "  <text x=\"" << num(x_max) << "\" y=\"" << num(scale.y(0) - 6)
        << "\" text-anchor=\"end\" font-size=\"12\">net utility \xE2\x86\x92</text>\n";
    out << "  <text x=\"" << num(scale.x(0) + 6) << "\" y=\"" << num(y_min + 14)
        << "\" font-size=\"12\">pricier \xE2\x86\x91</text>\n";
    out << "  <text x=\"" << num(scale.x(0) + 6) << "\" y=\"" << num(y_max - 6)
        << "\" font-size=\"12\">cheaper \xE2\x86\x93</text>\n";

    // Target marker.
    out << "  <rect x=\"" << num(scale.x(0) - 5) << "\" y=\"" << num(scale.y(0) - 5)
        << "\" width=\"10\" height=\"10\" fill=\"#2c3e50\"><title>target "
        << escape(record.target_id) << "</title></rect>\n";

    for (const auto& point : record.points) {
        out << "  <circle cx=\"" << num(scale.x(point.net_utility)) << "\" cy=\""
            << num(scale.y(point.rel_gap)) << "\" r=\"7\" fill=\"" << zone_fill(point.zone)
            << "\" fill-opacity=\"0.85\"><title>" << escape(point.neighbor_id) << " | zone "
            << to_string(point.zone) << " | rel_gap " << point.rel_gap << " | net_utility "
            << point.net_utility << "</title></circle>\n";
    }

    std::ostringstream title;
    title << "target " << record.target_id << " | verdict: " << to_string(record.decision.verdict)
          << " (" << to_string(record.decision.strategy) << ") | price padding " << pp
          << " | utility padding " << record.config.padding.utility_padding;
    out << "  <text x=\"" << num(kLeft) << "\" y=\"22\" font-size=\"14\" font-weight=\"bold\">"
        << escape(title.str()) << "</text>\n";
    out << "  <text x=\"" << num(kLeft) << "\" y=\"40\" font-size=\"12\" fill=\"#555\">"
        << escape(record.decision.explanation) << "</text>\n";
    out << "</svg>\n";
    return out.str();
}

json quadrant_plot_data(const AssessmentRecord& record) {
    json points = json::array();
    for (const auto& point : record.points) {
        points.push_back(json{{"neighbor_id", point.neighbor_id},
                              {"rel_gap", point.rel_gap},
                              {"net_utility", point.net_utility},
                              {"zone", to_string(point.zone)}});
    }
    return json{{"target_id", record.target_id},
                {"verdict", to_string(record.decision.verdict)},
                {"strategy", to_string(record.decision.strategy)},
                {"price_padding", record.effective_price_padding},
                {"utility_padding", record.config.padding.utility_padding},
                {"points", points}};
}

} // namespace priceaudit
