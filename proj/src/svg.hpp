#pragma once

// Minimal deterministic SVG charts: panels of line / marker series with
// optional shaded bands, and plain text tables.

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace tvbo::detail {

inline constexpr const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
    std::string color = kPalette[0];
    bool line = true;
    bool markers = false;
    /// Shaded band between these when both are nonempty.
    std::vector<double> band_low;
    std::vector<double> band_high;
};

inline Series markers(std::string label, std::vector<double> x, std::vector<double> y, const char* color) {
    Series s;
    s.label = std::move(label);
    s.x = std::move(x);
    s.y = std::move(y);
    s.color = color;
    s.line = false;
    s.markers = true;
    return s;
}

inline Series curve(std::string label, std::vector<double> x, std::vector<double> y, const char* color) {
    Series s = markers(std::move(label), std::move(x), std::move(y), color);
    s.line = true;
    s.markers = false;
    return s;
}

struct Panel {
    std::string title;
    std::string xlabel;
    std::string ylabel;
    /// Nonpositive values are drawn at the bottom of the axis.
    bool log_y = false;
    std::vector<Series> series;
};

/// Panels laid out left to right.
std::string render_svg(const std::string& title, std::span<const Panel> panels);

std::string render_table_svg(const std::string& title, const std::vector<std::vector<std::string>>& rows);

}  // namespace tvbo::detail
