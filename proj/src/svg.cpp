#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace tvbo::detail {

namespace {

constexpr double kPanelWidth = 360.0;
constexpr double kPanelHeight = 300.0;
constexpr double kLeft = 62.0;
constexpr double kRight = 14.0;
constexpr double kTop = 50.0;
constexpr double kBottom = 46.0;
constexpr double kLegendRow = 16.0;

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
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
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();

    void add(double v) {
        if (!std::isfinite(v)) return;
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    void settle() {
        if (!(lo <= hi)) lo = 0.0, hi = 1.0;
        if (hi - lo < 1e-300) {
            const double pad = std::max(std::abs(lo) * 0.05, 1e-12);
            lo -= pad;
            hi += pad;
        }
    }
};

std::vector<double> nice_ticks(double lo, double hi) {
    const double span = hi - lo;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0})
        if (m * mag >= raw) {
            step = m * mag;
            break;
        }
    std::vector<double> out;
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) out.push_back(std::abs(t) < 1e-12 * step ? 0.0 : t);
    return out;
}

void draw_panel(std::ostringstream& os, const Panel& p, double x0, double y0) {
    const double w = kPanelWidth - kLeft - kRight;
    const double h = kPanelHeight - kTop - kBottom;
    const double px = x0 + kLeft;
    const double py = y0 + kTop;

    Range xr, yr;
    double floor_y = 0.0;
    if (p.log_y) {
        double ymax = 0.0;
        for (const auto& s : p.series)
            for (double v : s.y) ymax = std::max(ymax, v);
        floor_y = ymax > 0.0 ? ymax * 1e-16 : 1e-16;
    }
    auto ty = [&](double v) { return p.log_y ? std::log10(std::max(v, floor_y)) : v; };
    for (const auto& s : p.series) {
        for (double v : s.x) xr.add(v);
        for (double v : s.y) yr.add(ty(v));
        for (double v : s.band_low) yr.add(ty(v));
        for (double v : s.band_high) yr.add(ty(v));
    }
    xr.settle();
    yr.settle();
    if (p.log_y) {
        yr.lo = std::floor(yr.lo);
        yr.hi = std::ceil(yr.hi);
        if (yr.hi == yr.lo) yr.hi += 1.0;
    }
    auto sx = [&](double v) { return px + (v - xr.lo) / (xr.hi - xr.lo) * w; };
    auto sy = [&](double v) { return py + h - (ty(v) - yr.lo) / (yr.hi - yr.lo) * h; };
    auto sy_raw = [&](double t) { return py + h - (t - yr.lo) / (yr.hi - yr.lo) * h; };

    os << "<g>\n";
    os << "<text x=\"" << num(x0 + kPanelWidth / 2) << "\" y=\"" << num(y0 + 34) << "\" text-anchor=\"middle\" font-size=\"13\">"
       << escape(p.title) << "</text>\n";
    os << "<rect x=\"" << num(px) << "\" y=\"" << num(py) << "\" width=\"" << num(w) << "\" height=\"" << num(h)
       << "\" fill=\"none\" stroke=\"#333\"/>\n";

    for (double t : nice_ticks(xr.lo, xr.hi)) {
        os << "<line x1=\"" << num(sx(t)) << "\" y1=\"" << num(py + h) << "\" x2=\"" << num(sx(t)) << "\" y2=\""
           << num(py + h + 4) << "\" stroke=\"#333\"/>";
        os << "<text x=\"" << num(sx(t)) << "\" y=\"" << num(py + h + 16) << "\" text-anchor=\"middle\" font-size=\"10\">"
           << tick_label(t) << "</text>\n";
    }
    std::vector<double> yticks;
    if (p.log_y) {
        const int decades = static_cast<int>(yr.hi - yr.lo);
        const int stride = std::max(1, decades / 6);
        for (int e = static_cast<int>(yr.lo); e <= static_cast<int>(yr.hi); e += stride) yticks.push_back(e);
    } else {
        yticks = nice_ticks(yr.lo, yr.hi);
    }
    for (double t : yticks) {
        os << "<line x1=\"" << num(px - 4) << "\" y1=\"" << num(sy_raw(t)) << "\" x2=\"" << num(px) << "\" y2=\""
           << num(sy_raw(t)) << "\" stroke=\"#333\"/>";
        os << "<text x=\"" << num(px - 6) << "\" y=\"" << num(sy_raw(t) + 3) << "\" text-anchor=\"end\" font-size=\"10\">"
           << (p.log_y ? "1e" + std::to_string(static_cast<int>(t)) : tick_label(t)) << "</text>\n";
    }
    os << "<text x=\"" << num(px + w / 2) << "\" y=\"" << num(y0 + kPanelHeight - 8)
       << "\" text-anchor=\"middle\" font-size=\"11\">" << escape(p.xlabel) << "</text>\n";
    os << "<text transform=\"translate(" << num(x0 + 14) << ' ' << num(py + h / 2)
       << ") rotate(-90)\" text-anchor=\"middle\" font-size=\"11\">" << escape(p.ylabel) << "</text>\n";

    for (const auto& s : p.series) {
        if (!s.band_low.empty() && s.band_low.size() == s.x.size() && s.band_high.size() == s.x.size()) {
            os << "<polygon fill=\"" << s.color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
            for (std::size_t i = 0; i < s.x.size(); ++i) os << num(sx(s.x[i])) << ',' << num(sy(s.band_high[i])) << ' ';
            for (std::size_t i = s.x.size(); i-- > 0;) os << num(sx(s.x[i])) << ',' << num(sy(s.band_low[i])) << ' ';
            os << "\"/>\n";
        }
        const std::size_t n = std::min(s.x.size(), s.y.size());
        if (s.line && n > 1) {
            os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
            for (std::size_t i = 0; i < n; ++i) os << num(sx(s.x[i])) << ',' << num(sy(s.y[i])) << ' ';
            os << "\"/>\n";
        }
        if (s.markers)
            for (std::size_t i = 0; i < n; ++i)
                os << "<circle cx=\"" << num(sx(s.x[i])) << "\" cy=\"" << num(sy(s.y[i])) << "\" r=\"2\" fill=\""
                   << s.color << "\"/>\n";
    }
    double ly = py + 12;
    for (const auto& s : p.series) {
        if (s.label.empty()) continue;
        os << "<rect x=\"" << num(px + w - 118) << "\" y=\"" << num(ly - 8) << "\" width=\"10\" height=\"10\" fill=\""
           << s.color << "\"/>";
        os << "<text x=\"" << num(px + w - 104) << "\" y=\"" << num(ly + 1) << "\" font-size=\"10\">" << escape(s.label)
           << "</text>\n";
        ly += kLegendRow;
    }
    os << "</g>\n";
}

}  // namespace

std::string render_svg(const std::string& title, std::span<const Panel> panels) {
    const double width = kPanelWidth * static_cast<double>(std::max<std::size_t>(panels.size(), 1));
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\"" << num(kPanelHeight)
       << "\" font-family=\"sans-serif\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << num(width / 2) << "\" y=\"16\" text-anchor=\"middle\" font-size=\"14\" font-weight=\"bold\">"
       << escape(title) << "</text>\n";
    for (std::size_t i = 0; i < panels.size(); ++i) draw_panel(os, panels[i], kPanelWidth * static_cast<double>(i), 0.0);
    os << "</svg>\n";
    return os.str();
}

std::string render_table_svg(const std::string& title, const std::vector<std::vector<std::string>>& rows) {
    std::size_t cols = 0;
    for (const auto& r : rows) cols = std::max(cols, r.size());
    std::vector<double> widths(cols, 40.0);
    for (const auto& r : rows)
        for (std::size_t c = 0; c < r.size(); ++c) widths[c] = std::max(widths[c], 7.0 * static_cast<double>(r[c].size()) + 16.0);
    double total = 20.0;
    for (double w : widths) total += w;
    const double row_h = 22.0;
    const double height = 40.0 + row_h * static_cast<double>(rows.size()) + 10.0;
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(total) << "\" height=\"" << num(height)
       << "\" font-family=\"sans-serif\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"10\" y=\"22\" font-size=\"14\" font-weight=\"bold\">" << escape(title) << "</text>\n";
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const double y = 40.0 + row_h * static_cast<double>(r);
        if (r == 0)
            os << "<rect x=\"10\" y=\"" << num(y) << "\" width=\"" << num(total - 20) << "\" height=\"" << num(row_h)
               << "\" fill=\"#eee\"/>\n";
        double x = 10.0;
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
            os << "<text x=\"" << num(x + 6) << "\" y=\"" << num(y + 15) << "\" font-size=\"11\""
               << (r == 0 ? " font-weight=\"bold\"" : "") << '>' << escape(rows[r][c]) << "</text>";
            x += widths[c];
        }
        os << "\n<line x1=\"10\" y1=\"" << num(y + row_h) << "\" x2=\"" << num(total - 10) << "\" y2=\"" << num(y + row_h)
           << "\" stroke=\"#ccc\"/>\n";
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace tvbo::detail
