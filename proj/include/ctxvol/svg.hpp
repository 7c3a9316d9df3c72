#pragma once

#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace ctxvol::svg {

/// Fixed viewport of the two-line overlay chart.
struct Viewport {
  double width = 800, height = 400;
  double left = 50, right = 20, top = 20, bottom = 60;

  double plot_width() const { return width - left - right; }
  double plot_height() const { return height - top - bottom; }

  /// Point i of n, value in [0, 1].
  double x(std::size_t i, std::size_t n) const {
    if (n <= 1) return left + plot_width() / 2;
    return left + static_cast<double>(i) * plot_width() / static_cast<double>(n - 1);
  }
  double y(double v) const { return top + (1.0 - v) * plot_height(); }
};

inline std::string fixed3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

inline std::string polyline_points(std::span<const double> values, const Viewport &vp = {}) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ' ';
    out += fixed3(vp.x(i, values.size())) + "," + fixed3(vp.y(values[i]));
  }
  return out;
}

inline std::string escape_xml(const std::string &s) {
  std::string out;
  for (char c : s) {
    switch (c) {
    case '&': out += "&amp;"; break;
    case '<': out += "&lt;"; break;
    case '>': out += "&gt;"; break;
    case '"': out += "&quot;"; break;
    default: out.push_back(c);
    }
  }
  return out;
}

/// Volatility (solid) and relative frequency (dotted), both already scaled
/// to [0, 1], over the same slice labels.
inline void write_overlay_chart(std::ostream &out, const std::string &title, std::span<const double> volatility,
                                std::span<const double> frequency, const std::vector<std::string> &labels,
                                const Viewport &vp = {}) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << vp.width << "\" height=\"" << vp.height
      << "\" viewBox=\"0 0 " << vp.width << ' ' << vp.height << "\">\n";
  out << "<title>" << escape_xml(title) << "</title>\n";
  out << "<rect x=\"" << vp.left << "\" y=\"" << vp.top << "\" width=\"" << vp.plot_width() << "\" height=\""
      << vp.plot_height() << "\" fill=\"none\" stroke=\"#999\"/>\n";
  out << "<polyline id=\"volatility\" fill=\"none\" stroke=\"#c0392b\" stroke-width=\"2\" points=\""
      << polyline_points(volatility, vp) << "\"/>\n";
  out << "<polyline id=\"frequency\" fill=\"none\" stroke=\"#2c3e50\" stroke-width=\"1.5\" "
         "stroke-dasharray=\"2,3\" points=\""
      << polyline_points(frequency, vp) << "\"/>\n";
  if (!labels.empty()) {
    const double y = vp.top + vp.plot_height() + 15;
    out << "<text x=\"" << fixed3(vp.x(0, labels.size())) << "\" y=\"" << y << "\" font-size=\"10\">"
        << escape_xml(labels.front()) << "</text>\n";
    out << "<text x=\"" << fixed3(vp.x(labels.size() - 1, labels.size())) << "\" y=\"" << y
        << "\" font-size=\"10\" text-anchor=\"end\">" << escape_xml(labels.back()) << "</text>\n";
  }
  const double ly = vp.height - 15;
  out << "<line x1=\"" << vp.left << "\" y1=\"" << ly << "\" x2=\"" << vp.left + 25 << "\" y2=\"" << ly
      << "\" stroke=\"#c0392b\" stroke-width=\"2\"/>\n";
  out << "<text x=\"" << vp.left + 30 << "\" y=\"" << ly + 4 << "\" font-size=\"11\">context volatility</text>\n";
  out << "<line x1=\"" << vp.left + 170 << "\" y1=\"" << ly << "\" x2=\"" << vp.left + 195 << "\" y2=\"" << ly
      << "\" stroke=\"#2c3e50\" stroke-width=\"1.5\" stroke-dasharray=\"2,3\"/>\n";
  out << "<text x=\"" << vp.left + 200 << "\" y=\"" << ly + 4
      << "\" font-size=\"11\">relative frequency</text>\n";
  out << "</svg>\n";
}

} // namespace ctxvol::svg
