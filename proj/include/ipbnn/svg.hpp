#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ipbnn {

/// Minimal self-contained SVG chart writer. All numbers are formatted
/// with a fixed printf spec so emitted files are deterministic bytes.
class SvgCanvas {
public:
  SvgCanvas(double width, double height) : width_(width), height_(height) {
    body_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(width)
          << "\" height=\"" << fmt(height) << "\" viewBox=\"0 0 " << fmt(width)
          << " " << fmt(height) << "\">\n";
    body_ << "<rect width=\"" << fmt(width) << "\" height=\"" << fmt(height)
          << "\" fill=\"white\"/>\n";
  }

  static std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.4g", v);
    return buf;
  }

  void line(double x1, double y1, double x2, double y2, const std::string& stroke,
            double stroke_width = 1.0, const std::string& dash = "") {
    body_ << "<line x1=\"" << fmt(x1) << "\" y1=\"" << fmt(y1) << "\" x2=\""
          << fmt(x2) << "\" y2=\"" << fmt(y2) << "\" stroke=\"" << stroke
          << "\" stroke-width=\"" << fmt(stroke_width) << "\"";
    if (!dash.empty()) {
      body_ << " stroke-dasharray=\"" << dash << "\"";
    }
    body_ << "/>\n";
  }

  void circle(double cx, double cy, double r, const std::string& fill) {
    body_ << "<circle cx=\"" << fmt(cx) << "\" cy=\"" << fmt(cy) << "\" r=\""
          << fmt(r) << "\" fill=\"" << fill << "\"/>\n";
  }

  void polyline(const std::vector<std::pair<double, double>>& pts,
                const std::string& stroke, double stroke_width = 1.0) {
    if (pts.empty()) {
      return;
    }
    body_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\""
          << fmt(stroke_width) << "\" points=\"";
    for (const auto& [x, y] : pts) {
      body_ << fmt(x) << ',' << fmt(y) << ' ';
    }
    body_ << "\"/>\n";
  }

  void text(double x, double y, const std::string& s, double size = 11.0,
            const std::string& anchor = "start", double rotate = 0.0) {
    body_ << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" font-size=\""
          << fmt(size) << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor
          << "\"";
    if (rotate != 0.0) {
      body_ << " transform=\"rotate(" << fmt(rotate) << ' ' << fmt(x) << ' '
            << fmt(y) << ")\"";
    }
    body_ << ">" << escape(s) << "</text>\n";
  }

  void write(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
      throw std::runtime_error("cannot write SVG: " + path.string());
    }
    out << body_.str() << "</svg>\n";
  }

  double width() const { return width_; }
  double height() const { return height_; }

private:
  static std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
      switch (c) {
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '&': out += "&amp;"; break;
        default: out += c;
      }
    }
    return out;
  }

  double width_;
  double height_;
  std::ostringstream body_;
};

/// Linear data-to-pixel mapping for one plot area, with tick helpers.
struct PlotFrame {
  double x0 = 60, y0 = 20, x1 = 600, y1 = 380;  // pixel corners (y grows down)
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;

  double px(double x) const {
    return x0 + (x - xmin) / (xmax - xmin) * (x1 - x0);
  }
  double py(double y) const {
    return y1 - (y - ymin) / (ymax - ymin) * (y1 - y0);
  }

  static double nice_step(double span, int target_ticks = 6) {
    const double raw = span / target_ticks;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
      if (raw <= m * mag) {
        return m * mag;
      }
    }
    return 10.0 * mag;
  }

  void expand_x(double v) {
    xmin = std::min(xmin, v);
    xmax = std::max(xmax, v);
  }
  void expand_y(double v) {
    ymin = std::min(ymin, v);
    ymax = std::max(ymax, v);
  }

  void pad(double frac = 0.05) {
    const double dx = (xmax - xmin) == 0 ? 1.0 : (xmax - xmin) * frac;
    const double dy = (ymax - ymin) == 0 ? 1.0 : (ymax - ymin) * frac;
    xmin -= dx;
    xmax += dx;
    ymin -= dy;
    ymax += dy;
  }

  void draw_axes(SvgCanvas& svg, const std::string& xlabel,
                 const std::string& ylabel) const {
    svg.line(x0, y1, x1, y1, "black");
    svg.line(x0, y0, x0, y1, "black");
    const double xs = nice_step(xmax - xmin);
    for (double t = std::ceil(xmin / xs) * xs; t <= xmax + 1e-9; t += xs) {
      const double p = px(t);
      svg.line(p, y1, p, y1 + 4, "black");
      svg.text(p, y1 + 16, SvgCanvas::fmt(std::abs(t) < 1e-12 ? 0.0 : t), 10, "middle");
    }
    const double ys = nice_step(ymax - ymin);
    for (double t = std::ceil(ymin / ys) * ys; t <= ymax + 1e-9; t += ys) {
      const double p = py(t);
      svg.line(x0 - 4, p, x0, p, "black");
      svg.text(x0 - 7, p + 3, SvgCanvas::fmt(std::abs(t) < 1e-12 ? 0.0 : t), 10, "end");
    }
    svg.text((x0 + x1) / 2, y1 + 32, xlabel, 12, "middle");
    svg.text(16, (y0 + y1) / 2, ylabel, 12, "middle", -90);
  }
};

/// Fixed colour gradient (dark blue -> yellow) over s in [0,1].
inline std::string gradient_color(double s) {
  s = std::clamp(s, 0.0, 1.0);
  const int r = static_cast<int>(30 + 225 * s);
  const int g = static_cast<int>(40 + 180 * s);
  const int b = static_cast<int>(160 - 120 * s);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

inline const std::vector<std::string>& series_palette() {
  static const std::vector<std::string> colors{
      "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
      "#8c564b", "#17becf", "#7f7f7f", "#bcbd22", "#e377c2"};
  return colors;
}

}  // namespace ipbnn
