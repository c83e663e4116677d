#include "biasprobe/cli/figure.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace biasprobe::cli {

namespace {

using Rgb = std::array<std::uint8_t, 3>;

constexpr Rgb kPalette[] = {{31, 119, 180}, {255, 127, 14}, {44, 160, 44}, {214, 39, 40},
                            {148, 103, 189}, {140, 86, 75}, {227, 119, 194}, {127, 127, 127}};

std::string hex(const Rgb& c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", c[0], c[1], c[2]);
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

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Maps data coordinates to pixels for one figure size.
struct Frame {
  double left = 70, right = 0, top = 40, bottom = 0;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  int bar_series = 0;

  Frame(const Figure& f, int width, int height) {
    right = width - 160.0;
    bottom = height - (f.categories.empty() ? 50.0 : 100.0);
    double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
    double ymin = xmin, ymax = -xmin;
    for (const auto& s : f.series) {
      if (s.style == SeriesStyle::bars) {
        ++bar_series;
        ymin = std::min(ymin, 0.0);
        ymax = std::max(ymax, 0.0);
      }
      for (double v : s.x) xmin = std::min(xmin, v), xmax = std::max(xmax, v);
      for (double v : s.y) ymin = std::min(ymin, v), ymax = std::max(ymax, v);
    }
    if (f.y_band) {
      ymin = std::min(ymin, f.y_band->first);
      ymax = std::max(ymax, f.y_band->second);
    }
    if (!f.categories.empty()) {
      xmin = -0.5;
      xmax = static_cast<double>(f.categories.size()) - 0.5;
    }
    if (!std::isfinite(xmin)) xmin = 0, xmax = 1;
    if (!std::isfinite(ymin)) ymin = 0, ymax = 1;
    if (xmax - xmin <= 0) xmin -= 0.5, xmax += 0.5;
    if (ymax - ymin <= 0) ymin -= 0.5, ymax += 0.5;
    const double px = f.categories.empty() ? 0.05 * (xmax - xmin) : 0.0;
    const double py = 0.05 * (ymax - ymin);
    x0 = xmin - px, x1 = xmax + px;
    y0 = ymin - (ymin == 0.0 && bar_series ? 0.0 : py), y1 = ymax + py;
  }

  double px(double x) const { return left + (x - x0) / (x1 - x0) * (right - left); }
  double py(double y) const { return bottom - (y - y0) / (y1 - y0) * (bottom - top); }
  double bar_width() const { return 0.8 / std::max(bar_series, 1); }
  double bar_offset(int index) const { return -0.4 + bar_width() * (index + 0.5); }
};

class Raster {
 public:
  Raster(int w, int h) : image_(w, h, 255) {}

  void pixel(int x, int y, const Rgb& c) {
    if (x < 0 || y < 0 || x >= image_.width || y >= image_.height) return;
    for (int k = 0; k < 3; ++k) image_.at(x, y, k) = c[k];
  }
  void rect(double x0, double y0, double x1, double y1, const Rgb& c) {
    for (int y = static_cast<int>(std::lround(std::min(y0, y1))); y <= std::lround(std::max(y0, y1)); ++y)
      for (int x = static_cast<int>(std::lround(std::min(x0, x1))); x <= std::lround(std::max(x0, x1)); ++x)
        pixel(x, y, c);
  }
  void line(double x0, double y0, double x1, double y1, const Rgb& c, int thick = 1) {
    const int steps = static_cast<int>(std::ceil(std::max(std::abs(x1 - x0), std::abs(y1 - y0)))) + 1;
    for (int i = 0; i <= steps; ++i) {
      const double t = static_cast<double>(i) / steps;
      const int x = static_cast<int>(std::lround(x0 + t * (x1 - x0)));
      const int y = static_cast<int>(std::lround(y0 + t * (y1 - y0)));
      for (int dy = 0; dy < thick; ++dy)
        for (int dx = 0; dx < thick; ++dx) pixel(x + dx, y + dy, c);
    }
  }
  void dot(double cx, double cy, double r, const Rgb& c) {
    for (int y = static_cast<int>(cy - r); y <= static_cast<int>(cy + r + 1); ++y)
      for (int x = static_cast<int>(cx - r); x <= static_cast<int>(cx + r + 1); ++x)
        if ((x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r) pixel(x, y, c);
  }
  void cross(double cx, double cy, double r, const Rgb& c) {
    line(cx - r, cy - r, cx + r, cy + r, c, 2);
    line(cx - r, cy + r, cx + r, cy - r, c, 2);
  }
  dataset::Image take() { return std::move(image_); }

 private:
  dataset::Image image_;
};

}  // namespace

std::string render_svg(const Figure& f, int width, int height) {
  const Frame fr(f, width, height);
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(f.title)
    << "</text>\n";
  if (f.y_band) {
    s << "<rect class=\"band\" x=\"" << num(fr.left) << "\" y=\"" << num(fr.py(f.y_band->second)) << "\" width=\""
      << num(fr.right - fr.left) << "\" height=\"" << num(fr.py(f.y_band->first) - fr.py(f.y_band->second))
      << "\" fill=\"#dddddd\"/>\n";
  }
  s << "<line class=\"axis\" x1=\"" << num(fr.left) << "\" y1=\"" << num(fr.bottom) << "\" x2=\"" << num(fr.right)
    << "\" y2=\"" << num(fr.bottom) << "\" stroke=\"black\"/>\n";
  s << "<line class=\"axis\" x1=\"" << num(fr.left) << "\" y1=\"" << num(fr.top) << "\" x2=\"" << num(fr.left)
    << "\" y2=\"" << num(fr.bottom) << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = fr.y0 + (fr.y1 - fr.y0) * i / 4.0;
    s << "<text x=\"" << num(fr.left - 6) << "\" y=\"" << num(fr.py(v) + 4) << "\" text-anchor=\"end\">"
      << escape(num(v)) << "</text>\n";
  }
  for (std::size_t i = 0; i < f.categories.size(); ++i) {
    const double x = fr.px(static_cast<double>(i));
    s << "<line class=\"tick\" x1=\"" << num(x) << "\" y1=\"" << num(fr.bottom) << "\" x2=\"" << num(x) << "\" y2=\""
      << num(fr.bottom + 5) << "\" stroke=\"black\"/>\n";
    s << "<text x=\"" << num(x) << "\" y=\"" << num(fr.bottom + 14) << "\" text-anchor=\"end\" transform=\"rotate(-45 "
      << num(x) << ' ' << num(fr.bottom + 14) << ")\">" << escape(f.categories[i]) << "</text>\n";
  }
  s << "<text x=\"" << num((fr.left + fr.right) / 2) << "\" y=\"" << height - 8 << "\" text-anchor=\"middle\">"
    << escape(f.x_label) << "</text>\n";
  s << "<text x=\"14\" y=\"" << num((fr.top + fr.bottom) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 14 "
    << num((fr.top + fr.bottom) / 2) << ")\">" << escape(f.y_label) << "</text>\n";

  int bar_index = 0;
  for (std::size_t si = 0; si < f.series.size(); ++si) {
    const Series& ser = f.series[si];
    const std::string color = hex(kPalette[si % std::size(kPalette)]);
    s << "<g class=\"series\" data-name=\"" << escape(ser.name) << "\">\n";
    if (ser.style == SeriesStyle::bars) {
      for (std::size_t i = 0; i < ser.x.size(); ++i) {
        const double xa = fr.px(ser.x[i] + fr.bar_offset(bar_index) - fr.bar_width() / 2);
        const double xb = fr.px(ser.x[i] + fr.bar_offset(bar_index) + fr.bar_width() / 2);
        const double ya = fr.py(std::max(ser.y[i], 0.0)), yb = fr.py(std::min(ser.y[i], 0.0));
        s << "<rect class=\"bar\" x=\"" << num(xa) << "\" y=\"" << num(ya) << "\" width=\"" << num(xb - xa)
          << "\" height=\"" << num(yb - ya) << "\" fill=\"" << color << "\"/>\n";
      }
      ++bar_index;
    } else if (ser.style == SeriesStyle::line) {
      s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
      for (std::size_t i = 0; i < ser.x.size(); ++i) s << num(fr.px(ser.x[i])) << ',' << num(fr.py(ser.y[i])) << ' ';
      s << "\"/>\n";
      for (std::size_t i = 0; i < ser.x.size(); ++i)
        s << "<circle class=\"point\" cx=\"" << num(fr.px(ser.x[i])) << "\" cy=\"" << num(fr.py(ser.y[i]))
          << "\" r=\"3\" fill=\"" << color << "\"/>\n";
    } else {
      for (std::size_t i = 0; i < ser.x.size(); ++i) {
        const double cx = fr.px(ser.x[i]), cy = fr.py(ser.y[i]);
        if (i < ser.cross.size() && ser.cross[i]) {
          s << "<path class=\"cross\" d=\"M" << num(cx - 4) << ' ' << num(cy - 4) << " L" << num(cx + 4) << ' '
            << num(cy + 4) << " M" << num(cx - 4) << ' ' << num(cy + 4) << " L" << num(cx + 4) << ' '
            << num(cy - 4) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
        } else {
          s << "<circle class=\"point\" cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\"3\" fill=\"" << color
            << "\"/>\n";
        }
      }
    }
    s << "</g>\n";
    const double ly = fr.top + 16.0 * static_cast<double>(si);
    s << "<rect x=\"" << num(fr.right + 14) << "\" y=\"" << num(ly) << "\" width=\"10\" height=\"10\" fill=\"" << color
      << "\"/><text x=\"" << num(fr.right + 30) << "\" y=\"" << num(ly + 9) << "\">" << escape(ser.name)
      << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

dataset::Image render_png(const Figure& f, int width, int height) {
  const Frame fr(f, width, height);
  Raster r(width, height);
  const Rgb black = {0, 0, 0};
  if (f.y_band) r.rect(fr.left, fr.py(f.y_band->second), fr.right, fr.py(f.y_band->first), {221, 221, 221});
  r.line(fr.left, fr.bottom, fr.right, fr.bottom, black);
  r.line(fr.left, fr.top, fr.left, fr.bottom, black);
  for (std::size_t i = 0; i < f.categories.size(); ++i) {
    const double x = fr.px(static_cast<double>(i));
    r.line(x, fr.bottom, x, fr.bottom + 5, black);
  }
  int bar_index = 0;
  for (std::size_t si = 0; si < f.series.size(); ++si) {
    const Series& ser = f.series[si];
    const Rgb& c = kPalette[si % std::size(kPalette)];
    if (ser.style == SeriesStyle::bars) {
      for (std::size_t i = 0; i < ser.x.size(); ++i) {
        r.rect(fr.px(ser.x[i] + fr.bar_offset(bar_index) - fr.bar_width() / 2), fr.py(std::max(ser.y[i], 0.0)),
               fr.px(ser.x[i] + fr.bar_offset(bar_index) + fr.bar_width() / 2), fr.py(std::min(ser.y[i], 0.0)), c);
      }
      ++bar_index;
      continue;
    }
    for (std::size_t i = 0; i < ser.x.size(); ++i) {
      const double cx = fr.px(ser.x[i]), cy = fr.py(ser.y[i]);
      if (ser.style == SeriesStyle::line && i > 0) r.line(fr.px(ser.x[i - 1]), fr.py(ser.y[i - 1]), cx, cy, c, 2);
      if (i < ser.cross.size() && ser.cross[i]) r.cross(cx, cy, 4, c);
      else r.dot(cx, cy, 3, c);
    }
    r.rect(fr.right + 14, fr.top + 16.0 * si, fr.right + 24, fr.top + 16.0 * si + 10, c);
  }
  return r.take();
}

std::string figure_csv(const Figure& f) {
  std::ostringstream s;
  s << "series,x,y,category,marker\n";
  for (const auto& ser : f.series) {
    for (std::size_t i = 0; i < ser.x.size(); ++i) {
      std::string category;
      const double xi = ser.x[i];
      if (!f.categories.empty() && xi >= 0 && xi == std::floor(xi) && xi < static_cast<double>(f.categories.size()))
        category = f.categories[static_cast<std::size_t>(xi)];
      const char* marker = ser.style == SeriesStyle::bars   ? "bar"
                           : (i < ser.cross.size() && ser.cross[i]) ? "cross"
                                                                    : "dot";
      s << ser.name << ',' << exact(xi) << ',' << exact(ser.y[i]) << ',' << category << ',' << marker << '\n';
    }
  }
  return s.str();
}

}  // namespace biasprobe::cli
