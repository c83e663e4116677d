#pragma once

#include <optional>
#include <string>
#include <vector>

#include "biasprobe/dataset/image.hpp"

namespace biasprobe::cli {

enum class SeriesStyle { bars, line, scatter };

struct Series {
  std::string name;
  SeriesStyle style = SeriesStyle::scatter;
  std::vector<double> x;
  std::vector<double> y;
  // Scatter only: draw a cross instead of a dot.
  std::vector<bool> cross;
};

struct Figure {
  std::string title;
  std::string x_label;
  std::string y_label;
  // Categorical x axis: one tick per entry at x = 0, 1, ...
  std::vector<std::string> categories;
  std::vector<Series> series;
  // Shaded horizontal band (e.g. a reference interval).
  std::optional<std::pair<double, double>> y_band;
};

std::string render_svg(const Figure& figure, int width = 720, int height = 440);
dataset::Image render_png(const Figure& figure, int width = 720, int height = 440);
// series,x,y,category,marker with round-trip precision.
std::string figure_csv(const Figure& figure);

}  // namespace biasprobe::cli
