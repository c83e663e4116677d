#pragma once

#include <map>
#include <string>
#include <vector>

#include "biasprobe/dataset/image.hpp"
#include "biasprobe/instrumentation/pca.hpp"

namespace biasprobe::instrumentation {

struct MapPoint {
  std::string id;
  std::string group;
  std::vector<double> coords;
};

struct DistributionMap {
  std::vector<MapPoint> points;
  std::vector<double> explained_ratio;  // top-k
  std::map<std::string, std::vector<double>> centroids;
  std::map<std::string, double> rms_radius;
};

// Flattens raw [0,255] pixels and projects onto the top-k principal axes.
// `groups[i]` labels image i (front/side, left/right, gray level, ...).
DistributionMap distribution_map(const std::vector<dataset::Image>& images, const std::vector<std::string>& ids,
                                 const std::vector<std::string>& groups, std::size_t k = 2);

// Largest distance of any point from the total-least-squares line through
// the 2-D points, divided by the extent of the points along that line.
double collinearity_residual(const std::vector<std::vector<double>>& points);

}  // namespace biasprobe::instrumentation
