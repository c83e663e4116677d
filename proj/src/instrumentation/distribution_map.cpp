#include "biasprobe/instrumentation/distribution_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "biasprobe/error.hpp"

namespace biasprobe::instrumentation {

DistributionMap distribution_map(const std::vector<dataset::Image>& images, const std::vector<std::string>& ids,
                                 const std::vector<std::string>& groups, std::size_t k) {
  if (images.size() < 2) throw InstrumentationError("distribution_map: need at least 2 images");
  if (ids.size() != images.size() || groups.size() != images.size()) {
    throw InstrumentationError("distribution_map: ids/groups must match the image count");
  }
  const int w = images.front().width, h = images.front().height;
  for (const auto& im : images) {
    if (im.width != w || im.height != h) throw InstrumentationError("distribution_map: images differ in resolution");
  }

  Matrix data(images.size(), images.front().rgb.size());
  for (std::size_t i = 0; i < images.size(); ++i)
    for (std::size_t c = 0; c < data.cols; ++c) data(i, c) = images[i].rgb[c];
  PcaResult pca = pca_top_k(data, k);

  DistributionMap map;
  map.explained_ratio.assign(pca.explained_ratio.begin(), pca.explained_ratio.begin() + k);
  std::map<std::string, int> counts;
  for (std::size_t i = 0; i < images.size(); ++i) {
    MapPoint p{ids[i], groups[i], std::vector<double>(k)};
    for (std::size_t j = 0; j < k; ++j) p.coords[j] = pca.projections(i, j);
    auto& centroid = map.centroids[groups[i]];
    centroid.resize(k, 0.0);
    for (std::size_t j = 0; j < k; ++j) centroid[j] += p.coords[j];
    ++counts[groups[i]];
    map.points.push_back(std::move(p));
  }
  for (auto& [g, c] : map.centroids)
    for (double& v : c) v /= counts[g];
  for (const auto& p : map.points) {
    const auto& c = map.centroids[p.group];
    double d2 = 0.0;
    for (std::size_t j = 0; j < k; ++j) d2 += (p.coords[j] - c[j]) * (p.coords[j] - c[j]);
    map.rms_radius[p.group] += d2;
  }
  for (auto& [g, r] : map.rms_radius) r = std::sqrt(r / counts[g]);
  return map;
}

double collinearity_residual(const std::vector<std::vector<double>>& points) {
  if (points.size() < 2) return 0.0;
  double mx = 0, my = 0;
  for (const auto& p : points) {
    mx += p.at(0);
    my += p.at(1);
  }
  mx /= points.size();
  my /= points.size();
  double sxx = 0, syy = 0, sxy = 0;
  for (const auto& p : points) {
    sxx += (p[0] - mx) * (p[0] - mx);
    syy += (p[1] - my) * (p[1] - my);
    sxy += (p[0] - mx) * (p[1] - my);
  }
  // Principal direction of the 2x2 scatter matrix.
  const double angle = 0.5 * std::atan2(2.0 * sxy, sxx - syy);
  const double ux = std::cos(angle), uy = std::sin(angle);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo, worst = 0.0;
  for (const auto& p : points) {
    const double dx = p[0] - mx, dy = p[1] - my;
    const double along = dx * ux + dy * uy;
    lo = std::min(lo, along);
    hi = std::max(hi, along);
    worst = std::max(worst, std::abs(-dx * uy + dy * ux));
  }
  const double span = hi - lo;
  return span > 0.0 ? worst / span : 0.0;
}

}  // namespace biasprobe::instrumentation
