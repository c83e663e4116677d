#include "biasprobe/evaluation/stub_classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace biasprobe::evaluation {

namespace {

struct Region {
  double u0, u1, v0, v1;
};

double luminance(const dataset::Image& im, int x, int y) {
  return 0.299 * im.at(x, y, 0) + 0.587 * im.at(x, y, 1) + 0.114 * im.at(x, y, 2);
}

// Calls f(x, y) for every pixel whose centre lies in the region; always at
// least one pixel.
template <typename F>
void for_region(const dataset::Image& im, Region r, F f) {
  auto lo = [](double a, int n) { return std::clamp(static_cast<int>(std::floor(a * n)), 0, n - 1); };
  auto hi = [](double a, int n) { return std::clamp(static_cast<int>(std::ceil(a * n)) - 1, 0, n - 1); };
  const int x0 = lo(r.u0, im.width), x1 = std::max(x0, hi(r.u1, im.width));
  const int y0 = lo(r.v0, im.height), y1 = std::max(y0, hi(r.v1, im.height));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) f(x, y);
}

double mean_of(const dataset::Image& im, Region r, double (*value)(const dataset::Image&, int, int)) {
  double s = 0.0;
  int n = 0;
  for_region(im, r, [&](int x, int y) {
    s += value(im, x, y);
    ++n;
  });
  return s / n;
}

double blue_minus_red(const dataset::Image& im, int x, int y) {
  return static_cast<double>(im.at(x, y, 2)) - im.at(x, y, 0);
}

double red_minus_green(const dataset::Image& im, int x, int y) {
  return static_cast<double>(im.at(x, y, 0)) - im.at(x, y, 1);
}

constexpr Region kCornerLeft{0.0, 0.125, 0.0, 0.125};
constexpr Region kCornerRight{0.875, 1.0, 0.0, 0.125};
constexpr Region kSideLeft{0.16, 0.29, 0.66, 0.84};
constexpr Region kSideRight{0.71, 0.84, 0.66, 0.84};
constexpr Region kEyeBand{0.3, 0.7, 0.41, 0.51};
constexpr Region kCheeks{0.38, 0.62, 0.5, 0.6};
constexpr Region kMouth{0.38, 0.62, 0.62, 0.72};

}  // namespace

StubFeatures stub_features(const dataset::Image& image) {
  StubFeatures f;
  if (image.empty()) return f;
  f.tint = 0.5 * (mean_of(image, kCornerLeft, blue_minus_red) + mean_of(image, kCornerRight, blue_minus_red));
  const double corner_lum = 0.5 * (mean_of(image, kCornerLeft, luminance) + mean_of(image, kCornerRight, luminance));
  const double side_lum = 0.5 * (mean_of(image, kSideLeft, luminance) + mean_of(image, kSideRight, luminance));
  f.hair = corner_lum - side_lum;

  const double cheek_lum = mean_of(image, kCheeks, luminance);
  const double cheek_red = mean_of(image, kCheeks, red_minus_green);
  double darkest = std::numeric_limits<double>::infinity();
  for_region(image, kEyeBand, [&](int x, int y) { darkest = std::min(darkest, luminance(image, x, y)); });
  double reddest = -std::numeric_limits<double>::infinity();
  for_region(image, kMouth, [&](int x, int y) { reddest = std::max(reddest, red_minus_green(image, x, y)); });
  f.eye_contrast = cheek_lum - darkest;
  f.mouth_red = reddest - cheek_red;
  return f;
}

FaceAnalysisResult StubClassifier::classify(const StubFeatures& f) {
  FaceAnalysisResult r;
  r.face_detected = f.eye_contrast > kEyeContrast && f.mouth_red > kMouthRed;
  if (!r.face_detected) {
    r.confidence = std::clamp(1.0 - std::max(f.eye_contrast / kEyeContrast, f.mouth_red / kMouthRed), 0.0, 1.0);
    return r;
  }
  // Rendered A backgrounds sit near +54 blue-over-red and B near -54; long
  // hair darkens the lower sides by roughly 100 gray levels.
  const double score = 0.5 * (-f.tint / 54.0 + f.hair / 90.0);
  r.attribute = score > 0.25 ? Attribute::B : Attribute::A;
  r.confidence = std::clamp(0.5 + std::abs(score - 0.25), 0.5, 1.0);
  return r;
}

FaceAnalysisResult StubClassifier::analyze(const dataset::Image& image) {
  ++calls_;
  return classify(stub_features(image));
}

}  // namespace biasprobe::evaluation
