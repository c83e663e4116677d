#include "biasprobe/dataset/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "biasprobe/error.hpp"

namespace biasprobe::dataset {
namespace {

// Samples channel c at continuous source coordinates with edge clamping.
struct Bilinear {
  int x0, x1, y0, y1;
  float fx, fy;
};

Bilinear weights(int ox, int oy, int src_w, int src_h, int dst_w, int dst_h) {
  const double sx = (ox + 0.5) * src_w / dst_w - 0.5;
  const double sy = (oy + 0.5) * src_h / dst_h - 0.5;
  const double fx0 = std::floor(sx);
  const double fy0 = std::floor(sy);
  Bilinear b;
  b.fx = static_cast<float>(sx - fx0);
  b.fy = static_cast<float>(sy - fy0);
  b.x0 = std::clamp(static_cast<int>(fx0), 0, src_w - 1);
  b.x1 = std::clamp(static_cast<int>(fx0) + 1, 0, src_w - 1);
  b.y0 = std::clamp(static_cast<int>(fy0), 0, src_h - 1);
  b.y1 = std::clamp(static_cast<int>(fy0) + 1, 0, src_h - 1);
  return b;
}

float sample(const Image& img, const Bilinear& b, int c) {
  const float top = img.at(b.x0, b.y0, c) * (1.0f - b.fx) + img.at(b.x1, b.y0, c) * b.fx;
  const float bottom = img.at(b.x0, b.y1, c) * (1.0f - b.fx) + img.at(b.x1, b.y1, c) * b.fx;
  return top * (1.0f - b.fy) + bottom * b.fy;
}

}  // namespace

Image resize_bilinear(const Image& image, int width, int height) {
  if (image.empty()) throw DatasetError("cannot resize a zero-sized image");
  if (width <= 0 || height <= 0) throw DatasetError("resize target must be positive");
  if (width == image.width && height == image.height) return image;
  Image out(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const Bilinear b = weights(x, y, image.width, image.height, width, height);
      for (int c = 0; c < 3; ++c)
        out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(sample(image, b, c)), 0L, 255L));
    }
  return out;
}

Tensor preprocess(const Image& image, int resolution) {
  if (image.empty()) throw DatasetError("cannot preprocess a zero-sized image");
  if (resolution <= 0) throw DatasetError("preprocess resolution must be positive");
  Tensor t(Shape{1, 3, resolution, resolution});
  const bool same = image.width == resolution && image.height == resolution;
  for (int y = 0; y < resolution; ++y)
    for (int x = 0; x < resolution; ++x) {
      const Bilinear b = same ? Bilinear{x, x, y, y, 0.0f, 0.0f}
                              : weights(x, y, image.width, image.height, resolution, resolution);
      for (int c = 0; c < 3; ++c) {
        const float v = same ? static_cast<float>(image.at(x, y, c)) : sample(image, b, c);
        t.at(0, c, y, x) = v / 127.5f - 1.0f;
      }
    }
  return t;
}

Image postprocess(const Tensor& t, int n) {
  const Shape s = t.shape();
  if (s.c != 3 || s.h <= 0 || s.w <= 0) throw DatasetError("postprocess expects a 3-channel tensor, got " + s.str());
  Image out(s.w, s.h);
  for (int y = 0; y < s.h; ++y)
    for (int x = 0; x < s.w; ++x)
      for (int c = 0; c < 3; ++c) {
        const float v = (t.at(n, c, y, x) + 1.0f) * 127.5f;
        out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
  return out;
}

}  // namespace biasprobe::dataset
