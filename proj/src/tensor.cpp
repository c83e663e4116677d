#include "biasprobe/tensor.hpp"

#include <algorithm>
#include <cstring>

#include "biasprobe/error.hpp"

namespace biasprobe {

std::string Shape::str() const {
  return "[" + std::to_string(n) + "," + std::to_string(c) + "," +
         std::to_string(h) + "," + std::to_string(w) + "]";
}

Tensor::Tensor(Shape shape, float fill) : shape_(shape), data_(shape.numel(), fill) {}

Tensor::Tensor(Shape shape, std::vector<float> values)
    : shape_(shape), data_(std::move(values)) {
  if (data_.size() != shape_.numel())
    throw Error("tensor value count " + std::to_string(data_.size()) +
                " does not match shape " + shape_.str());
}

void Tensor::fill(float v) { std::fill(data_.begin(), data_.end(), v); }

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.n != sb.n || sa.h != sb.h || sa.w != sb.w)
    throw Error("concat_channels: incompatible shapes " + sa.str() + " and " + sb.str());
  Tensor out(Shape{sa.n, sa.c + sb.c, sa.h, sa.w});
  for (int n = 0; n < sa.n; ++n) {
    float* dst = out.sample(n);
    std::memcpy(dst, a.sample(n), sizeof(float) * sa.sample());
    std::memcpy(dst + sa.sample(), b.sample(n), sizeof(float) * sb.sample());
  }
  return out;
}

void split_channels(const Tensor& t, int first_channels, Tensor* a, Tensor* b) {
  const Shape& s = t.shape();
  if (first_channels < 0 || first_channels > s.c)
    throw Error("split_channels: bad split point");
  const Shape sa{s.n, first_channels, s.h, s.w};
  const Shape sb{s.n, s.c - first_channels, s.h, s.w};
  if (a) *a = Tensor(sa);
  if (b) *b = Tensor(sb);
  for (int n = 0; n < s.n; ++n) {
    const float* src = t.sample(n);
    if (a) std::memcpy(a->sample(n), src, sizeof(float) * sa.sample());
    if (b) std::memcpy(b->sample(n), src + sa.sample(), sizeof(float) * sb.sample());
  }
}

Tensor stack_batch(std::span<const Tensor> samples) {
  if (samples.empty()) throw Error("stack_batch: no samples");
  Shape s = samples.front().shape();
  const std::size_t per = s.sample();
  Shape out_shape = s;
  out_shape.n = 0;
  for (const auto& t : samples) {
    const Shape& ts = t.shape();
    if (ts.c != s.c || ts.h != s.h || ts.w != s.w)
      throw Error("stack_batch: shape mismatch " + ts.str() + " vs " + s.str());
    out_shape.n += ts.n;
  }
  Tensor out(out_shape);
  float* dst = out.data();
  for (const auto& t : samples) {
    std::memcpy(dst, t.data(), sizeof(float) * t.size());
    dst += t.shape().n * per;
  }
  return out;
}

Tensor slice_batch(const Tensor& t, int n) {
  const Shape& s = t.shape();
  if (n < 0 || n >= s.n) throw Error("slice_batch: index out of range");
  Tensor out(Shape{1, s.c, s.h, s.w});
  std::memcpy(out.data(), t.sample(n), sizeof(float) * s.sample());
  return out;
}

bool bit_equal(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() &&
         std::memcmp(a.data(), b.data(), sizeof(float) * a.size()) == 0;
}

}  // namespace biasprobe
