#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace biasprobe {

// NCHW shape. Every activation and parameter in the library is stored as a
// dense 4-D float tensor; lower-rank data uses trailing singleton dims.
struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t numel() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t plane() const { return static_cast<std::size_t>(h) * w; }
  std::size_t sample() const { return static_cast<std::size_t>(c) * h * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const;
};

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, float fill = 0.0f);
  Tensor(Shape shape, std::vector<float> values);

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  float* data() { return data_.data(); }
  const float* data() const { return data_.data(); }
  std::span<float> values() { return data_; }
  std::span<const float> values() const { return data_; }

  float* sample(int n) { return data_.data() + n * shape_.sample(); }
  const float* sample(int n) const { return data_.data() + n * shape_.sample(); }

  float& at(int n, int c, int h, int w) {
    return data_[((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + h) * shape_.w + w];
  }
  float at(int n, int c, int h, int w) const {
    return data_[((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + h) * shape_.w + w];
  }

  void fill(float v);
  void zero() { fill(0.0f); }

 private:
  Shape shape_;
  std::vector<float> data_;
};

// Channel concatenation of two tensors with equal n, h, w.
Tensor concat_channels(const Tensor& a, const Tensor& b);
// Splits `t` along channels at `first_channels`; the inverse of concat_channels.
void split_channels(const Tensor& t, int first_channels, Tensor* a, Tensor* b);
// Stacks single-sample tensors along n.
Tensor stack_batch(std::span<const Tensor> samples);
Tensor slice_batch(const Tensor& t, int n);

bool bit_equal(const Tensor& a, const Tensor& b);

}  // namespace biasprobe
