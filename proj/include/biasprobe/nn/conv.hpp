#pragma once

#include <optional>
#include <string>

#include "biasprobe/nn/parameter.hpp"
#include "biasprobe/tensor.hpp"

namespace biasprobe::nn {

struct ConvConfig {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 4;
  int stride = 2;
  int pad = 1;
  // Extra rows/cols added to a transposed convolution's output so odd
  // spatial sizes can be mirrored exactly.
  int output_padding = 0;
  bool transposed = false;
  bool bias = false;
};

// Output extent of a strided convolution along one axis.
int conv_out_extent(int in, int kernel, int stride, int pad);
// Output extent of the transposed convolution along one axis.
int conv_transpose_out_extent(int in, int kernel, int stride, int pad,
                              int output_padding);

// Convolution or transposed convolution, computed as im2col + GEMM.
// Weight layout: [out, in, k, k] for convolution, [in, out, k, k] for the
// transposed variant. Forward is const; the caller keeps the input around for
// backward.
class ConvLayer {
 public:
  ConvLayer(const std::string& name, ConvConfig config);

  const ConvConfig& config() const { return config_; }
  Shape output_shape(const Shape& in) const;

  Tensor forward(const Tensor& x) const;
  // Returns dL/dx. Weight and bias gradients are accumulated only when
  // `param_grads` is set.
  Tensor backward(const Tensor& x, const Tensor& dy, bool param_grads);

  Parameter& weight() { return weight_; }
  const Parameter& weight() const { return weight_; }
  Parameter* bias() { return bias_ ? &*bias_ : nullptr; }
  const Parameter* bias() const { return bias_ ? &*bias_ : nullptr; }

 private:
  ConvConfig config_;
  Parameter weight_;
  std::optional<Parameter> bias_;
};

// Exposed for tests.
void im2col(const float* x, int channels, int height, int width, int kernel,
            int stride, int pad, int out_h, int out_w, float* col);
void col2im_add(const float* col, int channels, int height, int width,
                int kernel, int stride, int pad, int out_h, int out_w, float* x);
void transpose(const float* src, int rows, int cols, float* dst);

}  // namespace biasprobe::nn
