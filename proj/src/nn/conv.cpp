#include "biasprobe/nn/conv.hpp"

#include <algorithm>
#include <cstring>
#include <vector>

#include "biasprobe/error.hpp"
#include "biasprobe/simd/kernels.hpp"

namespace biasprobe::nn {

int conv_out_extent(int in, int kernel, int stride, int pad) {
  return (in + 2 * pad - kernel) / stride + 1;
}

int conv_transpose_out_extent(int in, int kernel, int stride, int pad,
                              int output_padding) {
  return (in - 1) * stride - 2 * pad + kernel + output_padding;
}

void im2col(const float* x, int channels, int height, int width, int kernel,
            int stride, int pad, int out_h, int out_w, float* col) {
  const std::size_t plane = static_cast<std::size_t>(out_h) * out_w;
  for (int c = 0; c < channels; ++c) {
    const float* xc = x + static_cast<std::size_t>(c) * height * width;
    for (int ki = 0; ki < kernel; ++ki) {
      for (int kj = 0; kj < kernel; ++kj) {
        float* row = col + ((static_cast<std::size_t>(c) * kernel + ki) * kernel + kj) * plane;
        for (int oh = 0; oh < out_h; ++oh) {
          const int ih = oh * stride - pad + ki;
          float* dst = row + static_cast<std::size_t>(oh) * out_w;
          if (ih < 0 || ih >= height) {
            std::memset(dst, 0, sizeof(float) * out_w);
            continue;
          }
          const float* src = xc + static_cast<std::size_t>(ih) * width;
          for (int ow = 0; ow < out_w; ++ow) {
            const int iw = ow * stride - pad + kj;
            dst[ow] = (iw >= 0 && iw < width) ? src[iw] : 0.0f;
          }
        }
      }
    }
  }
}

void col2im_add(const float* col, int channels, int height, int width,
                int kernel, int stride, int pad, int out_h, int out_w, float* x) {
  const std::size_t plane = static_cast<std::size_t>(out_h) * out_w;
  for (int c = 0; c < channels; ++c) {
    float* xc = x + static_cast<std::size_t>(c) * height * width;
    for (int ki = 0; ki < kernel; ++ki) {
      for (int kj = 0; kj < kernel; ++kj) {
        const float* row = col + ((static_cast<std::size_t>(c) * kernel + ki) * kernel + kj) * plane;
        for (int oh = 0; oh < out_h; ++oh) {
          const int ih = oh * stride - pad + ki;
          if (ih < 0 || ih >= height) continue;
          const float* src = row + static_cast<std::size_t>(oh) * out_w;
          float* dst = xc + static_cast<std::size_t>(ih) * width;
          for (int ow = 0; ow < out_w; ++ow) {
            const int iw = ow * stride - pad + kj;
            if (iw >= 0 && iw < width) dst[iw] += src[ow];
          }
        }
      }
    }
  }
}

void transpose(const float* src, int rows, int cols, float* dst) {
  constexpr int kTile = 32;
  for (int r0 = 0; r0 < rows; r0 += kTile) {
    const int r1 = std::min(rows, r0 + kTile);
    for (int c0 = 0; c0 < cols; c0 += kTile) {
      const int c1 = std::min(cols, c0 + kTile);
      for (int r = r0; r < r1; ++r)
        for (int c = c0; c < c1; ++c)
          dst[static_cast<std::size_t>(c) * rows + r] = src[static_cast<std::size_t>(r) * cols + c];
    }
  }
}

ConvLayer::ConvLayer(const std::string& name, ConvConfig config) : config_(config) {
  if (config.in_channels <= 0 || config.out_channels <= 0 || config.kernel <= 0 ||
      config.stride <= 0 || config.pad < 0 || config.output_padding < 0)
    throw ModelError("invalid convolution configuration for " + name);
  const Shape wshape = config.transposed
                           ? Shape{config.in_channels, config.out_channels, config.kernel, config.kernel}
                           : Shape{config.out_channels, config.in_channels, config.kernel, config.kernel};
  weight_ = Parameter(name + ".weight", wshape);
  if (config.bias) bias_.emplace(name + ".bias", Shape{1, config.out_channels, 1, 1});
}

Shape ConvLayer::output_shape(const Shape& in) const {
  if (in.c != config_.in_channels)
    throw ModelError("convolution " + weight_.name + " expects " +
                     std::to_string(config_.in_channels) + " input channels, got " +
                     std::to_string(in.c));
  if (config_.transposed) {
    return Shape{in.n, config_.out_channels,
                 conv_transpose_out_extent(in.h, config_.kernel, config_.stride, config_.pad, config_.output_padding),
                 conv_transpose_out_extent(in.w, config_.kernel, config_.stride, config_.pad, config_.output_padding)};
  }
  const int oh = conv_out_extent(in.h, config_.kernel, config_.stride, config_.pad);
  const int ow = conv_out_extent(in.w, config_.kernel, config_.stride, config_.pad);
  if (oh < 1 || ow < 1)
    throw ModelError("convolution " + weight_.name + " input " + in.str() + " is too small");
  return Shape{in.n, config_.out_channels, oh, ow};
}

Tensor ConvLayer::forward(const Tensor& x) const {
  const auto& k = simd::kernels();
  const Shape in = x.shape();
  const Shape out = output_shape(in);
  Tensor y(out);
  const int kk = config_.kernel * config_.kernel;

  if (!config_.transposed) {
    const int rows = in.c * kk;
    const int cols = out.h * out.w;
    std::vector<float> col(static_cast<std::size_t>(rows) * cols);
    for (int n = 0; n < in.n; ++n) {
      im2col(x.sample(n), in.c, in.h, in.w, config_.kernel, config_.stride,
             config_.pad, out.h, out.w, col.data());
      k.gemm(out.c, cols, rows, weight_.value.data(), rows, col.data(), cols,
             y.sample(n), cols, false);
    }
  } else {
    // col[out*k*k, Hin*Win] = W^T x, then scatter into the output image.
    const int rows = out.c * kk;
    const int cols = in.h * in.w;
    std::vector<float> wt(static_cast<std::size_t>(rows) * in.c);
    transpose(weight_.value.data(), in.c, rows, wt.data());
    std::vector<float> col(static_cast<std::size_t>(rows) * cols);
    for (int n = 0; n < in.n; ++n) {
      k.gemm(rows, cols, in.c, wt.data(), in.c, x.sample(n), cols, col.data(), cols, false);
      col2im_add(col.data(), out.c, out.h, out.w, config_.kernel, config_.stride,
                 config_.pad, in.h, in.w, y.sample(n));
    }
  }

  if (bias_) {
    const std::size_t plane = out.plane();
    for (int n = 0; n < out.n; ++n) {
      float* ys = y.sample(n);
      for (int c = 0; c < out.c; ++c) {
        const float b = bias_->value.data()[c];
        float* p = ys + c * plane;
        for (std::size_t i = 0; i < plane; ++i) p[i] += b;
      }
    }
  }
  return y;
}

Tensor ConvLayer::backward(const Tensor& x, const Tensor& dy, bool param_grads) {
  const auto& k = simd::kernels();
  const Shape in = x.shape();
  const Shape out = output_shape(in);
  if (!(dy.shape() == out))
    throw ModelError("gradient shape " + dy.shape().str() + " does not match output " + out.str());
  Tensor dx(in);
  const int kk = config_.kernel * config_.kernel;

  if (!config_.transposed) {
    const int rows = in.c * kk;
    const int cols = out.h * out.w;
    std::vector<float> wt(static_cast<std::size_t>(rows) * out.c);
    transpose(weight_.value.data(), out.c, rows, wt.data());
    std::vector<float> col(static_cast<std::size_t>(rows) * cols);
    std::vector<float> col_t;
    if (param_grads) col_t.resize(col.size());
    for (int n = 0; n < in.n; ++n) {
      if (param_grads) {
        im2col(x.sample(n), in.c, in.h, in.w, config_.kernel, config_.stride,
               config_.pad, out.h, out.w, col.data());
        transpose(col.data(), rows, cols, col_t.data());
        k.gemm(out.c, rows, cols, dy.sample(n), cols, col_t.data(), rows,
               weight_.grad.data(), rows, true);
      }
      k.gemm(rows, cols, out.c, wt.data(), out.c, dy.sample(n), cols, col.data(), cols, false);
      col2im_add(col.data(), in.c, in.h, in.w, config_.kernel, config_.stride,
                 config_.pad, out.h, out.w, dx.sample(n));
    }
  } else {
    const int rows = out.c * kk;
    const int cols = in.h * in.w;
    std::vector<float> dcol(static_cast<std::size_t>(rows) * cols);
    std::vector<float> dcol_t;
    if (param_grads) dcol_t.resize(dcol.size());
    for (int n = 0; n < in.n; ++n) {
      im2col(dy.sample(n), out.c, out.h, out.w, config_.kernel, config_.stride,
             config_.pad, in.h, in.w, dcol.data());
      k.gemm(in.c, cols, rows, weight_.value.data(), rows, dcol.data(), cols,
             dx.sample(n), cols, false);
      if (param_grads) {
        transpose(dcol.data(), rows, cols, dcol_t.data());
        k.gemm(in.c, rows, cols, x.sample(n), cols, dcol_t.data(), rows,
               weight_.grad.data(), rows, true);
      }
    }
  }

  if (param_grads && bias_) {
    const std::size_t plane = out.plane();
    for (int n = 0; n < out.n; ++n)
      for (int c = 0; c < out.c; ++c)
        bias_->grad.data()[c] += static_cast<float>(k.sum(dy.sample(n) + c * plane, plane));
  }
  return dx;
}

}  // namespace biasprobe::nn
