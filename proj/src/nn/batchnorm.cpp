#include "biasprobe/nn/batchnorm.hpp"

#include <cmath>

#include "biasprobe/error.hpp"
#include "biasprobe/simd/kernels.hpp"

namespace biasprobe::nn {

BatchNorm::BatchNorm(const std::string& name, int channels, float eps)
    : channels_(channels),
      eps_(eps),
      gamma_(name + ".gamma", Shape{1, channels, 1, 1}),
      beta_(name + ".beta", Shape{1, channels, 1, 1}) {
  gamma_.value.fill(1.0f);
}

Tensor BatchNorm::forward(const Tensor& x, Cache* cache) const {
  const auto& k = simd::kernels();
  const Shape s = x.shape();
  if (s.c != channels_) throw ModelError("batchnorm " + gamma_.name + ": channel mismatch");
  const std::size_t plane = s.plane();
  const double count = static_cast<double>(s.n) * plane;
  Tensor y(s);
  Tensor xhat(s);
  std::vector<float> inv_std(channels_);
  for (int c = 0; c < channels_; ++c) {
    double sum = 0.0;
    for (int n = 0; n < s.n; ++n) sum += k.sum(x.sample(n) + c * plane, plane);
    const double mean = sum / count;
    double ss = 0.0;
    for (int n = 0; n < s.n; ++n) ss += k.sum_sq_dev(x.sample(n) + c * plane, plane, mean);
    const double var = ss / count;
    const float istd = static_cast<float>(1.0 / std::sqrt(var + eps_));
    inv_std[c] = istd;
    const float shift = static_cast<float>(-mean) * istd;
    const float g = gamma_.value.data()[c];
    const float b = beta_.value.data()[c];
    for (int n = 0; n < s.n; ++n) {
      float* xh = xhat.sample(n) + c * plane;
      k.affine(plane, x.sample(n) + c * plane, istd, shift, xh);
      k.affine(plane, xh, g, b, y.sample(n) + c * plane);
    }
  }
  if (cache) {
    cache->xhat = std::move(xhat);
    cache->inv_std = std::move(inv_std);
  }
  return y;
}

Tensor BatchNorm::backward(const Tensor& dy, const Cache& cache, bool param_grads) {
  const Shape s = dy.shape();
  if (!(cache.xhat.shape() == s)) throw ModelError("batchnorm " + gamma_.name + ": stale cache");
  const std::size_t plane = s.plane();
  const double count = static_cast<double>(s.n) * plane;
  Tensor dx(s);
  for (int c = 0; c < channels_; ++c) {
    double sum_dy = 0.0;
    double sum_dy_xhat = 0.0;
    for (int n = 0; n < s.n; ++n) {
      const float* g = dy.sample(n) + c * plane;
      const float* xh = cache.xhat.sample(n) + c * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        sum_dy += g[i];
        sum_dy_xhat += static_cast<double>(g[i]) * xh[i];
      }
    }
    const float gamma = gamma_.value.data()[c];
    if (param_grads) {
      gamma_.grad.data()[c] += static_cast<float>(sum_dy_xhat);
      beta_.grad.data()[c] += static_cast<float>(sum_dy);
    }
    const double scale = gamma * cache.inv_std[c];
    const double mean_dy = sum_dy / count;
    const double mean_dy_xhat = sum_dy_xhat / count;
    for (int n = 0; n < s.n; ++n) {
      const float* g = dy.sample(n) + c * plane;
      const float* xh = cache.xhat.sample(n) + c * plane;
      float* d = dx.sample(n) + c * plane;
      for (std::size_t i = 0; i < plane; ++i)
        d[i] = static_cast<float>(scale * (g[i] - mean_dy - xh[i] * mean_dy_xhat));
    }
  }
  return dx;
}

}  // namespace biasprobe::nn
