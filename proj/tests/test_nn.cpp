#include <cmath>
#include <random>

#include "biasprobe/error.hpp"
#include "biasprobe/nn/adam.hpp"
#include "biasprobe/nn/batchnorm.hpp"
#include "biasprobe/nn/block.hpp"
#include "biasprobe/nn/conv.hpp"
#include "biasprobe/nn/init.hpp"
#include "biasprobe/simd/kernels.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace biasprobe;
using biasprobe::testing::random_tensor;

namespace {

// Direct definition of a strided, padded convolution; weight [out][in][k][k].
Tensor naive_conv(const Tensor& x, const nn::ConvLayer& layer) {
  const auto& c = layer.config();
  const Shape s = x.shape();
  const int oh = (s.h + 2 * c.pad - c.kernel) / c.stride + 1;
  const int ow = (s.w + 2 * c.pad - c.kernel) / c.stride + 1;
  Tensor y({s.n, c.out_channels, oh, ow});
  const Tensor& w = layer.weight().value;
  for (int n = 0; n < s.n; ++n)
    for (int o = 0; o < c.out_channels; ++o)
      for (int py = 0; py < oh; ++py)
        for (int px = 0; px < ow; ++px) {
          double acc = layer.bias() ? layer.bias()->value.data()[o] : 0.0;
          for (int i = 0; i < c.in_channels; ++i)
            for (int ky = 0; ky < c.kernel; ++ky)
              for (int kx = 0; kx < c.kernel; ++kx) {
                const int iy = py * c.stride - c.pad + ky, ix = px * c.stride - c.pad + kx;
                if (iy < 0 || ix < 0 || iy >= s.h || ix >= s.w) continue;
                acc += static_cast<double>(w.at(o, i, ky, kx)) * x.at(n, i, iy, ix);
              }
          y.at(n, o, py, px) = static_cast<float>(acc);
        }
  return y;
}

// Scatter form of the transposed convolution; weight [in][out][k][k].
Tensor naive_conv_transpose(const Tensor& x, const nn::ConvLayer& layer) {
  const auto& c = layer.config();
  const Shape s = x.shape();
  const int oh = (s.h - 1) * c.stride - 2 * c.pad + c.kernel + c.output_padding;
  const int ow = (s.w - 1) * c.stride - 2 * c.pad + c.kernel + c.output_padding;
  std::vector<double> acc(static_cast<std::size_t>(s.n) * c.out_channels * oh * ow, 0.0);
  const Tensor& w = layer.weight().value;
  auto idx = [&](int n, int o, int y, int xx) { return ((static_cast<std::size_t>(n) * c.out_channels + o) * oh + y) * ow + xx; };
  for (int n = 0; n < s.n; ++n)
    for (int i = 0; i < c.in_channels; ++i)
      for (int iy = 0; iy < s.h; ++iy)
        for (int ix = 0; ix < s.w; ++ix)
          for (int o = 0; o < c.out_channels; ++o)
            for (int ky = 0; ky < c.kernel; ++ky)
              for (int kx = 0; kx < c.kernel; ++kx) {
                const int py = iy * c.stride - c.pad + ky, px = ix * c.stride - c.pad + kx;
                if (py < 0 || px < 0 || py >= oh || px >= ow) continue;
                acc[idx(n, o, py, px)] += static_cast<double>(w.at(i, o, ky, kx)) * x.at(n, i, iy, ix);
              }
  Tensor y({s.n, c.out_channels, oh, ow});
  for (int n = 0; n < s.n; ++n)
    for (int o = 0; o < c.out_channels; ++o)
      for (int py = 0; py < oh; ++py)
        for (int px = 0; px < ow; ++px)
          y.at(n, o, py, px) =
              static_cast<float>(acc[idx(n, o, py, px)] + (layer.bias() ? layer.bias()->value.data()[o] : 0.0));
  return y;
}

double dot(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a.data()[i]) * b.data()[i];
  return s;
}

void randomize(nn::Parameter& p, std::uint64_t seed) { p.value = random_tensor(p.value.shape(), seed, -0.5f, 0.5f); }

void check_close(const Tensor& a, const Tensor& b, double tol) {
  REQUIRE(a.shape() == b.shape());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.data()[i] == doctest::Approx(b.data()[i]).epsilon(tol).scale(1.0));
}

}  // namespace

TEST_CASE("output extents") {
  CHECK(nn::conv_out_extent(32, 4, 2, 1) == 16);
  CHECK(nn::conv_out_extent(2, 4, 2, 1) == 1);
  CHECK(nn::conv_out_extent(7, 3, 1, 1) == 7);
  CHECK(nn::conv_transpose_out_extent(16, 4, 2, 1, 0) == 32);
  CHECK(nn::conv_transpose_out_extent(3, 4, 2, 1, 1) == 7);
}

TEST_CASE("conv forward matches the direct definition") {
  for (simd::Isa isa : {simd::Isa::scalar, simd::Isa::avx2}) {
    simd::ScopedIsa scope(isa);
    nn::ConvLayer down("d.conv", {3, 5, 4, 2, 1, 0, false, true});
    randomize(down.weight(), 1);
    randomize(*down.bias(), 2);
    const Tensor x = random_tensor({2, 3, 9, 8}, 3);
    check_close(down.forward(x), naive_conv(x, down), 1e-5);

    nn::ConvLayer same("m.conv", {4, 4, 3, 1, 1, 0, false, false});
    randomize(same.weight(), 4);
    const Tensor x2 = random_tensor({1, 4, 5, 5}, 5);
    check_close(same.forward(x2), naive_conv(x2, same), 1e-5);
  }
}

TEST_CASE("transposed conv forward matches the scatter definition") {
  for (simd::Isa isa : {simd::Isa::scalar, simd::Isa::avx2}) {
    simd::ScopedIsa scope(isa);
    for (int op : {0, 1}) {
      nn::ConvLayer up("u.conv", {6, 3, 4, 2, 1, op, true, true});
      randomize(up.weight(), 10 + op);
      randomize(*up.bias(), 20 + op);
      const Tensor x = random_tensor({2, 6, 4, 3}, 30 + op);
      check_close(up.forward(x), naive_conv_transpose(x, up), 1e-5);
    }
  }
}

TEST_CASE("conv backward equals the adjoint of the forward map") {
  for (bool transposed : {false, true}) {
    const nn::ConvConfig cfg = transposed ? nn::ConvConfig{4, 3, 4, 2, 1, 0, true, true}
                                          : nn::ConvConfig{3, 4, 4, 2, 1, 0, false, true};
    nn::ConvLayer layer("c.conv", cfg);
    randomize(layer.weight(), 40);
    randomize(*layer.bias(), 41);
    const Tensor x = random_tensor({2, cfg.in_channels, 6, 6}, 42);
    const Tensor y = layer.forward(x);
    const Tensor r = random_tensor(y.shape(), 43);
    layer.weight().grad.zero();
    layer.bias()->grad.zero();
    const Tensor dx = layer.backward(x, r, true);

    // The map is linear in x and in W, so a unit finite difference is exact
    // up to rounding.
    const double h = 1e-2;
    std::mt19937_64 rng(44);
    for (int t = 0; t < 12; ++t) {
      const std::size_t i = rng() % x.size();
      Tensor xp = x, xm = x;
      xp.data()[i] += static_cast<float>(h);
      xm.data()[i] -= static_cast<float>(h);
      const double num = (dot(layer.forward(xp), r) - dot(layer.forward(xm), r)) / (2 * h);
      CHECK(dx.data()[i] == doctest::Approx(num).epsilon(2e-3).scale(1.0));
    }
    for (int t = 0; t < 12; ++t) {
      const std::size_t i = rng() % layer.weight().value.size();
      const float orig = layer.weight().value.data()[i];
      layer.weight().value.data()[i] = orig + static_cast<float>(h);
      const double fp = dot(layer.forward(x), r);
      layer.weight().value.data()[i] = orig - static_cast<float>(h);
      const double fm = dot(layer.forward(x), r);
      layer.weight().value.data()[i] = orig;
      CHECK(layer.weight().grad.data()[i] == doctest::Approx((fp - fm) / (2 * h)).epsilon(2e-3).scale(1.0));
    }
    // Bias gradient is the per-channel sum of the upstream gradient.
    for (int o = 0; o < cfg.out_channels; ++o) {
      double s = 0.0;
      for (int n = 0; n < r.shape().n; ++n)
        for (int yy = 0; yy < r.shape().h; ++yy)
          for (int xx = 0; xx < r.shape().w; ++xx) s += r.at(n, o, yy, xx);
      CHECK(layer.bias()->grad.data()[o] == doctest::Approx(s).epsilon(1e-5));
    }
  }
}

TEST_CASE("conv gradients accumulate across backward calls") {
  nn::ConvLayer layer("a.conv", {2, 2, 4, 2, 1, 0, false, false});
  randomize(layer.weight(), 50);
  const Tensor x = random_tensor({1, 2, 4, 4}, 51);
  const Tensor r = random_tensor(layer.output_shape(x.shape()), 52);
  layer.weight().grad.zero();
  layer.backward(x, r, true);
  const Tensor once = layer.weight().grad;
  layer.backward(x, r, true);
  for (std::size_t i = 0; i < once.size(); ++i)
    CHECK(layer.weight().grad.data()[i] == doctest::Approx(2.0 * once.data()[i]).epsilon(1e-6));
  // param_grads=false leaves them alone.
  const Tensor twice = layer.weight().grad;
  layer.backward(x, r, false);
  CHECK(bit_equal(twice, layer.weight().grad));
}

TEST_CASE("batch norm normalizes with batch statistics") {
  nn::BatchNorm bn("b.norm", 3);
  const Tensor x = random_tensor({2, 3, 4, 4}, 60, -3.0f, 5.0f);
  nn::BatchNorm::Cache cache;
  const Tensor y = bn.forward(x, &cache);
  for (int c = 0; c < 3; ++c) {
    double s = 0.0, q = 0.0;
    int n = 0;
    for (int b = 0; b < 2; ++b)
      for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) {
          s += y.at(b, c, i, j);
          q += static_cast<double>(y.at(b, c, i, j)) * y.at(b, c, i, j);
          ++n;
        }
    CHECK(s / n == doctest::Approx(0.0).scale(1.0).epsilon(1e-5));
    CHECK(q / n == doctest::Approx(1.0).epsilon(1e-3));
  }
}

TEST_CASE("batch norm backward matches finite differences") {
  nn::BatchNorm bn("b.norm", 2);
  randomize(bn.gamma(), 70);
  randomize(bn.beta(), 71);
  const Tensor x = random_tensor({2, 2, 3, 3}, 72, -2.0f, 2.0f);
  nn::BatchNorm::Cache cache;
  const Tensor y = bn.forward(x, &cache);
  const Tensor r = random_tensor(y.shape(), 73);
  bn.gamma().grad.zero();
  bn.beta().grad.zero();
  const Tensor dx = bn.backward(r, cache, true);
  auto loss = [&](const Tensor& in) { return dot(bn.forward(in, nullptr), r); };
  const double h = 1e-2;
  for (std::size_t i = 0; i < x.size(); ++i) {
    Tensor xp = x, xm = x;
    xp.data()[i] += static_cast<float>(h);
    xm.data()[i] -= static_cast<float>(h);
    const double num = (loss(xp) - loss(xm)) / (2 * h);
    CHECK(dx.data()[i] == doctest::Approx(num).epsilon(2e-2).scale(0.05));
  }
  for (int c = 0; c < 2; ++c) {
    const float g0 = bn.gamma().value.data()[c];
    bn.gamma().value.data()[c] = g0 + static_cast<float>(h);
    const double fp = loss(x);
    bn.gamma().value.data()[c] = g0 - static_cast<float>(h);
    const double fm = loss(x);
    bn.gamma().value.data()[c] = g0;
    CHECK(bn.gamma().grad.data()[c] == doctest::Approx((fp - fm) / (2 * h)).epsilon(1e-3));
  }
}

TEST_CASE("adam with learning rate zero leaves parameters bit-identical") {
  nn::Parameter p("w.weight", {1, 1, 4, 5});
  p.value = random_tensor(p.value.shape(), 80);
  p.grad = random_tensor(p.grad.shape(), 81);
  const Tensor before = p.value;
  nn::AdamConfig cfg;
  cfg.learning_rate = 0.0f;
  nn::Adam opt({&p}, cfg);
  opt.step();
  opt.step();
  CHECK(bit_equal(before, p.value));
  CHECK(opt.steps() == 2);
}

TEST_CASE("adam first step follows the update rule") {
  nn::Parameter p("w.weight", {1, 1, 1, 3});
  p.value = Tensor({1, 1, 1, 3}, {0.5f, -0.25f, 1.0f});
  p.grad = Tensor({1, 1, 1, 3}, {0.1f, -2.0f, 0.0f});
  nn::Adam opt({&p}, nn::AdamConfig{});
  opt.step();
  const double lr = 2e-4, b1 = 0.5, b2 = 0.999, eps = 1e-8;
  const double v0[] = {0.5, -0.25, 1.0}, g[] = {0.1, -2.0, 0.0};
  for (int i = 0; i < 3; ++i) {
    const double m = (1 - b1) * g[i], v = (1 - b2) * g[i] * g[i];
    const double expect = v0[i] - lr * (m / (1 - b1)) / (std::sqrt(v / (1 - b2)) + eps);
    CHECK(p.value.data()[i] == doctest::Approx(expect).epsilon(1e-6));
  }
}

TEST_CASE("initialization schemes") {
  nn::Parameter w("x.weight", {64, 32, 4, 4});
  nn::Parameter gamma("x.gamma", {1, 64, 1, 1});
  nn::Parameter bias("x.bias", {1, 64, 1, 1});
  bias.value.fill(3.0f);
  std::mt19937_64 rng(1);
  nn::initialize({&w, &gamma, &bias}, nn::InitScheme::normal, rng);
  double s = 0.0, q = 0.0;
  for (float v : w.value.values()) {
    s += v;
    q += static_cast<double>(v) * v;
  }
  const double n = static_cast<double>(w.value.size());
  CHECK(std::abs(s / n) < 1e-3);
  CHECK(std::sqrt(q / n - (s / n) * (s / n)) == doctest::Approx(0.02).epsilon(0.03));
  for (float v : bias.value.values()) CHECK(v == 0.0f);
  for (float v : gamma.value.values()) CHECK(std::abs(v - 1.0f) < 0.1f);

  nn::Parameter o("y.weight", {8, 2, 2, 2});
  std::mt19937_64 rng2(2);
  nn::initialize({&o}, nn::InitScheme::orthogonal, rng2);
  // 8 rows of length 8 -> orthonormal.
  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b) {
      double d = 0.0;
      for (int t = 0; t < 8; ++t) d += static_cast<double>(o.value.data()[a * 8 + t]) * o.value.data()[b * 8 + t];
      CHECK(d == doctest::Approx(a == b ? 1.0 : 0.0).scale(1.0).epsilon(1e-5));
    }
  CHECK(nn::parse_init_scheme("orthogonal") == nn::InitScheme::orthogonal);
  CHECK_THROWS(nn::parse_init_scheme("xavier"));
}

TEST_CASE("block applies norm and activation") {
  nn::Block blk("down2", {2, 3, 4, 2, 1, 0, false, false}, true, nn::Activation::leaky_relu);
  randomize(blk.conv().weight(), 90);
  const Tensor x = random_tensor({2, 2, 8, 8}, 91);
  nn::Block::Tape tape;
  const Tensor y = blk.forward(x, &tape);
  CHECK(y.shape() == Shape{2, 3, 4, 4});
  bool negative = false;
  for (float v : y.values()) negative |= v < 0.0f;
  CHECK(negative);
  nn::Block out("up3", {2, 3, 4, 2, 1, 0, true, true}, false, nn::Activation::tanh);
  randomize(out.conv().weight(), 92);
  const Tensor big = out.forward(random_tensor({1, 2, 4, 4}, 93, -50.0f, 50.0f), nullptr);
  for (float v : big.values()) {
    CHECK(v >= -1.0f);
    CHECK(v <= 1.0f);
  }
}
