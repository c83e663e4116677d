#include <cmath>
#include <random>
#include <set>

#include "biasprobe/error.hpp"
#include "biasprobe/models/bundle.hpp"
#include "biasprobe/models/checkpoint.hpp"
#include "biasprobe/models/discriminator.hpp"
#include "biasprobe/models/generator.hpp"
#include "biasprobe/models/generator_spec.hpp"
#include "biasprobe/nn/init.hpp"
#include "biasprobe/training/losses.hpp"
#include "doctest.h"
#include "reference_unet.hpp"
#include "test_support.hpp"

using namespace biasprobe;
using namespace biasprobe::models;
using biasprobe::testing::random_tensor;
using biasprobe::testing::TempDir;

namespace {

Generator initialized(GeneratorSpec spec, std::uint64_t seed, nn::InitScheme scheme = nn::InitScheme::normal) {
  Generator g(std::move(spec));
  std::mt19937_64 rng(seed);
  nn::initialize(g.parameters(), scheme, rng);
  return g;
}

// Closed-form count: k*k*in*out weights, a bias on the first and last
// layers, gamma+beta wherever batch norm sits.
std::size_t analytic_parameter_count(const GeneratorSpec& s) {
  const auto& c = s.channel_schedule;
  const int d = s.depth;
  std::size_t n = 0;
  int in = 3;
  for (int k = 1; k <= d; ++k) {
    const int out = c[k - 1];
    n += 16u * in * out + (k == 1 ? out : 2 * out);
    in = out;
  }
  n += 9u * in * in + 2 * in;
  for (int j = 1; j <= d; ++j) {
    const int skip = s.skip_mask[j - 1] ? c[d - j] : 0;
    const int out = j == d ? 3 : c[d - j - 1];
    n += 16u * (in + skip) * out + (j == d ? out : 2 * out);
    in = out;
  }
  return n;
}

// Every parameter gets a finite gradient that is not identically zero.
void check_gradient_flow(Generator& g, std::uint64_t seed) {
  const int r = g.spec().input_resolution;
  const Tensor x = random_tensor({2, 3, r, r}, seed);
  const Tensor target = random_tensor({2, 3, r, r}, seed + 1);
  nn::zero_grads(g.parameters());
  Generator::Tape tape;
  const Tensor y = g.forward(x, &tape);
  Tensor dy(y.shape());
  training::add_l1_grad(y, target, 1.0, &dy);
  g.backward(dy, tape, true);
  for (const auto* p : g.parameters()) {
    bool nonzero = false, finite = true;
    for (float v : p->grad.values()) {
      nonzero |= v != 0.0f;
      finite &= std::isfinite(v);
    }
    INFO(p->name);
    CHECK(finite);
    CHECK(nonzero);
  }
}

}  // namespace

TEST_CASE("standard spec layout") {
  const auto s = GeneratorSpec::standard(7, 256);
  CHECK(s.channel_schedule == std::vector<int>{64, 128, 256, 512, 512, 512, 512});
  CHECK(s.skip_count() == 7);
  CHECK_NOTHROW(s.validate());
}

TEST_CASE("depth 7 graph has 16 layers and 7 skip edges") {
  const Generator g(GeneratorSpec::standard(7, 256, 4));
  const auto& layers = g.graph().layers;
  REQUIRE(layers.size() == 16);
  CHECK(g.graph().skip_edge_count() == 7);
  CHECK(layers.front().name == "input");
  CHECK(layers[8].name == "middle");
  CHECK(layers.back().kind == LayerKind::output);
  // Extents halve down, double up.
  for (int k = 1; k <= 7; ++k) CHECK(layers[k].spatial_size == 256 >> k);
  CHECK(layers[8].spatial_size == 2);
  for (int j = 1; j <= 7; ++j) CHECK(layers[8 + j].spatial_size == 2 << j);
  CHECK(g.graph().layer("up5").alias == "encoder 5");
  CHECK(g.graph().layer("down3").alias == "decoder 3");
  CHECK(*g.graph().layer("up1").skip_source == "down7");
}

TEST_CASE("skips off keeps shape") {
  auto s = GeneratorSpec::standard(3, 32, 8);
  s.skip_mask = {false, false, false};
  const Generator g = initialized(s, 1);
  CHECK(g.graph().skip_edge_count() == 0);
  const Tensor y = g.forward(random_tensor({1, 3, 32, 32}, 2));
  CHECK(y.shape() == Shape{1, 3, 32, 32});
}

TEST_CASE("mask T,F,T gives two skip edges at levels 1 and 3") {
  auto s = GeneratorSpec::standard(3, 32, 8);
  s.skip_mask = {true, false, true};
  const Generator g(s);
  CHECK(g.graph().skip_edge_count() == 2);
  CHECK(g.graph().layer("up1").skip_source.has_value());
  CHECK_FALSE(g.graph().layer("up2").skip_source.has_value());
  CHECK(g.graph().layer("up3").skip_source.has_value());
}

TEST_CASE("skip count equals mask popcount for every mask") {
  for (int m = 0; m < 16; ++m) {
    auto s = GeneratorSpec::standard(4, 16, 4);
    int pop = 0;
    for (int b = 0; b < 4; ++b) {
      s.skip_mask[b] = (m >> b) & 1;
      pop += (m >> b) & 1;
    }
    const Generator g(s);
    CHECK(g.graph().skip_edge_count() == pop);
    for (const auto& l : g.graph().layers) {
      if (l.kind != LayerKind::conv_up && l.kind != LayerKind::output) continue;
      const int j = std::stoi(l.name.substr(2));
      CHECK(l.skip_source.has_value() == s.skip_mask[j - 1]);
    }
  }
}

TEST_CASE("spec validation") {
  CHECK_THROWS_AS(Generator(GeneratorSpec::standard(6, 32, 4)), ModelError);
  CHECK_NOTHROW(Generator(GeneratorSpec::standard(5, 32, 4)));
  auto s = GeneratorSpec::standard(3, 32);
  s.skip_mask.pop_back();
  CHECK_THROWS_AS(s.validate(), ModelError);
}

TEST_CASE("generator rejects wrong input shape") {
  const Generator g(GeneratorSpec::standard(3, 16, 4));
  CHECK_THROWS_AS(g.forward(Tensor({1, 3, 32, 32})), ModelError);
  CHECK_THROWS_AS(g.forward(Tensor({1, 1, 16, 16})), ModelError);
}

TEST_CASE("discriminator patch map sizes") {
  CHECK(Discriminator(256, 4).patch_size() == 16);
  const Discriminator d64(64, 8);
  CHECK(d64.patch_size() == 4);
  const Tensor logits = d64.forward(random_tensor({2, 6, 64, 64}, 3));
  CHECK(logits.shape() == Shape{2, 1, 4, 4});
  CHECK_THROWS_AS(d64.forward(random_tensor({1, 3, 64, 64}, 4)), ModelError);
  CHECK_THROWS_AS(Discriminator(8, 8), ModelError);
  for (float z : logits.values()) {
    const float p = training::sigmoid(z);
    CHECK(p > 0.0f);
    CHECK(p < 1.0f);
  }
}

TEST_CASE("pix2pix parameter count equals the closed form") {
  for (int depth : {3, 4, 5}) {
    auto s = GeneratorSpec::standard(depth, 32, 8);
    const ModelBundle b = assemble(ModelKind::pix2pix, s, {});
    CHECK(b.generators.size() == 1);
    CHECK(b.discriminators.size() == 1);
    CHECK(b.generator(Role::shared).parameter_count() == analytic_parameter_count(s));
    s.skip_mask[1] = false;
    CHECK(Generator(s).parameter_count() == analytic_parameter_count(s));
  }
}

TEST_CASE("pairwise generators are independent draws") {
  AssembleOptions o;
  o.seed = 5;
  o.discriminator_base_channels = 8;
  const ModelBundle b = assemble(ModelKind::pairwise, GeneratorSpec::standard(3, 16, 8), o);
  REQUIRE(b.generators.size() == 2);
  REQUIRE(b.discriminators.size() == 2);
  const auto pl = b.generator(Role::left).parameters();
  const auto pr = b.generator(Role::right).parameters();
  REQUIRE(pl.size() == pr.size());
  CHECK_FALSE(bit_equal(pl[0]->value, pr[0]->value));
  CHECK_THROWS_AS(b.generator(Role::shared), ModelError);
}

TEST_CASE("assemble is deterministic under a seed") {
  AssembleOptions o;
  o.seed = 11;
  o.discriminator_base_channels = 8;
  for (auto init : {nn::InitScheme::normal, nn::InitScheme::orthogonal}) {
    o.init = init;
    const ModelBundle a = assemble(ModelKind::pairwise, GeneratorSpec::standard(3, 16, 8), o);
    const ModelBundle b = assemble(ModelKind::pairwise, GeneratorSpec::standard(3, 16, 8), o);
    for (Role r : a.roles()) {
      const auto pa = a.generator(r).parameters();
      const auto pb = b.generator(r).parameters();
      for (std::size_t i = 0; i < pa.size(); ++i) CHECK(bit_equal(pa[i]->value, pb[i]->value));
      const auto da = a.discriminator(r).parameters();
      const auto db = b.discriminator(r).parameters();
      for (std::size_t i = 0; i < da.size(); ++i) CHECK(bit_equal(da[i]->value, db[i]->value));
    }
  }
  CHECK_THROWS(parse_model_kind("cyclegan"));
}

TEST_CASE("modified preset") {
  const auto s7 = modified_pairwise_preset(GeneratorSpec::standard(7, 256));
  CHECK(s7.skip_mask == std::vector<bool>{true, true, true, true, false, false, false});
  CHECK(s7.skip_count() == 4);
  CHECK(modified_pairwise_preset(GeneratorSpec::standard(4, 32)).skip_mask ==
        std::vector<bool>{true, false, false, false});
  CHECK(modified_pairwise_preset(s7) == s7);
  // Entries already off elsewhere are left alone.
  auto partial = GeneratorSpec::standard(5, 32);
  partial.skip_mask[0] = false;
  CHECK(modified_pairwise_preset(partial).skip_mask == std::vector<bool>{false, true, false, false, false});
}

TEST_CASE("forward range and shape on batches") {
  for (auto mask : {std::vector<bool>{true, true, true, true}, std::vector<bool>{true, false, false, false}}) {
    auto s = GeneratorSpec::standard(4, 32, 8);
    s.skip_mask = mask;
    const Generator g = initialized(s, 21);
    const Tensor y = g.forward(random_tensor({3, 3, 32, 32}, 22));
    CHECK(y.shape() == Shape{3, 3, 32, 32});
    for (float v : y.values()) {
      CHECK(v >= -1.0f);
      CHECK(v <= 1.0f);
    }
  }
}

TEST_CASE("gradient flow reaches every layer") {
  SUBCASE("all skips") {
    Generator g = initialized(GeneratorSpec::standard(4, 32, 8), 31);
    check_gradient_flow(g, 32);
  }
  SUBCASE("masked") {
    auto s = GeneratorSpec::standard(4, 32, 8);
    s.skip_mask = {false, true, false, false};
    Generator g = initialized(s, 33);
    check_gradient_flow(g, 34);
  }
  SUBCASE("ablated depth 7") {
    Generator g = initialized(modified_pairwise_preset(GeneratorSpec::standard(7, 128, 4)), 35);
    check_gradient_flow(g, 36);
  }
}

TEST_CASE("float forward agrees with the double reference") {
  for (auto mask : {std::vector<bool>{true, true, true}, std::vector<bool>{false, true, false}}) {
    auto spec = GeneratorSpec::standard(3, 16, 8);
    spec.skip_mask = mask;
    const Generator g = initialized(spec, 51);
    const Tensor x = random_tensor({2, 3, 16, 16}, 52);
    refnet::T xd(2, 3, 16, 16);
    for (std::size_t i = 0; i < x.size(); ++i) xd.v[i] = x.data()[i];
    const refnet::Params p = refnet::copy_params(g);
    const refnet::T yd = refnet::Net(g, p).forward(xd);
    const Tensor y = g.forward(x);
    for (std::size_t i = 0; i < y.size(); ++i) CHECK(std::abs(y.data()[i] - yd.v[i]) < 1e-5);
  }
}

// Central differences are taken on the double-precision reference so float
// rounding does not swamp 1e-5-sized gradients. A draw whose +-eps interval
// flips a rectifier is redrawn: the difference quotient there is not a
// derivative.
TEST_CASE("analytic gradient of the mean output matches central differences") {
  Generator g = initialized(GeneratorSpec::standard(3, 16, 8), 41);
  const Tensor x = random_tensor({2, 3, 16, 16}, 42);
  refnet::T xd(2, 3, 16, 16);
  for (std::size_t i = 0; i < x.size(); ++i) xd.v[i] = x.data()[i];

  nn::zero_grads(g.parameters());
  Generator::Tape tape;
  const Tensor y = g.forward(x, &tape);
  g.backward(Tensor(y.shape(), 1.0f / static_cast<float>(y.size())), tape, true);

  refnet::Params p = refnet::copy_params(g);
  const refnet::Net net(g, p);
  std::vector<bool> base_signs, signs;
  auto mean_out = [&](std::vector<bool>* s) {
    const refnet::T out = net.forward(xd, s);
    double sum = 0.0;
    for (double v : out.v) sum += v;
    return sum / static_cast<double>(out.v.size());
  };
  mean_out(&base_signs);

  auto params = g.parameters();
  std::size_t total = 0;
  for (auto* q : params) total += q->value.size();
  std::mt19937_64 rng(43);
  const double eps = 1e-3;
  int checked = 0, redrawn = 0;
  while (checked < 10) {
    REQUIRE(redrawn < 50);
    std::size_t flat = rng() % total;
    nn::Parameter* q = nullptr;
    for (auto* c : params) {
      if (flat < c->value.size()) {
        q = c;
        break;
      }
      flat -= c->value.size();
    }
    double& w = p[q][flat];
    const double orig = w;
    w = orig + eps;
    const double fp = mean_out(&signs);
    const bool kink_p = signs != base_signs;
    w = orig - eps;
    const double fm = mean_out(&signs);
    const bool kink_m = signs != base_signs;
    w = orig;
    if (kink_p || kink_m) {
      ++redrawn;
      continue;
    }
    const double num = (fp - fm) / (2 * eps);
    const double ana = q->grad.data()[flat];
    INFO(q->name << "[" << flat << "] analytic " << ana << " numeric " << num);
    CHECK(std::abs(ana - num) <= 1e-2 * std::max(std::abs(ana), std::abs(num)));
    ++checked;
  }
  MESSAGE("parameters redrawn for crossing a kink: " << redrawn);
}

TEST_CASE("checkpoint round trip") {
  TempDir dir("bp-ckpt");
  AssembleOptions o;
  o.seed = 3;
  o.id = "r55";
  o.discriminator_base_channels = 8;
  ModelBundle b = assemble(ModelKind::pairwise, GeneratorSpec::standard(3, 16, 8), o);
  save_bundle(dir.path(), b, 2);
  save_bundle(dir.path(), b, 4);
  CHECK(saved_epochs(dir.path()) == std::vector<int>{2, 4});
  CHECK(std::filesystem::exists(dir / "G_left/epoch_4/graph.json"));
  const ModelBundle l = load_bundle(dir.path());
  CHECK(l.kind == ModelKind::pairwise);
  CHECK(l.id == "r55");
  CHECK(l.spec == b.spec);
  const Tensor x = random_tensor({1, 3, 16, 16}, 4);
  for (Role r : b.roles()) {
    CHECK(bit_equal(b.generator(r).forward(x), l.generator(r).forward(x)));
    CHECK(l.generator(r).graph() == b.generator(r).graph());
  }
  CHECK_THROWS(load_bundle(dir.path(), 3));
  CHECK_THROWS(load_bundle(dir / "missing"));
}

TEST_CASE("graph json round trip") {
  const Generator g(modified_pairwise_preset(GeneratorSpec::standard(5, 64, 4)));
  nlohmann::json j = g.graph();
  const ArchitectureGraph back = j.get<ArchitectureGraph>();
  CHECK(back == g.graph());
}
