#include "biasprobe/nn/init.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "biasprobe/error.hpp"

namespace biasprobe::nn {
namespace {

bool ends_with(const std::string& s, std::string_view suffix) {
  return s.size() >= suffix.size() &&
         s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// Fills a rows x cols matrix with orthonormal rows (or columns when
// rows > cols) by modified Gram-Schmidt on a Gaussian draw.
void orthogonal_fill(float* out, int rows, int cols, std::mt19937_64& rng) {
  const bool flip = rows > cols;
  const int r = flip ? cols : rows;
  const int c = flip ? rows : cols;
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> m(static_cast<std::size_t>(r) * c);
  for (auto& v : m) v = normal(rng);
  for (int i = 0; i < r; ++i) {
    double* vi = &m[static_cast<std::size_t>(i) * c];
    for (int j = 0; j < i; ++j) {
      const double* vj = &m[static_cast<std::size_t>(j) * c];
      double dot = 0.0;
      for (int t = 0; t < c; ++t) dot += vi[t] * vj[t];
      for (int t = 0; t < c; ++t) vi[t] -= dot * vj[t];
    }
    double norm = 0.0;
    for (int t = 0; t < c; ++t) norm += vi[t] * vi[t];
    norm = std::sqrt(norm);
    for (int t = 0; t < c; ++t) vi[t] /= norm;
  }
  for (int i = 0; i < r; ++i)
    for (int t = 0; t < c; ++t) {
      const double v = m[static_cast<std::size_t>(i) * c + t];
      if (flip)
        out[static_cast<std::size_t>(t) * cols + i] = static_cast<float>(v);
      else
        out[static_cast<std::size_t>(i) * cols + t] = static_cast<float>(v);
    }
}

}  // namespace

InitScheme parse_init_scheme(std::string_view name) {
  if (name == "normal") return InitScheme::normal;
  if (name == "orthogonal") return InitScheme::orthogonal;
  throw ConfigError("unknown init scheme '" + std::string(name) + "'");
}

std::string_view init_scheme_name(InitScheme scheme) {
  return scheme == InitScheme::orthogonal ? "orthogonal" : "normal";
}

void initialize(const ParameterList& params, InitScheme scheme, std::mt19937_64& rng) {
  std::normal_distribution<float> weight_dist(0.0f, 0.02f);
  std::normal_distribution<float> gamma_dist(1.0f, 0.02f);
  for (Parameter* p : params) {
    p->grad.zero();
    p->adam_m.zero();
    p->adam_v.zero();
    if (ends_with(p->name, ".weight")) {
      const Shape s = p->value.shape();
      if (scheme == InitScheme::orthogonal) {
        orthogonal_fill(p->value.data(), s.n, static_cast<int>(s.sample()), rng);
      } else {
        for (float& v : p->value.values()) v = weight_dist(rng);
      }
    } else if (ends_with(p->name, ".gamma")) {
      for (float& v : p->value.values()) v = gamma_dist(rng);
    } else {
      p->value.zero();
    }
  }
}

}  // namespace biasprobe::nn
