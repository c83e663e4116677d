#include "biasprobe/dataset/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <random>
#include <system_error>
#include <vector>

#include "biasprobe/error.hpp"

namespace biasprobe::dataset {
namespace fs = std::filesystem;

namespace {

using Rgb = std::array<double, 3>;

constexpr double kShear = 0.35;
constexpr double kFeatureShift = 0.06;
constexpr int kSupersample = 3;

// Background tint per attribute: A cool, B warm.
constexpr Rgb kCoolTint = {-24.0, -4.0, 30.0};
constexpr Rgb kWarmTint = {30.0, 6.0, -24.0};

// Side poses carry only a faint version of the attribute cues (background
// tint and long hair), so a generator has to infer the frontal cues rather
// than copy them through the skips.
constexpr double kSideCueScale = 0.3;

bool in_ellipse(double u, double v, double cu, double cv, double ru, double rv) {
  const double du = (u - cu) / ru;
  const double dv = (v - cv) / rv;
  return du * du + dv * dv <= 1.0;
}

Rgb shade(const AvatarParams& p, Pose pose, double u, double v) {
  const double dir = pose == Pose::left ? -1.0 : pose == Pose::right ? 1.0 : 0.0;
  const double cue = dir == 0.0 ? 1.0 : kSideCueScale;
  const Rgb& tint = p.attribute == Attribute::A ? kCoolTint : kWarmTint;
  const double gradient = 1.05 - 0.1 * v;
  Rgb color;
  for (int c = 0; c < 3; ++c) color[c] = (p.background + cue * tint[c]) * gradient;
  // Face-space coordinates: undo the horizontal shear.
  const double fu = u - dir * kShear * (v - 0.5);
  const double fv = v;
  const double shift = dir * kFeatureShift;

  const Rgb hair = {p.hair * 1.15, p.hair * 0.95, p.hair * 0.8};
  const Rgb skin = {p.skin, p.skin * 0.82, p.skin * 0.68};

  if (p.attribute == Attribute::B &&
      in_ellipse(fu, fv, 0.5, 0.58, p.head_rx + 0.11, p.head_ry + 0.15) && fv > 0.16)
    for (int c = 0; c < 3; ++c) color[c] += cue * (hair[c] - color[c]);

  const bool head = in_ellipse(fu, fv, 0.5, 0.5, p.head_rx, p.head_ry);
  const bool cap = in_ellipse(fu, fv, 0.5, 0.5, p.head_rx + 0.015, p.head_ry + 0.015) &&
                   fv < 0.5 - p.head_ry * 0.55;
  if (cap) return hair;
  if (!head) return color;

  color = skin;
  const double nose_u = 0.5 + 1.3 * shift;
  if (std::fabs(fu - nose_u) < 0.012 && std::fabs(fv - 0.56) < 0.04)
    color = {skin[0] * 0.8, skin[1] * 0.8, skin[2] * 0.8};
  const Rgb eye = {35.0, 30.0, 30.0};
  const double eye_v = 0.46;
  const bool show_left = pose != Pose::right;
  const bool show_right = pose != Pose::left;
  if (show_left && in_ellipse(fu, fv, 0.5 - p.eye_spacing + shift, eye_v, 0.045, 0.028)) color = eye;
  if (show_right && in_ellipse(fu, fv, 0.5 + p.eye_spacing + shift, eye_v, 0.045, 0.028)) color = eye;
  if (in_ellipse(fu, fv, 0.5 + shift, 0.67, 0.085, 0.024)) color = {160.0, 60.0, 65.0};
  return color;
}

}  // namespace

Image render_avatar(const AvatarParams& params, Pose pose, int resolution) {
  if (resolution <= 0) throw DatasetError("avatar resolution must be positive");
  Image img(resolution, resolution);
  const double inv = 1.0 / (resolution * kSupersample);
  for (int y = 0; y < resolution; ++y)
    for (int x = 0; x < resolution; ++x) {
      Rgb acc = {0.0, 0.0, 0.0};
      for (int sy = 0; sy < kSupersample; ++sy)
        for (int sx = 0; sx < kSupersample; ++sx) {
          const double u = ((x * kSupersample + sx) + 0.5) * inv;
          const double v = ((y * kSupersample + sy) + 0.5) * inv;
          const Rgb c = shade(params, pose, u, v);
          for (int k = 0; k < 3; ++k) acc[k] += c[k];
        }
      for (int k = 0; k < 3; ++k) {
        const double mean = acc[k] / (kSupersample * kSupersample);
        img.at(x, y, k) = static_cast<std::uint8_t>(std::clamp(std::lround(mean), 0L, 255L));
      }
    }
  return img;
}

SyntheticCorpus make_synthetic_corpus(int n_subjects, int resolution, std::uint64_t seed,
                                      double attribute_ratio, const fs::path& out_dir) {
  if (n_subjects < 2) throw DatasetError("synthetic corpus needs at least 2 subjects");
  if (!(attribute_ratio > 0.0 && attribute_ratio < 1.0))
    throw DatasetError("attribute_ratio must lie in (0,1)");
  if (resolution < 8) throw DatasetError("synthetic resolution must be >= 8");

  std::error_code ec;
  fs::create_directories(out_dir / "images", ec);
  if (ec || !fs::is_directory(out_dir / "images"))
    throw DatasetError("cannot create output directory " + (out_dir / "images").string() +
                       (ec ? ": " + ec.message() : ""));

  std::mt19937_64 rng(seed);
  const int n_a = std::clamp(static_cast<int>(std::lround(n_subjects * attribute_ratio)), 0, n_subjects);
  std::vector<int> order(n_subjects);
  for (int i = 0; i < n_subjects; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<Attribute> attributes(n_subjects, Attribute::B);
  for (int i = 0; i < n_a; ++i) attributes[order[i]] = Attribute::A;

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<FaceRecord> records;
  for (int s = 0; s < n_subjects; ++s) {
    AvatarParams p;
    p.attribute = attributes[s];
    p.background = 140.0 + 25.0 * unit(rng);
    p.skin = 150.0 + 70.0 * unit(rng);
    p.hair = 30.0 + 45.0 * unit(rng);
    p.head_rx = 0.24 + 0.04 * unit(rng);
    p.head_ry = 0.31 + 0.04 * unit(rng);
    p.eye_spacing = 0.09 + 0.025 * unit(rng);

    char subject[16];
    std::snprintf(subject, sizeof(subject), "s%04d", s);
    for (Pose pose : {Pose::front, Pose::left, Pose::right}) {
      FaceRecord r;
      r.subject_id = subject;
      r.id = std::string(subject) + "_" + std::string(pose_name(pose));
      r.attribute = p.attribute;
      r.pose = pose;
      r.session = "1";
      r.image_path = fs::path("images") / (r.id + ".png");
      write_png(out_dir / r.image_path, render_avatar(p, pose, resolution));
      records.push_back(std::move(r));
    }
  }
  const fs::path manifest = out_dir / "manifest.csv";
  write_manifest(manifest, records);
  return SyntheticCorpus{out_dir / "images", manifest};
}

}  // namespace biasprobe::dataset
