#pragma once

#include <cstdint>
#include <filesystem>

#include "biasprobe/dataset/image.hpp"
#include "biasprobe/dataset/manifest.hpp"

namespace biasprobe::dataset {

// Per-subject appearance drawn by the corpus generator.
struct AvatarParams {
  Attribute attribute = Attribute::A;
  double background = 150.0;
  double skin = 190.0;
  double hair = 50.0;
  double head_rx = 0.26;
  double head_ry = 0.33;
  double eye_spacing = 0.1;
};

// Renders one avatar. Side poses shear the face horizontally by 0.35, hide
// the far eye and show the attribute cues (tint, long hair) at 30% strength.
Image render_avatar(const AvatarParams& params, Pose pose, int resolution);

struct SyntheticCorpus {
  std::filesystem::path image_dir;
  std::filesystem::path manifest_path;
};

// Three poses per subject; round(n_subjects * attribute_ratio) subjects get
// attribute A. Output is a pure function of the arguments.
SyntheticCorpus make_synthetic_corpus(int n_subjects, int resolution, std::uint64_t seed,
                                      double attribute_ratio,
                                      const std::filesystem::path& out_dir);

}  // namespace biasprobe::dataset
