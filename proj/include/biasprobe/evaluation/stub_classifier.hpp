#pragma once

#include "biasprobe/evaluation/face_analysis.hpp"

namespace biasprobe::evaluation {

// Image measurements the offline classifier decides on. Regions are given as
// fractions of the image so the same rules apply at any resolution.
struct StubFeatures {
  double tint = 0.0;         // mean (blue - red) of the two top corners
  double hair = 0.0;         // corner luminance minus lateral-lower luminance
  double eye_contrast = 0.0; // cheek luminance minus darkest eye-band pixel
  double mouth_red = 0.0;    // reddest mouth pixel (R - G) minus cheek (R - G)
};

StubFeatures stub_features(const dataset::Image& image);

// Heuristic detector/classifier for the synthetic avatars. A face is
// detected when both eye and mouth structure stand out from the cheeks;
// attribute B is signalled by a warm background and long hair at the sides of
// the lower face, attribute A by the opposite.
class StubClassifier : public FaceAnalysisClient {
 public:
  static constexpr double kEyeContrast = 30.0;
  static constexpr double kMouthRed = 15.0;

  ClientKind kind() const override { return ClientKind::stub; }
  FaceAnalysisResult analyze(const dataset::Image& image) override;
  long calls() const override { return calls_; }

  static FaceAnalysisResult classify(const StubFeatures& f);

 private:
  std::atomic<long> calls_{0};
};

}  // namespace biasprobe::evaluation
