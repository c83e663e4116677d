#pragma once

#include <chrono>
#include <mutex>
#include <string>

#include "biasprobe/evaluation/face_analysis.hpp"

namespace biasprobe::evaluation {

// Face++-style detect endpoint: multipart upload of `image_file` together
// with api_key/api_secret and return_attributes=gender; the response lists
// faces[].attributes.gender.value.
struct RemoteConfig {
  std::string url;  // full endpoint, e.g. https://host/facepp/v3/detect
  std::string api_key;
  std::string api_secret;
  double timeout_seconds = 10.0;
  double rate_limit = 2.0;  // requests per second, <= 0 for unlimited
  int attempts = 3;
  double backoff_seconds = 0.5;  // doubled after each failed attempt
  // Gender label reported by the service for each attribute.
  std::string label_a = "Male";
  std::string label_b = "Female";

  // FACE_API_URL, FACE_API_KEY and optional FACE_API_SECRET.
  static RemoteConfig from_env();
};

class RemoteClient : public FaceAnalysisClient {
 public:
  explicit RemoteClient(RemoteConfig config);

  ClientKind kind() const override { return ClientKind::remote_api; }
  FaceAnalysisResult analyze(const dataset::Image& image) override;
  long calls() const override { return calls_; }
  long requests() const { return requests_; }

  // Maps a detect response body to a result; throws ClientFailure on
  // malformed or error responses.
  FaceAnalysisResult parse_response(const std::string& body) const;

 private:
  void throttle();

  RemoteConfig config_;
  std::string scheme_host_;
  std::string path_;
  std::mutex mutex_;
  std::chrono::steady_clock::time_point last_request_{};
  long calls_ = 0;
  long requests_ = 0;
};

}  // namespace biasprobe::evaluation
