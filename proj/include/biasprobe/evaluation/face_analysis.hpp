#pragma once

#include <atomic>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "biasprobe/dataset/image.hpp"
#include "biasprobe/dataset/manifest.hpp"
#include "biasprobe/error.hpp"
#include "json.hpp"

namespace biasprobe::evaluation {

using dataset::Attribute;

struct FaceAnalysisResult {
  bool face_detected = false;
  std::optional<Attribute> attribute;  // only when a face was detected
  double confidence = 0.0;

  bool operator==(const FaceAnalysisResult&) const = default;
};

void to_json(nlohmann::json& j, const FaceAnalysisResult& r);
void from_json(const nlohmann::json& j, FaceAnalysisResult& r);

// A call that did not produce an answer (network, auth, quota, bad
// response). Never to be read as "no face".
class ClientFailure : public EvaluationError {
 public:
  using EvaluationError::EvaluationError;
};

enum class ClientKind { remote_api, stub };

std::string_view client_kind_name(ClientKind kind);
ClientKind parse_client_kind(std::string_view name);

class FaceAnalysisClient {
 public:
  virtual ~FaceAnalysisClient() = default;
  virtual ClientKind kind() const = 0;
  // Throws ClientFailure when no answer could be obtained.
  virtual FaceAnalysisResult analyze(const dataset::Image& image) = 0;
  // Number of analyses actually performed (cache hits excluded).
  virtual long calls() const = 0;
};

// Hex SHA-256 of the canonical PNG encoding of `image`.
std::string image_digest(const dataset::Image& image);

// Memoizes another client by image content. With a cache directory the
// results also persist as <dir>/<sha256>.json. Failures are not cached.
class CachingClient : public FaceAnalysisClient {
 public:
  explicit CachingClient(std::shared_ptr<FaceAnalysisClient> inner,
                         std::optional<std::filesystem::path> cache_dir = std::nullopt);

  ClientKind kind() const override { return inner_->kind(); }
  FaceAnalysisResult analyze(const dataset::Image& image) override;
  long calls() const override { return inner_->calls(); }

  long hits() const { return hits_; }
  FaceAnalysisClient& inner() { return *inner_; }

 private:
  std::shared_ptr<FaceAnalysisClient> inner_;
  std::optional<std::filesystem::path> dir_;
  std::mutex mutex_;
  std::map<std::string, FaceAnalysisResult> memory_;
  std::atomic<long> hits_{0};
};

}  // namespace biasprobe::evaluation
