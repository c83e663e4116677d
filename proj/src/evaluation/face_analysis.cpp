#include "biasprobe/evaluation/face_analysis.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>

namespace biasprobe::evaluation {

namespace fs = std::filesystem;

void to_json(nlohmann::json& j, const FaceAnalysisResult& r) {
  j = {{"face_detected", r.face_detected}, {"confidence", r.confidence}};
  j["attribute"] = r.attribute ? nlohmann::json(std::string(dataset::attribute_name(*r.attribute))) : nullptr;
}

void from_json(const nlohmann::json& j, FaceAnalysisResult& r) {
  r.face_detected = j.at("face_detected");
  r.confidence = j.at("confidence");
  r.attribute.reset();
  if (j.contains("attribute") && !j.at("attribute").is_null())
    r.attribute = dataset::parse_attribute(j.at("attribute").get<std::string>());
  if (r.attribute && !r.face_detected) throw EvaluationError("analysis result has an attribute but no face");
}

std::string_view client_kind_name(ClientKind kind) { return kind == ClientKind::stub ? "stub" : "remote_api"; }

ClientKind parse_client_kind(std::string_view name) {
  if (name == "stub") return ClientKind::stub;
  if (name == "remote_api" || name == "remote") return ClientKind::remote_api;
  throw ConfigError("unknown face analysis client '" + std::string(name) + "'");
}

std::string image_digest(const dataset::Image& image) {
  const auto bytes = dataset::encode_png(image);
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw EvaluationError("sha256 failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

CachingClient::CachingClient(std::shared_ptr<FaceAnalysisClient> inner, std::optional<fs::path> cache_dir)
    : inner_(std::move(inner)), dir_(std::move(cache_dir)) {
  if (!inner_) throw EvaluationError("caching client needs an inner client");
  if (dir_) {
    std::error_code ec;
    fs::create_directories(*dir_, ec);
    if (ec) throw EvaluationError("cannot create cache directory " + dir_->string() + ": " + ec.message());
  }
}

FaceAnalysisResult CachingClient::analyze(const dataset::Image& image) {
  const std::string key = image_digest(image);
  {
    std::lock_guard lock(mutex_);
    if (auto it = memory_.find(key); it != memory_.end()) {
      ++hits_;
      return it->second;
    }
    if (dir_) {
      std::ifstream in(*dir_ / (key + ".json"));
      if (in) {
        FaceAnalysisResult r = nlohmann::json::parse(in).get<FaceAnalysisResult>();
        memory_.emplace(key, r);
        ++hits_;
        return r;
      }
    }
  }
  FaceAnalysisResult r = inner_->analyze(image);
  std::lock_guard lock(mutex_);
  memory_.emplace(key, r);
  if (dir_) {
    // Write-then-rename so concurrent readers never see a partial file.
    const fs::path tmp = *dir_ / (key + ".json.tmp");
    std::ofstream(tmp) << nlohmann::json(r).dump() << '\n';
    fs::rename(tmp, *dir_ / (key + ".json"));
  }
  return r;
}

}  // namespace biasprobe::evaluation
