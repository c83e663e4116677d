#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "biasprobe/evaluation/remote_client.hpp"

#include <cstdlib>
#include <regex>
#include <thread>

#include "httplib.h"

namespace biasprobe::evaluation {

namespace {

std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : std::string();
}

}  // namespace

RemoteConfig RemoteConfig::from_env() {
  RemoteConfig c;
  c.url = env_or_empty("FACE_API_URL");
  c.api_key = env_or_empty("FACE_API_KEY");
  c.api_secret = env_or_empty("FACE_API_SECRET");
  if (c.url.empty()) throw ConfigError("FACE_API_URL is not set");
  if (c.api_key.empty()) throw ConfigError("FACE_API_KEY is not set");
  return c;
}

RemoteClient::RemoteClient(RemoteConfig config) : config_(std::move(config)) {
  static const std::regex url_re(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(config_.url, m, url_re)) throw ConfigError("invalid face API url '" + config_.url + "'");
  scheme_host_ = m[1];
  path_ = m[2].matched ? std::string(m[2]) : "/";
  if (config_.attempts < 1) throw ConfigError("remote client needs at least one attempt");
}

void RemoteClient::throttle() {
  if (config_.rate_limit <= 0.0) return;
  const auto gap = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(1.0 / config_.rate_limit));
  const auto now = std::chrono::steady_clock::now();
  if (last_request_.time_since_epoch().count() != 0 && now < last_request_ + gap) {
    std::this_thread::sleep_until(last_request_ + gap);
  }
  last_request_ = std::chrono::steady_clock::now();
}

FaceAnalysisResult RemoteClient::parse_response(const std::string& body) const {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw ClientFailure(std::string("face API returned invalid JSON: ") + e.what());
  }
  if (j.contains("error_message")) throw ClientFailure("face API error: " + j["error_message"].dump());
  if (!j.contains("faces") || !j["faces"].is_array()) throw ClientFailure("face API response has no faces array");
  FaceAnalysisResult r;
  if (j["faces"].empty()) {
    r.confidence = 1.0;
    return r;
  }
  const auto& face = j["faces"].front();
  r.face_detected = true;
  r.confidence = 1.0;
  const auto* gender = face.contains("attributes") && face["attributes"].contains("gender")
                           ? &face["attributes"]["gender"]
                           : nullptr;
  if (gender && gender->contains("value")) {
    const std::string value = (*gender)["value"];
    if (value == config_.label_a) r.attribute = Attribute::A;
    else if (value == config_.label_b) r.attribute = Attribute::B;
  }
  return r;
}

FaceAnalysisResult RemoteClient::analyze(const dataset::Image& image) {
  std::lock_guard lock(mutex_);
  ++calls_;
  const auto png = dataset::encode_png(image);
  httplib::MultipartFormDataItems items = {
      {"api_key", config_.api_key, "", ""},
      {"api_secret", config_.api_secret, "", ""},
      {"return_attributes", "gender", "", ""},
      {"image_file", std::string(png.begin(), png.end()), "probe.png", "image/png"},
  };

  std::string last_error;
  double backoff = config_.backoff_seconds;
  for (int attempt = 0; attempt < config_.attempts; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::duration<double>(backoff));
      backoff *= 2.0;
    }
    throttle();
    ++requests_;
    httplib::Client client(scheme_host_);
    const auto secs = static_cast<time_t>(config_.timeout_seconds);
    const auto usecs = static_cast<time_t>((config_.timeout_seconds - secs) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    auto res = client.Post(path_, items);
    if (!res) {
      last_error = "request failed: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 401 || res->status == 403) {
      throw ClientFailure("face API rejected credentials (HTTP " + std::to_string(res->status) + ")");
    }
    if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
      continue;
    }
    return parse_response(res->body);
  }
  throw ClientFailure("face API gave no answer after " + std::to_string(config_.attempts) + " attempts (" +
                      last_error + ")");
}

}  // namespace biasprobe::evaluation
