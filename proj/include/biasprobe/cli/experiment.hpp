#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "biasprobe/dataset/probes.hpp"
#include "biasprobe/dataset/split.hpp"
#include "biasprobe/evaluation/face_analysis.hpp"
#include "biasprobe/models/bundle.hpp"
#include "biasprobe/training/trainer.hpp"

namespace biasprobe::cli {

enum class ExperimentKind { gender_bias, latent_probe, layer_variance, filter_audit, ablation };

std::string_view experiment_name(ExperimentKind kind);
ExperimentKind parse_experiment(std::string_view name);

// Either an existing manifest or "synthetic:n=120,r=32,seed=1,ratio=0.5",
// generated inside the run directory.
struct CorpusSource {
  bool synthetic = true;
  std::filesystem::path manifest;
  int subjects = 120;
  int resolution = 32;
  std::uint64_t seed = 1;
  double ratio = 0.5;

  static CorpusSource parse(const std::string& text);
  std::string str() const;
};

struct TestSelection {
  // Subjects held out per attribute (all of their side pairs), drawn with
  // `seed`. Ignored when `pair_ids` is given.
  int subjects_per_attribute = 20;
  std::vector<std::string> pair_ids;
  std::uint64_t seed = 0;
};

struct ModelConfig {
  models::ModelKind kind = models::ModelKind::pairwise;
  int depth = 3;
  int base_channels = 16;
  std::optional<int> resolution;  // defaults to the corpus resolution
  std::optional<std::vector<bool>> skip_mask;

  models::GeneratorSpec spec(int corpus_resolution, bool ablate) const;
};

struct EvaluationConfig {
  evaluation::ClientKind client = evaluation::ClientKind::stub;
  int repeats = 10;
  std::optional<std::filesystem::path> cache_dir;
  std::vector<dataset::ProbeKind> probes;  // empty: experiment default
  std::uint64_t probe_seed = 7;
  double timeout_seconds = 10.0;
  double rate_limit = 2.0;
};

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::gender_bias;
  CorpusSource corpus;
  std::vector<dataset::SplitSpec> splits;
  TestSelection test;
  ModelConfig model;
  training::TrainConfig training;
  EvaluationConfig evaluation;
  std::filesystem::path output_dir = "runs";
  std::uint64_t seed = 0;
  // Existing bundle directories; when empty, models are trained from `splits`.
  std::vector<std::filesystem::path> checkpoints;
  std::optional<int> reference_index;  // filter_audit; default: the 5:5 split
  dataset::ProbeKind variance_probe = dataset::ProbeKind::gray_ramp;
  bool write_dumps = false;

  // Throws ConfigError naming the first problem; runs before any compute.
  void validate() const;
  std::vector<dataset::ProbeKind> probe_kinds() const;
  int model_count() const;
};

void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);
ExperimentConfig load_config(const std::filesystem::path& file);

struct ArtifactFile {
  std::string path;  // relative to the run directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct RunArtifact {
  std::filesystem::path run_dir;
  std::filesystem::path config_snapshot;
  std::vector<std::filesystem::path> checkpoints;
  std::vector<std::filesystem::path> reports;
  std::vector<ArtifactFile> files;
};

// Run directory: <output_dir>/<experiment>-<first 12 hex of sha256(config)>.
std::filesystem::path run_directory(const ExperimentConfig& config);

// Executes the experiment. On failure a FAILED file with the error message
// is left next to the partial artifacts and the error is rethrown.
RunArtifact run(const ExperimentConfig& config);

// Checks every file listed in run_manifest.json against its hash.
bool verify_artifact(const std::filesystem::path& run_dir, std::string* problem = nullptr);

std::string file_sha256(const std::filesystem::path& file);

}  // namespace biasprobe::cli
