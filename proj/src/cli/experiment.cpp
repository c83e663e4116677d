#include "biasprobe/cli/experiment.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <regex>
#include <set>
#include <sstream>

#include "biasprobe/dataset/synthetic.hpp"
#include "biasprobe/evaluation/probe.hpp"
#include "biasprobe/evaluation/remote_client.hpp"
#include "biasprobe/evaluation/report.hpp"
#include "biasprobe/evaluation/stub_classifier.hpp"
#include "biasprobe/instrumentation/distribution_map.hpp"
#include "biasprobe/instrumentation/filter_analysis.hpp"
#include "biasprobe/models/checkpoint.hpp"

namespace biasprobe::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view experiment_name(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::gender_bias: return "gender_bias";
    case ExperimentKind::latent_probe: return "latent_probe";
    case ExperimentKind::layer_variance: return "layer_variance";
    case ExperimentKind::filter_audit: return "filter_audit";
    case ExperimentKind::ablation: return "ablation";
  }
  return "?";
}

ExperimentKind parse_experiment(std::string_view name) {
  for (auto k : {ExperimentKind::gender_bias, ExperimentKind::latent_probe, ExperimentKind::layer_variance,
                 ExperimentKind::filter_audit, ExperimentKind::ablation}) {
    if (experiment_name(k) == name) return k;
  }
  throw ConfigError("unknown experiment '" + std::string(name) + "'");
}

CorpusSource CorpusSource::parse(const std::string& text) {
  CorpusSource c;
  const std::string prefix = "synthetic:";
  if (!text.starts_with(prefix)) {
    c.synthetic = false;
    c.manifest = text;
    return c;
  }
  std::istringstream in(text.substr(prefix.size()));
  std::string item;
  while (std::getline(in, item, ',')) {
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ConfigError("corpus option '" + item + "' is not key=value");
    const std::string key = item.substr(0, eq), value = item.substr(eq + 1);
    try {
      if (key == "n") c.subjects = std::stoi(value);
      else if (key == "r") c.resolution = std::stoi(value);
      else if (key == "seed") c.seed = std::stoull(value);
      else if (key == "ratio") c.ratio = std::stod(value);
      else throw ConfigError("unknown synthetic corpus option '" + key + "'");
    } catch (const std::logic_error&) {
      throw ConfigError("bad value for corpus option '" + key + "': " + value);
    }
  }
  return c;
}

std::string CorpusSource::str() const {
  if (!synthetic) return manifest.string();
  std::ostringstream s;
  s << "synthetic:n=" << subjects << ",r=" << resolution << ",seed=" << seed << ",ratio=" << json(ratio).dump();
  return s.str();
}

models::GeneratorSpec ModelConfig::spec(int corpus_resolution, bool ablate) const {
  models::GeneratorSpec s = models::GeneratorSpec::standard(depth, resolution.value_or(corpus_resolution), base_channels);
  if (skip_mask) s.skip_mask = *skip_mask;
  if (ablate) s = models::modified_pairwise_preset(s);
  s.validate();
  return s;
}

std::vector<dataset::ProbeKind> ExperimentConfig::probe_kinds() const {
  if (!evaluation.probes.empty()) return evaluation.probes;
  if (experiment == ExperimentKind::latent_probe) return {dataset::ProbeKind::gaussian_noise, dataset::ProbeKind::gray_ramp};
  return {dataset::ProbeKind::in_distribution};
}

int ExperimentConfig::model_count() const {
  return static_cast<int>(checkpoints.empty() ? splits.size() : checkpoints.size());
}

void ExperimentConfig::validate() const {
  if (corpus.synthetic) {
    if (corpus.subjects < 2) throw ConfigError("synthetic corpus needs n >= 2");
    if (!(corpus.ratio > 0.0 && corpus.ratio < 1.0)) throw ConfigError("synthetic corpus ratio must be in (0,1)");
  } else if (!fs::exists(corpus.manifest)) {
    throw ConfigError("corpus manifest " + corpus.manifest.string() + " does not exist");
  }
  for (const auto& c : checkpoints) {
    if (!fs::exists(c / "bundle.json")) throw ConfigError("checkpoint " + c.string() + " has no bundle.json");
  }
  const bool needs_training = checkpoints.empty();
  if (needs_training) {
    if (splits.empty()) throw ConfigError("config needs either splits to train or checkpoints");
    std::set<std::string> names;
    for (const auto& s : splits) {
      s.validate();
      if (!names.insert(s.name).second) throw ConfigError("duplicate split name '" + s.name + "'");
    }
    training.validate();
  }
  if (experiment == ExperimentKind::filter_audit) {
    if (model_count() != instrumentation::kFilterAuditModels) {
      throw ConfigError("filter_audit needs exactly 6 trained checkpoints or 6 splits to train, got " +
                        std::to_string(model_count()));
    }
    if (reference_index && (*reference_index < 0 || *reference_index >= model_count()))
      throw ConfigError("reference_index out of range");
  }
  if (experiment == ExperimentKind::ablation && model.depth < 4)
    throw ConfigError("ablation severs three skips and needs model.depth >= 4");
  if (evaluation.repeats < 1) throw ConfigError("evaluation.repeats must be >= 1");
  if (test.pair_ids.empty() && test.subjects_per_attribute < 1 &&
      (experiment == ExperimentKind::gender_bias || experiment == ExperimentKind::ablation))
    throw ConfigError("test.subjects_per_attribute must be >= 1");
}

void to_json(json& j, const ExperimentConfig& c) {
  json probes = json::array();
  for (auto p : c.evaluation.probes) probes.push_back(dataset::probe_kind_name(p));
  json model = {{"kind", models::model_kind_name(c.model.kind)},
                {"depth", c.model.depth},
                {"base_channels", c.model.base_channels}};
  if (c.model.resolution) model["resolution"] = *c.model.resolution;
  if (c.model.skip_mask) model["skip_mask"] = *c.model.skip_mask;
  json eval = {{"client", evaluation::client_kind_name(c.evaluation.client)},
               {"repeats", c.evaluation.repeats},
               {"probes", probes},
               {"probe_seed", c.evaluation.probe_seed},
               {"timeout_seconds", c.evaluation.timeout_seconds},
               {"rate_limit", c.evaluation.rate_limit}};
  if (c.evaluation.cache_dir) eval["cache_dir"] = c.evaluation.cache_dir->string();
  json checkpoints = json::array();
  for (const auto& p : c.checkpoints) checkpoints.push_back(p.string());
  j = {{"experiment", experiment_name(c.experiment)},
       {"corpus", c.corpus.str()},
       {"splits", c.splits},
       {"test", {{"subjects_per_attribute", c.test.subjects_per_attribute},
                 {"pair_ids", c.test.pair_ids},
                 {"seed", c.test.seed}}},
       {"model", model},
       {"training", c.training},
       {"evaluation", eval},
       {"output_dir", c.output_dir.string()},
       {"seed", c.seed},
       {"checkpoints", checkpoints},
       {"variance_probe", dataset::probe_kind_name(c.variance_probe)},
       {"write_dumps", c.write_dumps}};
  j["reference_index"] = c.reference_index ? json(*c.reference_index) : json(nullptr);
}

void from_json(const json& j, ExperimentConfig& c) {
  try {
    c = ExperimentConfig{};
    c.experiment = parse_experiment(j.at("experiment").get<std::string>());
    c.corpus = CorpusSource::parse(j.value("corpus", std::string("synthetic:")));
    if (j.contains("splits")) c.splits = j.at("splits").get<std::vector<dataset::SplitSpec>>();
    if (j.contains("test")) {
      const auto& t = j.at("test");
      c.test.subjects_per_attribute = t.value("subjects_per_attribute", c.test.subjects_per_attribute);
      c.test.pair_ids = t.value("pair_ids", std::vector<std::string>{});
      c.test.seed = t.value("seed", std::uint64_t{0});
    }
    if (j.contains("model")) {
      const auto& m = j.at("model");
      c.model.kind = models::parse_model_kind(m.value("kind", std::string("pairwise")));
      c.model.depth = m.value("depth", c.model.depth);
      c.model.base_channels = m.value("base_channels", c.model.base_channels);
      if (m.contains("resolution") && !m["resolution"].is_null()) c.model.resolution = m["resolution"].get<int>();
      if (m.contains("skip_mask") && !m["skip_mask"].is_null())
        c.model.skip_mask = m["skip_mask"].get<std::vector<bool>>();
    }
    if (j.contains("training")) c.training = j.at("training").get<training::TrainConfig>();
    c.training.kind = c.model.kind;
    if (j.contains("evaluation")) {
      const auto& e = j.at("evaluation");
      c.evaluation.client = evaluation::parse_client_kind(e.value("client", std::string("stub")));
      c.evaluation.repeats = e.value("repeats", c.evaluation.repeats);
      if (e.contains("cache_dir") && !e["cache_dir"].is_null())
        c.evaluation.cache_dir = fs::path(e["cache_dir"].get<std::string>());
      for (const auto& p : e.value("probes", std::vector<std::string>{}))
        c.evaluation.probes.push_back(dataset::parse_probe_kind(p));
      c.evaluation.probe_seed = e.value("probe_seed", c.evaluation.probe_seed);
      c.evaluation.timeout_seconds = e.value("timeout_seconds", c.evaluation.timeout_seconds);
      c.evaluation.rate_limit = e.value("rate_limit", c.evaluation.rate_limit);
    }
    c.output_dir = j.value("output_dir", std::string("runs"));
    c.seed = j.value("seed", std::uint64_t{0});
    for (const auto& p : j.value("checkpoints", std::vector<std::string>{})) c.checkpoints.emplace_back(p);
    if (j.contains("reference_index") && !j["reference_index"].is_null())
      c.reference_index = j["reference_index"].get<int>();
    c.variance_probe = dataset::parse_probe_kind(j.value("variance_probe", std::string("gray_ramp")));
    c.write_dumps = j.value("write_dumps", false);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid experiment config: ") + e.what());
  }
}

ExperimentConfig load_config(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw ConfigError("cannot open config " + file.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config " + file.string() + " is not valid JSON: " + e.what());
  }
  return j.get<ExperimentConfig>();
}

std::string file_sha256(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error("cannot read " + file.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in.read(buf, sizeof buf) || in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, md, &len);
  EVP_MD_CTX_free(ctx);
  static const char* digits = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += digits[md[i] >> 4];
    hex += digits[md[i] & 15];
  }
  return hex;
}

namespace {

std::string text_sha256(const std::string& text) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr);
  static const char* digits = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += digits[md[i] >> 4];
    hex += digits[md[i] & 15];
  }
  return hex;
}

void write_text(const fs::path& file, const std::string& text) {
  fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary);
  out << text;
  if (!out) throw Error("failed writing " + file.string());
}

void write_json(const fs::path& file, const json& j) { write_text(file, j.dump(2) + "\n"); }

std::string safe_name(std::string s) {
  for (char& c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_' && c != '.') c = '_';
  return s;
}

std::set<std::string> select_test_pairs(const dataset::FacePairManifest& m, const TestSelection& t) {
  if (!t.pair_ids.empty()) {
    for (const auto& id : t.pair_ids)
      if (!m.has_pair(id)) throw ConfigError("test pair '" + id + "' is not in the manifest");
    return {t.pair_ids.begin(), t.pair_ids.end()};
  }
  std::map<dataset::Attribute, std::vector<std::string>> subjects;
  std::set<std::string> seen;
  for (const auto& r : m.records()) {
    if (r.pose == dataset::Pose::front && seen.insert(r.subject_id).second) subjects[r.attribute].push_back(r.subject_id);
  }
  std::set<std::string> chosen;
  std::mt19937_64 rng(t.seed);
  for (auto& [attr, ids] : subjects) {
    std::sort(ids.begin(), ids.end());
    std::shuffle(ids.begin(), ids.end(), rng);
    if (static_cast<int>(ids.size()) <= t.subjects_per_attribute)
      throw ConfigError("not enough subjects of attribute " + std::string(dataset::attribute_name(attr)) +
                        " to hold out " + std::to_string(t.subjects_per_attribute) + " for testing");
    chosen.insert(ids.begin(), ids.begin() + t.subjects_per_attribute);
  }
  std::set<std::string> pairs;
  for (const auto& p : m.pairs())
    if (chosen.count(m.record(p.side_id).subject_id)) pairs.insert(p.id);
  return pairs;
}

std::shared_ptr<evaluation::FaceAnalysisClient> make_client(const EvaluationConfig& e) {
  std::shared_ptr<evaluation::FaceAnalysisClient> inner;
  if (e.client == evaluation::ClientKind::stub) {
    inner = std::make_shared<evaluation::StubClassifier>();
  } else {
    auto rc = evaluation::RemoteConfig::from_env();
    rc.timeout_seconds = e.timeout_seconds;
    rc.rate_limit = e.rate_limit;
    inner = std::make_shared<evaluation::RemoteClient>(rc);
  }
  return std::make_shared<evaluation::CachingClient>(inner, e.cache_dir);
}

struct NamedBundle {
  std::string id;
  std::string split_name;
  models::ModelBundle bundle;
  fs::path dir;
};

class Runner {
 public:
  Runner(const ExperimentConfig& config, fs::path run_dir) : config_(config), dir_(std::move(run_dir)) {}

  RunArtifact execute() {
    artifact_.run_dir = dir_;
    prepare_corpus();
    const bool needs_test = config_.experiment == ExperimentKind::gender_bias ||
                            config_.experiment == ExperimentKind::ablation ||
                            config_.checkpoints.empty();
    if (needs_test) test_pairs_ = select_test_pairs(manifest_, config_.test);
    obtain_models();
    switch (config_.experiment) {
      case ExperimentKind::gender_bias:
      case ExperimentKind::ablation:
        evaluate_probes();
        break;
      case ExperimentKind::latent_probe:
        evaluate_probes();
        distribution_maps();
        break;
      case ExperimentKind::layer_variance:
        variance_traces();
        break;
      case ExperimentKind::filter_audit:
        filter_audit();
        break;
    }
    summary_["experiment"] = experiment_name(config_.experiment);
    write_json(dir_ / "summary.json", summary_);
    return artifact_;
  }

 private:
  void prepare_corpus() {
    fs::path manifest_path = config_.corpus.manifest;
    if (config_.corpus.synthetic) {
      const auto& c = config_.corpus;
      manifest_path = dataset::make_synthetic_corpus(c.subjects, c.resolution, c.seed, c.ratio, dir_ / "corpus")
                          .manifest_path;
    }
    manifest_ = dataset::load_manifest(manifest_path);
  }

  void obtain_models() {
    const bool ablate = config_.experiment == ExperimentKind::ablation;
    json model_list = json::array();
    if (!config_.checkpoints.empty()) {
      std::set<std::string> ids;
      for (const auto& c : config_.checkpoints) {
        NamedBundle nb{{}, {}, models::load_bundle(c), c};
        nb.id = nb.bundle.id.empty() ? c.filename().string() : nb.bundle.id;
        while (!ids.insert(nb.id).second) nb.id += "_";
        nb.split_name = nb.id;
        model_list.push_back({{"id", nb.id}, {"dir", c.string()}});
        bundles_.push_back(std::move(nb));
      }
    } else {
      const models::GeneratorSpec spec = config_.model.spec(manifest_.resolution(), ablate);
      for (const auto& s : config_.splits) {
        const dataset::TrainSplit split = dataset::build_split(manifest_, s, test_pairs_);
        write_json(dir_ / "splits" / (safe_name(s.name) + ".json"), split);
        training::TrainConfig tc = config_.training;
        tc.kind = config_.model.kind;
        const fs::path root = dir_ / "models" / safe_name(s.name);
        training::TrainResult result = training::train(tc, manifest_, split, spec, root);
        artifact_.checkpoints.push_back(root);
        model_list.push_back({{"id", s.name},
                              {"dir", fs::relative(root, dir_).string()},
                              {"majority_count", split.majority_count},
                              {"minority_count", split.minority_count},
                              {"ratio", std::to_string(s.ratio_majority) + ":" + std::to_string(s.ratio_minority)}});
        bundles_.push_back({s.name, s.name, std::move(result.bundle), root});
      }
    }
    summary_["models"] = model_list;
  }

  std::vector<dataset::ProbeSet> probe_sets() {
    std::vector<dataset::ProbeSet> sets;
    for (auto kind : config_.probe_kinds()) {
      if (kind == dataset::ProbeKind::in_distribution) {
        if (test_pairs_.empty()) test_pairs_ = select_test_pairs(manifest_, config_.test);
        sets.push_back(dataset::make_in_distribution_probe_set(manifest_, {test_pairs_.begin(), test_pairs_.end()}));
      } else {
        sets.push_back(dataset::make_probe_set(kind, manifest_.resolution(), config_.evaluation.probe_seed));
      }
    }
    return sets;
  }

  void evaluate_probes() {
    auto client = make_client(config_.evaluation);
    std::optional<evaluation::AttributeRates> confound;
    if (!test_pairs_.empty()) {
      confound = evaluation::classifier_accuracy(
          *client, dataset::make_frontal_probe_set(manifest_, {test_pairs_.begin(), test_pairs_.end()}));
    }
    json reports = json::object();
    for (const auto& probes : probe_sets()) {
      std::vector<evaluation::BiasReport> list;
      json files = json::array();
      for (const auto& nb : bundles_) {
        evaluation::ProbeOptions opts;
        opts.repeats = config_.evaluation.repeats;
        opts.split_name = nb.split_name;
        evaluation::BiasReport r = evaluation::probe_model(nb.bundle, probes, *client, opts);
        r.model_id = nb.id;
        r.classifier_accuracy = confound;
        const fs::path file = dir_ / "reports" / (safe_name(nb.id) + "__" + safe_name(probes.id) + ".json");
        write_json(file, r);
        artifact_.reports.push_back(file);
        files.push_back(fs::relative(file, dir_).string());
        list.push_back(std::move(r));
      }
      const auto tables = evaluation::report_tables(list);
      const fs::path t = dir_ / "tables";
      const std::string stem = safe_name(probes.id);
      write_text(t / (stem + "_rates.csv"), tables.rates_csv);
      write_text(t / (stem + "_rates.txt"), tables.rates_text);
      write_text(t / (stem + "_tallies.csv"), tables.tallies_csv);
      write_text(t / (stem + "_tallies.txt"), tables.tallies_text);
      write_text(t / (stem + "_tallies_collapsed.csv"), tables.tallies_collapsed_csv);
      reports[probes.id] = {{"kind", dataset::probe_kind_name(probes.kind)}, {"files", files}};
    }
    summary_["reports"] = reports;
  }

  void distribution_maps() {
    json maps = json::array();
    auto emit = [&](const std::string& name, const std::vector<dataset::Image>& images,
                    const std::vector<std::string>& ids, const std::vector<std::string>& groups, bool collinear) {
      const auto m = instrumentation::distribution_map(images, ids, groups, 2);
      json j = {{"name", name}, {"explained_ratio", m.explained_ratio}, {"centroids", m.centroids},
                {"rms_radius", m.rms_radius}, {"points", json::array()}};
      std::vector<std::vector<double>> coords;
      for (const auto& p : m.points) {
        j["points"].push_back({{"id", p.id}, {"group", p.group}, {"coords", p.coords}});
        coords.push_back(p.coords);
      }
      if (collinear) j["collinearity_residual"] = instrumentation::collinearity_residual(coords);
      const fs::path file = dir_ / "pca" / (name + ".json");
      write_json(file, j);
      maps.push_back(fs::relative(file, dir_).string());
    };

    std::vector<dataset::Image> images, sides;
    std::vector<std::string> ids, groups, side_ids, side_groups;
    for (const auto& r : manifest_.records()) {
      dataset::Image im = dataset::read_png(r.image_path);
      ids.push_back(r.id);
      groups.push_back(r.pose == dataset::Pose::front ? "front" : "side");
      if (r.pose != dataset::Pose::front) {
        sides.push_back(im);
        side_ids.push_back(r.id);
        side_groups.push_back(std::string(dataset::pose_name(r.pose)));
      }
      images.push_back(std::move(im));
    }
    emit("front_vs_side", images, ids, groups, false);
    emit("left_vs_right", sides, side_ids, side_groups, false);
    const auto ramp = dataset::make_probe_set(dataset::ProbeKind::gray_ramp, manifest_.resolution(), 0);
    std::vector<std::string> ramp_ids;
    for (const auto& l : ramp.labels) ramp_ids.push_back(l.id);
    emit("gray_ramp", ramp.images, ramp_ids, ramp_ids, true);
    summary_["pca"] = maps;
  }

  void variance_traces() {
    dataset::ProbeSet probes;
    if (config_.variance_probe == dataset::ProbeKind::in_distribution) {
      if (test_pairs_.empty()) test_pairs_ = select_test_pairs(manifest_, config_.test);
      probes = dataset::make_in_distribution_probe_set(manifest_, {test_pairs_.begin(), test_pairs_.end()});
    } else {
      probes = dataset::make_probe_set(config_.variance_probe, manifest_.resolution(), config_.evaluation.probe_seed);
    }
    json traces = json::array();
    for (const auto& nb : bundles_) {
      for (auto role : nb.bundle.roles()) {
        const std::string id = nb.id + "__" + std::string(models::role_name(role));
        const auto dumps = instrumentation::capture(nb.bundle.generator(role), probes, id);
        const auto trace = instrumentation::variance_trace(dumps);
        const fs::path file = dir_ / "variance" / (safe_name(id) + ".json");
        write_json(file, trace);
        if (config_.write_dumps) instrumentation::write_dumps(dir_ / "dumps" / safe_name(id), dumps);
        traces.push_back(fs::relative(file, dir_).string());
      }
    }
    summary_["variance"] = traces;
  }

  int reference_index() const {
    if (config_.reference_index) return *config_.reference_index;
    if (config_.checkpoints.empty()) {
      for (std::size_t i = 0; i < config_.splits.size(); ++i)
        if (config_.splits[i].ratio_majority == config_.splits[i].ratio_minority) return static_cast<int>(i);
    }
    return 0;
  }

  void filter_audit() {
    const int ref = reference_index();
    json layers = json::array();
    for (auto role : bundles_.front().bundle.roles()) {
      std::vector<const models::Generator*> gens;
      for (const auto& nb : bundles_) {
        if (!nb.bundle.generators.count(role))
          throw ConfigError("model '" + nb.id + "' has no " + std::string(models::role_name(role)) + " generator");
        gens.push_back(&nb.bundle.generator(role));
      }
      for (const auto& layer : instrumentation::filter_layers(gens.front()->graph())) {
        const auto scatter = instrumentation::filter_analysis(gens, layer, ref);
        const fs::path file = dir_ / "filters" / std::string(models::role_name(role)) / (layer + ".json");
        json j = scatter;
        j["role"] = models::role_name(role);
        json per_model = json::array();
        for (int m = 0; m < instrumentation::kFilterAuditModels; ++m) per_model.push_back(scatter.outlier_count(m));
        j["outliers_per_model"] = per_model;
        write_json(file, j);
        layers.push_back(fs::relative(file, dir_).string());
      }
    }
    json names = json::array();
    for (const auto& nb : bundles_) names.push_back(nb.id);
    summary_["filters"] = {{"reference_index", ref}, {"models", names}, {"files", layers}};
  }

  const ExperimentConfig& config_;
  fs::path dir_;
  dataset::FacePairManifest manifest_;
  std::set<std::string> test_pairs_;
  std::vector<NamedBundle> bundles_;
  json summary_ = json::object();
  RunArtifact artifact_;
};

void write_run_manifest(RunArtifact& artifact) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(artifact.run_dir))
    if (e.is_regular_file() && e.path().filename() != "run_manifest.json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  json list = json::array();
  artifact.files.clear();
  for (const auto& f : files) {
    ArtifactFile a{fs::relative(f, artifact.run_dir).generic_string(), file_sha256(f), fs::file_size(f)};
    list.push_back({{"path", a.path}, {"sha256", a.sha256}, {"bytes", a.bytes}});
    artifact.files.push_back(std::move(a));
  }
  write_json(artifact.run_dir / "run_manifest.json", {{"files", list}});
}

}  // namespace

fs::path run_directory(const ExperimentConfig& config) {
  const std::string hash = text_sha256(json(config).dump());
  return config.output_dir / (std::string(experiment_name(config.experiment)) + "-" + hash.substr(0, 12));
}

RunArtifact run(const ExperimentConfig& config) {
  config.validate();
  const fs::path dir = run_directory(config);
  fs::create_directories(dir);
  fs::remove(dir / "FAILED");
  write_json(dir / "config.json", config);
  try {
    Runner runner(config, dir);
    RunArtifact artifact = runner.execute();
    artifact.config_snapshot = dir / "config.json";
    write_run_manifest(artifact);
    return artifact;
  } catch (const std::exception& e) {
    write_text(dir / "FAILED", std::string(e.what()) + "\n");
    throw;
  }
}

bool verify_artifact(const fs::path& run_dir, std::string* problem) {
  std::ifstream in(run_dir / "run_manifest.json");
  if (!in) {
    if (problem) *problem = "missing run_manifest.json";
    return false;
  }
  const json j = json::parse(in);
  for (const auto& f : j.at("files")) {
    const fs::path p = run_dir / f.at("path").get<std::string>();
    if (!fs::exists(p) || file_sha256(p) != f.at("sha256").get<std::string>()) {
      if (problem) *problem = "hash mismatch or missing file: " + f.at("path").get<std::string>();
      return false;
    }
  }
  return true;
}

}  // namespace biasprobe::cli
