// biasprobe: command-line front end for the experiment runner.

#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "biasprobe/cli/experiment.hpp"
#include "biasprobe/cli/plot.hpp"
#include "biasprobe/dataset/synthetic.hpp"
#include "biasprobe/instrumentation/filter_analysis.hpp"
#include "biasprobe/models/checkpoint.hpp"

namespace fs = std::filesystem;
using namespace biasprobe;

namespace {

int cmd_run(const std::string& config_path) {
  const cli::ExperimentConfig config = cli::load_config(config_path);
  const cli::RunArtifact artifact = cli::run(config);
  std::cout << "run directory: " << artifact.run_dir.string() << "\n";
  for (const auto& r : artifact.reports) std::cout << "report: " << fs::relative(r, artifact.run_dir).string() << "\n";
  if (fs::exists(artifact.run_dir / "tables")) {
    for (const auto& e : fs::directory_iterator(artifact.run_dir / "tables")) {
      if (e.path().string().ends_with("_rates.txt")) {
        std::ifstream in(e.path());
        std::cout << "\n" << e.path().filename().string() << "\n" << in.rdbuf();
      }
    }
  }
  return 0;
}

int cmd_audit(const std::vector<std::string>& dirs, int reference, const std::string& role_name,
              const std::string& out_path) {
  if (dirs.size() != static_cast<std::size_t>(instrumentation::kFilterAuditModels)) {
    throw ConfigError("audit-filters needs exactly 6 checkpoint directories, got " + std::to_string(dirs.size()));
  }
  std::vector<models::ModelBundle> bundles;
  for (const auto& d : dirs) bundles.push_back(models::load_bundle(d));
  const models::Role role = role_name.empty() ? bundles.front().roles().front() : models::parse_role(role_name);
  std::vector<const models::Generator*> gens;
  for (const auto& b : bundles) gens.push_back(&b.generator(role));

  nlohmann::json all = nlohmann::json::array();
  std::printf("%-10s %8s  outliers per model\n", "layer", "expl.");
  for (const auto& layer : instrumentation::filter_layers(gens.front()->graph())) {
    const auto s = instrumentation::filter_analysis(gens, layer, reference);
    std::printf("%-10s %8.4f ", layer.c_str(), s.explained_ratio);
    for (int m = 0; m < instrumentation::kFilterAuditModels; ++m) std::printf(" %4d", s.outlier_count(m));
    std::printf("\n");
    all.push_back(s);
  }
  if (!out_path.empty()) std::ofstream(out_path) << all.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bias auditing for face-frontalization GANs"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run an experiment from a JSON config");
  run->add_option("-c,--config", config_path, "experiment config")->required()->check(CLI::ExistingFile);

  std::string artifact_dir, figure;
  auto* plot = app.add_subcommand("plot", "Render a figure from a run directory");
  plot->add_option("-a,--artifact", artifact_dir, "run directory")->required()->check(CLI::ExistingDirectory);
  plot->add_option("-f,--figure", figure,
                   "recovery_bars | match_bars | variance_curves | pca_scatter | filter_scatter")
      ->required();

  int subjects = 100, resolution = 64;
  std::uint64_t seed = 1;
  double ratio = 0.5;
  std::string out_dir;
  auto* synth = app.add_subcommand("synth", "Render a synthetic avatar corpus");
  synth->add_option("-n,--subjects", subjects, "number of subjects")->required();
  synth->add_option("-r,--resolution", resolution, "image side length")->required();
  synth->add_option("-s,--seed", seed, "corpus seed")->required();
  synth->add_option("-o,--out", out_dir, "output directory")->required();
  synth->add_option("--ratio", ratio, "fraction of attribute-A subjects")->capture_default_str();

  std::vector<std::string> model_dirs;
  int reference = 0;
  std::string role, audit_out;
  auto* audit = app.add_subcommand("audit-filters", "Cross-model filter PCA over 6 checkpoints");
  audit->add_option("-m,--models", model_dirs, "six bundle directories")->required()->expected(6);
  audit->add_option("--reference", reference, "index of the unbiased reference model")->required();
  audit->add_option("--role", role, "generator role (shared, left, right)");
  audit->add_option("-o,--out", audit_out, "write all scatters as JSON");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path);
    if (*plot) {
      for (const auto& p : cli::plot(artifact_dir, cli::parse_figure(figure))) std::cout << p.string() << "\n";
      return 0;
    }
    if (*synth) {
      const auto corpus = dataset::make_synthetic_corpus(subjects, resolution, seed, ratio, out_dir);
      std::cout << "manifest: " << corpus.manifest_path.string() << "\n";
      return 0;
    }
    if (*audit) return cmd_audit(model_dirs, reference, role, audit_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
