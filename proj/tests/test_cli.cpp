#include <cstdlib>
#include <fstream>
#include <sstream>

#include "biasprobe/cli/experiment.hpp"
#include "biasprobe/cli/figure.hpp"
#include "biasprobe/cli/plot.hpp"
#include "biasprobe/error.hpp"
#include "biasprobe/evaluation/report.hpp"
#include "biasprobe/models/checkpoint.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace biasprobe;
using namespace biasprobe::cli;
using biasprobe::testing::slurp;
using biasprobe::testing::TempDir;
namespace fs = std::filesystem;

namespace {

dataset::SplitSpec split(const std::string& name, int maj, int cap) {
  dataset::SplitSpec s;
  s.name = name;
  s.ratio_majority = maj;
  s.ratio_minority = 10 - maj;
  s.majority_cap = cap;
  s.seed = 3;
  return s;
}

ExperimentConfig small_gender_bias(const fs::path& out) {
  ExperimentConfig c;
  c.experiment = ExperimentKind::gender_bias;
  c.corpus = CorpusSource::parse("synthetic:n=24,r=16,seed=2,ratio=0.5");
  c.splits = {split("7:3", 7, 10), split("5:5", 5, 10)};
  c.test.subjects_per_attribute = 3;
  c.model.kind = models::ModelKind::pix2pix;
  c.model.depth = 3;
  c.model.base_channels = 4;
  c.training.kind = models::ModelKind::pix2pix;
  c.training.epochs = 1;
  c.training.disc_base_channels = 4;
  c.evaluation.repeats = 2;
  c.output_dir = out;
  return c;
}

// Saves a randomly initialized bundle and returns its directory.
fs::path saved_bundle(const fs::path& dir, const models::GeneratorSpec& spec, std::uint64_t seed, float scale = 1.0f) {
  models::AssembleOptions o;
  o.seed = seed;
  o.discriminator_base_channels = 4;
  models::ModelBundle b = models::assemble(models::ModelKind::pix2pix, spec, o);
  b.id = dir.filename().string();
  for (auto* p : b.generator(models::Role::shared).parameters())
    for (auto& v : p->value.values()) v *= scale;
  models::save_bundle(dir, b, 1);
  return dir;
}

struct CsvRow {
  std::string series, category, marker;
  double x = 0.0, y = 0.0;
};

std::vector<CsvRow> parse_figure_csv(const std::string& text) {
  std::vector<CsvRow> rows;
  std::istringstream in(text);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.emplace_back();
    REQUIRE(cells.size() == 5);
    rows.push_back({cells[0], cells[3], cells[4], std::stod(cells[1]), std::stod(cells[2])});
  }
  return rows;
}

}  // namespace

TEST_CASE("corpus source strings") {
  const auto c = CorpusSource::parse("synthetic:n=50,r=64,seed=3,ratio=0.25");
  CHECK(c.synthetic);
  CHECK(c.subjects == 50);
  CHECK(c.resolution == 64);
  CHECK(c.seed == 3);
  CHECK(c.ratio == 0.25);
  CHECK(CorpusSource::parse(c.str()).str() == c.str());
  const auto m = CorpusSource::parse("/data/faces/manifest.csv");
  CHECK_FALSE(m.synthetic);
  CHECK(m.manifest == "/data/faces/manifest.csv");
  CHECK_THROWS_AS(CorpusSource::parse("synthetic:n=5,colour=red"), ConfigError);
  CHECK_THROWS_AS(CorpusSource::parse("synthetic:n=abc"), ConfigError);
}

TEST_CASE("config files parse with defaults and reject bad input") {
  TempDir dir("bp-cfg");
  std::ofstream(dir / "a.json") << R"({
    "experiment": "gender_bias",
    "corpus": "synthetic:n=40,r=16",
    "splits": [{"name": "5:5", "ratio_majority": 5, "ratio_minority": 5, "majority_cap": 100}],
    "model": {"kind": "pix2pix", "depth": 3, "base_channels": 8},
    "training": {"epochs": 2},
    "evaluation": {"repeats": 4, "probes": ["gray_ramp"]}
  })";
  const ExperimentConfig c = load_config(dir / "a.json");
  CHECK(c.corpus.subjects == 40);
  CHECK(c.model.kind == models::ModelKind::pix2pix);
  CHECK(c.training.kind == models::ModelKind::pix2pix);
  CHECK(c.training.epochs == 2);
  CHECK(c.evaluation.repeats == 4);
  CHECK(c.probe_kinds() == std::vector<dataset::ProbeKind>{dataset::ProbeKind::gray_ramp});
  CHECK(c.test.subjects_per_attribute == 20);
  CHECK_NOTHROW(c.validate());

  // Serialized configs load back to the same run directory.
  const ExperimentConfig back = nlohmann::json(c).get<ExperimentConfig>();
  CHECK(run_directory(back) == run_directory(c));
  ExperimentConfig other = c;
  other.seed = 99;
  CHECK(run_directory(other) != run_directory(c));

  std::ofstream(dir / "bad.json") << "{ not json";
  CHECK_THROWS_AS(load_config(dir / "bad.json"), ConfigError);
  std::ofstream(dir / "unknown.json") << R"({"experiment": "telepathy"})";
  CHECK_THROWS_AS(load_config(dir / "unknown.json"), ConfigError);
  CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigError);
}

TEST_CASE("validation catches problems before any compute") {
  TempDir out("bp-val");
  ExperimentConfig c = small_gender_bias(out.path());

  SUBCASE("filter audit with five models") {
    c.experiment = ExperimentKind::filter_audit;
    c.splits.clear();
    for (int i = 0; i < 5; ++i) c.splits.push_back(split("s" + std::to_string(i), 5 + (i % 3), 10));
    CHECK_THROWS_AS(run(c), ConfigError);
    CHECK_FALSE(fs::exists(run_directory(c)));
  }
  SUBCASE("duplicate split names") {
    c.splits[1].name = c.splits[0].name;
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }
  SUBCASE("missing manifest") {
    c.corpus = CorpusSource::parse("/nonexistent/manifest.csv");
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }
  SUBCASE("ablation needs depth") {
    c.experiment = ExperimentKind::ablation;
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }
  SUBCASE("missing checkpoint") {
    c.checkpoints = {out / "nothing-here"};
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }
  SUBCASE("zero repeats") {
    c.evaluation.repeats = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }
}

TEST_CASE("a small gender bias run is complete and reproducible") {
  TempDir out1("bp-run"), out2("bp-run");
  const ExperimentConfig c1 = small_gender_bias(out1.path());
  const RunArtifact a1 = run(c1);
  CHECK(a1.checkpoints.size() == 2);
  CHECK(a1.reports.size() == 2);
  CHECK(fs::exists(a1.run_dir / "config.json"));
  CHECK_FALSE(fs::exists(a1.run_dir / "FAILED"));
  const auto rates = evaluation::parse_rates_csv(slurp(a1.run_dir / "tables" / "in_distribution_rates.csv"));
  CHECK(rates.columns == std::vector<std::string>{"7:3", "5:5"});
  for (const auto& ckpt : a1.checkpoints) CHECK(models::saved_epochs(ckpt) == std::vector<int>{1});

  std::string problem;
  CHECK(verify_artifact(a1.run_dir, &problem));
  {
    std::ofstream(a1.reports[0], std::ios::app) << " ";
  }
  CHECK_FALSE(verify_artifact(a1.run_dir, &problem));
  CHECK(problem.find("reports/") != std::string::npos);

  const RunArtifact a2 = run(small_gender_bias(out2.path()));
  REQUIRE(a2.reports.size() == 2);
  // Same config elsewhere: reports are byte-identical (the first was tampered above, so compare the second).
  CHECK(file_sha256(a1.reports[1]) == file_sha256(a2.reports[1]));
  CHECK(slurp(a1.run_dir / "tables" / "in_distribution_tallies.csv") ==
        slurp(a2.run_dir / "tables" / "in_distribution_tallies.csv"));

  SUBCASE("recovery and match figures") {
    const auto figs = build_figures(a2.run_dir, FigureKind::match_bars);
    REQUIRE(figs.size() == 1);
    CHECK(figs[0].second.categories == std::vector<std::string>{"7:3", "5:5"});
    const auto files = plot(a2.run_dir, FigureKind::recovery_bars);
    CHECK(files.size() == 3);
    for (const auto& f : files) CHECK(fs::file_size(f) > 0);
    CHECK_THROWS(build_figures(a2.run_dir, FigureKind::variance_curves));
  }
}

TEST_CASE("failed runs leave a marker") {
  TempDir out("bp-fail");
  ExperimentConfig c = small_gender_bias(out.path());
  c.test.pair_ids = {"no_such_pair"};
  CHECK_THROWS_AS(run(c), ConfigError);
  const fs::path marker = run_directory(c) / "FAILED";
  REQUIRE(fs::exists(marker));
  CHECK(slurp(marker).find("no_such_pair") != std::string::npos);
  CHECK_FALSE(verify_artifact(run_directory(c)));
}

TEST_CASE("variance curves for a depth-7 checkpoint") {
  TempDir out("bp-var");
  const fs::path ckpt = saved_bundle(out / "deep", models::GeneratorSpec::standard(7, 128, 2), 4);
  ExperimentConfig c;
  c.experiment = ExperimentKind::layer_variance;
  c.corpus = CorpusSource::parse("synthetic:n=4,r=128,seed=1,ratio=0.5");
  c.checkpoints = {ckpt};
  c.output_dir = out / "runs";
  const RunArtifact a = run(c);
  const auto figs = build_figures(a.run_dir, FigureKind::variance_curves);
  REQUIRE(figs.size() == 1);
  const Figure& f = figs[0].second;
  REQUIRE(f.categories.size() == 16);
  CHECK(f.categories.front() == "input");
  CHECK(f.categories[8] == "middle");
  CHECK(f.categories.back() == "up7");
  const auto rows = parse_figure_csv(figure_csv(f));
  std::size_t i = 0;
  for (const auto& s : f.series)
    for (std::size_t k = 0; k < s.x.size(); ++k, ++i) {
      CHECK(rows[i].x == s.x[k]);
      CHECK(rows[i].y == s.y[k]);
      CHECK(rows[i].category == f.categories[static_cast<std::size_t>(s.x[k])]);
    }
  CHECK(i == rows.size());
  const std::string svg = render_svg(f);
  CHECK(svg.find("<svg") != std::string::npos);
  CHECK(svg.find("up7") != std::string::npos);
}

TEST_CASE("filter scatter marks outliers as crosses") {
  TempDir out("bp-filt");
  const auto spec = models::GeneratorSpec::standard(3, 16, 4);
  std::vector<fs::path> dirs;
  for (int i = 0; i < 6; ++i) dirs.push_back(saved_bundle(out / ("m" + std::to_string(i)), spec, 7, i == 4 ? 100.0f : 1.0f));
  ExperimentConfig c;
  c.experiment = ExperimentKind::filter_audit;
  c.corpus = CorpusSource::parse("synthetic:n=4,r=16,seed=1,ratio=0.5");
  c.checkpoints = dirs;
  c.reference_index = 0;
  c.output_dir = out / "runs";
  const RunArtifact a = run(c);
  const auto figs = build_figures(a.run_dir, FigureKind::filter_scatter);
  CHECK(figs.size() == 7);
  for (const auto& [name, f] : figs) {
    const auto j = nlohmann::json::parse(slurp(a.run_dir / "filters" / "shared" / (f.title.substr(f.title.rfind(' ') + 1) + ".json")));
    const auto outliers = j.at("outliers_per_model").get<std::vector<int>>();
    int crosses = 0, crosses_other = 0;
    for (const auto& row : parse_figure_csv(figure_csv(f)))
      if (row.marker == "cross") (row.x == 4.0 ? crosses : crosses_other)++;
    CHECK(crosses == outliers[4]);
    CHECK(crosses > 0);
    CHECK(crosses_other == 0);
    REQUIRE(f.y_band.has_value());
    CHECK(f.y_band->first == j.at("reference_interval").at(0).get<double>());
  }
}

TEST_CASE("command line front end") {
  TempDir out("bp-exe");
  const std::string exe = BIASPROBE_EXE;
  CHECK(std::system((exe + " --help > " + (out / "help.txt").string()).c_str()) == 0);
  CHECK(slurp(out / "help.txt").find("audit-filters") != std::string::npos);
  CHECK(std::system((exe + " synth -n 4 -r 16 -s 2 -o " + (out / "corpus").string() + " > /dev/null").c_str()) == 0);
  CHECK(fs::exists(out / "corpus" / "manifest.csv"));
  CHECK(std::system((exe + " audit-filters -m a b c d e f --reference 0 2> /dev/null").c_str()) != 0);
  CHECK(std::system((exe + " frobnicate 2> /dev/null > /dev/null").c_str()) != 0);
}
