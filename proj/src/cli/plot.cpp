#include "biasprobe/cli/plot.hpp"

#include <fstream>

#include "biasprobe/error.hpp"
#include "biasprobe/evaluation/probe.hpp"
#include "biasprobe/instrumentation/activations.hpp"
#include "biasprobe/instrumentation/filter_analysis.hpp"
#include "json.hpp"

namespace biasprobe::cli {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view figure_name(FigureKind kind) {
  switch (kind) {
    case FigureKind::recovery_bars: return "recovery_bars";
    case FigureKind::match_bars: return "match_bars";
    case FigureKind::variance_curves: return "variance_curves";
    case FigureKind::pca_scatter: return "pca_scatter";
    case FigureKind::filter_scatter: return "filter_scatter";
  }
  return "?";
}

FigureKind parse_figure(std::string_view name) {
  for (auto k : {FigureKind::recovery_bars, FigureKind::match_bars, FigureKind::variance_curves,
                 FigureKind::pca_scatter, FigureKind::filter_scatter}) {
    if (figure_name(k) == name) return k;
  }
  throw ConfigError("unknown figure '" + std::string(name) + "'");
}

namespace {

json read_json(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw Error("cannot read " + file.string());
  return json::parse(in);
}

[[noreturn]] void missing(FigureKind kind, const char* experiment) {
  throw Error("figure " + std::string(figure_name(kind)) + " needs the output of a " + experiment +
              " run; none found in this run directory");
}

std::vector<std::pair<std::string, Figure>> rate_bars(const fs::path& dir, const json& summary, FigureKind kind) {
  if (!summary.contains("reports")) missing(kind, "gender_bias or ablation");
  std::vector<std::pair<std::string, Figure>> out;
  for (const auto& [probe_id, entry] : summary["reports"].items()) {
    if (entry.at("kind") != "in_distribution") continue;
    const bool recovery = kind == FigureKind::recovery_bars;
    Figure f;
    f.title = std::string(recovery ? "Face recovery rate" : "Attribute match rate") + " (" + probe_id + ")";
    f.x_label = "training split (majority:minority)";
    f.y_label = recovery ? "recovery rate" : "match rate";
    Series a{"attribute A", SeriesStyle::bars, {}, {}, {}}, b{"attribute B", SeriesStyle::bars, {}, {}, {}};
    int col = 0;
    for (const auto& file : entry.at("files")) {
      const auto r = read_json(dir / file.get<std::string>()).get<evaluation::BiasReport>();
      const auto& rates = recovery ? r.recovery_rate : r.match_rate;
      f.categories.push_back(r.split_name.empty() ? r.model_id : r.split_name);
      if (rates.a) a.x.push_back(col), a.y.push_back(*rates.a);
      if (rates.b) b.x.push_back(col), b.y.push_back(*rates.b);
      ++col;
    }
    f.series = {a, b};
    out.emplace_back(std::string(figure_name(kind)), std::move(f));
  }
  if (out.empty()) missing(kind, "gender_bias or ablation");
  return out;
}

std::vector<std::pair<std::string, Figure>> variance_curves(const fs::path& dir, const json& summary) {
  if (!summary.contains("variance")) missing(FigureKind::variance_curves, "layer_variance");
  Figure f;
  f.title = "Layer variance";
  f.x_label = "layer (input to output)";
  f.y_label = "variance";
  for (const auto& file : summary["variance"]) {
    const auto t = read_json(dir / file.get<std::string>()).get<instrumentation::LayerVarianceTrace>();
    if (f.categories.empty())
      for (const auto& e : t.entries) f.categories.push_back(e.layer_name);
    Series s{t.model_id, SeriesStyle::line, {}, {}, {}};
    for (std::size_t i = 0; i < t.entries.size(); ++i) {
      s.x.push_back(static_cast<double>(i));
      s.y.push_back(t.entries[i].variance);
    }
    f.series.push_back(std::move(s));
  }
  return {{"variance_curves", std::move(f)}};
}

std::vector<std::pair<std::string, Figure>> pca_scatter(const fs::path& dir, const json& summary) {
  if (!summary.contains("pca")) missing(FigureKind::pca_scatter, "latent_probe");
  std::vector<std::pair<std::string, Figure>> out;
  for (const auto& file : summary["pca"]) {
    const json j = read_json(dir / file.get<std::string>());
    Figure f;
    f.title = "PCA map: " + j.at("name").get<std::string>();
    f.x_label = "PC1";
    f.y_label = "PC2";
    std::map<std::string, std::size_t> index;
    for (const auto& p : j.at("points")) {
      const std::string g = p.at("group");
      if (!index.count(g)) {
        index[g] = f.series.size();
        f.series.push_back({g, SeriesStyle::scatter, {}, {}, {}});
      }
      auto& s = f.series[index[g]];
      s.x.push_back(p.at("coords").at(0));
      s.y.push_back(p.at("coords").at(1));
    }
    out.emplace_back("pca_scatter_" + j.at("name").get<std::string>(), std::move(f));
  }
  return out;
}

std::vector<std::pair<std::string, Figure>> filter_scatter(const fs::path& dir, const json& summary) {
  if (!summary.contains("filters")) missing(FigureKind::filter_scatter, "filter_audit");
  const auto names = summary["filters"].at("models").get<std::vector<std::string>>();
  std::vector<std::pair<std::string, Figure>> out;
  for (const auto& file : summary["filters"].at("files")) {
    const json j = read_json(dir / file.get<std::string>());
    const auto s = j.get<instrumentation::FilterScatter>();
    const std::string role = j.value("role", "shared");
    Figure f;
    f.title = "Filter PCA: " + role + " " + s.layer_name;
    f.x_label = "model";
    f.y_label = "top principal component";
    f.categories = names;
    f.y_band = std::make_pair(s.reference_low, s.reference_high);
    for (int m = 0; m < instrumentation::kFilterAuditModels; ++m) {
      Series ser{names.at(m), SeriesStyle::scatter, {}, {}, {}};
      for (const auto& p : s.points) {
        if (p.model_index != m) continue;
        ser.x.push_back(m);
        ser.y.push_back(p.pca_value);
        ser.cross.push_back(p.is_outlier);
      }
      f.series.push_back(std::move(ser));
    }
    out.emplace_back("filter_scatter_" + role + "_" + s.layer_name, std::move(f));
  }
  return out;
}

}  // namespace

std::vector<std::pair<std::string, Figure>> build_figures(const fs::path& run_dir, FigureKind kind) {
  if (!fs::exists(run_dir / "summary.json"))
    throw Error("run directory " + run_dir.string() + " has no summary.json (run incomplete?)");
  const json summary = read_json(run_dir / "summary.json");
  switch (kind) {
    case FigureKind::recovery_bars:
    case FigureKind::match_bars: return rate_bars(run_dir, summary, kind);
    case FigureKind::variance_curves: return variance_curves(run_dir, summary);
    case FigureKind::pca_scatter: return pca_scatter(run_dir, summary);
    case FigureKind::filter_scatter: return filter_scatter(run_dir, summary);
  }
  return {};
}

std::vector<fs::path> plot(const fs::path& run_dir, FigureKind kind) {
  std::vector<fs::path> written;
  fs::create_directories(run_dir / "plots");
  for (const auto& [name, figure] : build_figures(run_dir, kind)) {
    const fs::path base = run_dir / "plots" / name;
    std::ofstream(base.string() + ".svg") << render_svg(figure);
    std::ofstream(base.string() + ".csv") << figure_csv(figure);
    dataset::write_png(base.string() + ".png", render_png(figure));
    for (const char* ext : {".svg", ".png", ".csv"}) written.emplace_back(base.string() + ext);
  }
  return written;
}

}  // namespace biasprobe::cli
