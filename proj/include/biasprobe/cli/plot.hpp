#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "biasprobe/cli/figure.hpp"

namespace biasprobe::cli {

enum class FigureKind { recovery_bars, match_bars, variance_curves, pca_scatter, filter_scatter };

std::string_view figure_name(FigureKind kind);
FigureKind parse_figure(std::string_view name);

// Builds the named figure(s) from a run directory. Several PCA maps or
// filter layers give several figures.
std::vector<std::pair<std::string, Figure>> build_figures(const std::filesystem::path& run_dir, FigureKind kind);

// Writes <run_dir>/plots/<name>.{svg,png,csv} and returns the paths.
std::vector<std::filesystem::path> plot(const std::filesystem::path& run_dir, FigureKind kind);

}  // namespace biasprobe::cli
