#pragma once

#include <string>
#include <vector>

#include "biasprobe/evaluation/probe.hpp"

namespace biasprobe::evaluation {

struct RenderedTables {
  // Rows: recovery/match rate per attribute; one column per report.
  std::string rates_csv;
  std::string rates_text;
  // Rows: probes; columns: outcome counts summed over reports.
  std::string tallies_csv;
  std::string tallies_text;
  std::string tallies_collapsed_csv;
};

// All reports must share a probe set.
RenderedTables report_tables(const std::vector<BiasReport>& reports);

// Parses rates_csv back into {row -> values per column}; empty cells are
// absent values.
struct ParsedRates {
  std::vector<std::string> columns;
  std::vector<std::string> rows;
  std::vector<std::vector<std::optional<double>>> values;
};
ParsedRates parse_rates_csv(const std::string& csv);

}  // namespace biasprobe::evaluation
