#include "biasprobe/evaluation/report.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace biasprobe::evaluation {

namespace {

std::string exact(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string percent(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f%%", 100.0 * *v);
  return buf;
}

std::string column_name(const BiasReport& r) { return r.split_name.empty() ? r.model_id : r.split_name; }

std::string align(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& row : rows) {
    width.resize(std::max(width.size(), row.size()), 0);
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream out;
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == 0) out << row[c] << std::string(width[c] - row[c].size(), ' ');
      else out << "  " << std::string(width[c] - row[c].size(), ' ') << row[c];
    }
    out << '\n';
  }
  return out.str();
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

struct RateRow {
  const char* name;
  std::optional<double> (*get)(const BiasReport&);
};

const RateRow kRateRows[] = {
    {"recovery_rate_A", [](const BiasReport& r) { return r.recovery_rate.a; }},
    {"recovery_rate_B", [](const BiasReport& r) { return r.recovery_rate.b; }},
    {"match_rate_A", [](const BiasReport& r) { return r.match_rate.a; }},
    {"match_rate_B", [](const BiasReport& r) { return r.match_rate.b; }},
    {"classifier_accuracy_A",
     [](const BiasReport& r) { return r.classifier_accuracy ? r.classifier_accuracy->a : std::nullopt; }},
    {"classifier_accuracy_B",
     [](const BiasReport& r) { return r.classifier_accuracy ? r.classifier_accuracy->b : std::nullopt; }},
};

std::string tally_csv(const std::vector<BiasReport>& reports, bool collapsed,
                      std::vector<std::vector<std::string>>* text_rows) {
  std::ostringstream csv;
  csv << "probe,output_A,output_B,mixed,no_face,failed\n";
  if (text_rows) text_rows->push_back({"probe", "output A", "output B", "mixed", "no face", "failed"});
  ProbeTally sum;
  for (const auto& id : reports.front().probe_order) {
    ProbeTally t;
    for (const auto& r : reports) {
      const auto& m = collapsed ? r.tallies_collapsed : r.tallies;
      if (auto it = m.find(id); it != m.end()) t += it->second;
    }
    sum += t;
    csv << id << ',' << t.output_a << ',' << t.output_b << ',' << t.mixed << ',' << t.no_face << ',' << t.failed
        << '\n';
    if (text_rows)
      text_rows->push_back({id, std::to_string(t.output_a), std::to_string(t.output_b), std::to_string(t.mixed),
                            std::to_string(t.no_face), std::to_string(t.failed)});
  }
  if (text_rows)
    text_rows->push_back({"total", std::to_string(sum.output_a), std::to_string(sum.output_b),
                          std::to_string(sum.mixed), std::to_string(sum.no_face), std::to_string(sum.failed)});
  return csv.str();
}

}  // namespace

RenderedTables report_tables(const std::vector<BiasReport>& reports) {
  if (reports.empty()) throw EvaluationError("report_tables needs at least one report");
  for (const auto& r : reports) {
    if (r.probe_set_id != reports.front().probe_set_id || r.probe_order != reports.front().probe_order) {
      throw EvaluationError("reports use different probe sets ('" + reports.front().probe_set_id + "' vs '" +
                            r.probe_set_id + "')");
    }
  }

  RenderedTables out;
  std::ostringstream csv;
  std::vector<std::vector<std::string>> text{{"metric"}};
  csv << "metric";
  for (const auto& r : reports) {
    csv << ',' << column_name(r);
    text[0].push_back(column_name(r));
  }
  csv << '\n';
  for (const auto& row : kRateRows) {
    const bool any = std::any_of(reports.begin(), reports.end(), [&](const auto& r) { return row.get(r).has_value(); });
    if (!any && std::string(row.name).starts_with("classifier")) continue;
    csv << row.name;
    std::vector<std::string> line{row.name};
    for (const auto& r : reports) {
      const auto v = row.get(r);
      csv << ',' << (v ? exact(*v) : "");
      line.push_back(percent(v));
    }
    csv << '\n';
    text.push_back(std::move(line));
  }
  out.rates_csv = csv.str();
  out.rates_text = align(text);

  std::vector<std::vector<std::string>> tally_rows;
  out.tallies_csv = tally_csv(reports, false, &tally_rows);
  out.tallies_text = align(tally_rows);
  out.tallies_collapsed_csv = tally_csv(reports, true, nullptr);
  return out;
}

ParsedRates parse_rates_csv(const std::string& csv) {
  ParsedRates p;
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line)) throw EvaluationError("empty rates table");
  auto header = split_line(line);
  if (header.empty() || header[0] != "metric") throw EvaluationError("rates table has no metric column");
  p.columns.assign(header.begin() + 1, header.end());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_line(line);
    cells.resize(p.columns.size() + 1);
    p.rows.push_back(cells[0]);
    std::vector<std::optional<double>> values;
    for (std::size_t c = 1; c < cells.size(); ++c) {
      if (cells[c].empty()) values.emplace_back();
      else values.emplace_back(std::stod(cells[c]));
    }
    p.values.push_back(std::move(values));
  }
  return p;
}

}  // namespace biasprobe::evaluation
