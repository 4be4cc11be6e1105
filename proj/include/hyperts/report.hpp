#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hyperts/model.hpp"

namespace hyperts {

/// Summary of one finished search cell, as stored in result.json.
struct CellResult {
  std::string label;  // CNN, LSTM, H or HR
  std::size_t window = 0;
  std::size_t span = 0;
  std::vector<std::string> order;
  ModelSpec best_spec;
  double cv_mae = 0.0;
  double holdout_mae = 0.0;
  double holdout_mae_raw = 0.0;
  std::size_t param_count = 0;
};

nlohmann::json cell_to_json(const CellResult& cell);
CellResult cell_from_json(const nlohmann::json& j);

/// Reads every result.json below `dir`, sorted by path.
std::vector<CellResult> collect_results(const std::string& dir);

struct ReportRow {
  std::size_t window = 0;
  std::size_t span = 0;
  std::map<std::string, CellResult> by_label;
  std::string min_param_label;  // class with the fewest trainable params
};

struct Report {
  std::vector<std::string> labels;  // canonical order CNN, LSTM, H, HR
  std::vector<ReportRow> rows;      // sorted by (window, span)
};

/// Throws std::invalid_argument on an empty input or a duplicate
/// (label, window, span) cell.
Report build_report(const std::vector<CellResult>& cells);

/// One row per cell; per label: cv MAE, holdout MAE, param count; then the
/// minimum-parameter label and, when both H and HR are present, HR - H
/// deltas.
std::string report_csv(const Report& report);
nlohmann::json report_json(const Report& report);

}  // namespace hyperts
