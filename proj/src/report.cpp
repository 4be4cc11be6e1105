#include "hyperts/report.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "hyperts/format.hpp"
#include "hyperts/util.hpp"

namespace hyperts {

using nlohmann::json;

namespace {

const std::vector<std::string> kLabelOrder = {"CNN", "LSTM", "H", "HR"};

}  // namespace

json cell_to_json(const CellResult& c) {
  return {{"label", c.label},
          {"window", c.window},
          {"span", c.span},
          {"order", c.order},
          {"best_spec", spec_to_json(c.best_spec)},
          {"cv_mae", c.cv_mae},
          {"holdout_mae", c.holdout_mae},
          {"holdout_mae_raw", c.holdout_mae_raw},
          {"param_count", c.param_count}};
}

CellResult cell_from_json(const json& j) {
  CellResult c;
  c.label = j.at("label").get<std::string>();
  c.window = j.at("window").get<std::size_t>();
  c.span = j.at("span").get<std::size_t>();
  c.order = j.at("order").get<std::vector<std::string>>();
  c.best_spec = spec_from_json(j.at("best_spec"));
  c.cv_mae = j.at("cv_mae").get<double>();
  c.holdout_mae = j.at("holdout_mae").get<double>();
  c.holdout_mae_raw = j.value("holdout_mae_raw", 0.0);
  c.param_count = j.at("param_count").get<std::size_t>();
  return c;
}

std::vector<CellResult> collect_results(const std::string& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir))
    throw std::invalid_argument("results directory " + dir + " does not exist");
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().filename() == "result.json")
      files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<CellResult> out;
  for (const auto& f : files) {
    std::ifstream in(f);
    const json j = json::parse(in);
    out.push_back(cell_from_json(j.contains("cell") ? j["cell"] : j));
  }
  return out;
}

Report build_report(const std::vector<CellResult>& cells) {
  if (cells.empty()) throw std::invalid_argument("report: no search results");
  std::map<std::pair<std::size_t, std::size_t>, ReportRow> rows;
  std::set<std::string> seen;
  for (const auto& c : cells) {
    seen.insert(c.label);
    auto& row = rows[{c.window, c.span}];
    row.window = c.window;
    row.span = c.span;
    if (!row.by_label.emplace(c.label, c).second)
      throw std::invalid_argument("report: duplicate result for " + c.label +
                                  " window " + std::to_string(c.window) +
                                  " span " + std::to_string(c.span));
  }
  Report r;
  for (const auto& l : kLabelOrder)
    if (seen.count(l)) r.labels.push_back(l);
  for (const auto& l : seen)
    if (std::find(kLabelOrder.begin(), kLabelOrder.end(), l) == kLabelOrder.end())
      r.labels.push_back(l);
  for (auto& [_, row] : rows) {
    std::size_t best = 0;
    for (const auto& l : r.labels) {
      auto it = row.by_label.find(l);
      if (it == row.by_label.end()) continue;
      if (row.min_param_label.empty() || it->second.param_count < best) {
        best = it->second.param_count;
        row.min_param_label = l;
      }
    }
    r.rows.push_back(std::move(row));
  }
  return r;
}

std::string report_csv(const Report& report) {
  const bool ordering = std::count(report.labels.begin(), report.labels.end(), "H") &&
                        std::count(report.labels.begin(), report.labels.end(), "HR");
  std::ostringstream out;
  out << "# hyperts " << kCodeVersion << " comparison report\n";
  out << "window,span";
  for (const auto& l : report.labels)
    out << ',' << l << "_cv_mae," << l << "_holdout_mae," << l << "_params";
  out << ",min_params";
  if (ordering) out << ",hr_minus_h_cv_mae,hr_minus_h_params";
  out << '\n';
  for (const auto& row : report.rows) {
    out << row.window << ',' << row.span;
    for (const auto& l : report.labels) {
      auto it = row.by_label.find(l);
      if (it == row.by_label.end()) {
        out << ",,,";
      } else {
        out << ',' << fmt_double(it->second.cv_mae) << ','
            << fmt_double(it->second.holdout_mae) << ',' << it->second.param_count;
      }
    }
    out << ',' << row.min_param_label;
    if (ordering) {
      auto h = row.by_label.find("H");
      auto hr = row.by_label.find("HR");
      if (h != row.by_label.end() && hr != row.by_label.end()) {
        out << ',' << fmt_double(hr->second.cv_mae - h->second.cv_mae) << ','
            << static_cast<long long>(hr->second.param_count) -
                   static_cast<long long>(h->second.param_count);
      } else {
        out << ",,";
      }
    }
    out << '\n';
  }
  return out.str();
}

json report_json(const Report& report) {
  json rows = json::array();
  for (const auto& row : report.rows) {
    json classes = json::object();
    for (const auto& [label, c] : row.by_label)
      classes[label] = {{"cv_mae", c.cv_mae},
                        {"holdout_mae", c.holdout_mae},
                        {"holdout_mae_raw", c.holdout_mae_raw},
                        {"param_count", c.param_count},
                        {"order", c.order},
                        {"best_spec", spec_to_json(c.best_spec)}};
    rows.push_back({{"window", row.window},
                    {"span", row.span},
                    {"classes", classes},
                    {"min_params", row.min_param_label}});
  }
  return {{"meta", {{"code_version", std::string(kCodeVersion)}}},
          {"labels", report.labels},
          {"cells", rows}};
}

}  // namespace hyperts
