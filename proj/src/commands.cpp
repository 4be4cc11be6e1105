#include "hyperts/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "hyperts/analysis.hpp"
#include "hyperts/format.hpp"
#include "hyperts/report.hpp"
#include "hyperts/util.hpp"

namespace hyperts {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::vector<std::string> comment_lines(const json& meta) {
  std::vector<std::string> lines;
  for (const auto& [k, v] : meta.items())
    lines.push_back(k + "=" + (v.is_string() ? v.get<std::string>() : v.dump()));
  return lines;
}

void write_json(const json& j, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string file_hash(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return hex64(fnv1a64(ss.str()));
}

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace

json artifact_meta(const json& config, std::uint64_t seed) {
  const TrainConfig defaults;
  return {{"code_version", std::string(kCodeVersion)},
          {"config_hash", hex64(fnv1a64(config.dump()))},
          {"seed", seed},
          {"defaults",
           {{"epochs", defaults.epochs},
            {"batch_size", defaults.batch_size},
            {"lr", defaults.lr},
            {"kernel_size", kDefaultKernelSize},
            {"pool_size", kPoolSize},
            {"dropout", kDropoutRate},
            {"cv_fraction", 0.8},
            {"folds", 10}}}};
}

std::size_t default_workers() {
  if (const char* env = std::getenv("HYPERTS_WORKERS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::string cell_label(TestLayerKind kind, const std::vector<std::string>& order,
                       const std::vector<std::string>& default_order) {
  switch (kind) {
    case TestLayerKind::Cnn:
      return "CNN";
    case TestLayerKind::Lstm:
      return "LSTM";
    case TestLayerKind::Hyper:
      return order == default_order ? "H" : "HR";
  }
  return "?";
}

std::string cell_dir_name(const std::string& label, std::size_t window,
                          std::size_t span) {
  return label + "_w" + std::to_string(window) + "_s" + std::to_string(span);
}

DatasetArtifact load_dataset(const std::string& dir) {
  const fs::path base(dir);
  if (!fs::exists(base / "table.csv") || !fs::exists(base / "scaler.json"))
    throw std::runtime_error("no ingested dataset in " + dir +
                             " (expected table.csv and scaler.json)");
  DatasetArtifact a;
  a.table = read_table_csv((base / "table.csv").string());
  std::ifstream in(base / "scaler.json");
  const json j = json::parse(in);
  a.scaler.names = j.at("names").get<std::vector<std::string>>();
  a.scaler.mean = j.at("mean").get<std::vector<double>>();
  a.scaler.std = j.at("std").get<std::vector<double>>();
  return a;
}

// ---------------------------------------------------------------- ingest

int cmd_ingest(const IngestOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Manifest m = load_manifest(opts.manifest);
    std::vector<RawSeries> series;
    for (const auto& name : m.order) {
      const auto& path = m.paths.at(name);
      if (!fs::exists(path)) throw std::runtime_error("missing input file " + path);
      series.push_back(load_csv(path, name));
    }
    SeriesTable table = restrict_dates(align(series, m.order), m.start, m.end);
    if (table.rows() == 0)
      throw std::runtime_error("no aligned rows inside the manifest date range");
    auto [standard, scaler] = standardize(table);

    fs::create_directories(opts.out);
    const json config = {{"manifest", fs::path(opts.manifest).filename().string()},
                         {"order", m.order}};
    json meta = artifact_meta(config, 0);
    write_table_csv(standard, (fs::path(opts.out) / "table.csv").string(),
                    comment_lines(meta));
    write_json({{"meta", meta},
                {"names", scaler.names},
                {"mean", scaler.mean},
                {"std", scaler.std},
                {"rows", table.rows()},
                {"first_date", format_date(table.dates.front())},
                {"last_date", format_date(table.dates.back())}},
               fs::path(opts.out) / "scaler.json");
    out << "aligned " << table.rows() << " rows x " << table.cols() << " columns\n";
    return 0;
  });
}

// ------------------------------------------------------------- correlate

int cmd_correlate(const CorrelateOptions& opts, std::ostream& out,
                  std::ostream& err) {
  return guarded(err, [&] {
    const DatasetArtifact ds = load_dataset(opts.data);
    const fs::path dir = opts.out.empty() ? fs::path(opts.data) / "analysis"
                                          : fs::path(opts.out);
    fs::create_directories(dir);
    const json meta = artifact_meta(
        {{"max_lag", opts.max_lag},
         {"data_hash", file_hash(fs::path(opts.data) / "table.csv")}},
        0);
    const auto comments = comment_lines(meta);

    const auto matrix = correlation_matrix(ds.table);
    write_matrix_csv(matrix, (dir / "correlation_matrix.csv").string(), comments);
    const auto lags = all_lagged_correlations(ds.table, opts.max_lag);
    for (const auto& lc : lags)
      write_lag_csv(lc, (dir / ("lag_" + lc.a + "_" + lc.b + ".csv")).string(),
                    comments);
    out << "wrote correlation matrix and " << lags.size() << " lag curves to "
        << dir.string() << '\n';
    return 0;
  });
}

// ---------------------------------------------------------------- search

namespace {

Grid grid_for(const SearchCommandOptions& o, std::size_t window, std::size_t span) {
  Grid g = Grid::full(o.kind, window, span, o.seed);
  if (o.kind == TestLayerKind::Hyper && o.algebra != "all")
    g.algebras = {algebra_from_string(o.algebra)};
  if (!o.sizes.empty()) g.sizes = o.sizes;
  if (!o.n_dense1.empty()) g.n_dense1 = o.n_dense1;
  if (!o.n_dense2.empty()) g.n_dense2 = o.n_dense2;
  if (!o.dense_units.empty()) g.dense_units = o.dense_units;
  if (!o.activations.empty()) {
    g.activations.clear();
    for (const auto& a : o.activations) g.activations.push_back(activation_from_string(a));
  }
  return g;
}

json grid_json(const Grid& g) {
  std::vector<std::string> algebras, acts;
  for (auto a : g.algebras) algebras.emplace_back(to_string(a));
  for (auto a : g.activations) acts.emplace_back(to_string(a));
  return {{"class", std::string(to_string(g.kind))},
          {"sizes", g.sizes},
          {"algebras", g.kind == TestLayerKind::Hyper ? json(algebras) : json::array()},
          {"n_dense1", g.n_dense1},
          {"n_dense2", g.n_dense2},
          {"dense_units", g.dense_units},
          {"activations", acts},
          {"kernel_size", g.kernel_size}};
}

int search_cell(const SearchCommandOptions& o, const DatasetArtifact& ds,
                const std::string& data_hash, std::size_t window, std::size_t span,
                std::ostream& out) {
  const std::vector<std::string> order = o.order.empty() ? ds.table.names : o.order;
  if (std::find(order.begin(), order.end(), o.target) == order.end())
    throw std::invalid_argument("target '" + o.target + "' is not in the ticker order");
  const SeriesTable table = reorder(ds.table, order);
  WindowedDataset data = make_windows(table, o.target, window, span, order);
  data.target_scale = ds.scaler.scale_of(o.target);
  const SplitPlan plan = split(data.size(), o.cv_fraction, o.folds);

  const Grid grid = grid_for(o, window, span);
  const auto specs = enumerate(grid);
  const std::string label = cell_label(o.kind, order, ds.table.names);
  const fs::path dir = fs::path(o.out) / cell_dir_name(label, window, span);
  fs::create_directories(dir);

  const json config = {{"label", label},
                       {"grid", grid_json(grid)},
                       {"window", window},
                       {"span", span},
                       {"order", order},
                       {"target", o.target},
                       {"data_hash", data_hash},
                       {"train",
                        {{"epochs", o.train.epochs},
                         {"batch_size", o.train.batch_size},
                         {"lr", o.train.lr}}},
                       {"cv_fraction", o.cv_fraction},
                       {"folds", o.folds}};
  json meta = artifact_meta(config, o.seed);
  meta["config"] = config;

  SearchOptions so;
  so.train = o.train;
  so.workers = o.workers ? o.workers : default_workers();
  so.ledger_path = (dir / "ledger.jsonl").string();
  so.meta = meta;
  const SearchResult result = run_search(specs, data, plan, so);
  const SearchRow& best = result.best_row();

  FinalFit final = fit_final(best.spec, data, plan, o.train);
  save_model(final.model, (dir / "best_model.json").string());
  write_history_csv(final.history, (dir / "history.csv").string(),
                    comment_lines(artifact_meta(config, o.seed)));

  CellResult cell;
  cell.label = label;
  cell.window = window;
  cell.span = span;
  cell.order = order;
  cell.best_spec = best.spec;
  cell.cv_mae = best.cv.mean_mae;
  cell.holdout_mae = final.holdout_mae;
  cell.holdout_mae_raw = final.holdout_mae_raw;
  cell.param_count = best.param_count;
  write_json({{"meta", meta},
              {"cell", cell_to_json(cell)},
              {"grid", {{"raw_size", grid.raw_size()}, {"evaluated", result.rows.size()}}}},
             dir / "result.json");

  out << label << " window=" << window << " span=" << span << ": "
      << result.rows.size() << " configs (raw grid " << grid.raw_size()
      << "), best cv MAE " << fmt_double(best.cv.mean_mae) << ", holdout MAE "
      << fmt_double(final.holdout_mae) << ", params " << best.param_count << '\n';
  return 0;
}

}  // namespace

int cmd_search(const SearchCommandOptions& opts, std::ostream& out,
               std::ostream& err) {
  return guarded(err, [&] {
    opts.train.validate();
    const DatasetArtifact ds = load_dataset(opts.data);
    const std::string data_hash = file_hash(fs::path(opts.data) / "table.csv");
    if (!opts.all) return search_cell(opts, ds, data_hash, opts.window, opts.span, out);
    for (std::size_t w : opts.windows)
      for (std::size_t s : opts.spans) search_cell(opts, ds, data_hash, w, s, out);
    return 0;
  });
}

// ---------------------------------------------------------------- report

int cmd_report(const ReportOptions& opts, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const Report report = build_report(collect_results(opts.in));
    fs::path csv_path(opts.out), json_path(opts.out);
    if (csv_path.extension() == ".json")
      csv_path.replace_extension(".csv");
    else
      json_path.replace_extension(".json");
    if (csv_path.has_parent_path()) fs::create_directories(csv_path.parent_path());
    {
      std::ofstream f(csv_path);
      if (!f) throw std::runtime_error("cannot write " + csv_path.string());
      f << report_csv(report);
      if (!f) throw std::runtime_error("write failed: " + csv_path.string());
    }
    write_json(report_json(report), json_path);
    out << "report: " << report.rows.size() << " cells, classes";
    for (const auto& l : report.labels) out << ' ' << l;
    out << " -> " << csv_path.string() << '\n';
    return 0;
  });
}

}  // namespace hyperts
