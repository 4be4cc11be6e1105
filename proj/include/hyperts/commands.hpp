#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hyperts/data.hpp"
#include "hyperts/model.hpp"
#include "hyperts/search.hpp"
#include "hyperts/train.hpp"

namespace hyperts {

/// Every command returns a process exit code: 0 iff all requested
/// artifacts were written. Errors go to `err` as one line.

struct IngestOptions {
  std::string manifest;
  std::string out;
};

/// Writes <out>/table.csv (standardized, manifest order) and
/// <out>/scaler.json.
int cmd_ingest(const IngestOptions& opts, std::ostream& out, std::ostream& err);

struct CorrelateOptions {
  std::string data;
  std::size_t max_lag = 60;
  std::string out;  // defaults to <data>/analysis
};

/// correlation_matrix.csv plus lag_<A>_<B>.csv for every pair A <= B.
int cmd_correlate(const CorrelateOptions& opts, std::ostream& out,
                  std::ostream& err);

struct SearchCommandOptions {
  std::string data;
  std::string out;
  TestLayerKind kind = TestLayerKind::Hyper;
  std::size_t window = 10;
  std::size_t span = 1;
  std::vector<std::string> order;  // empty: dataset column order
  std::string target = "Copper";
  std::string algebra = "all";
  std::uint64_t seed = 0;
  TrainConfig train;
  double cv_fraction = 0.8;
  std::size_t folds = 10;
  std::size_t workers = 0;  // 0: HYPERTS_WORKERS or hardware concurrency
  // Optional grid restrictions; empty keeps the full axis.
  std::vector<std::size_t> sizes;
  std::vector<int> n_dense1;
  std::vector<int> n_dense2;
  std::vector<std::size_t> dense_units;
  std::vector<std::string> activations;
  /// Loop every (window, span) of the experiment matrix.
  bool all = false;
  std::vector<std::size_t> windows{10, 20, 40, 60};
  std::vector<std::size_t> spans{1, 5, 10, 20};
};

/// Runs one cell and writes <out>/<LABEL>_w<window>_s<span>/ with
/// ledger.jsonl, ledger.jsonl.timings, result.json, best_model.json and
/// history.csv. LABEL is CNN, LSTM, H, or HR for H under a non-default
/// ticker order.
int cmd_search(const SearchCommandOptions& opts, std::ostream& out,
               std::ostream& err);

struct ReportOptions {
  std::string in;
  std::string out;  // .csv or .json; the other format is written alongside
};

int cmd_report(const ReportOptions& opts, std::ostream& out, std::ostream& err);

// Building blocks shared by the commands and their tests.

struct DatasetArtifact {
  SeriesTable table;  // standardized, default column order
  Scaler scaler;
};

DatasetArtifact load_dataset(const std::string& dir);

std::string cell_label(TestLayerKind kind, const std::vector<std::string>& order,
                       const std::vector<std::string>& default_order);
std::string cell_dir_name(const std::string& label, std::size_t window,
                          std::size_t span);

/// Worker count from HYPERTS_WORKERS, else hardware concurrency (>= 1).
std::size_t default_workers();

/// Metadata block carried by every artifact: code version, a hash of the
/// configuration, the seed, and the defaults in force.
nlohmann::json artifact_meta(const nlohmann::json& config, std::uint64_t seed);

}  // namespace hyperts
