#pragma once

#include <chrono>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hyperts/tensor.hpp"

namespace hyperts {

using Date = std::chrono::sys_days;

/// Parses YYYY-MM-DD. Returns nullopt on anything else.
std::optional<Date> parse_date(std::string_view text);
std::string format_date(Date d);

struct RawSeries {
  std::string ticker;
  std::vector<Date> dates;  // strictly increasing
  std::vector<double> values;
  std::vector<std::string> warnings;
};

/// Reads a Yahoo!-style export: header row with at least `Date` and `Close`.
/// Unparseable rows are skipped and duplicate dates keep the first
/// occurrence; both are reported in RawSeries::warnings (and on stderr).
/// Throws std::runtime_error on a missing file, a missing column, or no
/// usable rows.
RawSeries load_csv(const std::string& path, const std::string& ticker);

/// Aligned, gap-free table with columns in an explicit ticker order.
struct SeriesTable {
  std::vector<Date> dates;
  std::vector<std::string> names;
  std::vector<std::vector<double>> columns;

  std::size_t rows() const { return dates.size(); }
  std::size_t cols() const { return columns.size(); }
  std::size_t index_of(const std::string& name) const;
  const std::vector<double>& column(const std::string& name) const {
    return columns[index_of(name)];
  }
};

/// Inner join on dates; columns follow `order`, which must name every
/// series exactly once. Throws on an empty intersection.
SeriesTable align(const std::vector<RawSeries>& series,
                  const std::vector<std::string>& order);

/// Rows with date in [start, end). Either bound may be absent.
SeriesTable restrict_dates(const SeriesTable& table, std::optional<Date> start,
                           std::optional<Date> end);

/// Same table with columns permuted to `order`.
SeriesTable reorder(const SeriesTable& table,
                    const std::vector<std::string>& order);

struct Scaler {
  std::vector<std::string> names;
  std::vector<double> mean;
  std::vector<double> std;  // population standard deviation

  double inverse(const std::string& name, double value) const;
  double scale_of(const std::string& name) const;
};

/// Per column (x - mean) / std with population std over all rows.
/// Throws std::invalid_argument on a zero-variance column.
std::pair<SeriesTable, Scaler> standardize(const SeriesTable& table);
SeriesTable destandardize(const SeriesTable& table, const Scaler& scaler);

struct WindowedDataset {
  std::vector<Tensor> X;  // [window, channels]
  std::vector<Tensor> Y;  // [span]
  std::vector<std::size_t> origins;  // row of X[i]'s first time step
  std::size_t window = 0;
  std::size_t span = 0;
  std::string target;
  std::vector<std::string> order;
  double target_scale = 1.0;  // std of the target before standardization

  std::size_t size() const { return X.size(); }
};

/// X[i] holds rows origin..origin+window-1 with channels in `order`;
/// Y[i] holds the target at origin+window..origin+window+span-1.
/// Throws std::invalid_argument when rows < window + span.
WindowedDataset make_windows(const SeriesTable& table, const std::string& target,
                             std::size_t window, std::size_t span,
                             const std::vector<std::string>& order);

struct SplitPlan {
  std::vector<std::size_t> cv_indices;       // chronologically first block
  std::vector<std::size_t> holdout_indices;  // strictly later samples
  std::vector<std::vector<std::size_t>> folds;  // contiguous, sizes differ by <= 1

  /// cv_indices without fold k.
  std::vector<std::size_t> train_indices(std::size_t k) const;
};

/// cv block = first floor(cv_fraction * n) samples, the rest is holdout.
/// Throws std::invalid_argument when n < folds or the cv block cannot
/// hold `folds` non-empty folds.
SplitPlan split(std::size_t n, double cv_fraction = 0.8, std::size_t folds = 10);

/// Ticker -> CSV path plus channel order; relative paths resolve against
/// the manifest's directory.
struct Manifest {
  std::map<std::string, std::string> paths;
  std::vector<std::string> order;
  std::optional<Date> start;
  std::optional<Date> end;
};

Manifest load_manifest(const std::string& path);

void write_table_csv(const SeriesTable& table, const std::string& path,
                     const std::vector<std::string>& header_comments = {});
SeriesTable read_table_csv(const std::string& path);

}  // namespace hyperts
