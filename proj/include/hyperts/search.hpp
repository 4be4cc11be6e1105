#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "hyperts/data.hpp"
#include "hyperts/model.hpp"
#include "hyperts/train.hpp"

namespace hyperts {

/// Hyperparameter axes for one architecture class. Enumeration order is
/// lexicographic over (size, algebra, n_dense1, n_dense2, dense_units,
/// activation).
struct Grid {
  TestLayerKind kind = TestLayerKind::Hyper;
  std::vector<std::size_t> sizes;
  std::vector<AlgebraKind> algebras{AlgebraKind::Quaternion};  // Hyper only
  std::vector<int> n_dense1{0, 1};
  std::vector<int> n_dense2{0, 1};
  std::vector<std::size_t> dense_units{8, 16, 32, 64};
  std::vector<Activation> activations{Activation::Linear, Activation::ReLU};
  std::size_t window = 10;
  std::size_t span = 1;
  std::uint64_t seed = 0;
  std::size_t kernel_size = kDefaultKernelSize;

  /// The full grid of one class: CNN/LSTM sizes {8..128}, H sizes
  /// {1..32} over all three algebras.
  static Grid full(TestLayerKind kind, std::size_t window, std::size_t span,
                   std::uint64_t seed = 0);

  std::size_t raw_size() const;
};

/// Cartesian product without deduplication.
std::vector<ModelSpec> enumerate_raw(const Grid& grid);
/// Cartesian product with specs sharing a canonical_key() collapsed to
/// their first occurrence (inert dense settings when both optional dense
/// layers are off).
std::vector<ModelSpec> enumerate(const Grid& grid);

struct CvResult {
  std::vector<double> fold_maes;
  double mean_mae = 0.0;
  double std_mae = 0.0;  // population std across folds
};

/// Trains on `train`, returns the MAE on `validation`.
using FoldEvaluator = std::function<double(std::span<const std::size_t> train,
                                           std::span<const std::size_t> validation,
                                           std::size_t fold)>;

/// Throws std::invalid_argument when a fold is empty.
CvResult cross_validate(const SplitPlan& plan, const FoldEvaluator& eval);

/// Seed for the fresh model of fold k (k == folds for the final refit).
std::uint64_t fold_seed(const ModelSpec& spec, std::size_t k);

/// Builds a fresh model per fold seeded by fold_seed(spec, k), fits it on
/// the other folds and scores MAE on fold k.
CvResult cross_validate(const ModelSpec& spec, const WindowedDataset& data,
                        const SplitPlan& plan, const TrainConfig& config);

struct SearchRow {
  ModelSpec spec;
  CvResult cv;
  std::size_t param_count = 0;
  double seconds = 0.0;
};

struct SearchResult {
  std::vector<SearchRow> rows;  // in enumeration order
  std::size_t best = 0;
  bool complete = true;

  const SearchRow& best_row() const { return rows.at(best); }
};

/// argmin mean MAE; ties broken by smaller param count, then canonical key.
std::size_t select_best(const std::vector<SearchRow>& rows);

struct SearchOptions {
  TrainConfig train;
  std::size_t workers = 1;
  /// Newline-delimited JSON ledger. Empty disables persistence.
  std::string ledger_path;
  /// Wall-clock seconds per config go here, keeping the ledger itself
  /// reproducible. Defaults to "<ledger>.timings" when empty.
  std::string timings_path;
  /// Written as the ledger's first line; a resumed ledger must match.
  nlohmann::json meta = nlohmann::json::object();
  /// Stop after this many new evaluations (simulated interruption).
  std::optional<std::size_t> stop_after;
};

/// Evaluates every spec by cross-validation. Results already present in
/// the ledger are reused; new ones are appended as they finish, and a
/// complete run rewrites the ledger in enumeration order.
/// Throws std::runtime_error on ledger I/O failure, leaving the lines
/// already written in place.
SearchResult run_search(const std::vector<ModelSpec>& specs,
                        const WindowedDataset& data, const SplitPlan& plan,
                        const SearchOptions& options);

nlohmann::json row_to_json(const SearchRow& row);
SearchRow row_from_json(const nlohmann::json& j);

struct FinalFit {
  Model model;
  std::vector<EpochStats> history;
  double holdout_mae = 0.0;      // standardized scale
  double holdout_mae_raw = 0.0;  // target's original units
};

/// Refits `spec` on the whole cv block and scores the holdout block.
FinalFit fit_final(const ModelSpec& spec, const WindowedDataset& data,
                   const SplitPlan& plan, const TrainConfig& config);

}  // namespace hyperts
