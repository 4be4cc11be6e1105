#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hyperts/data.hpp"
#include "hyperts/model.hpp"
#include "hyperts/tensor.hpp"

namespace hyperts {

double mse(const Tensor& pred, const Tensor& target);
/// dMSE/dpred = 2 (pred - target) / N.
Tensor mse_grad(const Tensor& pred, const Tensor& target);
double mae(const Tensor& pred, const Tensor& target);

/// Bias-corrected Adam. Moment buffers are created lazily on the first
/// step and must keep mirroring the parameter list afterwards.
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::int64_t t = 0;
};

void adam_step(AdamState& state, std::span<Param* const> params);

struct TrainConfig {
  int epochs = 100;
  int batch_size = 32;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  bool shuffle = true;

  void validate() const;
};

struct EpochStats {
  int epoch = 0;
  double loss = 0.0;  // mean training MSE (dropout active)
  double mae = 0.0;   // mean training MAE (dropout active)
};

/// Mini-batch Adam on the given samples. Deterministic given config.seed:
/// the same seed drives shuffling and dropout.
/// Throws std::invalid_argument on an empty slice or an invalid config.
std::vector<EpochStats> fit(Model& model, const WindowedDataset& data,
                            std::span<const std::size_t> indices,
                            const TrainConfig& config);

/// MAE over all predictions in inference mode.
double evaluate(Model& model, const WindowedDataset& data,
                std::span<const std::size_t> indices);

void write_history_csv(const std::vector<EpochStats>& history,
                       const std::string& path,
                       const std::vector<std::string>& header_comments = {});

}  // namespace hyperts
