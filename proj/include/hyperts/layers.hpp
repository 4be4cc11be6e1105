#pragma once

#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "hyperts/algebra.hpp"
#include "hyperts/tensor.hpp"
#include "hyperts/util.hpp"

namespace hyperts {

enum class Activation { Linear, ReLU };

std::string_view to_string(Activation act);
Activation activation_from_string(std::string_view name);

/// A trainable tensor and its accumulated gradient (same shape).
struct Param {
  std::string name;
  Tensor value;
  Tensor grad;
};

/// Common contract of every layer.
///
/// forward() caches whatever backward() needs for the most recent input.
/// backward() takes dL/dy, ACCUMULATES parameter gradients into
/// Param::grad and returns dL/dx. Call zero_grad() to reset the
/// accumulators (mini-batches rely on accumulation across samples).
class Layer {
 public:
  virtual ~Layer() = default;

  virtual std::string_view kind() const = 0;
  /// Throws std::invalid_argument on an incompatible input shape.
  virtual Shape output_shape(const Shape& in) const = 0;
  virtual Tensor forward(const Tensor& x, bool training) = 0;
  virtual Tensor backward(const Tensor& dy) = 0;
  /// Glorot-uniform weights, zero biases.
  virtual void initialize(Rng& rng) { (void)rng; }

  std::vector<Param>& params() { return params_; }
  const std::vector<Param>& params() const { return params_; }
  Param& param(std::string_view name);
  std::size_t param_count() const;
  void zero_grad();

 protected:
  Param& add_param(std::string name, Shape shape);
  void require_cache(bool cached) const;

  std::vector<Param> params_;
};

/// Hypercomplex dense layer: y = f(sum_s W[u,s] * x_s + b[u]) per unit u,
/// with left multiplication in the chosen 4D algebra and f applied to each
/// real component. Rank-2 input [time, 4*in_h] is processed per time step
/// with shared weights; rank-1 input [4*in_h] once.
///
/// Params: "W" [units, in_h, 4], "b" [units, 4].
class HyperDenseLayer final : public Layer {
 public:
  HyperDenseLayer(AlgebraKind algebra, std::size_t in_h, std::size_t units,
                  Activation act = Activation::Linear);

  std::string_view kind() const override { return "hyperdense"; }
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& dy) override;
  void initialize(Rng& rng) override;

  AlgebraKind algebra() const { return algebra_; }
  std::size_t in_h() const { return in_h_; }
  std::size_t units() const { return units_; }
  Activation activation() const { return act_; }

  HNum weight(std::size_t unit, std::size_t slot) const;
  void set_weight(std::size_t unit, std::size_t slot, const HNum& w);
  HNum bias(std::size_t unit) const;
  void set_bias(std::size_t unit, const HNum& b);

 private:
  AlgebraKind algebra_;
  const AlgebraTable* table_;
  std::size_t in_h_;
  std::size_t units_;
  Activation act_;

  Tensor x_;
  Tensor z_;
  std::vector<Mat4> blocks_;  // left_mul_matrix(W[u,s]) at forward time
  bool cached_ = false;
};

/// Fully connected layer y = f(Wx + b). Rank-2 input applies per row.
/// Params: "W" [units, in], "b" [units].
class DenseLayer final : public Layer {
 public:
  DenseLayer(std::size_t in, std::size_t units,
             Activation act = Activation::Linear);

  std::string_view kind() const override { return "dense"; }
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& dy) override;
  void initialize(Rng& rng) override;

  std::size_t in() const { return in_; }
  std::size_t units() const { return units_; }

 private:
  std::size_t in_;
  std::size_t units_;
  Activation act_;
  Tensor x_;
  Tensor z_;
  bool cached_ = false;
};

/// Valid (unpadded) stride-1 1-D cross-correlation over [time, channels].
/// Params: "W" [filters, kernel, channels], "b" [filters].
class Conv1DLayer final : public Layer {
 public:
  Conv1DLayer(std::size_t channels, std::size_t filters,
              std::size_t kernel_size, Activation act = Activation::ReLU);

  std::string_view kind() const override { return "conv1d"; }
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& dy) override;
  void initialize(Rng& rng) override;

  std::size_t kernel_size() const { return kernel_; }

 private:
  std::size_t channels_;
  std::size_t filters_;
  std::size_t kernel_;
  Activation act_;
  Tensor x_;
  Tensor z_;
  bool cached_ = false;
};

/// Standard LSTM (input, forget, cell, output gates in that order; no
/// peepholes) returning the full hidden sequence [time, units].
/// Params: "W" [4*units, channels], "U" [4*units, units], "b" [4*units].
class LstmLayer final : public Layer {
 public:
  LstmLayer(std::size_t channels, std::size_t units);

  std::string_view kind() const override { return "lstm"; }
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& dy) override;
  void initialize(Rng& rng) override;

 private:
  std::size_t channels_;
  std::size_t units_;
  Tensor x_;
  // Per step: activated gates [time, 4*units], cell and hidden states
  // [time + 1, units] with row 0 holding the zero initial state.
  Tensor gates_;
  Tensor cell_;
  Tensor hidden_;
  bool cached_ = false;
};

/// Non-overlapping max pooling along time; the trailing remainder is
/// dropped and ties route gradient to the first index.
class MaxPool1DLayer final : public Layer {
 public:
  explicit MaxPool1DLayer(std::size_t pool_size = 2);

  std::string_view kind() const override { return "maxpool1d"; }
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& dy) override;

 private:
  std::size_t pool_;
  Shape in_shape_;
  std::vector<std::size_t> argmax_;
  bool cached_ = false;
};

class FlattenLayer final : public Layer {
 public:
  std::string_view kind() const override { return "flatten"; }
  Shape output_shape(const Shape& in) const override;
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& dy) override;

 private:
  Shape in_shape_;
  bool cached_ = false;
};

/// Inverted dropout: in training each element is zeroed with probability
/// `rate` and survivors are scaled by 1/(1-rate); inference is identity.
class DropoutLayer final : public Layer {
 public:
  explicit DropoutLayer(double rate = 0.5, std::uint64_t seed = 0);

  std::string_view kind() const override { return "dropout"; }
  Shape output_shape(const Shape& in) const override { return in; }
  Tensor forward(const Tensor& x, bool training) override;
  Tensor backward(const Tensor& dy) override;

  void reseed(std::uint64_t seed) { rng_.seed(seed); }
  double rate() const { return rate_; }

 private:
  double rate_;
  Rng rng_;
  std::vector<double> mask_;  // empty when the last forward was identity
  bool cached_ = false;
};

}  // namespace hyperts
