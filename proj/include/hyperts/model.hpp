#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "hyperts/algebra.hpp"
#include "hyperts/layers.hpp"
#include "hyperts/tensor.hpp"

namespace hyperts {

enum class TestLayerKind { Cnn, Lstm, Hyper };

std::string_view to_string(TestLayerKind kind);
/// "cnn", "lstm", "h" (also "hyper").
TestLayerKind test_layer_from_string(std::string_view name);

inline constexpr std::size_t kInputChannels = 4;
inline constexpr std::size_t kPoolSize = 2;
inline constexpr double kDropoutRate = 0.5;
inline constexpr std::size_t kDefaultKernelSize = 3;

/// One point of the architecture space:
///   test layer -> [dense1?] -> maxpool(2) -> flatten -> [dense2?]
///   -> dropout(0.5) -> dense(span)
/// dense_units / dense_activation are shared by both optional dense layers.
struct ModelSpec {
  TestLayerKind test_layer = TestLayerKind::Hyper;
  std::size_t test_units = 1;  // n_filters, n_units or n_hunits
  AlgebraKind algebra = AlgebraKind::Quaternion;  // Hyper only
  std::size_t kernel_size = kDefaultKernelSize;   // Cnn only
  Activation test_activation = Activation::Linear;  // Cnn and Hyper
  int n_dense1 = 0;
  int n_dense2 = 0;
  std::size_t dense_units = 8;
  Activation dense_activation = Activation::Linear;
  std::size_t window = 10;
  std::size_t span = 1;
  std::uint64_t seed = 0;

  static ModelSpec cnn(std::size_t filters);
  static ModelSpec lstm(std::size_t units);
  static ModelSpec hyper(std::size_t units, AlgebraKind algebra);

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;
  /// Both optional dense layers absent: dense_units/activation are inert.
  bool dense_inert() const { return n_dense1 == 0 && n_dense2 == 0; }

  bool operator==(const ModelSpec&) const = default;
};

/// Flat JSON object (field names as in ModelSpec, enums as lowercase
/// strings). Fields that do not apply to the test layer are omitted.
nlohmann::json spec_to_json(const ModelSpec& spec);
ModelSpec spec_from_json(const nlohmann::json& j);

/// Serialization with inert fields dropped; equal for specs that build
/// behaviorally identical models. Used as the resumption/dedup key.
std::string canonical_key(const ModelSpec& spec);
std::uint64_t spec_id(const ModelSpec& spec);

/// Minimum window for which the spec's stack is well formed.
std::size_t min_window(const ModelSpec& spec);

struct NamedLayer {
  std::string name;
  std::unique_ptr<Layer> layer;
};

class Model {
 public:
  /// Deterministic given spec.seed. Throws std::invalid_argument on an
  /// invalid spec, including a window below min_window(spec).
  static Model build(const ModelSpec& spec);

  /// x: [window, 4] -> [span].
  Tensor forward(const Tensor& x, bool training);
  /// Accumulates parameter gradients and returns dL/dx; throws
  /// std::logic_error when no forward pass has been cached.
  Tensor backward(const Tensor& dy);

  void zero_grad();
  void reseed_dropout(std::uint64_t seed);

  std::size_t param_count() const;
  std::vector<Param*> parameters();

  const ModelSpec& spec() const { return spec_; }
  std::vector<NamedLayer>& layers() { return layers_; }
  const std::vector<NamedLayer>& layers() const { return layers_; }

 private:
  ModelSpec spec_;
  std::vector<NamedLayer> layers_;
  bool has_forward_ = false;
};

/// {"spec": {...}, "params": [{"layer","param","shape","values"}, ...]}.
/// Doubles are written in shortest round-trip form, so load(save(m))
/// reproduces m bit for bit.
nlohmann::json model_to_json(const Model& model);
Model model_from_json(const nlohmann::json& j);

void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

}  // namespace hyperts
