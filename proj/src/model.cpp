#include "hyperts/model.hpp"

#include <fstream>
#include <stdexcept>

#include "hyperts/util.hpp"

namespace hyperts {

using nlohmann::json;

std::string_view to_string(TestLayerKind kind) {
  switch (kind) {
    case TestLayerKind::Cnn:
      return "cnn";
    case TestLayerKind::Lstm:
      return "lstm";
    case TestLayerKind::Hyper:
      return "h";
  }
  return "unknown";
}

TestLayerKind test_layer_from_string(std::string_view name) {
  if (name == "cnn") return TestLayerKind::Cnn;
  if (name == "lstm") return TestLayerKind::Lstm;
  if (name == "h" || name == "hyper") return TestLayerKind::Hyper;
  throw std::invalid_argument("unknown test layer '" + std::string(name) + "'");
}

ModelSpec ModelSpec::cnn(std::size_t filters) {
  ModelSpec s;
  s.test_layer = TestLayerKind::Cnn;
  s.test_units = filters;
  s.test_activation = Activation::ReLU;
  return s;
}

ModelSpec ModelSpec::lstm(std::size_t units) {
  ModelSpec s;
  s.test_layer = TestLayerKind::Lstm;
  s.test_units = units;
  return s;
}

ModelSpec ModelSpec::hyper(std::size_t units, AlgebraKind algebra) {
  ModelSpec s;
  s.test_layer = TestLayerKind::Hyper;
  s.test_units = units;
  s.algebra = algebra;
  s.test_activation = Activation::Linear;
  return s;
}

std::size_t min_window(const ModelSpec& spec) {
  // The pooled time axis must keep at least one window of kPoolSize.
  if (spec.test_layer == TestLayerKind::Cnn)
    return spec.kernel_size - 1 + kPoolSize;
  return kPoolSize;
}

void ModelSpec::validate() const {
  if (test_units == 0) throw std::invalid_argument("test_units must be >= 1");
  if (n_dense1 != 0 && n_dense1 != 1)
    throw std::invalid_argument("n_dense1 must be 0 or 1");
  if (n_dense2 != 0 && n_dense2 != 1)
    throw std::invalid_argument("n_dense2 must be 0 or 1");
  if (dense_units == 0) throw std::invalid_argument("dense_units must be >= 1");
  if (span < 1) throw std::invalid_argument("span must be >= 1");
  if (test_layer == TestLayerKind::Cnn && kernel_size == 0)
    throw std::invalid_argument("kernel_size must be >= 1");
  const std::size_t need = min_window(*this);
  if (window < need)
    throw std::invalid_argument("window " + std::to_string(window) +
                                " too small for this architecture; minimum is " +
                                std::to_string(need));
}

json spec_to_json(const ModelSpec& s) {
  json j;
  j["test_layer"] = std::string(to_string(s.test_layer));
  j["test_units"] = s.test_units;
  if (s.test_layer == TestLayerKind::Hyper)
    j["algebra"] = std::string(to_string(s.algebra));
  if (s.test_layer == TestLayerKind::Cnn) j["kernel_size"] = s.kernel_size;
  if (s.test_layer != TestLayerKind::Lstm)
    j["test_activation"] = std::string(to_string(s.test_activation));
  j["n_dense1"] = s.n_dense1;
  j["n_dense2"] = s.n_dense2;
  j["dense_units"] = s.dense_units;
  j["dense_activation"] = std::string(to_string(s.dense_activation));
  j["window"] = s.window;
  j["span"] = s.span;
  j["seed"] = s.seed;
  return j;
}

ModelSpec spec_from_json(const json& j) {
  const auto kind = test_layer_from_string(j.at("test_layer").get<std::string>());
  ModelSpec s;
  const auto units = j.at("test_units").get<std::size_t>();
  switch (kind) {
    case TestLayerKind::Cnn:
      s = ModelSpec::cnn(units);
      break;
    case TestLayerKind::Lstm:
      s = ModelSpec::lstm(units);
      break;
    case TestLayerKind::Hyper:
      s = ModelSpec::hyper(
          units, algebra_from_string(j.value("algebra", std::string("quaternion"))));
      break;
  }
  if (j.contains("kernel_size")) s.kernel_size = j["kernel_size"].get<std::size_t>();
  if (j.contains("test_activation"))
    s.test_activation =
        activation_from_string(j["test_activation"].get<std::string>());
  s.n_dense1 = j.at("n_dense1").get<int>();
  s.n_dense2 = j.at("n_dense2").get<int>();
  s.dense_units = j.at("dense_units").get<std::size_t>();
  s.dense_activation =
      activation_from_string(j.at("dense_activation").get<std::string>());
  s.window = j.at("window").get<std::size_t>();
  s.span = j.at("span").get<std::size_t>();
  s.seed = j.value("seed", std::uint64_t{0});
  return s;
}

std::string canonical_key(const ModelSpec& spec) {
  json j = spec_to_json(spec);
  if (spec.dense_inert()) {
    j.erase("dense_units");
    j.erase("dense_activation");
  }
  return j.dump();
}

std::uint64_t spec_id(const ModelSpec& spec) {
  return fnv1a64(canonical_key(spec));
}

// ---------------------------------------------------------------- Model

Model Model::build(const ModelSpec& spec) {
  spec.validate();
  Model m;
  m.spec_ = spec;
  Shape shape{spec.window, kInputChannels};
  auto push = [&](std::string name, std::unique_ptr<Layer> layer) {
    shape = layer->output_shape(shape);
    m.layers_.push_back({std::move(name), std::move(layer)});
  };

  switch (spec.test_layer) {
    case TestLayerKind::Cnn:
      push("test", std::make_unique<Conv1DLayer>(kInputChannels, spec.test_units,
                                                 spec.kernel_size,
                                                 spec.test_activation));
      break;
    case TestLayerKind::Lstm:
      push("test", std::make_unique<LstmLayer>(kInputChannels, spec.test_units));
      break;
    case TestLayerKind::Hyper:
      push("test", std::make_unique<HyperDenseLayer>(
                       spec.algebra, kInputChannels / 4, spec.test_units,
                       spec.test_activation));
      break;
  }
  if (spec.n_dense1 == 1)
    push("dense1", std::make_unique<DenseLayer>(shape.back(), spec.dense_units,
                                                spec.dense_activation));
  push("maxpool", std::make_unique<MaxPool1DLayer>(kPoolSize));
  push("flatten", std::make_unique<FlattenLayer>());
  if (spec.n_dense2 == 1)
    push("dense2", std::make_unique<DenseLayer>(shape.back(), spec.dense_units,
                                                spec.dense_activation));
  push("dropout", std::make_unique<DropoutLayer>(kDropoutRate,
                                                 mix64(spec.seed ^ 0xd0d0)));
  push("output", std::make_unique<DenseLayer>(shape.back(), spec.span,
                                              Activation::Linear));

  Rng rng(spec.seed);
  for (auto& nl : m.layers_) nl.layer->initialize(rng);
  return m;
}

Tensor Model::forward(const Tensor& x, bool training) {
  if (x.shape() != Shape{spec_.window, kInputChannels})
    throw std::invalid_argument("model input shape " + shape_str(x.shape()) +
                                " does not match " +
                                shape_str({spec_.window, kInputChannels}));
  Tensor h = layers_.front().layer->forward(x, training);
  for (std::size_t i = 1; i < layers_.size(); ++i)
    h = layers_[i].layer->forward(h, training);
  has_forward_ = true;
  return h;
}

Tensor Model::backward(const Tensor& dy) {
  if (!has_forward_)
    throw std::logic_error("model backward called before forward");
  Tensor g = layers_.back().layer->backward(dy);
  for (std::size_t i = layers_.size() - 1; i-- > 0;)
    g = layers_[i].layer->backward(g);
  return g;
}

void Model::zero_grad() {
  for (auto& nl : layers_) nl.layer->zero_grad();
}

void Model::reseed_dropout(std::uint64_t seed) {
  for (auto& nl : layers_)
    if (auto* d = dynamic_cast<DropoutLayer*>(nl.layer.get())) d->reseed(seed);
}

std::size_t Model::param_count() const {
  std::size_t n = 0;
  for (const auto& nl : layers_) n += nl.layer->param_count();
  return n;
}

std::vector<Param*> Model::parameters() {
  std::vector<Param*> out;
  for (auto& nl : layers_)
    for (auto& p : nl.layer->params()) out.push_back(&p);
  return out;
}

json model_to_json(const Model& model) {
  json params = json::array();
  for (const auto& nl : model.layers()) {
    for (const auto& p : nl.layer->params()) {
      params.push_back({{"layer", nl.name},
                        {"param", p.name},
                        {"shape", p.value.shape()},
                        {"values", p.value.values()}});
    }
  }
  return {{"spec", spec_to_json(model.spec())}, {"params", params}};
}

Model model_from_json(const json& j) {
  Model m = Model::build(spec_from_json(j.at("spec")));
  std::size_t consumed = 0;
  for (const auto& entry : j.at("params")) {
    const auto layer_name = entry.at("layer").get<std::string>();
    const auto param_name = entry.at("param").get<std::string>();
    Layer* layer = nullptr;
    for (auto& nl : m.layers())
      if (nl.name == layer_name) layer = nl.layer.get();
    if (!layer)
      throw std::invalid_argument("weights reference unknown layer '" +
                                  layer_name + "'");
    Param& p = layer->param(param_name);
    const auto shape = entry.at("shape").get<Shape>();
    if (shape != p.value.shape())
      throw std::invalid_argument("shape mismatch for " + layer_name + "." +
                                  param_name + ": " + shape_str(shape) +
                                  " vs " + shape_str(p.value.shape()));
    p.value = Tensor(shape, entry.at("values").get<std::vector<double>>());
    ++consumed;
  }
  if (consumed != m.parameters().size())
    throw std::invalid_argument("weights document is missing parameters");
  return m;
}

void save_model(const Model& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << model_to_json(model).dump() << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  return model_from_json(json::parse(in));
}

}  // namespace hyperts
