#include <doctest.h>

#include <cmath>
#include <memory>
#include <string>

#include "hyperts/layers.hpp"
#include "test_support.hpp"

using namespace hyperts;
using hyperts::testing::check_layer;
using hyperts::testing::random_tensor;
using hyperts::testing::randomize_params;

namespace {

constexpr double kGradTol = 1e-4;
constexpr int kInstances = 20;

void require_grad_ok(const hyperts::testing::GradCheck& g) {
  INFO(g.worst);
  CHECK(g.max_rel <= kGradTol);
}

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(uniform01(rng) * static_cast<double>(hi - lo + 1));
}

}  // namespace

TEST_CASE("tensor basics") {
  Tensor t({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(t.rank() == 2);
  CHECK(t.size() == 6);
  CHECK(t.at(1, 2) == 6.0);
  CHECK_THROWS_AS(Tensor({2, 0}), std::invalid_argument);
  CHECK_THROWS_AS(Tensor({2, 2}, {1.0, 2.0}), std::invalid_argument);
  t.reshape({6});
  CHECK(t.shape() == Shape{6});
  CHECK_THROWS(t.reshape({4}));
}

TEST_CASE("activation names") {
  CHECK(activation_from_string("relu") == Activation::ReLU);
  CHECK(activation_from_string(to_string(Activation::Linear)) == Activation::Linear);
  CHECK_THROWS_AS(activation_from_string("tanh"), std::invalid_argument);
}

// ------------------------------------------------------------ HyperDense

TEST_CASE("hyperdense: identity weight passes input through") {
  for (auto kind : {AlgebraKind::Quaternion, AlgebraKind::Coquaternion,
                    AlgebraKind::Clifford11}) {
    HyperDenseLayer layer(kind, 1, 1);
    layer.set_weight(0, 0, HNum{{1, 0, 0, 0}});
    const Tensor x({3, 4}, {1, 2, 3, 4, -1, 0.5, 2, 9, 0, 0, 0, 1});
    CHECK(layer.forward(x, false) == x);
    const Tensor dy({3, 4}, {0.1, 0.2, 0.3, 0.4, 1, 2, 3, 4, 5, 6, 7, 8});
    CHECK(layer.backward(dy) == dy);
  }
}

TEST_CASE("hyperdense: i times j is k") {
  HyperDenseLayer layer(AlgebraKind::Quaternion, 1, 1);
  layer.set_weight(0, 0, HNum{{0, 1, 0, 0}});
  const Tensor y = layer.forward(Tensor({1, 4}, {0, 0, 1, 0}), false);
  CHECK(y == Tensor({1, 4}, {0, 0, 0, 1}));
}

TEST_CASE("hyperdense: input gradient is the transposed left-multiplication matrix") {
  HyperDenseLayer layer(AlgebraKind::Quaternion, 1, 1);
  const HNum w{{0, 1, 0, 0}};
  layer.set_weight(0, 0, w);
  layer.forward(Tensor({4}, {0.3, -1, 2, 0.5}), false);
  const Tensor dy({4}, {1.5, -2, 0.25, 3});
  const Tensor dx = layer.backward(dy);
  const Mat4 m = left_mul_matrix(w, table_for(AlgebraKind::Quaternion));
  for (std::size_t c = 0; c < 4; ++c) {
    double expect = 0.0;
    for (std::size_t r = 0; r < 4; ++r) expect += m[r][c] * dy[r];
    CHECK(dx[c] == doctest::Approx(expect).epsilon(1e-15));
  }
}

TEST_CASE("hyperdense: matches explicit block-matrix product") {
  Rng rng(3);
  for (auto kind : {AlgebraKind::Quaternion, AlgebraKind::Coquaternion,
                    AlgebraKind::Clifford11}) {
    const std::size_t in_h = 2, units = 3;
    HyperDenseLayer layer(kind, in_h, units);
    randomize_params(layer, rng);
    const Tensor x = random_tensor({4 * in_h}, rng);
    const Tensor y = layer.forward(x, false);

    // Real (4 units) x (4 in_h) matrix assembled from 4x4 blocks.
    const auto& t = table_for(kind);
    for (std::size_t u = 0; u < units; ++u) {
      for (std::size_t r = 0; r < 4; ++r) {
        double acc = layer.bias(u)[r];
        for (std::size_t s = 0; s < in_h; ++s) {
          const Mat4 block = left_mul_matrix(layer.weight(u, s), t);
          for (std::size_t c = 0; c < 4; ++c) acc += block[r][c] * x[4 * s + c];
        }
        CHECK(y[4 * u + r] == doctest::Approx(acc).epsilon(1e-13));
      }
    }
  }
}

TEST_CASE("hyperdense: real-only weights act like a 4-block-diagonal dense layer") {
  Rng rng(5);
  for (auto kind : {AlgebraKind::Quaternion, AlgebraKind::Coquaternion,
                    AlgebraKind::Clifford11}) {
    const std::size_t in_h = 3, units = 2;
    HyperDenseLayer h(kind, in_h, units, Activation::ReLU);
    DenseLayer d(4 * in_h, 4 * units, Activation::ReLU);
    auto& dw = d.param("W").value;  // [4*units, 4*in_h]
    auto& db = d.param("b").value;
    for (std::size_t u = 0; u < units; ++u) {
      HNum b;
      for (auto& v : b.v) v = uniform(rng, -1, 1);
      h.set_bias(u, b);
      for (std::size_t r = 0; r < 4; ++r) db[4 * u + r] = b[r];
      for (std::size_t s = 0; s < in_h; ++s) {
        const double a = uniform(rng, -1, 1);
        h.set_weight(u, s, HNum{{a, 0, 0, 0}});
        for (std::size_t r = 0; r < 4; ++r) dw[(4 * u + r) * (4 * in_h) + 4 * s + r] = a;
      }
    }
    const Tensor x = random_tensor({5, 4 * in_h}, rng);
    const Tensor yh = h.forward(x, false), yd = d.forward(x, false);
    REQUIRE(yh.shape() == yd.shape());
    for (std::size_t i = 0; i < yh.size(); ++i)
      CHECK(yh[i] == doctest::Approx(yd[i]).epsilon(1e-13));
  }
}

TEST_CASE("hyperdense: shapes and parameter counts") {
  HyperDenseLayer layer(AlgebraKind::Coquaternion, 3, 5);
  CHECK(layer.param_count() == 4 * 5 * 3 + 4 * 5);
  CHECK(layer.output_shape({7, 12}) == Shape{7, 20});
  CHECK(layer.output_shape({12}) == Shape{20});
  CHECK_THROWS_AS(layer.output_shape({7, 8}), std::invalid_argument);
  CHECK_THROWS_AS(layer.forward(Tensor({7, 13}), false), std::invalid_argument);
  CHECK_THROWS_AS(layer.backward(Tensor({7, 20})), std::logic_error);

  for (std::size_t m = 1; m <= 8; ++m)
    for (std::size_t n = 1; n <= 8; ++n) {
      HyperDenseLayer hl(AlgebraKind::Quaternion, m, n);
      DenseLayer dl(4 * m, 4 * n);
      CHECK(hl.param_count() == 4 * m * n + 4 * n);
      CHECK(dl.param_count() == 16 * m * n + 4 * n);
      CHECK(hl.param_count() < dl.param_count());
    }
}

TEST_CASE("hyperdense: finite-difference gradients") {
  Rng rng(101);
  for (auto kind : {AlgebraKind::Quaternion, AlgebraKind::Coquaternion,
                    AlgebraKind::Clifford11}) {
    for (int n = 0; n < kInstances; ++n) {
      const auto act = n % 2 ? Activation::ReLU : Activation::Linear;
      HyperDenseLayer layer(kind, pick(rng, 1, 3), pick(rng, 1, 3), act);
      randomize_params(layer, rng);
      const Tensor x = n % 3 == 0 ? random_tensor({4 * layer.in_h()}, rng)
                                  : random_tensor({pick(rng, 1, 4), 4 * layer.in_h()}, rng);
      require_grad_ok(check_layer(layer, x, rng));
    }
  }
}

// ----------------------------------------------------------------- Dense

TEST_CASE("dense: hand examples") {
  DenseLayer id(3, 3);
  auto& w = id.param("W").value;
  for (std::size_t i = 0; i < 3; ++i) w[i * 3 + i] = 1.0;
  const Tensor x({3}, {1.5, -2, 7});
  CHECK(id.forward(x, false) == x);

  DenseLayer sum(4, 1);
  sum.param("W").value.fill(1.0);
  CHECK(sum.forward(Tensor({4}, {1, 2, 3, 4}), false) == Tensor({1}, {10.0}));
  CHECK(sum.param_count() == 5);

  DenseLayer d(4, 8);
  CHECK(d.param_count() == 40);
  CHECK(d.output_shape({6, 4}) == Shape{6, 8});
  CHECK_THROWS_AS(d.forward(Tensor({5}), false), std::invalid_argument);
}

TEST_CASE("dense: finite-difference gradients") {
  Rng rng(202);
  for (int n = 0; n < kInstances; ++n) {
    DenseLayer layer(pick(rng, 1, 6), pick(rng, 1, 5),
                     n % 2 ? Activation::ReLU : Activation::Linear);
    randomize_params(layer, rng);
    const Tensor x = n % 2 ? random_tensor({layer.in()}, rng)
                           : random_tensor({pick(rng, 1, 4), layer.in()}, rng);
    require_grad_ok(check_layer(layer, x, rng));
  }
}

// ---------------------------------------------------------------- Conv1D

TEST_CASE("conv1d: hand examples") {
  Conv1DLayer ident(1, 1, 1, Activation::Linear);
  ident.param("W").value.fill(1.0);
  const Tensor x({3, 1}, {1, 2, 3});
  CHECK(ident.forward(x, false) == x);

  Conv1DLayer sums(1, 1, 2, Activation::Linear);
  sums.param("W").value.fill(1.0);
  CHECK(sums.forward(x, false) == Tensor({2, 1}, {3, 5}));

  Conv1DLayer c(4, 8, 3);
  CHECK(c.param_count() == 8 * 3 * 4 + 8);
  CHECK(c.output_shape({10, 4}) == Shape{8, 8});
  CHECK_THROWS_AS(c.forward(Tensor({2, 4}), false), std::invalid_argument);
  CHECK_THROWS_AS(c.forward(Tensor({5, 3}), false), std::invalid_argument);
}

TEST_CASE("conv1d: finite-difference gradients") {
  Rng rng(303);
  for (int n = 0; n < kInstances; ++n) {
    const std::size_t channels = pick(rng, 1, 4), kernel = pick(rng, 1, 3);
    Conv1DLayer layer(channels, pick(rng, 1, 4), kernel,
                      n % 2 ? Activation::ReLU : Activation::Linear);
    randomize_params(layer, rng);
    const Tensor x = random_tensor({kernel + pick(rng, 0, 4), channels}, rng);
    require_grad_ok(check_layer(layer, x, rng));
  }
}

// ------------------------------------------------------------------ LSTM

TEST_CASE("lstm: zero weights give zero hidden state") {
  LstmLayer layer(3, 4);
  Rng rng(1);
  const Tensor y = layer.forward(random_tensor({6, 3}, rng), false);
  CHECK(y.shape() == Shape{6, 4});
  for (double v : y.data()) CHECK(v == 0.0);
}

TEST_CASE("lstm: single hand-computed step") {
  LstmLayer layer(1, 1);
  for (auto& p : layer.params())
    if (p.name != "b") p.value.fill(1.0);
  const Tensor y = layer.forward(Tensor({1, 1}, {1.0}), false);
  const double s = 1.0 / (1.0 + std::exp(-1.0));
  CHECK(y[0] == doctest::Approx(s * std::tanh(s * std::tanh(1.0))).epsilon(1e-15));
  CHECK(y[0] == doctest::Approx(0.36960635293570576).epsilon(1e-15));
}

TEST_CASE("lstm: parameter count") {
  LstmLayer layer(4, 8);
  CHECK(layer.param_count() == 4 * (4 * 8 + 8 * 8 + 8));
}

TEST_CASE("lstm: finite-difference gradients through several steps") {
  Rng rng(404);
  for (int n = 0; n < kInstances; ++n) {
    LstmLayer layer(pick(rng, 1, 4), pick(rng, 1, 3));
    randomize_params(layer, rng, 0.8);
    const std::size_t channels = layer.params()[0].value.dim(1);
    const Tensor x = random_tensor({n < 5 ? 5 : pick(rng, 1, 6), channels}, rng);
    require_grad_ok(check_layer(layer, x, rng));
  }
}

// --------------------------------------------------------------- MaxPool

TEST_CASE("maxpool: routing and ties") {
  MaxPool1DLayer pool(2);
  CHECK(pool.forward(Tensor({4, 1}, {1, 3, 2, 5}), false) == Tensor({2, 1}, {3, 5}));
  CHECK(pool.backward(Tensor({2, 1}, {7, 9})) == Tensor({4, 1}, {0, 7, 0, 9}));

  CHECK(pool.forward(Tensor({5, 1}, 2.0), false) == Tensor({2, 1}, 2.0));
  CHECK(pool.backward(Tensor({2, 1}, {1, 1})) == Tensor({5, 1}, {1, 0, 1, 0, 0}));
  CHECK_THROWS_AS(pool.forward(Tensor({1, 3}), false), std::invalid_argument);
}

TEST_CASE("maxpool: finite-difference gradients") {
  Rng rng(505);
  for (int n = 0; n < kInstances; ++n) {
    MaxPool1DLayer layer(2);
    // Continuous random inputs make ties improbable, so the max is locally smooth.
    const Tensor x = random_tensor({pick(rng, 2, 7), pick(rng, 1, 4)}, rng);
    require_grad_ok(check_layer(layer, x, rng));
  }
}

// --------------------------------------------------------------- Flatten

TEST_CASE("flatten: row-major round trip") {
  FlattenLayer f;
  const Tensor x({2, 3}, {1, 2, 3, 4, 5, 6});
  const Tensor y = f.forward(x, false);
  CHECK(y == Tensor({6}, {1, 2, 3, 4, 5, 6}));
  const Tensor back = f.backward(Tensor({6}, 1.0));
  CHECK(back.shape() == Shape{2, 3});
  CHECK(f.backward(y) == x);
}

TEST_CASE("flatten: finite-difference gradients") {
  Rng rng(606);
  for (int n = 0; n < kInstances; ++n) {
    FlattenLayer layer;
    require_grad_ok(check_layer(layer, random_tensor({pick(rng, 1, 5), pick(rng, 1, 5)}, rng), rng));
  }
}

// --------------------------------------------------------------- Dropout

TEST_CASE("dropout: identity outside training and at rate zero") {
  Rng rng(9);
  const Tensor x = random_tensor({50}, rng);
  DropoutLayer d(0.5, 1);
  CHECK(d.forward(x, false) == x);
  CHECK(d.backward(x) == x);
  DropoutLayer none(0.0, 1);
  CHECK(none.forward(x, true) == x);
  CHECK(none.forward(x, false) == x);
  CHECK_THROWS_AS(DropoutLayer(1.0), std::invalid_argument);
  CHECK_THROWS_AS(DropoutLayer(-0.1), std::invalid_argument);
}

TEST_CASE("dropout: zero fraction and scaling") {
  DropoutLayer d(0.5, 1234);
  const Tensor x({100000}, 1.0);
  const Tensor y = d.forward(x, true);
  std::size_t zeros = 0;
  for (double v : y.data()) {
    if (v == 0.0)
      ++zeros;
    else
      CHECK(v == 2.0);
  }
  const double frac = static_cast<double>(zeros) / 100000.0;
  CHECK(frac == doctest::Approx(0.5).epsilon(0.02));
  CHECK(std::abs(frac - 0.5) <= 0.01);

  // Backward reuses the mask.
  const Tensor g = d.backward(Tensor({100000}, 1.0));
  CHECK(g == y);
}

TEST_CASE("dropout: reseeding reproduces the mask") {
  DropoutLayer a(0.5, 77), b(0.5, 0);
  b.reseed(77);
  const Tensor x({64}, 1.0);
  CHECK(a.forward(x, true) == b.forward(x, true));
}

// --------------------------------------------------------- layer contract

TEST_CASE("gradient accumulation and zero_grad") {
  Rng rng(8);
  DenseLayer layer(3, 2);
  randomize_params(layer, rng);
  const Tensor x = random_tensor({3}, rng), dy = random_tensor({2}, rng);
  layer.forward(x, false);
  layer.backward(dy);
  const Tensor once = layer.param("W").grad;
  layer.backward(dy);
  for (std::size_t i = 0; i < once.size(); ++i)
    CHECK(layer.param("W").grad[i] == doctest::Approx(2 * once[i]));
  layer.zero_grad();
  for (const auto& p : layer.params()) {
    CHECK(p.grad.shape() == p.value.shape());
    for (double v : p.grad.data()) CHECK(v == 0.0);
  }
  CHECK_THROWS_AS(layer.param("nope"), std::out_of_range);
}

TEST_CASE("glorot initialization stays inside its limit and zeroes biases") {
  Rng rng(12);
  HyperDenseLayer h(AlgebraKind::Quaternion, 2, 3);
  h.initialize(rng);
  // Real widths: fan_in 8, fan_out 12.
  const double limit = std::sqrt(6.0 / (8.0 + 12.0));
  bool nonzero = false;
  for (double v : h.param("W").value.data()) {
    CHECK(std::abs(v) <= limit);
    nonzero |= v != 0.0;
  }
  CHECK(nonzero);
  for (double v : h.param("b").value.data()) CHECK(v == 0.0);
}

TEST_CASE("gradient checker skips coordinates sitting on a ReLU kink") {
  Rng rng(909);
  DenseLayer relu(1, 1, Activation::ReLU);
  relu.param("W").value.fill(1.0);
  const auto at_kink = check_layer(relu, Tensor({1}, {0.0}), rng);
  CHECK(at_kink.kinks > 0);

  DenseLayer linear(1, 1);
  linear.param("W").value.fill(1.0);
  const auto smooth = check_layer(linear, Tensor({1}, {0.0}), rng);
  CHECK(smooth.kinks == 0);
  CHECK(smooth.compared == 3);
}
