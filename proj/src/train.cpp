#include "hyperts/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "hyperts/format.hpp"
#include "hyperts/util.hpp"

namespace hyperts {

namespace {

void check_same(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape())
    throw std::invalid_argument(std::string(what) + ": shape mismatch " +
                                shape_str(a.shape()) + " vs " +
                                shape_str(b.shape()));
}

}  // namespace

double mse(const Tensor& pred, const Tensor& target) {
  check_same(pred, target, "mse");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - target[i];
    s += d * d;
  }
  return s / static_cast<double>(pred.size());
}

Tensor mse_grad(const Tensor& pred, const Tensor& target) {
  check_same(pred, target, "mse_grad");
  Tensor g(pred.shape());
  const double scale = 2.0 / static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i)
    g[i] = scale * (pred[i] - target[i]);
  return g;
}

double mae(const Tensor& pred, const Tensor& target) {
  check_same(pred, target, "mae");
  double s = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) s += std::abs(pred[i] - target[i]);
  return s / static_cast<double>(pred.size());
}

void adam_step(AdamState& st, std::span<Param* const> params) {
  if (st.m.empty()) {
    for (const Param* p : params) {
      st.m.emplace_back(p->value.shape());
      st.v.emplace_back(p->value.shape());
    }
  }
  if (st.m.size() != params.size())
    throw std::invalid_argument("adam_step: parameter list changed size");
  ++st.t;
  const double c1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.t));
  const double c2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Param& p = *params[k];
    auto m = st.m[k].data();
    auto v = st.v[k].data();
    auto w = p.value.data();
    const auto g = p.grad.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = st.beta1 * m[i] + (1.0 - st.beta1) * g[i];
      v[i] = st.beta2 * v[i] + (1.0 - st.beta2) * g[i] * g[i];
      const double mhat = m[i] / c1;
      const double vhat = v[i] / c2;
      w[i] -= st.lr * mhat / (std::sqrt(vhat) + st.eps);
    }
  }
}

void TrainConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
  if (!(lr >= 0.0)) throw std::invalid_argument("lr must be >= 0");
}

std::vector<EpochStats> fit(Model& model, const WindowedDataset& data,
                            std::span<const std::size_t> indices,
                            const TrainConfig& config) {
  config.validate();
  if (indices.empty()) throw std::invalid_argument("fit: empty training slice");

  Rng rng(mix64(config.seed));
  model.reseed_dropout(mix64(config.seed ^ 0x5eedd0d0ULL));
  AdamState adam;
  adam.lr = config.lr;
  const auto params = model.parameters();

  std::vector<std::size_t> order(indices.begin(), indices.end());
  std::vector<EpochStats> history;
  history.reserve(static_cast<std::size_t>(config.epochs));
  const auto batch = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    if (config.shuffle) {
      // Fisher-Yates with our own uniform draw keeps the permutation
      // independent of the standard library implementation.
      for (std::size_t i = order.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
        std::swap(order[i - 1], order[std::min(j, i - 1)]);
      }
    }
    double loss_sum = 0.0, mae_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(order.size(), start + batch);
      const double inv_b = 1.0 / static_cast<double>(stop - start);
      model.zero_grad();
      for (std::size_t k = start; k < stop; ++k) {
        const std::size_t s = order[k];
        const Tensor pred = model.forward(data.X[s], true);
        loss_sum += mse(pred, data.Y[s]);
        mae_sum += mae(pred, data.Y[s]);
        Tensor g = mse_grad(pred, data.Y[s]);
        for (double& v : g.data()) v *= inv_b;
        model.backward(g);
      }
      adam_step(adam, params);
    }
    const double n = static_cast<double>(order.size());
    history.push_back({epoch, loss_sum / n, mae_sum / n});
  }
  return history;
}

double evaluate(Model& model, const WindowedDataset& data,
                std::span<const std::size_t> indices) {
  if (indices.empty()) throw std::invalid_argument("evaluate: empty slice");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t s : indices) {
    const Tensor pred = model.forward(data.X[s], false);
    for (std::size_t i = 0; i < pred.size(); ++i)
      sum += std::abs(pred[i] - data.Y[s][i]);
    count += pred.size();
  }
  return sum / static_cast<double>(count);
}

void write_history_csv(const std::vector<EpochStats>& history,
                       const std::string& path,
                       const std::vector<std::string>& header_comments) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& c : header_comments) out << "# " << c << '\n';
  out << "epoch,loss,mae\n";
  for (const auto& e : history)
    out << e.epoch << ',' << fmt_double(e.loss) << ',' << fmt_double(e.mae) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace hyperts
