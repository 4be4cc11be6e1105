#include "hyperts/layers.hpp"

#include <cmath>
#include <stdexcept>

namespace hyperts {

namespace {

double apply(Activation act, double z) {
  return act == Activation::ReLU ? (z > 0.0 ? z : 0.0) : z;
}

// Derivative evaluated at the pre-activation; ReLU'(0) = 0.
double slope(Activation act, double z) {
  return act == Activation::ReLU ? (z > 0.0 ? 1.0 : 0.0) : 1.0;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

void glorot(Tensor& w, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : w.data()) v = uniform(rng, -limit, limit);
}

[[noreturn]] void shape_error(std::string_view layer, const Shape& got,
                              const std::string& want) {
  throw std::invalid_argument(std::string(layer) + ": input shape " +
                              shape_str(got) + " incompatible, expected " +
                              want);
}

// Rows and width of a rank-1 (single row) or rank-2 input.
std::pair<std::size_t, std::size_t> rows_cols(const Shape& s) {
  if (s.size() == 1) return {1, s[0]};
  return {s[0], s[1]};
}

Shape with_last(const Shape& in, std::size_t last) {
  Shape out = in;
  out.back() = last;
  return out;
}

}  // namespace

std::string_view to_string(Activation act) {
  return act == Activation::ReLU ? "relu" : "linear";
}

Activation activation_from_string(std::string_view name) {
  if (name == "linear") return Activation::Linear;
  if (name == "relu") return Activation::ReLU;
  throw std::invalid_argument("unknown activation '" + std::string(name) + "'");
}

// ---------------------------------------------------------------- Layer

Param& Layer::param(std::string_view name) {
  for (auto& p : params_)
    if (p.name == name) return p;
  throw std::out_of_range("no parameter named '" + std::string(name) + "'");
}

std::size_t Layer::param_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

void Layer::zero_grad() {
  for (auto& p : params_) p.grad.fill(0.0);
}

Param& Layer::add_param(std::string name, Shape shape) {
  params_.push_back(Param{std::move(name), Tensor(shape), Tensor(shape)});
  return params_.back();
}

void Layer::require_cache(bool cached) const {
  if (!cached)
    throw std::logic_error(std::string(kind()) +
                           ": backward called before forward");
}

// ----------------------------------------------------------- HyperDense

HyperDenseLayer::HyperDenseLayer(AlgebraKind algebra, std::size_t in_h,
                                 std::size_t units, Activation act)
    : algebra_(algebra),
      table_(&table_for(algebra)),
      in_h_(in_h),
      units_(units),
      act_(act) {
  if (in_h == 0 || units == 0)
    throw std::invalid_argument("hyperdense: in_h and units must be >= 1");
  add_param("W", {units, in_h, 4});
  add_param("b", {units, 4});
}

Shape HyperDenseLayer::output_shape(const Shape& in) const {
  if ((in.size() != 1 && in.size() != 2) || in.back() != 4 * in_h_)
    shape_error(kind(), in,
                "[time, " + std::to_string(4 * in_h_) + "] (last dim = 4*in_h)");
  return with_last(in, 4 * units_);
}

void HyperDenseLayer::initialize(Rng& rng) {
  glorot(params_[0].value, 4 * in_h_, 4 * units_, rng);
  params_[1].value.fill(0.0);
}

HNum HyperDenseLayer::weight(std::size_t unit, std::size_t slot) const {
  const auto w = params_[0].value.data().subspan((unit * in_h_ + slot) * 4, 4);
  return HNum{{w[0], w[1], w[2], w[3]}};
}

void HyperDenseLayer::set_weight(std::size_t unit, std::size_t slot,
                                 const HNum& w) {
  auto dst = params_[0].value.data().subspan((unit * in_h_ + slot) * 4, 4);
  for (std::size_t d = 0; d < 4; ++d) dst[d] = w[d];
}

HNum HyperDenseLayer::bias(std::size_t unit) const {
  const auto b = params_[1].value.data().subspan(unit * 4, 4);
  return HNum{{b[0], b[1], b[2], b[3]}};
}

void HyperDenseLayer::set_bias(std::size_t unit, const HNum& b) {
  auto dst = params_[1].value.data().subspan(unit * 4, 4);
  for (std::size_t d = 0; d < 4; ++d) dst[d] = b[d];
}

Tensor HyperDenseLayer::forward(const Tensor& x, bool) {
  const Shape out_shape = output_shape(x.shape());
  const auto [rows, in_w] = rows_cols(x.shape());

  blocks_.resize(units_ * in_h_);
  for (std::size_t u = 0; u < units_; ++u)
    for (std::size_t s = 0; s < in_h_; ++s)
      blocks_[u * in_h_ + s] = left_mul_matrix(weight(u, s), *table_);

  const auto bias_data = params_[1].value.data();
  Tensor z(out_shape);
  const std::size_t out_w = 4 * units_;
  for (std::size_t t = 0; t < rows; ++t) {
    const double* xr = x.data().data() + t * in_w;
    double* zr = z.data().data() + t * out_w;
    for (std::size_t u = 0; u < units_; ++u) {
      double acc[4] = {bias_data[4 * u], bias_data[4 * u + 1],
                       bias_data[4 * u + 2], bias_data[4 * u + 3]};
      for (std::size_t s = 0; s < in_h_; ++s) {
        const Mat4& m = blocks_[u * in_h_ + s];
        const double* xs = xr + 4 * s;
        for (std::size_t d = 0; d < 4; ++d)
          acc[d] += m[d][0] * xs[0] + m[d][1] * xs[1] + m[d][2] * xs[2] +
                    m[d][3] * xs[3];
      }
      for (std::size_t d = 0; d < 4; ++d) zr[4 * u + d] = acc[d];
    }
  }

  x_ = x;
  Tensor y = z;
  if (act_ != Activation::Linear)
    for (double& v : y.data()) v = apply(act_, v);
  z_ = std::move(z);
  cached_ = true;
  return y;
}

Tensor HyperDenseLayer::backward(const Tensor& dy) {
  require_cache(cached_);
  if (dy.shape() != z_.shape())
    shape_error("hyperdense backward", dy.shape(), shape_str(z_.shape()));

  const auto [rows, in_w] = rows_cols(x_.shape());
  const std::size_t out_w = 4 * units_;
  Tensor dz = dy;
  if (act_ != Activation::Linear)
    for (std::size_t i = 0; i < dz.size(); ++i) dz[i] *= slope(act_, z_[i]);

  Tensor dx(x_.shape());
  auto dW = params_[0].grad.data();
  auto db = params_[1].grad.data();
  const auto& c = table_->c;

  for (std::size_t u = 0; u < units_; ++u) {
    for (std::size_t s = 0; s < in_h_; ++s) {
      const Mat4& m = blocks_[u * in_h_ + s];
      // g[d][b] = sum_t dz[t,u,d] * x[t,s,b]; dW[u,s,a] = sum c[a][b][d] g[d][b]
      double g[4][4] = {};
      for (std::size_t t = 0; t < rows; ++t) {
        const double* dzr = dz.data().data() + t * out_w + 4 * u;
        const double* xs = x_.data().data() + t * in_w + 4 * s;
        double* dxs = dx.data().data() + t * in_w + 4 * s;
        for (std::size_t d = 0; d < 4; ++d) {
          for (std::size_t b = 0; b < 4; ++b) {
            g[d][b] += dzr[d] * xs[b];
            dxs[b] += m[d][b] * dzr[d];
          }
        }
      }
      double* dw = dW.data() + (u * in_h_ + s) * 4;
      for (std::size_t a = 0; a < 4; ++a)
        for (std::size_t b = 0; b < 4; ++b)
          for (std::size_t d = 0; d < 4; ++d) dw[a] += c[a][b][d] * g[d][b];
    }
    for (std::size_t t = 0; t < rows; ++t)
      for (std::size_t d = 0; d < 4; ++d)
        db[4 * u + d] += dz.data()[t * out_w + 4 * u + d];
  }
  return dx;
}

// ---------------------------------------------------------------- Dense

DenseLayer::DenseLayer(std::size_t in, std::size_t units, Activation act)
    : in_(in), units_(units), act_(act) {
  if (in == 0 || units == 0)
    throw std::invalid_argument("dense: in and units must be >= 1");
  add_param("W", {units, in});
  add_param("b", {units});
}

Shape DenseLayer::output_shape(const Shape& in) const {
  if ((in.size() != 1 && in.size() != 2) || in.back() != in_)
    shape_error(kind(), in, "last dim " + std::to_string(in_));
  return with_last(in, units_);
}

void DenseLayer::initialize(Rng& rng) {
  glorot(params_[0].value, in_, units_, rng);
  params_[1].value.fill(0.0);
}

Tensor DenseLayer::forward(const Tensor& x, bool) {
  Tensor z(output_shape(x.shape()));
  const auto [rows, cols] = rows_cols(x.shape());
  const double* w = params_[0].value.data().data();
  const double* b = params_[1].value.data().data();
  for (std::size_t t = 0; t < rows; ++t) {
    const double* xr = x.data().data() + t * cols;
    double* zr = z.data().data() + t * units_;
    for (std::size_t u = 0; u < units_; ++u) {
      const double* wr = w + u * in_;
      double acc = b[u];
      for (std::size_t i = 0; i < in_; ++i) acc += wr[i] * xr[i];
      zr[u] = acc;
    }
  }
  x_ = x;
  Tensor y = z;
  if (act_ != Activation::Linear)
    for (double& v : y.data()) v = apply(act_, v);
  z_ = std::move(z);
  cached_ = true;
  return y;
}

Tensor DenseLayer::backward(const Tensor& dy) {
  require_cache(cached_);
  if (dy.shape() != z_.shape())
    shape_error("dense backward", dy.shape(), shape_str(z_.shape()));
  const auto [rows, cols] = rows_cols(x_.shape());
  const double* w = params_[0].value.data().data();
  double* dw = params_[0].grad.data().data();
  double* db = params_[1].grad.data().data();
  Tensor dx(x_.shape());
  for (std::size_t t = 0; t < rows; ++t) {
    const double* xr = x_.data().data() + t * cols;
    double* dxr = dx.data().data() + t * cols;
    for (std::size_t u = 0; u < units_; ++u) {
      const std::size_t k = t * units_ + u;
      const double g = dy[k] * slope(act_, z_[k]);
      if (g == 0.0) continue;
      db[u] += g;
      double* dwr = dw + u * in_;
      const double* wr = w + u * in_;
      for (std::size_t i = 0; i < in_; ++i) {
        dwr[i] += g * xr[i];
        dxr[i] += g * wr[i];
      }
    }
  }
  return dx;
}

// --------------------------------------------------------------- Conv1D

Conv1DLayer::Conv1DLayer(std::size_t channels, std::size_t filters,
                         std::size_t kernel_size, Activation act)
    : channels_(channels), filters_(filters), kernel_(kernel_size), act_(act) {
  if (channels == 0 || filters == 0 || kernel_size == 0)
    throw std::invalid_argument("conv1d: channels, filters, kernel must be >= 1");
  add_param("W", {filters, kernel_size, channels});
  add_param("b", {filters});
}

Shape Conv1DLayer::output_shape(const Shape& in) const {
  if (in.size() != 2 || in[1] != channels_)
    shape_error(kind(), in, "[time, " + std::to_string(channels_) + "]");
  if (in[0] < kernel_)
    throw std::invalid_argument("conv1d: time length " + std::to_string(in[0]) +
                                " shorter than kernel " +
                                std::to_string(kernel_));
  return {in[0] - kernel_ + 1, filters_};
}

void Conv1DLayer::initialize(Rng& rng) {
  glorot(params_[0].value, kernel_ * channels_, kernel_ * filters_, rng);
  params_[1].value.fill(0.0);
}

// Rows t..t+kernel-1 of the input are contiguous, so each output is a dot
// product of a filter with a slice of the flat input.
Tensor Conv1DLayer::forward(const Tensor& x, bool) {
  Tensor z(output_shape(x.shape()));
  const std::size_t steps = z.dim(0);
  const std::size_t span = kernel_ * channels_;
  const double* w = params_[0].value.data().data();
  const double* b = params_[1].value.data().data();
  for (std::size_t t = 0; t < steps; ++t) {
    const double* xs = x.data().data() + t * channels_;
    for (std::size_t f = 0; f < filters_; ++f) {
      const double* wf = w + f * span;
      double acc = b[f];
      for (std::size_t j = 0; j < span; ++j) acc += wf[j] * xs[j];
      z.at(t, f) = acc;
    }
  }
  x_ = x;
  Tensor y = z;
  if (act_ != Activation::Linear)
    for (double& v : y.data()) v = apply(act_, v);
  z_ = std::move(z);
  cached_ = true;
  return y;
}

Tensor Conv1DLayer::backward(const Tensor& dy) {
  require_cache(cached_);
  if (dy.shape() != z_.shape())
    shape_error("conv1d backward", dy.shape(), shape_str(z_.shape()));
  const std::size_t steps = z_.dim(0);
  const std::size_t span = kernel_ * channels_;
  const double* w = params_[0].value.data().data();
  double* dw = params_[0].grad.data().data();
  double* db = params_[1].grad.data().data();
  Tensor dx(x_.shape());
  for (std::size_t t = 0; t < steps; ++t) {
    const double* xs = x_.data().data() + t * channels_;
    double* dxs = dx.data().data() + t * channels_;
    for (std::size_t f = 0; f < filters_; ++f) {
      const std::size_t k = t * filters_ + f;
      const double g = dy[k] * slope(act_, z_[k]);
      if (g == 0.0) continue;
      db[f] += g;
      const double* wf = w + f * span;
      double* dwf = dw + f * span;
      for (std::size_t j = 0; j < span; ++j) {
        dwf[j] += g * xs[j];
        dxs[j] += g * wf[j];
      }
    }
  }
  return dx;
}

// ----------------------------------------------------------------- LSTM

LstmLayer::LstmLayer(std::size_t channels, std::size_t units)
    : channels_(channels), units_(units) {
  if (channels == 0 || units == 0)
    throw std::invalid_argument("lstm: channels and units must be >= 1");
  add_param("W", {4 * units, channels});
  add_param("U", {4 * units, units});
  add_param("b", {4 * units});
}

Shape LstmLayer::output_shape(const Shape& in) const {
  if (in.size() != 2 || in[1] != channels_)
    shape_error(kind(), in, "[time, " + std::to_string(channels_) + "]");
  return {in[0], units_};
}

void LstmLayer::initialize(Rng& rng) {
  glorot(params_[0].value, channels_, 4 * units_, rng);
  glorot(params_[1].value, units_, 4 * units_, rng);
  params_[2].value.fill(0.0);
}

Tensor LstmLayer::forward(const Tensor& x, bool) {
  const Shape out_shape = output_shape(x.shape());
  const std::size_t steps = x.dim(0);
  const std::size_t n = units_;
  const double* W = params_[0].value.data().data();
  const double* U = params_[1].value.data().data();
  const double* b = params_[2].value.data().data();

  gates_ = Tensor({steps, 4 * n});
  cell_ = Tensor({steps + 1, n});
  hidden_ = Tensor({steps + 1, n});
  std::vector<double> z(4 * n);

  for (std::size_t t = 0; t < steps; ++t) {
    const double* xt = x.data().data() + t * channels_;
    const double* hp = hidden_.data().data() + t * n;
    const double* cp = cell_.data().data() + t * n;
    for (std::size_t r = 0; r < 4 * n; ++r) {
      double acc = b[r];
      const double* wr = W + r * channels_;
      for (std::size_t c = 0; c < channels_; ++c) acc += wr[c] * xt[c];
      const double* ur = U + r * n;
      for (std::size_t c = 0; c < n; ++c) acc += ur[c] * hp[c];
      z[r] = acc;
    }
    double* g = gates_.data().data() + t * 4 * n;
    double* cn = cell_.data().data() + (t + 1) * n;
    double* hn = hidden_.data().data() + (t + 1) * n;
    for (std::size_t k = 0; k < n; ++k) {
      const double i = sigmoid(z[k]);
      const double f = sigmoid(z[n + k]);
      const double cand = std::tanh(z[2 * n + k]);
      const double o = sigmoid(z[3 * n + k]);
      g[k] = i;
      g[n + k] = f;
      g[2 * n + k] = cand;
      g[3 * n + k] = o;
      cn[k] = f * cp[k] + i * cand;
      hn[k] = o * std::tanh(cn[k]);
    }
  }
  x_ = x;
  cached_ = true;
  Tensor y(out_shape);
  std::copy(hidden_.data().begin() + static_cast<std::ptrdiff_t>(n),
            hidden_.data().end(), y.data().begin());
  return y;
}

Tensor LstmLayer::backward(const Tensor& dy) {
  require_cache(cached_);
  const std::size_t steps = x_.dim(0);
  const std::size_t n = units_;
  if (dy.shape() != Shape{steps, n})
    shape_error("lstm backward", dy.shape(), shape_str({steps, n}));
  const double* W = params_[0].value.data().data();
  const double* U = params_[1].value.data().data();
  double* dW = params_[0].grad.data().data();
  double* dU = params_[1].grad.data().data();
  double* db = params_[2].grad.data().data();

  Tensor dx(x_.shape());
  std::vector<double> dh_next(n, 0.0), dc_next(n, 0.0), dz(4 * n);

  for (std::size_t t = steps; t-- > 0;) {
    const double* g = gates_.data().data() + t * 4 * n;
    const double* cp = cell_.data().data() + t * n;
    const double* cn = cell_.data().data() + (t + 1) * n;
    const double* hp = hidden_.data().data() + t * n;
    const double* xt = x_.data().data() + t * channels_;
    for (std::size_t k = 0; k < n; ++k) {
      const double i = g[k], f = g[n + k], cand = g[2 * n + k], o = g[3 * n + k];
      const double dh = dy[t * n + k] + dh_next[k];
      const double tc = std::tanh(cn[k]);
      const double dc = dh * o * (1.0 - tc * tc) + dc_next[k];
      dz[k] = dc * cand * i * (1.0 - i);
      dz[n + k] = dc * cp[k] * f * (1.0 - f);
      dz[2 * n + k] = dc * i * (1.0 - cand * cand);
      dz[3 * n + k] = dh * tc * o * (1.0 - o);
      dc_next[k] = dc * f;
    }
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    double* dxt = dx.data().data() + t * channels_;
    for (std::size_t r = 0; r < 4 * n; ++r) {
      const double gr = dz[r];
      if (gr == 0.0) continue;
      db[r] += gr;
      const double* wr = W + r * channels_;
      double* dwr = dW + r * channels_;
      for (std::size_t c = 0; c < channels_; ++c) {
        dwr[c] += gr * xt[c];
        dxt[c] += gr * wr[c];
      }
      const double* ur = U + r * n;
      double* dur = dU + r * n;
      for (std::size_t c = 0; c < n; ++c) {
        dur[c] += gr * hp[c];
        dh_next[c] += gr * ur[c];
      }
    }
  }
  return dx;
}

// ------------------------------------------------------------ MaxPool1D

MaxPool1DLayer::MaxPool1DLayer(std::size_t pool_size) : pool_(pool_size) {
  if (pool_size == 0) throw std::invalid_argument("maxpool1d: pool size 0");
}

Shape MaxPool1DLayer::output_shape(const Shape& in) const {
  if (in.size() != 2) shape_error(kind(), in, "[time, features]");
  if (in[0] < pool_)
    throw std::invalid_argument("maxpool1d: time length " +
                                std::to_string(in[0]) + " shorter than pool " +
                                std::to_string(pool_));
  return {in[0] / pool_, in[1]};
}

Tensor MaxPool1DLayer::forward(const Tensor& x, bool) {
  Tensor y(output_shape(x.shape()));
  const std::size_t cols = x.dim(1);
  argmax_.assign(y.size(), 0);
  for (std::size_t w = 0; w < y.dim(0); ++w) {
    for (std::size_t c = 0; c < cols; ++c) {
      std::size_t best = w * pool_ * cols + c;
      for (std::size_t p = 1; p < pool_; ++p) {
        const std::size_t idx = (w * pool_ + p) * cols + c;
        if (x[idx] > x[best]) best = idx;
      }
      y.at(w, c) = x[best];
      argmax_[w * cols + c] = best;
    }
  }
  in_shape_ = x.shape();
  cached_ = true;
  return y;
}

Tensor MaxPool1DLayer::backward(const Tensor& dy) {
  require_cache(cached_);
  if (dy.size() != argmax_.size())
    shape_error("maxpool1d backward", dy.shape(),
                std::to_string(argmax_.size()) + " elements");
  Tensor dx(in_shape_);
  for (std::size_t i = 0; i < argmax_.size(); ++i) dx[argmax_[i]] += dy[i];
  return dx;
}

// -------------------------------------------------------------- Flatten

Shape FlattenLayer::output_shape(const Shape& in) const {
  return {shape_size(in)};
}

Tensor FlattenLayer::forward(const Tensor& x, bool) {
  in_shape_ = x.shape();
  cached_ = true;
  Tensor y = x;
  y.reshape({x.size()});
  return y;
}

Tensor FlattenLayer::backward(const Tensor& dy) {
  require_cache(cached_);
  Tensor dx = dy;
  dx.reshape(in_shape_);
  return dx;
}

// -------------------------------------------------------------- Dropout

DropoutLayer::DropoutLayer(double rate, std::uint64_t seed)
    : rate_(rate), rng_(seed) {
  if (!(rate >= 0.0 && rate < 1.0))
    throw std::invalid_argument("dropout: rate must be in [0, 1)");
}

Tensor DropoutLayer::forward(const Tensor& x, bool training) {
  cached_ = true;
  if (!training || rate_ == 0.0) {
    mask_.clear();
    return x;
  }
  const double keep_scale = 1.0 / (1.0 - rate_);
  mask_.resize(x.size());
  Tensor y = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mask_[i] = uniform01(rng_) < rate_ ? 0.0 : keep_scale;
    y[i] *= mask_[i];
  }
  return y;
}

Tensor DropoutLayer::backward(const Tensor& dy) {
  require_cache(cached_);
  if (mask_.empty()) return dy;
  if (dy.size() != mask_.size())
    shape_error("dropout backward", dy.shape(),
                std::to_string(mask_.size()) + " elements");
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= mask_[i];
  return dx;
}

}  // namespace hyperts
