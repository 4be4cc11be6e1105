#include "hyperts/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "hyperts/format.hpp"

namespace hyperts {

double pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    throw std::invalid_argument("pearson: length mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw std::invalid_argument("pearson: need at least 2 points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0))
    throw std::invalid_argument("pearson: zero variance input");
  // The (n - 1) factors of the sample covariance and variances cancel.
  const double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

CorrelationMatrix correlation_matrix(const SeriesTable& table) {
  CorrelationMatrix m;
  m.tickers = table.names;
  const std::size_t k = table.cols();
  m.r.assign(k, std::vector<double>(k, 1.0));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j)
      m.r[i][j] = m.r[j][i] = pearson(table.columns[i], table.columns[j]);
  return m;
}

LaggedCorrelation lagged_correlation(std::span<const double> a,
                                     std::span<const double> b,
                                     std::size_t max_lag) {
  if (a.size() != b.size())
    throw std::invalid_argument("lagged_correlation: length mismatch");
  if (a.size() <= max_lag + 1)
    throw std::invalid_argument("lagged_correlation: series of length " +
                                std::to_string(a.size()) + " too short for max lag " +
                                std::to_string(max_lag));
  const std::size_t n = a.size();
  LaggedCorrelation out;
  out.values.reserve(max_lag + 1);
  for (std::size_t lag = 0; lag <= max_lag; ++lag)
    out.values.push_back(pearson(a.subspan(0, n - lag), b.subspan(lag)));
  return out;
}

std::vector<LaggedCorrelation> all_lagged_correlations(const SeriesTable& table,
                                                       std::size_t max_lag) {
  std::vector<LaggedCorrelation> out;
  for (std::size_t i = 0; i < table.cols(); ++i) {
    for (std::size_t j = i; j < table.cols(); ++j) {
      auto lc = lagged_correlation(table.columns[i], table.columns[j], max_lag);
      lc.a = table.names[i];
      lc.b = table.names[j];
      out.push_back(std::move(lc));
    }
  }
  return out;
}

void write_matrix_csv(const CorrelationMatrix& m, const std::string& path,
                      const std::vector<std::string>& header_comments) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& c : header_comments) out << "# " << c << '\n';
  out << "ticker";
  for (const auto& t : m.tickers) out << ',' << t;
  out << '\n';
  for (std::size_t i = 0; i < m.tickers.size(); ++i) {
    out << m.tickers[i];
    for (double v : m.r[i]) out << ',' << fmt_double(v);
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

void write_lag_csv(const LaggedCorrelation& lc, const std::string& path,
                   const std::vector<std::string>& header_comments) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& c : header_comments) out << "# " << c << '\n';
  out << "lag,r\n";
  for (std::size_t lag = 0; lag < lc.values.size(); ++lag)
    out << lag << ',' << fmt_double(lc.values[lag]) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace hyperts
