#pragma once

#include <span>
#include <string>
#include <vector>

#include "hyperts/data.hpp"

namespace hyperts {

struct CorrelationMatrix {
  std::vector<std::string> tickers;
  std::vector<std::vector<double>> r;  // symmetric, unit diagonal
};

/// Correlation of a[t] with b[t + lag] for lag = 0..max_lag ("a leads b").
struct LaggedCorrelation {
  std::string a;
  std::string b;
  std::vector<double> values;
};

/// Sample Pearson r. Throws std::invalid_argument on unequal lengths,
/// fewer than 2 points, or a zero-variance input.
double pearson(std::span<const double> x, std::span<const double> y);

CorrelationMatrix correlation_matrix(const SeriesTable& table);

/// Throws std::invalid_argument unless a.size() == b.size() > max_lag + 1.
LaggedCorrelation lagged_correlation(std::span<const double> a,
                                     std::span<const double> b,
                                     std::size_t max_lag = 60);

/// All ordered pairs (i <= j) of the table's columns, in column order.
std::vector<LaggedCorrelation> all_lagged_correlations(const SeriesTable& table,
                                                       std::size_t max_lag);

void write_matrix_csv(const CorrelationMatrix& m, const std::string& path,
                      const std::vector<std::string>& header_comments = {});
void write_lag_csv(const LaggedCorrelation& lc, const std::string& path,
                   const std::vector<std::string>& header_comments = {});

}  // namespace hyperts
