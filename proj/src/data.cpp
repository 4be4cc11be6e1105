#include "hyperts/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "hyperts/format.hpp"

namespace hyperts {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::optional<double> parse_double(const std::string& s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

std::optional<Date> parse_date(std::string_view text) {
  const std::string s = trim(text);
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  int y = 0;
  unsigned m = 0, d = 0;
  auto digits = [&](std::size_t pos, std::size_t len, auto& out) {
    auto [p, ec] = std::from_chars(s.data() + pos, s.data() + pos + len, out);
    return ec == std::errc() && p == s.data() + pos + len;
  };
  if (!digits(0, 4, y) || !digits(5, 2, m) || !digits(8, 2, d)) return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{y},
                                        std::chrono::month{m},
                                        std::chrono::day{d}};
  if (!ymd.ok()) return std::nullopt;
  return std::chrono::sys_days{ymd};
}

std::string format_date(Date d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()),
                static_cast<unsigned>(ymd.day()));
  return buf;
}

RawSeries load_csv(const std::string& path, const std::string& ticker) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  RawSeries out;
  out.ticker = ticker;

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  const auto header = split_commas(line);
  const auto find_col = [&](const char* name) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw std::runtime_error(path + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t date_col = find_col("Date");
  const std::size_t close_col = find_col("Close");

  std::vector<std::pair<Date, double>> rows;
  std::size_t line_no = 1;
  auto warn = [&](std::string msg) {
    std::cerr << "warning: " << msg << '\n';
    out.warnings.push_back(std::move(msg));
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_commas(line);
    std::optional<Date> date;
    std::optional<double> value;
    if (cells.size() > std::max(date_col, close_col)) {
      date = parse_date(cells[date_col]);
      value = parse_double(cells[close_col]);
    }
    if (!date || !value) {
      warn(path + ":" + std::to_string(line_no) + ": unparseable row skipped");
      continue;
    }
    rows.emplace_back(*date, *value);
  }
  if (rows.empty()) throw std::runtime_error(path + ": no usable rows");

  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [date, value] : rows) {
    if (!out.dates.empty() && out.dates.back() == date) {
      warn(path + ": duplicate date " + format_date(date) + ", keeping first");
      continue;
    }
    out.dates.push_back(date);
    out.values.push_back(value);
  }
  return out;
}

std::size_t SeriesTable::index_of(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end())
    throw std::invalid_argument("no column named '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

SeriesTable align(const std::vector<RawSeries>& series,
                  const std::vector<std::string>& order) {
  if (series.empty()) throw std::invalid_argument("align: no series given");
  if (order.size() != series.size() ||
      std::set<std::string>(order.begin(), order.end()).size() != order.size())
    throw std::invalid_argument("align: order must list each series once");

  std::vector<const RawSeries*> ordered;
  for (const auto& name : order) {
    const auto it = std::find_if(series.begin(), series.end(),
                                 [&](const RawSeries& s) { return s.ticker == name; });
    if (it == series.end())
      throw std::invalid_argument("align: no series named '" + name + "'");
    ordered.push_back(&*it);
  }

  std::vector<Date> common = ordered.front()->dates;
  for (std::size_t k = 1; k < ordered.size(); ++k) {
    std::vector<Date> next;
    std::set_intersection(common.begin(), common.end(), ordered[k]->dates.begin(),
                          ordered[k]->dates.end(), std::back_inserter(next));
    common = std::move(next);
  }
  if (common.empty()) throw std::invalid_argument("align: empty date intersection");

  SeriesTable t;
  t.dates = common;
  t.names = order;
  for (const RawSeries* s : ordered) {
    std::vector<double> col;
    col.reserve(common.size());
    std::size_t j = 0;
    for (Date d : common) {
      while (s->dates[j] < d) ++j;
      col.push_back(s->values[j]);
    }
    t.columns.push_back(std::move(col));
  }
  return t;
}

SeriesTable restrict_dates(const SeriesTable& table, std::optional<Date> start,
                           std::optional<Date> end) {
  SeriesTable t;
  t.names = table.names;
  t.columns.resize(table.cols());
  for (std::size_t r = 0; r < table.rows(); ++r) {
    const Date d = table.dates[r];
    if ((start && d < *start) || (end && d >= *end)) continue;
    t.dates.push_back(d);
    for (std::size_t c = 0; c < table.cols(); ++c)
      t.columns[c].push_back(table.columns[c][r]);
  }
  return t;
}

SeriesTable reorder(const SeriesTable& table,
                    const std::vector<std::string>& order) {
  if (order.size() != table.cols() ||
      std::set<std::string>(order.begin(), order.end()).size() != order.size())
    throw std::invalid_argument("reorder: order must be a permutation of the columns");
  SeriesTable t;
  t.dates = table.dates;
  t.names = order;
  for (const auto& name : order) t.columns.push_back(table.column(name));
  return t;
}

double Scaler::scale_of(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end())
    throw std::invalid_argument("scaler has no column '" + name + "'");
  return std[static_cast<std::size_t>(it - names.begin())];
}

double Scaler::inverse(const std::string& name, double value) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end())
    throw std::invalid_argument("scaler has no column '" + name + "'");
  const auto i = static_cast<std::size_t>(it - names.begin());
  return value * std[i] + mean[i];
}

std::pair<SeriesTable, Scaler> standardize(const SeriesTable& table) {
  SeriesTable out = table;
  Scaler sc;
  sc.names = table.names;
  for (std::size_t c = 0; c < table.cols(); ++c) {
    const auto& col = table.columns[c];
    const double n = static_cast<double>(col.size());
    const double mean = std::accumulate(col.begin(), col.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : col) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / n);
    if (!(sd > 0.0))
      throw std::invalid_argument("standardize: column '" + table.names[c] +
                                  "' has zero variance");
    for (double& v : out.columns[c]) v = (v - mean) / sd;
    sc.mean.push_back(mean);
    sc.std.push_back(sd);
  }
  return {std::move(out), std::move(sc)};
}

SeriesTable destandardize(const SeriesTable& table, const Scaler& scaler) {
  SeriesTable out = table;
  for (std::size_t c = 0; c < table.cols(); ++c)
    for (double& v : out.columns[c]) v = scaler.inverse(table.names[c], v);
  return out;
}

WindowedDataset make_windows(const SeriesTable& table, const std::string& target,
                             std::size_t window, std::size_t span,
                             const std::vector<std::string>& order) {
  if (window == 0 || span == 0)
    throw std::invalid_argument("make_windows: window and span must be >= 1");
  const std::size_t rows = table.rows();
  if (rows < window + span)
    throw std::invalid_argument("make_windows: " + std::to_string(rows) +
                                " rows, need at least " +
                                std::to_string(window + span));
  std::vector<std::size_t> cols;
  for (const auto& name : order) cols.push_back(table.index_of(name));
  const auto& tcol = table.column(target);

  WindowedDataset ds;
  ds.window = window;
  ds.span = span;
  ds.target = target;
  ds.order = order;
  const std::size_t n = rows - window - span + 1;
  ds.X.reserve(n);
  ds.Y.reserve(n);
  for (std::size_t o = 0; o < n; ++o) {
    Tensor x({window, cols.size()});
    for (std::size_t t = 0; t < window; ++t)
      for (std::size_t c = 0; c < cols.size(); ++c)
        x.at(t, c) = table.columns[cols[c]][o + t];
    Tensor y({span});
    for (std::size_t s = 0; s < span; ++s) y[s] = tcol[o + window + s];
    ds.X.push_back(std::move(x));
    ds.Y.push_back(std::move(y));
    ds.origins.push_back(o);
  }
  return ds;
}

std::vector<std::size_t> SplitPlan::train_indices(std::size_t k) const {
  std::vector<std::size_t> out;
  for (std::size_t f = 0; f < folds.size(); ++f)
    if (f != k) out.insert(out.end(), folds[f].begin(), folds[f].end());
  return out;
}

SplitPlan split(std::size_t n, double cv_fraction, std::size_t folds) {
  if (folds == 0) throw std::invalid_argument("split: folds must be >= 1");
  if (n < folds)
    throw std::invalid_argument("split: " + std::to_string(n) +
                                " samples is fewer than " + std::to_string(folds) +
                                " folds");
  if (!(cv_fraction > 0.0 && cv_fraction <= 1.0))
    throw std::invalid_argument("split: cv_fraction must be in (0, 1]");
  // Tolerance keeps e.g. 0.8 * 5 from flooring to 3.
  const auto cv = static_cast<std::size_t>(
      std::floor(cv_fraction * static_cast<double>(n) + 1e-9));
  if (cv < folds)
    throw std::invalid_argument("split: cv block of " + std::to_string(cv) +
                                " samples cannot hold " + std::to_string(folds) +
                                " folds");
  SplitPlan plan;
  for (std::size_t i = 0; i < n; ++i)
    (i < cv ? plan.cv_indices : plan.holdout_indices).push_back(i);
  const std::size_t base = cv / folds, extra = cv % folds;
  std::size_t next = 0;
  for (std::size_t f = 0; f < folds; ++f) {
    const std::size_t len = base + (f < extra ? 1 : 0);
    std::vector<std::size_t> fold(len);
    std::iota(fold.begin(), fold.end(), next);
    next += len;
    plan.folds.push_back(std::move(fold));
  }
  return plan;
}

Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path);
  const auto j = nlohmann::json::parse(in);
  const auto base = std::filesystem::path(path).parent_path();
  Manifest m;
  for (const auto& [name, p] : j.at("tickers").items()) {
    std::filesystem::path fp = p.get<std::string>();
    if (fp.is_relative()) fp = base / fp;
    m.paths[name] = fp.string();
  }
  if (j.contains("order")) {
    m.order = j["order"].get<std::vector<std::string>>();
  } else {
    for (const auto& [name, _] : m.paths) m.order.push_back(name);
  }
  if (m.order.size() != m.paths.size())
    throw std::invalid_argument("manifest order must list every ticker once");
  for (const auto& name : m.order)
    if (!m.paths.count(name))
      throw std::invalid_argument("manifest order names unknown ticker '" + name + "'");
  auto date_field = [&](const char* key) -> std::optional<Date> {
    if (!j.contains(key)) return std::nullopt;
    auto d = parse_date(j[key].get<std::string>());
    if (!d) throw std::invalid_argument(std::string("manifest: bad date in '") + key + "'");
    return d;
  };
  m.start = date_field("start");
  m.end = date_field("end");
  return m;
}

void write_table_csv(const SeriesTable& table, const std::string& path,
                     const std::vector<std::string>& header_comments) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (const auto& c : header_comments) out << "# " << c << '\n';
  out << "Date";
  for (const auto& n : table.names) out << ',' << n;
  out << '\n';
  for (std::size_t r = 0; r < table.rows(); ++r) {
    out << format_date(table.dates[r]);
    for (std::size_t c = 0; c < table.cols(); ++c)
      out << ',' << fmt_double(table.columns[c][r]);
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

SeriesTable read_table_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  SeriesTable t;
  bool header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split_commas(line);
    if (!header) {
      if (cells.empty() || cells[0] != "Date")
        throw std::runtime_error(path + ": expected Date header");
      t.names.assign(cells.begin() + 1, cells.end());
      t.columns.resize(t.names.size());
      header = true;
      continue;
    }
    const auto d = parse_date(cells.at(0));
    if (!d || cells.size() != t.names.size() + 1)
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": malformed row");
    t.dates.push_back(*d);
    for (std::size_t c = 0; c < t.names.size(); ++c) {
      const auto v = parse_double(cells[c + 1]);
      if (!v)
        throw std::runtime_error(path + ":" + std::to_string(line_no) + ": bad value");
      t.columns[c].push_back(*v);
    }
  }
  if (!header) throw std::runtime_error(path + ": empty table");
  return t;
}

}  // namespace hyperts
