#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <string>

#include "hyperts/analysis.hpp"
#include "hyperts/data.hpp"

using namespace hyperts;
namespace fs = std::filesystem;

namespace {

const fs::path kFixture = fs::path(HYPERTS_TEST_DATA_DIR) / "fixture";

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name)
      : path(fs::temp_directory_path() / ("hyperts_" + name)) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string write(const std::string& file, const std::string& text) const {
    std::ofstream(path / file) << text;
    return (path / file).string();
  }
};

Date d(const char* s) { return *parse_date(s); }

RawSeries series(std::string name, std::vector<const char*> dates,
                 std::vector<double> values) {
  RawSeries r;
  r.ticker = std::move(name);
  for (auto* s : dates) r.dates.push_back(d(s));
  r.values = std::move(values);
  return r;
}

SeriesTable ramp_table(std::size_t rows, std::size_t cols) {
  SeriesTable t;
  for (std::size_t i = 0; i < rows; ++i) t.dates.push_back(d("2020-01-01") + std::chrono::days(i));
  for (std::size_t c = 0; c < cols; ++c) {
    t.names.push_back("c" + std::to_string(c));
    std::vector<double> col(rows);
    for (std::size_t i = 0; i < rows; ++i)
      col[i] = static_cast<double>(i) + 100.0 * static_cast<double>(c);
    t.columns.push_back(col);
  }
  return t;
}

}  // namespace

TEST_CASE("dates") {
  CHECK(format_date(d("2015-01-02")) == "2015-01-02");
  CHECK_FALSE(parse_date("2015-13-01"));
  CHECK_FALSE(parse_date("2015-02-30"));
  CHECK_FALSE(parse_date("15-01-02"));
  CHECK_FALSE(parse_date("2015-01-02x"));
}

TEST_CASE("load_csv") {
  TempDir tmp("load_csv");
  SUBCASE("well formed") {
    const auto p = tmp.write("a.csv", "Date,Close\n2020-01-01,1\n2020-01-02,2\n2020-01-03,3\n");
    const auto s = load_csv(p, "A");
    CHECK(s.values == std::vector<double>{1, 2, 3});
    CHECK(s.dates.front() == d("2020-01-01"));
    CHECK(s.warnings.empty());
  }
  SUBCASE("blank close skipped") {
    const auto p = tmp.write("a.csv", "Date,Open,Close\n2020-01-01,9,1\n2020-01-02,9,\n2020-01-03,9,3\n");
    const auto s = load_csv(p, "A");
    CHECK(s.values == std::vector<double>{1, 3});
    CHECK(s.warnings.size() == 1);
  }
  SUBCASE("unsorted input is sorted") {
    const auto p = tmp.write("a.csv", "Close,Date\n3,2020-01-03\n1,2020-01-01\n2,2020-01-02\n");
    const auto s = load_csv(p, "A");
    CHECK(s.values == std::vector<double>{1, 2, 3});
  }
  SUBCASE("duplicate dates keep the first") {
    const auto p = tmp.write("a.csv", "Date,Close\n2020-01-02,5\n2020-01-01,1\n2020-01-02,7\n");
    const auto s = load_csv(p, "A");
    CHECK(s.values == std::vector<double>{1, 5});
    CHECK(s.warnings.size() == 1);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(load_csv((tmp.path / "missing.csv").string(), "A"), std::runtime_error);
    CHECK_THROWS_AS(load_csv(tmp.write("e.csv", ""), "A"), std::runtime_error);
    CHECK_THROWS_AS(load_csv(tmp.write("h.csv", "Date,Close\n"), "A"), std::runtime_error);
    CHECK_THROWS_AS(load_csv(tmp.write("c.csv", "Date,Open\n2020-01-01,1\n"), "A"),
                    std::runtime_error);
  }
}

TEST_CASE("align") {
  const auto a = series("A", {"2020-01-01", "2020-01-02", "2020-01-03"}, {1, 2, 3});
  const auto b = series("B", {"2020-01-02", "2020-01-03", "2020-01-04"}, {20, 30, 40});
  const auto two = align({a, b}, {"B", "A"});
  CHECK(two.rows() == 2);
  CHECK(two.names == std::vector<std::string>{"B", "A"});
  CHECK(two.columns[0] == std::vector<double>{20, 30});
  CHECK(two.columns[1] == std::vector<double>{2, 3});

  auto a2 = a;
  a2.ticker = "A2";
  CHECK(align({a, a2}, {"A", "A2"}).rows() == 3);

  // Five dates, four series, each missing a different day except 2020-01-03.
  std::vector<const char*> all{"2020-01-01", "2020-01-02", "2020-01-03", "2020-01-04",
                               "2020-01-05"};
  std::vector<RawSeries> four;
  for (std::size_t s = 0; s < 4; ++s) {
    std::vector<const char*> ds;
    std::vector<double> vs;
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (i == (s < 2 ? s : s + 1)) continue;
      ds.push_back(all[i]);
      vs.push_back(static_cast<double>(10 * s + i));
    }
    four.push_back(series("S" + std::to_string(s), ds, vs));
  }
  const auto one = align(four, {"S0", "S1", "S2", "S3"});
  REQUIRE(one.rows() == 1);
  CHECK(one.dates[0] == d("2020-01-03"));
  CHECK(one.columns[3][0] == 32.0);

  const auto c = series("C", {"2021-01-01"}, {1});
  CHECK_THROWS_AS(align({a, c}, {"A", "C"}), std::invalid_argument);
}

TEST_CASE("restrict_dates and reorder") {
  const auto t = ramp_table(10, 2);
  const auto r = restrict_dates(t, d("2020-01-03"), d("2020-01-06"));
  CHECK(r.rows() == 3);
  CHECK(r.dates.front() == d("2020-01-03"));
  CHECK(restrict_dates(t, std::nullopt, std::nullopt).rows() == 10);
  const auto swapped = reorder(t, {"c1", "c0"});
  CHECK(swapped.columns[0] == t.columns[1]);
  CHECK_THROWS(reorder(t, {"c1", "zz"}));
}

TEST_CASE("standardize") {
  SeriesTable t = ramp_table(3, 1);
  t.columns[0] = {1, 2, 3};
  auto [s, scaler] = standardize(t);
  CHECK(s.columns[0][0] == doctest::Approx(-1.224744871391589).epsilon(1e-14));
  CHECK(s.columns[0][1] == doctest::Approx(0.0));
  CHECK(s.columns[0][2] == doctest::Approx(1.224744871391589).epsilon(1e-14));
  CHECK(scaler.mean[0] == 2.0);
  CHECK(scaler.std[0] == doctest::Approx(std::sqrt(2.0 / 3.0)).epsilon(1e-15));

  // Idempotent on standardized data, invertible, exact moments.
  auto [again, sc2] = standardize(s);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(again.columns[0][i] - s.columns[0][i]) < 1e-12);
  const auto back = destandardize(s, scaler);
  for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(back.columns[0][i] - t.columns[0][i]) < 1e-10);
  CHECK(scaler.inverse(scaler.names[0], 0.0) == 2.0);

  SeriesTable wide = ramp_table(257, 3);
  for (std::size_t i = 0; i < 257; ++i) wide.columns[2][i] = std::sin(0.1 * static_cast<double>(i)) * 40 + 7;
  auto [ws, wsc] = standardize(wide);
  for (const auto& col : ws.columns) {
    const double n = static_cast<double>(col.size());
    const double mean = std::accumulate(col.begin(), col.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : col) ss += (v - mean) * (v - mean);
    CHECK(std::abs(mean) < 1e-10);
    CHECK(std::abs(std::sqrt(ss / n) - 1.0) < 1e-10);
  }

  SeriesTable flat = ramp_table(4, 1);
  flat.columns[0] = {5, 5, 5, 5};
  CHECK_THROWS_AS(standardize(flat), std::invalid_argument);
}

TEST_CASE("make_windows") {
  CHECK(make_windows(ramp_table(10, 2), "c0", 5, 1, {"c0", "c1"}).size() == 5);
  CHECK(make_windows(ramp_table(2008, 4), "c0", 60, 20, {"c0", "c1", "c2", "c3"}).size() == 1929);
  CHECK_THROWS_WITH_AS(make_windows(ramp_table(5, 1), "c0", 5, 1, {"c0"}),
                       doctest::Contains("6"), std::invalid_argument);

  const auto ramp = make_windows(ramp_table(10, 1), "c0", 3, 2, {"c0"});
  CHECK(ramp.X[0] == Tensor({3, 1}, {0, 1, 2}));
  CHECK(ramp.Y[0] == Tensor({2}, {3, 4}));

  // Y reconstructs from the raw target column at each recorded origin.
  const auto t = ramp_table(40, 4);
  const std::vector<std::string> order{"c2", "c0", "c3", "c1"};
  const auto w = make_windows(t, "c0", 7, 3, order);
  for (std::size_t i = 0; i < w.size(); ++i) {
    for (std::size_t s = 0; s < 3; ++s) CHECK(w.Y[i][s] == t.columns[0][w.origins[i] + 7 + s]);
    for (std::size_t r = 0; r < 7; ++r)
      for (std::size_t c = 0; c < 4; ++c)
        CHECK(w.X[i].at(r, c) == t.column(order[c])[w.origins[i] + r]);
  }

  // Permuting ticker order permutes channels and leaves Y alone.
  const auto w2 = make_windows(t, "c0", 7, 3, {"c0", "c1", "c2", "c3"});
  for (std::size_t i = 0; i < w.size(); ++i) {
    CHECK(w.Y[i] == w2.Y[i]);
    for (std::size_t r = 0; r < 7; ++r) {
      CHECK(w.X[i].at(r, 0) == w2.X[i].at(r, 2));
      CHECK(w.X[i].at(r, 1) == w2.X[i].at(r, 0));
      CHECK(w.X[i].at(r, 2) == w2.X[i].at(r, 3));
      CHECK(w.X[i].at(r, 3) == w2.X[i].at(r, 1));
    }
  }
}

TEST_CASE("split") {
  auto sizes = [](const SplitPlan& p) {
    std::vector<std::size_t> out;
    for (const auto& f : p.folds) out.push_back(f.size());
    return out;
  };
  const auto p100 = split(100);
  CHECK(p100.cv_indices.size() == 80);
  CHECK(p100.holdout_indices.size() == 20);
  CHECK(sizes(p100) == std::vector<std::size_t>(10, 8));

  const auto p101 = split(101);
  CHECK(p101.cv_indices.size() == 80);
  CHECK(p101.holdout_indices.size() == 21);

  const auto p95 = split(95);
  CHECK(p95.cv_indices.size() == 76);
  CHECK(sizes(p95) == std::vector<std::size_t>{8, 8, 8, 8, 8, 8, 7, 7, 7, 7});

  CHECK_THROWS_AS(split(9), std::invalid_argument);
  CHECK_THROWS_AS(split(12), std::invalid_argument);  // cv block of 9 < 10 folds

  for (std::size_t n : {13, 50, 77, 1929, 2000}) {
    const auto p = split(n);
    CHECK(p.cv_indices.size() + p.holdout_indices.size() == n);
    CHECK(p.cv_indices.back() < p.holdout_indices.front());
    std::vector<std::size_t> joined;
    for (const auto& f : p.folds) {
      CHECK(f.back() - f.front() + 1 == f.size());
      joined.insert(joined.end(), f.begin(), f.end());
    }
    CHECK(joined == p.cv_indices);
    const auto sz = sizes(p);
    CHECK(*std::max_element(sz.begin(), sz.end()) - *std::min_element(sz.begin(), sz.end()) <= 1);
    const auto train = p.train_indices(3);
    CHECK(train.size() == p.cv_indices.size() - p.folds[3].size());
  }
}

TEST_CASE("manifest and table csv round trip") {
  const auto m = load_manifest((kFixture / "manifest.json").string());
  CHECK(m.order == std::vector<std::string>{"Copper", "FCX", "CLP", "SCCO"});
  CHECK(fs::path(m.paths.at("FCX")).is_absolute());

  TempDir tmp("table_rt");
  const auto t = ramp_table(6, 3);
  const auto path = (tmp.path / "t.csv").string();
  write_table_csv(t, path, {"seed=1"});
  const auto back = read_table_csv(path);
  CHECK(back.dates == t.dates);
  CHECK(back.names == t.names);
  CHECK(back.columns == t.columns);

  CHECK_THROWS(load_manifest(tmp.write("bad.json", "{\"order\": [\"A\"]}")));
}

TEST_CASE("fixture alignment matches the pandas oracle") {
  const auto m = load_manifest((kFixture / "manifest.json").string());
  std::vector<RawSeries> raw;
  for (const auto& n : m.order) raw.push_back(load_csv(m.paths.at(n), n));
  const auto table = align(raw, m.order);
  CHECK(table.rows() == 9);
  CHECK(format_date(table.dates.front()) == "2015-01-02");
  CHECK(format_date(table.dates.back()) == "2015-01-21");
  CHECK(pearson(table.column("Copper"), table.column("FCX")) ==
        doctest::Approx(0.5430951133137721).epsilon(1e-12));
  CHECK(pearson(table.column("Copper"), table.column("CLP")) ==
        doctest::Approx(0.3630930940323942).epsilon(1e-12));
  auto [st, scaler] = standardize(table);
  CHECK(scaler.mean[0] == doctest::Approx(2.505289).epsilon(1e-6));
  CHECK(scaler.std[0] == doctest::Approx(0.029808454948964506).epsilon(1e-12));
}
