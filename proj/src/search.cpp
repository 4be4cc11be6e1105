#include "hyperts/search.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>

#include "hyperts/util.hpp"

namespace hyperts {

using nlohmann::json;

Grid Grid::full(TestLayerKind kind, std::size_t window, std::size_t span,
                std::uint64_t seed) {
  Grid g;
  g.kind = kind;
  g.window = window;
  g.span = span;
  g.seed = seed;
  if (kind == TestLayerKind::Hyper) {
    g.sizes = {1, 2, 4, 8, 16, 32};
    g.algebras = {AlgebraKind::Quaternion, AlgebraKind::Coquaternion,
                  AlgebraKind::Clifford11};
  } else {
    g.sizes = {8, 16, 32, 64, 128};
  }
  return g;
}

std::size_t Grid::raw_size() const {
  const std::size_t algebra_axis = kind == TestLayerKind::Hyper ? algebras.size() : 1;
  return sizes.size() * algebra_axis * n_dense1.size() * n_dense2.size() *
         dense_units.size() * activations.size();
}

std::vector<ModelSpec> enumerate_raw(const Grid& g) {
  std::vector<ModelSpec> out;
  out.reserve(g.raw_size());
  const std::vector<AlgebraKind> algebras =
      g.kind == TestLayerKind::Hyper ? g.algebras
                                     : std::vector<AlgebraKind>{AlgebraKind::Quaternion};
  for (std::size_t size : g.sizes) {
    for (AlgebraKind alg : algebras) {
      for (int d1 : g.n_dense1) {
        for (int d2 : g.n_dense2) {
          for (std::size_t units : g.dense_units) {
            for (Activation act : g.activations) {
              ModelSpec s;
              switch (g.kind) {
                case TestLayerKind::Cnn:
                  s = ModelSpec::cnn(size);
                  s.kernel_size = g.kernel_size;
                  break;
                case TestLayerKind::Lstm:
                  s = ModelSpec::lstm(size);
                  break;
                case TestLayerKind::Hyper:
                  s = ModelSpec::hyper(size, alg);
                  break;
              }
              s.n_dense1 = d1;
              s.n_dense2 = d2;
              s.dense_units = units;
              s.dense_activation = act;
              s.window = g.window;
              s.span = g.span;
              s.seed = g.seed;
              out.push_back(s);
            }
          }
        }
      }
    }
  }
  return out;
}

std::vector<ModelSpec> enumerate(const Grid& grid) {
  std::vector<ModelSpec> out;
  std::set<std::string> seen;
  for (auto& s : enumerate_raw(grid))
    if (seen.insert(canonical_key(s)).second) out.push_back(s);
  return out;
}

CvResult cross_validate(const SplitPlan& plan, const FoldEvaluator& eval) {
  CvResult r;
  for (std::size_t k = 0; k < plan.folds.size(); ++k) {
    if (plan.folds[k].empty())
      throw std::invalid_argument("cross_validate: fold " + std::to_string(k) +
                                  " is empty");
    const auto train = plan.train_indices(k);
    r.fold_maes.push_back(eval(train, plan.folds[k], k));
  }
  if (r.fold_maes.empty()) throw std::invalid_argument("cross_validate: no folds");
  const double n = static_cast<double>(r.fold_maes.size());
  for (double m : r.fold_maes) r.mean_mae += m;
  r.mean_mae /= n;
  double ss = 0.0;
  for (double m : r.fold_maes) ss += (m - r.mean_mae) * (m - r.mean_mae);
  r.std_mae = std::sqrt(ss / n);
  return r;
}

std::uint64_t fold_seed(const ModelSpec& spec, std::size_t k) {
  return derive_seed(spec.seed, spec_id(spec), k);
}

namespace {

std::pair<ModelSpec, TrainConfig> seeded_for_fold(const ModelSpec& spec,
                                                  const TrainConfig& config,
                                                  std::size_t k) {
  const std::uint64_t s = fold_seed(spec, k);
  ModelSpec fs = spec;
  fs.seed = s;
  TrainConfig fc = config;
  fc.seed = mix64(s);
  return {fs, fc};
}

}  // namespace

CvResult cross_validate(const ModelSpec& spec, const WindowedDataset& data,
                        const SplitPlan& plan, const TrainConfig& config) {
  return cross_validate(plan, [&](std::span<const std::size_t> train,
                                  std::span<const std::size_t> val, std::size_t k) {
    const auto [fs, fc] = seeded_for_fold(spec, config, k);
    Model model = Model::build(fs);
    fit(model, data, train, fc);
    return evaluate(model, data, val);
  });
}

std::size_t select_best(const std::vector<SearchRow>& rows) {
  if (rows.empty()) throw std::invalid_argument("select_best: no rows");
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto& a = rows[i];
    const auto& b = rows[best];
    if (a.cv.mean_mae != b.cv.mean_mae) {
      if (a.cv.mean_mae < b.cv.mean_mae) best = i;
    } else if (a.param_count != b.param_count) {
      if (a.param_count < b.param_count) best = i;
    } else if (canonical_key(a.spec) < canonical_key(b.spec)) {
      best = i;
    }
  }
  return best;
}

json row_to_json(const SearchRow& row) {
  return {{"spec", spec_to_json(row.spec)},
          {"fold_maes", row.cv.fold_maes},
          {"mean_mae", row.cv.mean_mae},
          {"std_mae", row.cv.std_mae},
          {"param_count", row.param_count}};
}

SearchRow row_from_json(const json& j) {
  SearchRow r;
  r.spec = spec_from_json(j.at("spec"));
  r.cv.fold_maes = j.at("fold_maes").get<std::vector<double>>();
  r.cv.mean_mae = j.at("mean_mae").get<double>();
  r.cv.std_mae = j.value("std_mae", 0.0);
  r.param_count = j.at("param_count").get<std::size_t>();
  return r;
}

namespace {

struct LedgerContents {
  std::optional<json> meta;
  std::map<std::string, SearchRow> rows;
};

// Lines that fail to parse (e.g. a record cut short by a kill) are ignored
// and recomputed.
LedgerContents read_ledger(const std::string& path) {
  LedgerContents out;
  std::ifstream in(path);
  if (!in) return out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) continue;
    if (j.contains("meta")) {
      out.meta = j["meta"];
      continue;
    }
    try {
      SearchRow r = row_from_json(j);
      out.rows.emplace(canonical_key(r.spec), std::move(r));
    } catch (const std::exception&) {
    }
  }
  return out;
}

std::map<std::string, double> read_timings(const std::string& path) {
  std::map<std::string, double> out;
  std::ifstream in(path);
  std::string line;
  while (std::getline(in, line)) {
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("key")) continue;
    out[j["key"].get<std::string>()] = j.value("seconds", 0.0);
  }
  return out;
}

class LedgerWriter {
 public:
  LedgerWriter(std::string path, std::string timings_path)
      : path_(std::move(path)), timings_path_(std::move(timings_path)) {}

  bool enabled() const { return !path_.empty(); }

  void start(const json& meta, bool fresh) {
    if (!enabled()) return;
    if (fresh) {
      std::ofstream out(path_, std::ios::trunc);
      if (!out) throw std::runtime_error("cannot write ledger " + path_);
      out << json{{"meta", meta}}.dump() << '\n';
      out.flush();
      if (!out) throw std::runtime_error("write failed: " + path_);
    }
  }

  void append(const SearchRow& row) {
    if (!enabled()) return;
    std::lock_guard lock(mu_);
    {
      std::ofstream out(path_, std::ios::app);
      out << row_to_json(row).dump() << '\n';
      out.flush();
      if (!out) throw std::runtime_error("write failed: " + path_);
    }
    std::ofstream t(timings_path_, std::ios::app);
    t << json{{"key", canonical_key(row.spec)}, {"seconds", row.seconds}}.dump()
      << '\n';
  }

  /// Rewrites the ledger in enumeration order via a temporary file.
  void finalize(const json& meta, const std::vector<SearchRow>& rows) {
    if (!enabled()) return;
    const std::string tmp = path_ + ".tmp";
    {
      std::ofstream out(tmp, std::ios::trunc);
      if (!out) throw std::runtime_error("cannot write " + tmp);
      out << json{{"meta", meta}}.dump() << '\n';
      for (const auto& r : rows) out << row_to_json(r).dump() << '\n';
      out.flush();
      if (!out) throw std::runtime_error("write failed: " + tmp);
    }
    std::filesystem::rename(tmp, path_);
  }

 private:
  std::string path_;
  std::string timings_path_;
  std::mutex mu_;
};

}  // namespace

SearchResult run_search(const std::vector<ModelSpec>& specs,
                        const WindowedDataset& data, const SplitPlan& plan,
                        const SearchOptions& options) {
  if (specs.empty()) throw std::invalid_argument("run_search: no configurations");
  options.train.validate();

  const std::string timings_path =
      options.timings_path.empty() && !options.ledger_path.empty()
          ? options.ledger_path + ".timings"
          : options.timings_path;
  LedgerWriter writer(options.ledger_path, timings_path);

  LedgerContents existing;
  std::map<std::string, double> timings;
  if (writer.enabled()) {
    existing = read_ledger(options.ledger_path);
    if (existing.meta && *existing.meta != options.meta)
      throw std::runtime_error("ledger " + options.ledger_path +
                               " was produced with different settings; refusing to resume");
    timings = read_timings(timings_path);
  }
  writer.start(options.meta, !existing.meta.has_value());

  std::vector<std::optional<SearchRow>> results(specs.size());
  std::vector<std::size_t> pending;
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const auto key = canonical_key(specs[i]);
    if (auto it = existing.rows.find(key); it != existing.rows.end()) {
      SearchRow r = it->second;
      r.spec = specs[i];
      if (auto t = timings.find(key); t != timings.end()) r.seconds = t->second;
      results[i] = std::move(r);
    } else {
      pending.push_back(i);
    }
  }

  std::size_t budget = pending.size();
  if (options.stop_after) budget = std::min(budget, *options.stop_after);

  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr failure;
  std::mutex failure_mu;

  auto worker = [&] {
    while (!abort.load()) {
      const std::size_t slot = next.fetch_add(1);
      if (slot >= budget) return;
      const std::size_t idx = pending[slot];
      try {
        const auto t0 = std::chrono::steady_clock::now();
        SearchRow row;
        row.spec = specs[idx];
        row.cv = cross_validate(specs[idx], data, plan, options.train);
        row.param_count = Model::build(specs[idx]).param_count();
        row.seconds = std::chrono::duration<double>(
                          std::chrono::steady_clock::now() - t0)
                          .count();
        writer.append(row);
        results[idx] = std::move(row);
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
        abort = true;
      }
    }
  };

  const std::size_t n_workers =
      std::max<std::size_t>(1, std::min(options.workers, std::max<std::size_t>(budget, 1)));
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);

  SearchResult result;
  result.complete = true;
  for (auto& r : results) {
    if (r)
      result.rows.push_back(std::move(*r));
    else
      result.complete = false;
  }
  if (result.rows.empty()) throw std::runtime_error("run_search: nothing evaluated");
  result.best = select_best(result.rows);
  if (result.complete) writer.finalize(options.meta, result.rows);
  return result;
}

FinalFit fit_final(const ModelSpec& spec, const WindowedDataset& data,
                   const SplitPlan& plan, const TrainConfig& config) {
  if (plan.holdout_indices.empty())
    throw std::invalid_argument("fit_final: empty holdout block");
  const auto [fs, fc] = seeded_for_fold(spec, config, plan.folds.size());
  FinalFit out{Model::build(fs), {}, 0.0, 0.0};
  out.history = fit(out.model, data, plan.cv_indices, fc);
  out.holdout_mae = evaluate(out.model, data, plan.holdout_indices);
  out.holdout_mae_raw = out.holdout_mae * data.target_scale;
  return out;
}

}  // namespace hyperts
