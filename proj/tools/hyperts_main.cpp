#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hyperts/commands.hpp"
#include "hyperts/util.hpp"

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace hyperts;
  CLI::App app{"Hypercomplex and baseline forecasting experiments"};
  app.set_version_flag("--version", std::string(kCodeVersion));
  app.require_subcommand(1);

  IngestOptions ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Align, standardize and store ticker CSVs");
  ingest_cmd->add_option("--manifest", ingest.manifest, "Dataset manifest (JSON)")->required();
  ingest_cmd->add_option("--out", ingest.out, "Output dataset directory")->required();

  CorrelateOptions correlate;
  auto* corr_cmd = app.add_subcommand("correlate", "Pearson matrix and lagged correlations");
  corr_cmd->add_option("--data", correlate.data, "Ingested dataset directory")->required();
  corr_cmd->add_option("--max-lag", correlate.max_lag, "Largest lag")->capture_default_str();
  corr_cmd->add_option("--out", correlate.out, "Output directory (default <data>/analysis)");

  SearchCommandOptions search;
  std::string cls = "h", order;
  std::vector<std::string> activations;
  auto* search_cmd = app.add_subcommand("search", "Grid search with k-fold CV for one cell");
  search_cmd->add_option("--data", search.data, "Ingested dataset directory")->required();
  search_cmd->add_option("--out", search.out, "Results directory")->required();
  search_cmd->add_option("--class", cls, "Architecture class")
      ->check(CLI::IsMember({"cnn", "lstm", "h"}))
      ->capture_default_str();
  search_cmd->add_option("--window", search.window, "Input window")->capture_default_str();
  search_cmd->add_option("--span", search.span, "Prediction span")->capture_default_str();
  search_cmd->add_option("--order", order, "Ticker order, e.g. Copper,FCX,CLP,SCCO");
  search_cmd->add_option("--target", search.target, "Ticker to predict")->capture_default_str();
  search_cmd->add_option("--algebra", search.algebra, "Algebra for class h")
      ->check(CLI::IsMember({"quaternion", "coquaternion", "cl11", "all"}))
      ->capture_default_str();
  search_cmd->add_option("--seed", search.seed, "Global seed")->capture_default_str();
  search_cmd->add_option("--epochs", search.train.epochs)->capture_default_str();
  search_cmd->add_option("--batch-size", search.train.batch_size)->capture_default_str();
  search_cmd->add_option("--lr", search.train.lr)->capture_default_str();
  search_cmd->add_option("--folds", search.folds)->capture_default_str();
  search_cmd->add_option("--sizes", search.sizes, "Restrict the test-layer size axis")
      ->delimiter(',');
  search_cmd->add_option("--dense1", search.n_dense1, "Restrict n_dense1")->delimiter(',');
  search_cmd->add_option("--dense2", search.n_dense2, "Restrict n_dense2")->delimiter(',');
  search_cmd->add_option("--dense-units", search.dense_units, "Restrict dense_units")
      ->delimiter(',');
  search_cmd->add_option("--activations", activations, "Restrict dense activation")
      ->delimiter(',');
  search_cmd->add_flag("--all", search.all, "Run every (window, span) cell in turn");

  ReportOptions report;
  auto* report_cmd = app.add_subcommand("report", "Compare best results across cells");
  report_cmd->add_option("--in", report.in, "Results directory")->required();
  report_cmd->add_option("--out", report.out, "Report file (.csv or .json)")->required();

  CLI11_PARSE(app, argc, argv);

  if (*ingest_cmd) return cmd_ingest(ingest, std::cout, std::cerr);
  if (*corr_cmd) return cmd_correlate(correlate, std::cout, std::cerr);
  if (*search_cmd) {
    search.kind = test_layer_from_string(cls);
    if (!order.empty()) search.order = split_list(order);
    search.activations = activations;
    return cmd_search(search, std::cout, std::cerr);
  }
  if (*report_cmd) return cmd_report(report, std::cout, std::cerr);
  return 1;
}
