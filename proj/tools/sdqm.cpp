// sdqm: synthetic dataset quality metrics.

#include <iostream>
#include <string>

#include <cli11/CLI11.hpp>

#include "sdqm/cli/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Synthetic dataset quality metrics"};
  app.require_subcommand(1);
  app.fallthrough();

  sdqm::cli::Overrides ov;
  std::string config, out, metrics, regressor;
  std::uint64_t seed = 0;
  auto* o_config = app.add_option("--config", config, "TOML run configuration");
  auto* o_seed = app.add_option("--seed", seed, "Master seed (overrides config)");
  auto* o_out = app.add_option("--out", out, "Output directory");
  auto* o_metrics = app.add_option("--metrics", metrics, "Comma list of metric groups for submetrics");
  auto* o_reg = app.add_option("--regressor", regressor, "rf | linear | ridge");

  auto* submetrics = app.add_subcommand("submetrics", "Compute every enabled sub-metric for one dataset pair");
  auto* evolve = app.add_subcommand("evolve", "Evolutionary subset-pair sweep");
  auto* fit = app.add_subcommand("fit", "Fit the SDQM regressor with k-fold evaluation");
  auto* score = app.add_subcommand("score", "Score sub-metric rows with a fitted model");
  auto* plot = app.add_subcommand("plot", "Scatter of predictions against labels (CSV + SVG)");
  auto* validate = app.add_subcommand("validate", "Load and check every configured artifact");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  if (*o_config) ov.config = config;
  if (*o_seed) ov.seed = seed;
  if (*o_out) ov.out = out;
  if (*o_metrics) ov.metrics = metrics;
  if (*o_reg) ov.regressor = regressor;

  return sdqm::cli::run_guarded([&] {
    const auto cfg = sdqm::cli::load_config(ov);
    if (*submetrics) return sdqm::cli::cmd_submetrics(cfg);
    if (*evolve) return sdqm::cli::cmd_evolve(cfg);
    if (*fit) return sdqm::cli::cmd_fit(cfg);
    if (*score) return sdqm::cli::cmd_score(cfg);
    if (*plot) return sdqm::cli::cmd_plot(cfg);
    if (*validate) return sdqm::cli::cmd_validate(cfg);
    return 2;
  });
}
