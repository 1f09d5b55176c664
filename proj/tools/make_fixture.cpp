// Writes a seeded demo dataset pair (annotations, embeddings, PNGs, detection
// logs, config.toml), or a synthetic sub-metric table with labels.

#include <iostream>
#include <string>

#include <cli11/CLI11.hpp>

#include "sdqm/fixture.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate demo inputs for sdqm"};
  app.require_subcommand(1);
  std::string out;
  sdqm::fixture::PairOptions opt;
  auto* pair = app.add_subcommand("pair", "Dataset pair with config.toml");
  pair->add_option("--out", out, "Output directory")->required();
  pair->add_option("--images", opt.images, "Images per side");
  pair->add_option("--dim", opt.dim, "Embedding dimension");
  pair->add_option("--shift", opt.shift, "Synthetic embedding mean shift");
  pair->add_flag("--identical", opt.identical, "Synthetic side copies the real side");
  pair->add_option("--seed", opt.seed, "Seed");

  std::size_t rows = 200;
  double noise = 0.01;
  std::uint64_t seed = 7;
  auto* table = app.add_subcommand("table", "Sub-metric CSV + labels from a known smooth function");
  table->add_option("--out", out, "Output directory")->required();
  table->add_option("--rows", rows, "Rows");
  table->add_option("--noise", noise, "Label noise standard deviation");
  table->add_option("--seed", seed, "Seed");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*pair) {
      std::cout << sdqm::fixture::write_dataset_pair(out, opt).string() << "\n";
    } else {
      const auto t = sdqm::fixture::fusion_table(rows, noise, seed);
      std::filesystem::create_directories(out);
      const auto& cols = sdqm::submetric_names();
      std::string csv = sdqm::submetric_csv_header(cols), labels = "pair_id,map50\n";
      for (std::size_t i = 0; i < t.rows.size(); ++i) {
        csv += sdqm::submetric_csv_row(t.rows[i], cols);
        labels += t.rows[i].pair_id + "," + sdqm::format_value(t.labels[i]) + "\n";
      }
      sdqm::detail::write_file(std::filesystem::path(out) / "submetrics.csv", csv);
      sdqm::detail::write_file(std::filesystem::path(out) / "labels.csv", labels);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
