#pragma once

// Seeded demo data: a small real/synthetic dataset pair on disk, and
// synthetic sub-metric tables with known labels for the regressor.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdqm/dataio.hpp"
#include "sdqm/fuse.hpp"
#include "sdqm/image.hpp"
#include "sdqm/rng.hpp"

namespace sdqm::fixture {

struct PairOptions {
  std::size_t images = 40;
  std::size_t dim = 8;
  double shift = 3.0;      // synthetic embedding mean offset
  bool identical = false;  // synthetic side = exact copy of real
  std::uint64_t seed = 7;
};

namespace detail {

struct Side {
  nlohmann::ordered_json annotations;
  EmbeddingSet embeddings;
  std::vector<std::pair<std::string, RgbImage>> images;
  DetectionLog predictive, conditional;
};

inline Side make_side(const PairOptions& opt, bool synthetic) {
  Rng rng(derive_seed(opt.seed, synthetic ? 2 : 1));
  Side s;
  nlohmann::ordered_json images = nlohmann::ordered_json::array(), anns = nlohmann::ordered_json::array();
  s.embeddings.dim = opt.dim;
  s.predictive.mode = EntropySource::predictive;
  s.conditional.mode = EntropySource::conditional;
  const char* weather[] = {"sunny", "cloudy"};
  for (std::size_t i = 0; i < opt.images; ++i) {
    const std::string id = "img" + std::to_string(i);
    const int w = rng.bernoulli(0.5) ? 64 : 96, h = rng.bernoulli(0.5) ? 48 : 64;
    images.push_back({{"id", id}, {"width", w}, {"height", h}, {"metadata", {{"weather", weather[rng.below(2)]}}}});
    RgbImage img{w, h, std::vector<std::uint8_t>(static_cast<std::size_t>(w) * h * 3)};
    const int base = synthetic ? 90 : 60;
    for (std::size_t p = 0; p < img.pixels.size(); ++p)
      img.pixels[p] = static_cast<std::uint8_t>(base + rng.below(60) + (p % 3) * 20);
    const std::size_t objects = rng.below(4);
    for (std::size_t o = 0; o < objects; ++o) {
      const int bw = 8 + static_cast<int>(rng.below(static_cast<std::size_t>(w / 2)));
      const int bh = 8 + static_cast<int>(rng.below(static_cast<std::size_t>(h / 2)));
      const int bx = static_cast<int>(rng.below(static_cast<std::size_t>(w - bw)));
      const int by = static_cast<int>(rng.below(static_cast<std::size_t>(h - bh)));
      const int cat = 1 + static_cast<int>(rng.below(2));
      anns.push_back({{"image_id", id}, {"category_id", cat}, {"bbox", {bx, by, bw, bh}}});
      for (int y = by; y < by + bh; ++y)
        for (int x = bx; x < bx + bw; ++x) {
          auto* px = &img.pixels[(static_cast<std::size_t>(y) * w + x) * 3];
          px[0] = static_cast<std::uint8_t>(cat == 1 ? 200 : 40);
          px[1] = static_cast<std::uint8_t>(120);
          px[2] = static_cast<std::uint8_t>(cat == 1 ? 40 : 200);
        }
      s.predictive.records.push_back({id, cat, 0.2 + 0.6 * rng.uniform()});
      s.conditional.records.push_back({id, cat, 0.6 + 0.4 * rng.uniform()});
    }
    s.images.emplace_back(id + ".png", std::move(img));
    s.embeddings.ids.push_back(id);
    for (std::size_t d = 0; d < opt.dim; ++d)
      s.embeddings.values.push_back(static_cast<float>(rng.normal() + (synthetic ? opt.shift : 0.0)));
  }
  if (s.predictive.records.empty()) {
    s.predictive.records.push_back({"img0", 1, 0.5});
    s.conditional.records.push_back({"img0", 1, 0.9});
  }
  s.annotations = {{"images", images},
                   {"annotations", anns},
                   {"categories", {{{"id", 1}, {"name", "plane"}}, {{"id", 2}, {"name", "car"}}}}};
  return s;
}

inline void write_side(const Side& s, const fs::path& dir) {
  fs::create_directories(dir / "images");
  sdqm::detail::write_file(dir / "annotations.json", s.annotations.dump(1) + "\n");
  save_embeddings(dir / "embeddings.sdqm", s.embeddings);
  for (const auto& [name, img] : s.images) write_png(dir / "images" / name, img);
}

}  // namespace detail

// Writes real/, synthetic/, detection logs and config.toml under `root`.
// Returns the config path.
inline fs::path write_dataset_pair(const fs::path& root, const PairOptions& opt = {}) {
  const auto real = detail::make_side(opt, false);
  const auto synth = opt.identical ? real : detail::make_side(opt, true);
  detail::write_side(real, root / "real");
  detail::write_side(synth, root / "synthetic");
  // Detection logs describe the real data; the synthetic side only changes the conditional model.
  sdqm::detail::write_file(root / "predictive.jsonl", encode_detection_log(real.predictive));
  sdqm::detail::write_file(root / "conditional.jsonl", encode_detection_log(synth.conditional));
  const std::string toml =
      "seed = " + std::to_string(opt.seed) +
      "\n"
      "out = \"out\"\n\n"
      "[real]\n"
      "annotations = \"real/annotations.json\"\n"
      "embeddings = \"real/embeddings.sdqm\"\n"
      "images = \"real/images\"\n\n"
      "[synthetic]\n"
      "annotations = \"synthetic/annotations.json\"\n"
      "embeddings = \"synthetic/embeddings.sdqm\"\n"
      "images = \"synthetic/images\"\n\n"
      "[detection]\n"
      "predictive = \"predictive.jsonl\"\n"
      "conditional = \"conditional.jsonl\"\n\n"
      "[metrics]\n"
      "pair_id = \"demo\"\n"
      "metadata_keys = [\"weather\"]\n\n"
      "[evolve]\n"
      "k_l = 10\n"
      "k_u = 30\n"
      "targets = 3\n"
      "generations = 50\n";
  sdqm::detail::write_file(root / "config.toml", toml);
  return root / "config.toml";
}

// ---------------------------------------------------------------------------
// Fusion tables with a known label function

// The 14 independent sub-metric inputs of the default feature groups
// (vinfo_v is derived as h_y - h_y_given_x).
inline const std::vector<std::string>& fusion_inputs() {
  static const std::vector<std::string> names = {
      "fi_star",      "alpha_precision", "beta_recall",    "separability_accuracy", "separability_params",
      "bbox_ed_aspect", "bbox_ed_size",  "bbox_ed_area",   "pixel_ad_green",        "pixel_ad_red",
      "label_ks",     "spatial_rmse",    "vinfo_h_y",      "vinfo_h_y_given_x"};
  return names;
}

inline SubMetricVector random_submetrics(Rng& rng, const std::string& id) {
  static const double params[] = {9, 81, 153, 321, 1377, 1281, 17793};
  SubMetricVector v;
  v.pair_id = id;
  v.set("fi_star", rng.uniform());
  v.set("alpha_precision", rng.uniform());
  v.set("beta_recall", rng.uniform());
  v.set("separability_accuracy", 0.5 + 0.5 * rng.uniform());
  v.set("separability_params", params[rng.below(7)]);
  v.set("bbox_ed_aspect", 0.5 * rng.uniform());
  v.set("bbox_ed_size", 0.5 * rng.uniform());
  v.set("bbox_ed_area", 0.5 * rng.uniform());
  v.set("pixel_ad_green", 5 * rng.uniform());
  v.set("pixel_ad_red", 5 * rng.uniform());
  v.set("label_ks", rng.uniform());
  v.set("spatial_rmse", 0.3 * rng.uniform());
  const double hy = 1 + 3 * rng.uniform(), hyx = 3 * rng.uniform();
  v.set("vinfo_h_y", hy);
  v.set("vinfo_h_y_given_x", hyx);
  v.set("vinfo_v", hy - hyx);
  return v;
}

// Smooth label in (0,1); dominated by recall, frontier, separability and v-information.
inline double known_label(const SubMetricVector& v) {
  const double z = 1.6 * v.require("beta_recall") - 1.2 * v.require("fi_star") -
                   1.4 * (v.require("separability_accuracy") - 0.5) + 0.25 * v.require("vinfo_v") +
                   0.3 * v.require("alpha_precision") - 0.6 * v.require("bbox_ed_aspect") -
                   0.4 * v.require("bbox_ed_size") * v.require("bbox_ed_size") - 0.3 * v.require("bbox_ed_area") -
                   0.03 * v.require("pixel_ad_green") - 0.004 * v.require("pixel_ad_red") * v.require("pixel_ad_red") -
                   0.3 * v.require("label_ks") * v.require("label_ks") - 0.8 * v.require("spatial_rmse") -
                   0.02 * std::log10(v.require("separability_params")) - 0.05 * v.require("vinfo_h_y_given_x");
  return 0.5 + 0.45 * std::tanh(z);
}

struct FusionTable {
  std::vector<SubMetricVector> rows;
  std::vector<double> labels;
};

inline FusionTable fusion_table(std::size_t rows, double noise_sd, std::uint64_t seed) {
  Rng rng(seed);
  FusionTable t;
  for (std::size_t i = 0; i < rows; ++i) {
    auto v = random_submetrics(rng, "p" + std::to_string(i));
    const double y = known_label(v) + noise_sd * rng.normal();
    t.labels.push_back(std::clamp(y, 0.0, 1.0));
    t.rows.push_back(std::move(v));
  }
  return t;
}

}  // namespace sdqm::fixture
