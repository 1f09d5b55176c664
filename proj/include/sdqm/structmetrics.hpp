#pragma once

// Annotation- and pixel-level sub-metrics: spatial distribution heatmaps,
// bounding-box shape statistics, label overlap and pixel intensity match.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "sdqm/dataio.hpp"
#include "sdqm/error.hpp"
#include "sdqm/image.hpp"
#include "sdqm/parallel.hpp"
#include "sdqm/statdist.hpp"

namespace sdqm {

// ---------------------------------------------------------------------------
// Spatial distribution

inline constexpr int kHeatmapCanvas = 512;
inline constexpr int kHeatmapPool = 8;

struct HeatMap {
  int width = 0;   // pooled columns
  int height = 0;  // pooled rows
  std::vector<double> cells;  // row-major

  double at(int row, int col) const { return cells[static_cast<std::size_t>(row) * width + col]; }
};

// Pixel columns [first, last] of a working canvas touched by the interval
// [lo, hi) in canvas coordinates; empty when first > last.
inline std::pair<int, int> covered_pixels(double lo, double hi, int extent) {
  const int first = std::max(0, static_cast<int>(std::floor(lo)));
  const int last = std::min(extent - 1, static_cast<int>(std::ceil(hi)) - 1);
  return {first, last};
}

// Per-pixel count of objects overlapping each pixel of a working_w x working_h
// canvas (boxes rescaled from native image size), mean-pooled over 8x8
// windows (partial edge windows average what they cover), divided by the
// number of images.
inline HeatMap build_heatmap(const AnnotationSet& ann, int working_w = kHeatmapCanvas,
                             int working_h = kHeatmapCanvas) {
  if (ann.images.empty()) throw ComputeError("build_heatmap: annotation set has no images");
  if (working_w <= 0 || working_h <= 0) throw ComputeError("build_heatmap: working size must be positive");
  const auto index = ann.image_index();
  const std::size_t W = static_cast<std::size_t>(working_w), H = static_cast<std::size_t>(working_h);

  // 2-D difference array, then prefix sums give exact integer coverage.
  std::vector<std::int64_t> diff((W + 1) * (H + 1), 0);
  for (const auto& obj : ann.objects) {
    const auto& img = ann.images[index.at(obj.image_id)];
    const double sx = static_cast<double>(working_w) / img.width, sy = static_cast<double>(working_h) / img.height;
    const auto [c0, c1] = covered_pixels(obj.bbox.x * sx, (obj.bbox.x + obj.bbox.w) * sx, working_w);
    const auto [r0, r1] = covered_pixels(obj.bbox.y * sy, (obj.bbox.y + obj.bbox.h) * sy, working_h);
    if (c0 > c1 || r0 > r1) continue;
    diff[r0 * (W + 1) + c0] += 1;
    diff[r0 * (W + 1) + c1 + 1] -= 1;
    diff[(r1 + 1) * (W + 1) + c0] -= 1;
    diff[(r1 + 1) * (W + 1) + c1 + 1] += 1;
  }
  std::vector<std::int64_t> counts(W * H);
  for (std::size_t r = 0; r < H; ++r) {
    std::int64_t run = 0;
    for (std::size_t c = 0; c < W; ++c) {
      run += diff[r * (W + 1) + c];
      counts[r * W + c] = run + (r > 0 ? counts[(r - 1) * W + c] : 0);
    }
  }

  HeatMap hm;
  hm.width = (working_w + kHeatmapPool - 1) / kHeatmapPool;
  hm.height = (working_h + kHeatmapPool - 1) / kHeatmapPool;
  hm.cells.assign(static_cast<std::size_t>(hm.width) * hm.height, 0.0);
  const double images = static_cast<double>(ann.images.size());
  for (int pr = 0; pr < hm.height; ++pr)
    for (int pc = 0; pc < hm.width; ++pc) {
      std::int64_t sum = 0;
      const int r_end = std::min(working_h, (pr + 1) * kHeatmapPool);
      const int c_end = std::min(working_w, (pc + 1) * kHeatmapPool);
      for (int r = pr * kHeatmapPool; r < r_end; ++r)
        for (int c = pc * kHeatmapPool; c < c_end; ++c) sum += counts[static_cast<std::size_t>(r) * W + c];
      const double window = static_cast<double>((r_end - pr * kHeatmapPool) * (c_end - pc * kHeatmapPool));
      hm.cells[static_cast<std::size_t>(pr) * hm.width + pc] = static_cast<double>(sum) / window / images;
    }
  return hm;
}

// RMSE over heatmap cells.
inline double spatial_distribution_difference(const HeatMap& a, const HeatMap& b) {
  if (a.width != b.width || a.height != b.height)
    throw ComputeError("spatial_distribution_difference: heatmap dimensions differ");
  double acc = 0;
  for (std::size_t i = 0; i < a.cells.size(); ++i) {
    const double d = a.cells[i] - b.cells[i];
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(a.cells.size()));
}

inline void save_heatmap(const fs::path& path, const HeatMap& hm) {
  std::vector<std::string> ids;
  for (int r = 0; r < hm.height; ++r) ids.push_back("row" + std::to_string(r));
  std::vector<float> values(hm.cells.begin(), hm.cells.end());
  save_matrix(path, ids, static_cast<std::size_t>(hm.width), values);
}

// ---------------------------------------------------------------------------
// Bounding box match

struct BBoxFeatureSet {
  std::vector<double> aspect_ratios;  // w / h
  std::vector<double> diagonals;      // box diagonal / image diagonal
  std::vector<double> areas;          // box area / image area
};

inline BBoxFeatureSet bbox_features(const AnnotationSet& ann) {
  const auto index = ann.image_index();
  BBoxFeatureSet f;
  for (const auto& obj : ann.objects) {
    const auto& img = ann.images[index.at(obj.image_id)];
    const double iw = img.width, ih = img.height;
    f.aspect_ratios.push_back(obj.bbox.w / obj.bbox.h);
    f.diagonals.push_back(std::hypot(obj.bbox.w, obj.bbox.h) / std::hypot(iw, ih));
    f.areas.push_back(obj.bbox.w * obj.bbox.h / (iw * ih));
  }
  return f;
}

// All seven measures for two continuous sample sets (histogram measures use
// 256 pooled equal-width bins).
inline MeasureRow compare_samples(const std::vector<double>& a, const std::vector<double>& b) {
  const auto p = EmpiricalDistribution::from_samples(a);
  const auto q = EmpiricalDistribution::from_samples(b);
  const auto [hp, hq] = pooled_histograms(p, q, 256);
  return all_measures(p, q, hp, hq);
}

struct BBoxMatch {
  MeasureRow aspect_ratio;
  MeasureRow size;  // diagonal
  MeasureRow area;

  double ed_aspect() const { return *aspect_ratio.get(Measure::energy); }
  double ed_size() const { return *size.get(Measure::energy); }
  double ed_area() const { return *area.get(Measure::energy); }
};

inline BBoxMatch bbox_match(const AnnotationSet& real, const AnnotationSet& synth) {
  if (real.objects.empty() || synth.objects.empty()) throw ComputeError("bbox_match: empty object list");
  const auto fr = bbox_features(real), fs_ = bbox_features(synth);
  return {compare_samples(fr.aspect_ratios, fs_.aspect_ratios), compare_samples(fr.diagonals, fs_.diagonals),
          compare_samples(fr.areas, fs_.areas)};
}

// ---------------------------------------------------------------------------
// Label overlap

inline constexpr int kCountBucketCap = 10;  // bucket 10 means "10+"
inline constexpr int kNoObjectsCategory = -1;

// Composite key: (category, per-image count bucket of that category, metadata values).
struct LabelKey {
  int category_id = 0;
  int count_bucket = 0;
  std::vector<std::string> metadata;

  auto operator<=>(const LabelKey&) const = default;
};

inline std::string to_string(const LabelKey& k) {
  std::string s = std::to_string(k.category_id) + ":" +
                  (k.count_bucket >= kCountBucketCap ? std::string("10+") : std::to_string(k.count_bucket));
  for (const auto& m : k.metadata) s += ":" + m;
  return s;
}

using LabelDistribution = std::map<LabelKey, double>;  // key -> count

// One key per (image, category present); images without objects contribute
// a single (-1, 0) key. Missing metadata values are empty strings.
inline LabelDistribution label_distribution(const AnnotationSet& ann, const std::vector<std::string>& metadata_keys) {
  const auto index = ann.image_index();
  std::vector<std::map<int, int>> per_image(ann.images.size());
  for (const auto& obj : ann.objects) ++per_image[index.at(obj.image_id)][obj.category_id];
  LabelDistribution dist;
  for (std::size_t i = 0; i < ann.images.size(); ++i) {
    std::vector<std::string> meta;
    for (const auto& key : metadata_keys) {
      auto it = ann.images[i].metadata.find(key);
      meta.push_back(it == ann.images[i].metadata.end() ? std::string() : it->second);
    }
    if (per_image[i].empty()) {
      dist[LabelKey{kNoObjectsCategory, 0, meta}] += 1;
      continue;
    }
    for (const auto& [cat, n] : per_image[i]) dist[LabelKey{cat, std::min(n, kCountBucketCap), meta}] += 1;
  }
  return dist;
}

struct LabelOverlap {
  MeasureRow measures;
  double ks = 0;  // fused sub-component
  std::size_t keys = 0;
  bool no_shared_categories = false;
};

inline LabelOverlap label_overlap(const AnnotationSet& real, const AnnotationSet& synth,
                                  const std::vector<std::string>& metadata_keys = {}) {
  const auto dr = label_distribution(real, metadata_keys), ds = label_distribution(synth, metadata_keys);
  if (dr.empty() || ds.empty()) throw ComputeError("label_overlap: annotation set has no images");
  std::map<LabelKey, std::size_t> position;
  for (const auto& [k, v] : dr) position.emplace(k, 0);
  for (const auto& [k, v] : ds) position.emplace(k, 0);
  std::size_t next = 0;
  for (auto& [k, pos] : position) pos = next++;
  const std::size_t K = position.size();

  std::vector<double> support(K), cr(K, 0.0), cs(K, 0.0), edges(K + 1);
  for (std::size_t i = 0; i < K; ++i) support[i] = static_cast<double>(i);
  for (std::size_t i = 0; i <= K; ++i) edges[i] = static_cast<double>(i);
  for (const auto& [k, v] : dr) cr[position[k]] = v;
  for (const auto& [k, v] : ds) cs[position[k]] = v;

  const auto p = EmpiricalDistribution::from_weighted(support, cr);
  const auto q = EmpiricalDistribution::from_weighted(support, cs);
  const auto hp = EmpiricalDistribution::from_counts(edges, cr);
  const auto hq = EmpiricalDistribution::from_counts(edges, cs);

  LabelOverlap out;
  out.measures = all_measures(p, q, hp, hq);
  out.ks = ks_statistic(hp, hq);
  out.keys = K;
  std::set<int> real_cats, shared;
  for (const auto& o : real.objects) real_cats.insert(o.category_id);
  for (const auto& o : synth.objects)
    if (real_cats.count(o.category_id)) shared.insert(o.category_id);
  out.no_shared_categories = shared.empty();
  if (out.no_shared_categories) out.ks = 1.0;  // maximal distance, reported with a warning
  return out;
}

// ---------------------------------------------------------------------------
// Pixel intensity

struct PixelHistograms {
  std::array<std::vector<double>, 3> counts{std::vector<double>(256, 0.0), std::vector<double>(256, 0.0),
                                            std::vector<double>(256, 0.0)};
  double pixels = 0;
  std::size_t images = 0;
  std::size_t skipped = 0;  // undecodable files

  std::vector<double> masses(std::size_t channel) const {
    std::vector<double> m(256);
    for (std::size_t i = 0; i < 256; ++i) m[i] = counts[channel][i] / pixels;
    return m;
  }

  void add(const RgbImage& img) {
    const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t c = 0; c < 3; ++c) counts[c][img.pixels[i * 3 + c]] += 1;
    pixels += static_cast<double>(n);
    ++images;
  }

  void merge(const PixelHistograms& other) {
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < 256; ++i) counts[c][i] += other.counts[c][i];
    pixels += other.pixels;
    images += other.images;
    skipped += other.skipped;
  }
};

// Histograms pooled over every pixel of every decodable PNG/JPEG in `image_dir`.
inline PixelHistograms pixel_histograms(const fs::path& image_dir) {
  if (!fs::is_directory(image_dir)) throw ComputeError("image directory '" + image_dir.string() + "' does not exist");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(image_dir))
    if (entry.is_regular_file() && is_image_file(entry.path())) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<PixelHistograms> partial(files.size());
  parallel_for(files.size(), [&](std::size_t i) {
    if (auto img = decode_image(files[i]))
      partial[i].add(*img);
    else
      partial[i].skipped = 1;
  });
  PixelHistograms total;
  for (const auto& p : partial) total.merge(p);
  if (total.images == 0) throw ComputeError("no decodable images in '" + image_dir.string() + "'");
  return total;
}

inline void save_pixel_histograms(const fs::path& path, const PixelHistograms& h) {
  std::vector<float> values;
  for (std::size_t c = 0; c < 3; ++c)
    for (double m : h.masses(c)) values.push_back(static_cast<float>(m));
  save_matrix(path, std::vector<std::string>{"r", "g", "b"}, 256, values);
}

struct PixelIntensityMatch {
  std::array<MeasureRow, 3> channels;  // r, g, b

  double ad_red() const { return *channels[0].get(Measure::ad); }
  double ad_green() const { return *channels[1].get(Measure::ad); }
  double ad_blue() const { return *channels[2].get(Measure::ad); }
};

// Intensity distribution of one channel as weighted samples and as a 256-bin histogram.
inline std::pair<EmpiricalDistribution, EmpiricalDistribution> channel_distribution(const PixelHistograms& h,
                                                                                    std::size_t channel) {
  std::vector<double> levels(256), edges(257);
  for (std::size_t i = 0; i < 256; ++i) levels[i] = static_cast<double>(i);
  for (std::size_t i = 0; i <= 256; ++i) edges[i] = static_cast<double>(i);
  return {EmpiricalDistribution::from_weighted(levels, h.counts[channel]),
          EmpiricalDistribution::from_counts(edges, h.counts[channel])};
}

inline PixelIntensityMatch pixel_intensity_match(const PixelHistograms& real, const PixelHistograms& synth) {
  if (!(real.pixels > 0) || !(synth.pixels > 0)) throw ComputeError("pixel_intensity_match: empty histograms");
  PixelIntensityMatch out;
  for (std::size_t c = 0; c < 3; ++c) {
    const auto [p, hp] = channel_distribution(real, c);
    const auto [q, hq] = channel_distribution(synth, c);
    out.channels[c] = all_measures(p, q, hp, hq);
  }
  return out;
}

}  // namespace sdqm
