#include <cmath>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sdqm/image.hpp"
#include "sdqm/structmetrics.hpp"
#include "test_util.hpp"

using namespace sdqm;

namespace {

AnnotationSet one_image(int w, int h, std::vector<BoundingBox> boxes, std::map<std::string, std::string> meta = {}) {
  AnnotationSet a;
  a.images.push_back({"0", w, h, meta});
  for (const auto& b : boxes) a.objects.push_back({"0", 1, b});
  a.categories[1] = "thing";
  return a;
}

AnnotationSet random_set(Rng& rng) {
  AnnotationSet a;
  const std::size_t n = 1 + rng.below(4);
  for (std::size_t i = 0; i < n; ++i) a.images.push_back({std::to_string(i), 5 + int(rng.below(200)), 5 + int(rng.below(200)), {}});
  for (std::size_t o = rng.below(25); o > 0; --o) {
    const auto& im = a.images[rng.below(n)];
    const double x = rng.uniform() * im.width, y = rng.uniform() * im.height;
    a.objects.push_back({im.id, 1, {x, y, rng.uniform() * (im.width - x), rng.uniform() * (im.height - y)}});
  }
  return a;
}

}  // namespace

TEST(CoveredPixels, EdgeRules) {
  EXPECT_EQ(covered_pixels(2.0, 5.0, 10), std::make_pair(2, 4));
  EXPECT_EQ(covered_pixels(2.5, 2.5, 10), std::make_pair(2, 2));
  EXPECT_EQ(covered_pixels(3.0, 3.0, 10), std::make_pair(3, 2));  // empty
  EXPECT_EQ(covered_pixels(-1.0, 20.0, 10), std::make_pair(0, 9));
}

TEST(Heatmap, HandCase) {
  // 16x16 image on a 16x16 canvas: box covers columns 0..7, rows 0..3 -> top-left cell has half its pixels.
  const auto hm = build_heatmap(one_image(16, 16, {{0, 0, 8, 4}}), 16, 16);
  ASSERT_EQ(hm.width, 2);
  ASSERT_EQ(hm.height, 2);
  EXPECT_DOUBLE_EQ(hm.at(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(hm.at(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(hm.at(1, 0), 0.0);
}

TEST(Heatmap, NormalizedByImageCount) {
  auto a = one_image(8, 8, {{0, 0, 8, 8}});
  a.images.push_back({"1", 8, 8, {}});
  const auto hm = build_heatmap(a, 8, 8);
  EXPECT_DOUBLE_EQ(hm.at(0, 0), 0.5);
}

TEST(Heatmap, MatchesRasterOracle) {
  Rng rng(11);
  for (int t = 0; t < 30; ++t) {
    const auto a = random_set(rng);
    const int w = 8 + static_cast<int>(rng.below(70)), h = 8 + static_cast<int>(rng.below(70));
    EXPECT_EQ(build_heatmap(a, w, h).cells, oracle::heatmap(a, w, h)) << w << "x" << h;
  }
}

TEST(Heatmap, DefaultCanvasMatchesOracle) {
  Rng rng(12);
  const auto a = random_set(rng);
  const auto hm = build_heatmap(a);
  EXPECT_EQ(hm.width, kHeatmapCanvas / kHeatmapPool);
  EXPECT_EQ(hm.cells, oracle::heatmap(a, kHeatmapCanvas, kHeatmapCanvas));
}

TEST(Heatmap, RmseProperties) {
  Rng rng(13);
  for (int t = 0; t < 10; ++t) {
    const auto a = build_heatmap(random_set(rng), 32, 32), b = build_heatmap(random_set(rng), 32, 32);
    EXPECT_EQ(spatial_distribution_difference(a, a), 0.0);
    EXPECT_EQ(spatial_distribution_difference(a, b), spatial_distribution_difference(b, a));
    EXPECT_GE(spatial_distribution_difference(a, b), 0.0);
  }
  const auto a = build_heatmap(random_set(rng), 32, 32), b = build_heatmap(random_set(rng), 16, 16);
  EXPECT_THROW(spatial_distribution_difference(a, b), ComputeError);
  EXPECT_THROW(build_heatmap(AnnotationSet{}), ComputeError);
}

TEST(BBox, FeaturesHandCase) {
  const auto f = bbox_features(one_image(30, 40, {{0, 0, 6, 8}}));
  EXPECT_DOUBLE_EQ(f.aspect_ratios[0], 0.75);
  EXPECT_DOUBLE_EQ(f.diagonals[0], 10.0 / 50.0);
  EXPECT_DOUBLE_EQ(f.areas[0], 48.0 / 1200.0);
}

TEST(BBox, IdenticalSetsGiveZero) {
  Rng rng(14);
  auto a = random_set(rng);
  while (a.objects.size() < 3) a = random_set(rng);
  const auto m = bbox_match(a, a);
  EXPECT_EQ(m.ed_aspect(), 0.0);
  EXPECT_EQ(m.ed_size(), 0.0);
  EXPECT_EQ(m.ed_area(), 0.0);
  EXPECT_THROW(bbox_match(a, one_image(4, 4, {})), ComputeError);
}

TEST(Labels, KeysAndBuckets) {
  AnnotationSet a;
  a.images = {{"a", 10, 10, {{"weather", "fog"}}}, {"b", 10, 10, {}}, {"c", 10, 10, {}}};
  for (int i = 0; i < 12; ++i) a.objects.push_back({"a", 2, {0, 0, 1, 1}});
  a.objects.push_back({"a", 5, {0, 0, 1, 1}});
  a.objects.push_back({"b", 2, {0, 0, 1, 1}});
  const auto d = label_distribution(a, {"weather"});
  ASSERT_EQ(d.size(), 4u);
  EXPECT_EQ(d.at(LabelKey{2, 10, {"fog"}}), 1);
  EXPECT_EQ(d.at(LabelKey{5, 1, {"fog"}}), 1);
  EXPECT_EQ(d.at(LabelKey{2, 1, {""}}), 1);
  EXPECT_EQ(d.at(LabelKey{kNoObjectsCategory, 0, {""}}), 1);
  EXPECT_EQ(to_string(LabelKey{2, 12, {"fog"}}), "2:10+:fog");
}

TEST(Labels, OverlapIdentityAndDisjoint) {
  Rng rng(15);
  auto a = random_set(rng);
  while (a.objects.empty()) a = random_set(rng);
  const auto same = label_overlap(a, a);
  EXPECT_EQ(same.ks, 0.0);
  EXPECT_FALSE(same.no_shared_categories);
  auto b = a;
  for (auto& o : b.objects) o.category_id = 99;
  const auto dis = label_overlap(a, b);
  EXPECT_TRUE(dis.no_shared_categories);
  EXPECT_EQ(dis.ks, 1.0);
}

TEST(Labels, KsHandCase) {
  // real: two images with one object of cat 1; synthetic: one such image plus one empty image.
  AnnotationSet r, s;
  r.images = {{"a", 4, 4, {}}, {"b", 4, 4, {}}};
  r.objects = {{"a", 1, {0, 0, 1, 1}}, {"b", 1, {0, 0, 1, 1}}};
  s.images = {{"a", 4, 4, {}}, {"b", 4, 4, {}}};
  s.objects = {{"a", 1, {0, 0, 1, 1}}};
  const auto o = label_overlap(r, s);
  EXPECT_EQ(o.keys, 2u);
  EXPECT_DOUBLE_EQ(o.ks, 0.5);
}

TEST(Pixels, HistogramsFromDirectory) {
  const auto dir = testutil::scratch();
  RgbImage img{2, 1, {0, 10, 255, 0, 20, 255}};
  write_png(dir / "a.png", img);
  write_png(dir / "b.png", img);
  detail::write_file(dir / "broken.png", "not a png");
  detail::write_file(dir / "notes.txt", "ignored");
  const auto h = pixel_histograms(dir);
  EXPECT_EQ(h.images, 2u);
  EXPECT_EQ(h.skipped, 1u);
  EXPECT_EQ(h.pixels, 4);
  EXPECT_EQ(h.counts[0][0], 4);
  EXPECT_EQ(h.counts[1][10], 2);
  EXPECT_EQ(h.counts[2][255], 4);
  EXPECT_DOUBLE_EQ(h.masses(1)[20], 0.5);
  const auto m = pixel_intensity_match(h, h);
  EXPECT_EQ(m.ad_green(), 0.0);
  EXPECT_EQ(*m.channels[0].get(Measure::ks), 0.0);
}

TEST(Pixels, EmptyDirectoryFails) {
  const auto dir = testutil::scratch();
  EXPECT_THROW(pixel_histograms(dir), ComputeError);
  EXPECT_THROW(pixel_histograms(dir / "nope"), ComputeError);
}

TEST(Pixels, ShiftedIntensitiesDiffer) {
  PixelHistograms a, b;
  RgbImage x{4, 4, std::vector<std::uint8_t>(48, 50)}, y{4, 4, std::vector<std::uint8_t>(48, 60)};
  for (int i = 0; i < 48; i += 3) x.pixels[i] = static_cast<std::uint8_t>(40 + i);
  a.add(x);
  b.add(y);
  const auto m = pixel_intensity_match(a, b);
  EXPECT_GT(m.ad_red(), 0.0);
  EXPECT_EQ(*m.channels[1].get(Measure::wasserstein), 10.0);
}

TEST(Image, PngRoundTrip) {
  const auto dir = testutil::scratch();
  Rng rng(16);
  RgbImage img{7, 5, std::vector<std::uint8_t>(105)};
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
  write_png(dir / "x.png", img);
  const auto back = decode_image(dir / "x.png");
  ASSERT_TRUE(back.has_value());
  EXPECT_EQ(back->pixels, img.pixels);
  EXPECT_TRUE(is_image_file("A.JPG"));
  EXPECT_FALSE(is_image_file("a.gif"));
}
