#include <cmath>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "sdqm/fixture.hpp"
#include "sdqm/fuse.hpp"

using namespace sdqm;

namespace {

SubMetricVector full_vector(double base = 0.1) {
  SubMetricVector v;
  v.pair_id = "p";
  double x = base;
  for (const auto& n : submetric_names()) v.set(n, x += 0.01);
  return v;
}

}  // namespace

TEST(Names, CanonicalList) {
  EXPECT_EQ(submetric_names().size(), 22u);
  EXPECT_TRUE(is_submetric_name("vinfo_v"));
  EXPECT_FALSE(is_submetric_name("map50"));
  SubMetricVector v;
  EXPECT_THROW(v.set("bogus", 1), ValidationError);
  EXPECT_THROW(v.set("fi", NAN), ValidationError);
  EXPECT_THROW(v.require("fi"), ValidationError);
}

TEST(Groups, DefaultTermsAndFields) {
  const auto row = build_feature_row(full_vector());
  EXPECT_EQ(row.names.size(), 22u);
  EXPECT_EQ(row.names.front(), "fi_star");
  EXPECT_EQ(row.names.back(), "vinfo_v*vinfo_h_y_given_x");
  const auto fields = required_fields(default_groups());
  EXPECT_EQ(fields.size(), 15u);
  EXPECT_EQ(std::count(fields.begin(), fields.end(), "mauve"), 0);
  EXPECT_THROW(canonical_groups({"nope"}), ConfigError);
  EXPECT_EQ(canonical_groups({"vinfo", "fi", "fi"}), (std::vector<std::string>{"fi", "vinfo"}));
}

TEST(Groups, TermValues) {
  SubMetricVector v;
  v.set("pixel_ad_green", 2);
  v.set("pixel_ad_red", 3);
  const auto t = group_terms("pixel_intensity", v);
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t[1].name, "pixel_ad_red^2");
  EXPECT_EQ(t[1].value, 9);
  EXPECT_EQ(t[2].value, 6);
  EXPECT_EQ(build_feature_row(full_vector(), {"clusterability"}).names.size(), 5u);
}

TEST(Csv, FormatValue) {
  EXPECT_EQ(format_value(-0.0000001), "0.000000");
  EXPECT_EQ(format_value(1.0 / 3.0), "0.333333");
}

TEST(Csv, RoundTrip) {
  const auto v = full_vector();
  const auto& cols = submetric_names();
  const auto t = parse_submetric_csv(submetric_csv_header(cols) + submetric_csv_row(v, cols));
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.columns, cols);
  for (const auto& n : cols) EXPECT_NEAR(t.rows[0].require(n), v.require(n), 5e-7);
}

TEST(Csv, EmptyCellMeansMissing) {
  const auto t = parse_submetric_csv("pair_id,fi,extra\na,,3\n");
  EXPECT_FALSE(t.rows[0].get("fi").has_value());
  EXPECT_EQ(t.columns.back(), "extra");
}

TEST(Csv, Errors) {
  EXPECT_THROW(parse_submetric_csv(""), ParseError);
  EXPECT_THROW(parse_submetric_csv("id,fi\n"), ParseError);
  EXPECT_THROW(parse_submetric_csv("pair_id,fi\na,1,2\n"), ParseError);
  EXPECT_THROW(parse_submetric_csv("pair_id,fi\na,x\n"), ParseError);
  EXPECT_THROW(parse_labels_csv("pair_id,map50\na,0.5\na,0.6\n"), ValidationError);
  EXPECT_THROW(parse_labels_csv("pair_id\n"), ParseError);
  EXPECT_EQ(parse_labels_csv("pair_id,map50\na,0.5\n\nb,0.25\n").at("b"), 0.25);
}

TEST(Correlation, FrozenValues) {
  const std::vector<double> a = {1, 2, 3, 4, 5}, b = {2, 4, 5, 4, 5};
  EXPECT_NEAR(pearson(a, b), 0.7745966692414834, 1e-14);
  EXPECT_NEAR(spearman(a, b), 0.7378647873726218, 1e-14);
  EXPECT_EQ(average_ranks(b), (std::vector<double>{1, 2.5, 4.5, 2.5, 4.5}));
  EXPECT_THROW(pearson({1, 2}, {1, 2}), ComputeError);
  EXPECT_THROW(pearson({1, 1, 1}, {1, 2, 3}), ComputeError);
}

TEST(Correlation, MonotoneTransformKeepsSpearman) {
  Rng rng(1);
  std::vector<double> a(50), b(50), c(50);
  for (int i = 0; i < 50; ++i) {
    a[i] = rng.normal();
    b[i] = a[i] + rng.normal();
    c[i] = std::exp(3 * b[i]);
  }
  EXPECT_NEAR(spearman(a, b), spearman(a, c), 1e-14);
}

TEST(Model, JsonRoundTripPredictsIdentically) {
  const auto t = fixture::fusion_table(60, 0.01, 3);
  std::vector<FeatureRow> rows;
  for (const auto& r : t.rows) rows.push_back(build_feature_row(r));
  for (auto kind : {RegressorKind::random_forest, RegressorKind::linear, RegressorKind::ridge}) {
    const auto m = fit(rows, t.labels, kind, 5);
    const auto text = model_to_json(m);
    const auto back = model_from_json(text);
    EXPECT_EQ(model_to_json(back), text);
    for (const auto& r : t.rows) EXPECT_EQ(predict_sdqm(back, r), predict_sdqm(m, r));
    EXPECT_EQ(nlohmann::json::parse(text)["format"], "sdqm-regressor");
  }
}

TEST(Model, Errors) {
  const auto t = fixture::fusion_table(30, 0.01, 4);
  std::vector<FeatureRow> rows;
  for (const auto& r : t.rows) rows.push_back(build_feature_row(r));
  auto labels = t.labels;
  labels[0] = 1.5;
  EXPECT_THROW(fit(rows, labels, RegressorKind::linear, 1), ValidationError);
  EXPECT_THROW(fit({rows.begin(), rows.begin() + 5}, {t.labels.begin(), t.labels.begin() + 5}, RegressorKind::linear, 1),
               ComputeError);
  const auto m = fit(rows, t.labels, RegressorKind::linear, 1);
  auto missing = t.rows[0];
  missing.values.erase("vinfo_v");
  EXPECT_THROW(predict_sdqm(m, missing), ValidationError);
  EXPECT_THROW(model_from_json("{}"), Error);
  EXPECT_THROW(model_from_json(R"({"format": "sdqm-regressor", "version": 9})"), Error);
  EXPECT_THROW(parse_regressor_kind("svm"), ConfigError);
  EXPECT_EQ(parse_regressor_kind("random_forest"), RegressorKind::random_forest);
}

TEST(KFold, DeterministicAndComplete) {
  const auto t = fixture::fusion_table(100, 0.01, 6);
  Matrix X;
  for (const auto& r : t.rows) X.push_back(build_feature_row(r).values);
  const auto a = kfold_evaluate(X, t.labels, 10, RegressorKind::ridge, 2);
  const auto b = kfold_evaluate(X, t.labels, 10, RegressorKind::ridge, 2);
  EXPECT_EQ(a.predictions, b.predictions);
  EXPECT_EQ(a.folds.size(), 10u);
  std::size_t total = 0;
  for (const auto& f : a.folds) total += f.size;
  EXPECT_EQ(total, 100u);
  ASSERT_TRUE(a.pooled.has_value());
  EXPECT_GT(a.pooled->pearson, 0.9);
  EXPECT_GT(a.sd_pearson, 0.0);
  EXPECT_THROW(kfold_evaluate(X, t.labels, 1, RegressorKind::ridge, 2), ComputeError);
  EXPECT_THROW(kfold_evaluate(X, t.labels, 101, RegressorKind::ridge, 2), ComputeError);
}

TEST(Reduction, DropsIrrelevantGroup) {
  // label depends on fi_star only; alpha_precision is noise
  Rng rng(8);
  std::vector<SubMetricVector> rows;
  std::vector<double> labels;
  for (int i = 0; i < 80; ++i) {
    SubMetricVector v;
    v.pair_id = std::to_string(i);
    v.set("fi_star", rng.uniform());
    v.set("alpha_precision", rng.uniform());
    labels.push_back(0.9 - 0.8 * v.require("fi_star") + 0.01 * rng.normal());
    rows.push_back(v);
  }
  const auto r = backward_feature_reduction(rows, labels, {"fi", "alpha_precision"}, 1);
  EXPECT_EQ(r.retained, std::vector<std::string>{"fi"});
  ASSERT_EQ(r.steps.size(), 1u);
  EXPECT_EQ(r.steps[0].removed, "alpha_precision");
  EXPECT_GT(r.final_pearson, 0.99);
  EXPECT_THROW(backward_feature_reduction({rows.begin(), rows.begin() + 10}, {labels.begin(), labels.begin() + 10},
                                          {"fi"}, 1),
               ComputeError);
}

TEST(Fixture, LabelsInRangeAndReproducible) {
  const auto a = fixture::fusion_table(50, 0.01, 9), b = fixture::fusion_table(50, 0.01, 9);
  EXPECT_EQ(a.labels, b.labels);
  for (double l : a.labels) {
    EXPECT_GE(l, 0);
    EXPECT_LE(l, 1);
  }
  EXPECT_EQ(fixture::fusion_inputs().size(), 14u);
}
