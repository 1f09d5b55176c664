#include <cmath>
#include <map>

#include <gtest/gtest.h>

#include "sdqm/regress.hpp"
#include "sdqm/rng.hpp"

using namespace sdqm;

namespace {

struct Data {
  Matrix X;
  std::vector<double> y;
};

Data linear_data(std::size_t n, std::uint64_t seed, double noise = 0) {
  Rng rng(seed);
  Data d;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = rng.uniform(), b = rng.uniform() * 10, c = rng.normal();
    d.X.push_back({a, b, c});
    d.y.push_back(1.5 + 2 * a - 0.3 * b + 0.7 * c + noise * rng.normal());
  }
  return d;
}

}  // namespace

TEST(Linear, RecoversExactCoefficients) {
  const auto d = linear_data(50, 1);
  const auto m = fit_linear(d.X, d.y);
  EXPECT_NEAR(m.intercept, 1.5, 1e-10);
  EXPECT_NEAR(m.coefficients[0], 2, 1e-10);
  EXPECT_NEAR(m.coefficients[1], -0.3, 1e-10);
  EXPECT_NEAR(m.coefficients[2], 0.7, 1e-10);
}

TEST(Linear, CollinearColumnsStillPredict) {
  auto d = linear_data(40, 2);
  for (auto& row : d.X) row.push_back(row[0] - row[1]);  // exact linear combination
  const auto m = fit_linear(d.X, d.y);
  for (std::size_t i = 0; i < d.X.size(); ++i) EXPECT_NEAR(m.predict(d.X[i]), d.y[i], 1e-9);
}

TEST(Linear, DegenerateDesigns) {
  Matrix X(5, std::vector<double>{1, 2});
  std::vector<double> y = {1, 2, 3, 4, 5};
  EXPECT_THROW(fit_linear(X, y), ComputeError);
  EXPECT_THROW(fit_linear({}, {}), ComputeError);
  EXPECT_THROW(fit_linear({{1.0}, {2.0}}, {1.0}), ComputeError);
  EXPECT_THROW(fit_linear({{1.0}, {NAN}}, {1.0, 2.0}), ComputeError);
}

TEST(Ridge, ZeroAlphaMatchesOls) {
  const auto d = linear_data(60, 3, 0.1);
  const auto a = fit_linear(d.X, d.y), b = fit_ridge(d.X, d.y, 0.0);
  EXPECT_NEAR(a.intercept, b.intercept, 1e-8);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(a.coefficients[i], b.coefficients[i], 1e-9);
}

TEST(Ridge, ShrinksWithAlpha) {
  const auto d = linear_data(60, 4, 0.1);
  auto norm = [](const LinearModel& m) {
    double s = 0;
    for (double c : m.coefficients) s += c * c;
    return s;
  };
  const double n0 = norm(fit_ridge(d.X, d.y, 0.0)), n1 = norm(fit_ridge(d.X, d.y, 10)), n2 = norm(fit_ridge(d.X, d.y, 1000));
  EXPECT_GT(n0, n1);
  EXPECT_GT(n1, n2);
  EXPECT_THROW(fit_ridge(d.X, d.y, -1), ComputeError);
}

TEST(Ridge, ConstantFeatureGetsZeroWeight) {
  auto d = linear_data(30, 5);
  for (auto& row : d.X) row.push_back(7.0);
  EXPECT_EQ(fit_ridge(d.X, d.y).coefficients[3], 0.0);
}

TEST(Forest, LearnsStepFunction) {
  Rng rng(6);
  Matrix X;
  std::vector<double> y;
  for (int i = 0; i < 200; ++i) {
    const double a = rng.uniform(), noise = rng.uniform();
    X.push_back({a, noise});
    y.push_back(a > 0.5 ? 1.0 : 0.0);
  }
  const auto rf = RandomForest::fit(X, y, 1);
  EXPECT_EQ(rf.trees.size(), 100u);
  EXPECT_LT(rf.predict({0.1, 0.5}), 0.1);
  EXPECT_GT(rf.predict({0.9, 0.5}), 0.9);
}

TEST(Forest, DeterministicPerSeed) {
  const auto d = linear_data(80, 7, 0.2);
  const auto a = RandomForest::fit(d.X, d.y, 3), b = RandomForest::fit(d.X, d.y, 3), c = RandomForest::fit(d.X, d.y, 4);
  const std::vector<double> probe = {0.3, 4, 0.1};
  EXPECT_EQ(a.predict(probe), b.predict(probe));
  EXPECT_NE(a.predict(probe), c.predict(probe));
}

TEST(Forest, PredictionsStayInLabelRange) {
  const auto d = linear_data(50, 8, 0.5);
  const auto rf = RandomForest::fit(d.X, d.y, 1);
  const double lo = *std::min_element(d.y.begin(), d.y.end()), hi = *std::max_element(d.y.begin(), d.y.end());
  Rng rng(9);
  for (int i = 0; i < 50; ++i) {
    const double p = rf.predict({rng.normal() * 5, rng.normal() * 50, rng.normal() * 5});
    EXPECT_GE(p, lo);
    EXPECT_LE(p, hi);
  }
}

TEST(Tree, LeavesRespectMinimumSize) {
  const auto d = linear_data(40, 10, 0.1);
  Rng rng(2);
  detail::TreeBuilder builder(d.X, d.y, 4, 3, rng);
  std::vector<std::size_t> rows(d.X.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  const auto t = builder.build(rows);
  std::map<int, int> per_leaf;
  for (const auto& x : d.X) {
    int i = 0;
    while (t.nodes[i].feature >= 0) i = x[t.nodes[i].feature] <= t.nodes[i].threshold ? t.nodes[i].left : t.nodes[i].right;
    ++per_leaf[i];
  }
  EXPECT_GT(per_leaf.size(), 1u);
  for (const auto& [leaf, n] : per_leaf) EXPECT_GE(n, 4) << leaf;
}

TEST(Forest, ConstantTargetGivesConstantPrediction) {
  const auto d = linear_data(20, 11);
  std::vector<double> y(20, 0.42);
  const auto rf = RandomForest::fit(d.X, y, 1);
  EXPECT_NEAR(rf.predict({0.5, 5, 0}), 0.42, 1e-14);
}
