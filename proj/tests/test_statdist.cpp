#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sdqm/embedmetrics.hpp"
#include "sdqm/statdist.hpp"

using namespace sdqm;

namespace {

EmpiricalDistribution S(std::vector<double> v) { return EmpiricalDistribution::from_samples(v); }

EmpiricalDistribution H(std::vector<double> masses) {
  std::vector<double> edges(masses.size() + 1);
  for (std::size_t i = 0; i < edges.size(); ++i) edges[i] = static_cast<double>(i);
  return EmpiricalDistribution::from_histogram(edges, masses);
}

std::vector<double> draw(Rng& rng, std::size_t n, double shift = 0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.normal() + shift;
  return v;
}

}  // namespace

// Reference values computed with an independent implementation.
TEST(AndersonDarling, FrozenValues) {
  EXPECT_DOUBLE_EQ(ad_statistic(S({1, 2, 3, 4}), S({1, 2, 3, 4})), 0.0);
  EXPECT_NEAR(ad_statistic(S({0.5, 1.5, 2.5, 2.5, 4.0}), S({1.0, 1.5, 3.0, 5.0})), 0.35997610513739536, 1e-12);
  EXPECT_NEAR(ad_statistic(S({1, 2, 3}), S({4, 5, 6, 7})), 2.8405629458261035, 1e-12);
}

TEST(AndersonDarling, NeedsTwoPointsEach) {
  EXPECT_THROW(ad_statistic(S({1}), S({1, 2})), ComputeError);
}

TEST(AndersonDarling, AllTiedIsZero) { EXPECT_EQ(ad_statistic(S({2, 2, 2}), S({2, 2})), 0.0); }

TEST(KolmogorovSmirnov, FrozenValue) { EXPECT_DOUBLE_EQ(ks_statistic(S({0, 0, 1, 1}), S({0, 1, 1, 1})), 0.25); }

TEST(KolmogorovSmirnov, HistogramForm) {
  EXPECT_NEAR(ks_statistic(H({0.5, 0.5}), H({0.25, 0.75})), 0.25, 1e-15);
}

TEST(Divergences, FrozenValues) {
  EXPECT_NEAR(kl_divergence(H({0.5, 0.5}), H({0.25, 0.75})), 0.14384103622589045, 1e-9);
  EXPECT_NEAR(js_divergence(H({0.5, 0.5}), H({0.25, 0.75})), 0.033822075568605205, 1e-12);
  EXPECT_NEAR(bhattacharyya_distance(H({0.5, 0.5}), H({0.25, 0.75})), 0.03466823209753704, 1e-12);
}

TEST(Divergences, DisjointBinsAreBounded) {
  EXPECT_NEAR(js_divergence(H({1, 0}), H({0, 1})), std::log(2.0), 1e-15);
  EXPECT_NEAR(bhattacharyya_distance(H({1, 0}), H({0, 1})), -std::log(1e-12), 1e-9);
  // smoothing keeps KL finite
  EXPECT_TRUE(std::isfinite(kl_divergence(H({1, 0}), H({0, 1}))));
}

TEST(Divergences, DifferentEdgesRejected) {
  auto a = EmpiricalDistribution::from_histogram({0, 1, 2}, {0.5, 0.5});
  auto b = EmpiricalDistribution::from_histogram({0, 1, 3}, {0.5, 0.5});
  EXPECT_THROW(kl_divergence(a, b), ComputeError);
  EXPECT_THROW(kl_divergence(S({1, 2}), S({1, 2})), ComputeError);
}

TEST(Energy, MatchesHandValue) {
  // E|X-Y| = 1, E|X-X'| = E|Y-Y'| = 0.5
  EXPECT_NEAR(energy_distance(S({0, 1}), S({1, 2})), 1.0, 1e-15);
}

TEST(Wasserstein, ShiftEqualsOffset) {
  EXPECT_NEAR(wasserstein_1d(S({0, 1, 5}), S({2, 3, 7})), 2.0, 1e-14);
}

TEST(Histogram, ConstructionChecks) {
  EXPECT_THROW(EmpiricalDistribution::from_histogram({0, 1}, {0.5}), ComputeError);
  EXPECT_THROW(EmpiricalDistribution::from_histogram({0, 0, 1}, {0.5, 0.5}), ComputeError);
  EXPECT_THROW(EmpiricalDistribution::from_histogram({0, 1, 2}, {-0.5, 1.5}), ComputeError);
  EXPECT_THROW(EmpiricalDistribution::from_counts({0, 1}, std::vector<double>{0.0}), ComputeError);
}

TEST(Samples, WeightsMergeAndValidate) {
  const std::vector<double> v = {3, 1, 3}, w = {1, 2, 0.5};
  const auto d = EmpiricalDistribution::from_weighted(v, w);
  ASSERT_EQ(d.support().size(), 2u);
  EXPECT_EQ(d.weights()[1], 1.5);
  EXPECT_EQ(d.total_weight(), 3.5);
  const std::vector<double> bad = {NAN};
  EXPECT_THROW(EmpiricalDistribution::from_samples(bad), ComputeError);
}

TEST(PooledHistograms, DegenerateRangeIsOneBin) {
  const auto [a, b] = pooled_histograms(S({4, 4}), S({4}));
  ASSERT_EQ(a.masses().size(), 1u);
  EXPECT_EQ(kl_divergence(a, b), 0.0);
}

TEST(AllMeasures, MissingWhenPreconditionFails) {
  const auto p = S({1}), q = S({2, 3});
  const auto [hp, hq] = pooled_histograms(p, q);
  const auto row = all_measures(p, q, hp, hq);
  EXPECT_FALSE(row.get(Measure::ad).has_value());
  EXPECT_TRUE(row.get(Measure::ks).has_value());
  EXPECT_EQ(row.values.size(), 7u);
}

// Properties over random inputs.

TEST(StatdistProperties, IdentityGivesZero) {
  Rng rng(3);
  for (int t = 0; t < 30; ++t) {
    const auto v = draw(rng, 2 + rng.below(60));
    const auto p = S(v);
    const auto [hp, hq] = pooled_histograms(p, p);
    for (const auto& [m, val] : all_measures(p, p, hp, hq).values) {
      ASSERT_TRUE(val.has_value());
      // smoothing leaves KL(P,P) at most bins * eps above zero
      const double tol = m == Measure::kl ? 256 * kKlSmoothing : 1e-12;
      EXPECT_NEAR(*val, 0.0, tol) << to_string(m);
    }
  }
}

TEST(StatdistProperties, SymmetricMeasures) {
  Rng rng(4);
  for (int t = 0; t < 30; ++t) {
    const auto p = S(draw(rng, 2 + rng.below(50))), q = S(draw(rng, 2 + rng.below(50), 0.7));
    const auto [hp, hq] = pooled_histograms(p, q);
    EXPECT_DOUBLE_EQ(ks_statistic(p, q), ks_statistic(q, p));
    EXPECT_NEAR(ad_statistic(p, q), ad_statistic(q, p), 1e-12);
    EXPECT_NEAR(energy_distance(p, q), energy_distance(q, p), 1e-12);
    EXPECT_NEAR(wasserstein_1d(p, q), wasserstein_1d(q, p), 1e-12);
    EXPECT_EQ(js_divergence(hp, hq), js_divergence(hq, hp));
    EXPECT_NEAR(bhattacharyya_distance(hp, hq), bhattacharyya_distance(hq, hp), 1e-12);
  }
}

TEST(StatdistProperties, RangesHold) {
  Rng rng(5);
  for (int t = 0; t < 30; ++t) {
    const auto p = S(draw(rng, 2 + rng.below(50))), q = S(draw(rng, 2 + rng.below(50), 2.0));
    const auto [hp, hq] = pooled_histograms(p, q);
    const double ks = ks_statistic(p, q), js = js_divergence(hp, hq);
    EXPECT_GE(ks, 0.0);
    EXPECT_LE(ks, 1.0);
    EXPECT_GE(js, 0.0);
    EXPECT_LE(js, std::log(2.0));
    EXPECT_GE(kl_divergence(hp, hq), 0.0);
    EXPECT_GE(bhattacharyya_distance(hp, hq), 0.0);
    EXPECT_GE(ad_statistic(p, q), 0.0);
  }
}

TEST(StatdistProperties, MatchesOracles) {
  Rng rng(6);
  for (int t = 0; t < 40; ++t) {
    std::vector<double> a = draw(rng, 2 + rng.below(80)), b = draw(rng, 2 + rng.below(80), 0.5);
    for (auto& x : b) x = std::round(x * 2) / 2;
    const auto p = S(a), q = S(b);
    EXPECT_NEAR(ks_statistic(p, q), oracle::ks(a, b), 1e-12);
    EXPECT_NEAR(ad_statistic(p, q), oracle::anderson_darling(a, b), 1e-10);
    EXPECT_NEAR(energy_distance(p, q), oracle::energy(a, b), 1e-10);
    EXPECT_NEAR(wasserstein_1d(p, q), oracle::wasserstein(a, b), 1e-10);
  }
}

TEST(Frontier, FrozenValues) {
  const auto disjoint = divergence_frontier({1, 0}, {0, 1});
  EXPECT_NEAR(disjoint.mauve, 0.003974090665494843, 1e-12);
  EXPECT_NEAR(disjoint.fi, 1.0, 1e-12);
  const auto mid = divergence_frontier({0.5, 0.3, 0.2}, {0.2, 0.3, 0.5});
  EXPECT_NEAR(mid.mauve, 0.8215988123352124, 1e-12);
  EXPECT_NEAR(mid.fi, 0.09068143839136564, 1e-12);
}

TEST(Frontier, IdentityAndSymmetry) {
  Rng rng(8);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> p(5), q(5);
    double sp = 0, sq = 0;
    for (int i = 0; i < 5; ++i) {
      p[i] = rng.uniform();
      q[i] = rng.uniform();
      sp += p[i];
      sq += q[i];
    }
    for (int i = 0; i < 5; ++i) {
      p[i] /= sp;
      q[i] /= sq;
    }
    const auto same = divergence_frontier(p, p);
    EXPECT_NEAR(same.mauve, 1.0, 1e-12);
    EXPECT_NEAR(same.fi, 0.0, 1e-12);
    const auto a = divergence_frontier(p, q), b = divergence_frontier(q, p);
    EXPECT_NEAR(a.mauve, b.mauve, 1e-12);
    EXPECT_NEAR(a.fi, b.fi, 1e-12);
    EXPECT_GE(a.mauve, 0.0);
    EXPECT_LE(a.fi, 1.0);
  }
}

TEST(Frontier, BadArguments) {
  EXPECT_THROW(divergence_frontier({1}, {0.5, 0.5}), ComputeError);
  EXPECT_THROW(divergence_frontier({1}, {1}, 0.0), ComputeError);
  EXPECT_THROW(divergence_frontier({1}, {1}, 5.0, 0), ComputeError);
}
