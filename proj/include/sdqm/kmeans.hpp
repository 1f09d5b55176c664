#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <vector>

#include "sdqm/error.hpp"
#include "sdqm/rng.hpp"

namespace sdqm {

struct KMeansResult {
  std::size_t dim = 0;
  std::vector<double> centroids;        // k * dim, row-major
  std::vector<std::size_t> assignment;  // per point, in [0, k)
  std::size_t requested_k = 0;
  std::size_t k = 0;  // centroids actually seeded (< requested when points coincide)
  std::size_t iterations = 0;

  std::size_t centroid_count() const { return dim ? centroids.size() / dim : 0; }
};

namespace detail {

inline double squared_distance(const float* a, const double* c, std::size_t dim) {
  double s = 0;
  for (std::size_t d = 0; d < dim; ++d) {
    const double diff = static_cast<double>(a[d]) - c[d];
    s += diff * diff;
  }
  return s;
}

}  // namespace detail

// Lloyd's algorithm with k-means++ seeding. `points` is row-major n * dim.
// Deterministic for a given seed: all reductions run in point order and
// distance ties go to the lower centroid index. Seeding stops early when every
// remaining point coincides with a chosen centroid, reducing k.
inline KMeansResult kmeans(const std::vector<float>& points, std::size_t dim, std::size_t k, std::uint64_t seed,
                           std::size_t max_iterations = 300) {
  if (dim == 0) throw ComputeError("kmeans: dim must be positive");
  const std::size_t n = points.size() / dim;
  if (k == 0) throw ComputeError("kmeans: k must be positive");
  if (k > n) throw ComputeError("kmeans: k=" + std::to_string(k) + " exceeds point count " + std::to_string(n));

  KMeansResult res;
  res.dim = dim;
  res.requested_k = k;
  Rng rng(seed);

  auto add_centroid = [&](std::size_t idx) {
    for (std::size_t d = 0; d < dim; ++d) res.centroids.push_back(points[idx * dim + d]);
  };
  add_centroid(rng.below(n));
  std::vector<double> nearest(n);
  for (std::size_t i = 0; i < n; ++i) nearest[i] = detail::squared_distance(&points[i * dim], res.centroids.data(), dim);
  while (res.centroid_count() < k) {
    double total = 0;
    for (double v : nearest) total += v;
    if (!(total > 0)) break;
    const double target = rng.uniform() * total;
    double acc = 0;
    std::size_t pick = n;
    for (std::size_t i = 0; i < n; ++i) {
      acc += nearest[i];
      if (nearest[i] > 0 && acc > target) {
        pick = i;
        break;
      }
    }
    if (pick == n)  // round-off at the tail: take the last point with positive weight
      for (std::size_t i = n; i-- > 0;)
        if (nearest[i] > 0) {
          pick = i;
          break;
        }
    add_centroid(pick);
    const double* c = &res.centroids[(res.centroid_count() - 1) * dim];
    for (std::size_t i = 0; i < n; ++i)
      nearest[i] = std::min(nearest[i], detail::squared_distance(&points[i * dim], c, dim));
  }
  res.k = res.centroid_count();

  res.assignment.assign(n, 0);
  std::vector<double> sums(res.k * dim);
  std::vector<std::size_t> counts(res.k);
  for (std::size_t it = 0; it < max_iterations; ++it) {
    bool changed = it == 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < res.k; ++c) {
        const double d = detail::squared_distance(&points[i * dim], &res.centroids[c * dim], dim);
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (res.assignment[i] != best) {
        res.assignment[i] = best;
        changed = true;
      }
    }
    res.iterations = it + 1;
    if (!changed) break;
    std::fill(sums.begin(), sums.end(), 0.0);
    std::fill(counts.begin(), counts.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = res.assignment[i];
      ++counts[c];
      for (std::size_t d = 0; d < dim; ++d) sums[c * dim + d] += points[i * dim + d];
    }
    for (std::size_t c = 0; c < res.k; ++c)
      if (counts[c] > 0)  // empty clusters keep their previous centroid
        for (std::size_t d = 0; d < dim; ++d) res.centroids[c * dim + d] = sums[c * dim + d] / counts[c];
  }
  return res;
}

}  // namespace sdqm
