#pragma once

// Regressors used for fusion: bootstrap CART random forest, OLS and ridge.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <numeric>
#include <vector>

#include <Eigen/Dense>

#include "sdqm/error.hpp"
#include "sdqm/parallel.hpp"
#include "sdqm/rng.hpp"

namespace sdqm {

using Matrix = std::vector<std::vector<double>>;  // rows of features

struct ForestOptions {
  std::size_t trees = 100;
  std::size_t min_leaf = 2;
  std::size_t max_features = 0;  // 0 = ceil(sqrt(F))
};

// Flat tree: node i is a leaf when feature < 0.
struct TreeNode {
  int feature = -1;
  double threshold = 0;
  int left = -1, right = -1;
  double value = 0;
};

struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict(const std::vector<double>& x) const {
    int i = 0;
    while (nodes[i].feature >= 0) i = x[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left : nodes[i].right;
    return nodes[i].value;
  }
};

namespace detail {

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& X, const std::vector<double>& y, std::size_t min_leaf, std::size_t mtry, Rng& rng)
      : X_(X), y_(y), min_leaf_(std::max<std::size_t>(min_leaf, 1)), mtry_(mtry), rng_(rng) {}

  RegressionTree build(std::vector<std::size_t> rows) {
    RegressionTree t;
    grow(t, rows);
    return t;
  }

 private:
  int grow(RegressionTree& t, std::vector<std::size_t>& rows) {
    const int id = static_cast<int>(t.nodes.size());
    t.nodes.emplace_back();
    double sum = 0;
    for (auto r : rows) sum += y_[r];
    t.nodes[id].value = sum / static_cast<double>(rows.size());

    if (rows.size() < 2 * min_leaf_) return id;
    bool pure = true;
    for (auto r : rows)
      if (y_[r] != y_[rows[0]]) {
        pure = false;
        break;
      }
    if (pure) return id;

    // Candidate features: those not constant on this node, sampled without replacement.
    const std::size_t F = X_[0].size();
    std::vector<std::size_t> varying;
    for (std::size_t f = 0; f < F; ++f)
      for (auto r : rows)
        if (X_[r][f] != X_[rows[0]][f]) {
          varying.push_back(f);
          break;
        }
    if (varying.empty()) return id;
    const std::size_t m = std::min(mtry_, varying.size());
    for (std::size_t i = 0; i < m; ++i) std::swap(varying[i], varying[i + rng_.below(varying.size() - i)]);
    varying.resize(m);
    std::sort(varying.begin(), varying.end());

    const double total = sum;
    double total_sq = 0;
    for (auto r : rows) total_sq += y_[r] * y_[r];
    double best_gain = 0;
    int best_f = -1;
    double best_thr = 0;
    std::vector<std::size_t> order = rows;
    for (auto f : varying) {
      std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return X_[a][f] < X_[b][f] || (X_[a][f] == X_[b][f] && a < b);
      });
      double left_sum = 0;
      const double n = static_cast<double>(order.size());
      for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        left_sum += y_[order[i]];
        const double xi = X_[order[i]][f], xn = X_[order[i + 1]][f];
        if (xi == xn) continue;
        const std::size_t nl = i + 1, nr = order.size() - nl;
        if (nl < min_leaf_ || nr < min_leaf_) continue;
        const double right_sum = total - left_sum;
        // SSE reduction = sum_l^2/nl + sum_r^2/nr - total^2/n
        const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr - total * total / n;
        if (gain > best_gain + 1e-12 * std::max(1.0, total_sq)) {
          best_gain = gain;
          best_f = static_cast<int>(f);
          best_thr = xi + (xn - xi) / 2;
          if (!(best_thr < xn)) best_thr = xi;  // midpoint rounded up to xn
        }
      }
    }
    if (best_f < 0) return id;

    std::vector<std::size_t> left, right;
    for (auto r : rows) (X_[r][best_f] <= best_thr ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();
    t.nodes[id].feature = best_f;
    t.nodes[id].threshold = best_thr;
    const int l = grow(t, left);
    t.nodes[id].left = l;
    const int r = grow(t, right);
    t.nodes[id].right = r;
    return id;
  }

  const Matrix& X_;
  const std::vector<double>& y_;
  std::size_t min_leaf_;
  std::size_t mtry_;
  Rng& rng_;
};

inline void check_design(const Matrix& X, const std::vector<double>& y) {
  if (X.empty()) throw ComputeError("regression: no rows");
  if (X.size() != y.size()) throw ComputeError("regression: feature and label counts differ");
  const std::size_t F = X[0].size();
  for (const auto& row : X)
    if (row.size() != F) throw ComputeError("regression: ragged feature matrix");
  for (const auto& row : X)
    for (double v : row)
      if (!std::isfinite(v)) throw ComputeError("regression: non-finite feature value");
  for (double v : y)
    if (!std::isfinite(v)) throw ComputeError("regression: non-finite label");
}

}  // namespace detail

struct RandomForest {
  std::vector<RegressionTree> trees;

  static RandomForest fit(const Matrix& X, const std::vector<double>& y, std::uint64_t seed,
                          const ForestOptions& opt = {}) {
    detail::check_design(X, y);
    if (opt.trees == 0) throw ComputeError("random forest needs at least one tree");
    const std::size_t F = X[0].size();
    const std::size_t mtry =
        opt.max_features ? opt.max_features : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(F))));
    RandomForest rf;
    rf.trees.resize(opt.trees);
    parallel_for(opt.trees, [&](std::size_t t) {
      Rng rng(derive_seed(seed, 0x7265ULL, t));
      std::vector<std::size_t> rows(X.size());
      for (auto& r : rows) r = rng.below(X.size());
      std::sort(rows.begin(), rows.end());
      detail::TreeBuilder builder(X, y, opt.min_leaf, std::max<std::size_t>(mtry, 1), rng);
      rf.trees[t] = builder.build(std::move(rows));
    });
    return rf;
  }

  double predict(const std::vector<double>& x) const {
    double s = 0;
    for (const auto& t : trees) s += t.predict(x);
    return s / static_cast<double>(trees.size());
  }
};

struct LinearModel {
  double intercept = 0;
  std::vector<double> coefficients;

  double predict(const std::vector<double>& x) const {
    double s = intercept;
    for (std::size_t i = 0; i < coefficients.size(); ++i) s += coefficients[i] * x[i];
    return s;
  }
};

namespace detail {

inline void reject_identical_rows(const Matrix& X) {
  for (const auto& row : X)
    if (row != X[0]) return;
  throw ComputeError("degenerate design: all feature rows are identical");
}

}  // namespace detail

// Ordinary least squares with intercept; column-pivoted QR tolerates collinear features.
inline LinearModel fit_linear(const Matrix& X, const std::vector<double>& y) {
  detail::check_design(X, y);
  detail::reject_identical_rows(X);
  const Eigen::Index n = static_cast<Eigen::Index>(X.size()), F = static_cast<Eigen::Index>(X[0].size());
  Eigen::MatrixXd A(n, F + 1);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    A(i, 0) = 1.0;
    for (Eigen::Index f = 0; f < F; ++f) A(i, f + 1) = X[i][f];
    b(i) = y[i];
  }
  const Eigen::VectorXd w = A.colPivHouseholderQr().solve(b);
  LinearModel m;
  m.intercept = w(0);
  for (Eigen::Index f = 0; f < F; ++f) m.coefficients.push_back(w(f + 1));
  return m;
}

// Ridge on standardized features (intercept unpenalized), mapped back to raw scale.
inline LinearModel fit_ridge(const Matrix& X, const std::vector<double>& y, double alpha = 1.0) {
  detail::check_design(X, y);
  detail::reject_identical_rows(X);
  if (!(alpha >= 0)) throw ComputeError("ridge alpha must be nonnegative");
  const std::size_t n = X.size(), F = X[0].size();
  std::vector<double> mean(F, 0.0), sd(F, 0.0);
  for (const auto& row : X)
    for (std::size_t f = 0; f < F; ++f) mean[f] += row[f];
  for (auto& m : mean) m /= static_cast<double>(n);
  for (const auto& row : X)
    for (std::size_t f = 0; f < F; ++f) sd[f] += (row[f] - mean[f]) * (row[f] - mean[f]);
  for (auto& s : sd) s = std::sqrt(s / static_cast<double>(n));
  const double y_mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);

  Eigen::MatrixXd Z(n, F);
  Eigen::VectorXd t(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < F; ++f) Z(i, f) = sd[f] > 0 ? (X[i][f] - mean[f]) / sd[f] : 0.0;
    t(i) = y[i] - y_mean;
  }
  Eigen::MatrixXd G = Z.transpose() * Z;
  G.diagonal().array() += alpha;
  const Eigen::VectorXd w = G.ldlt().solve(Z.transpose() * t);
  LinearModel m;
  m.intercept = y_mean;
  for (std::size_t f = 0; f < F; ++f) {
    const double c = sd[f] > 0 ? w(f) / sd[f] : 0.0;
    m.coefficients.push_back(c);
    m.intercept -= c * mean[f];
  }
  return m;
}

}  // namespace sdqm
