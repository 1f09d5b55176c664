#pragma once

// Two-sample comparison measures for one-dimensional distributions.
//
// A distribution is either a sample set (stored as sorted distinct values
// with multiplicities, so pixel histograms with millions of observations stay
// compact) or a normalized histogram over explicit bin edges. Sample-based
// measures (KS, Anderson-Darling, energy, Wasserstein) operate on ECDFs;
// histogram measures (KL, JS, Bhattacharyya) need identical edges.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sdqm/error.hpp"

namespace sdqm {

class EmpiricalDistribution {
 public:
  enum class Kind { samples, histogram };

  // Unit-weight samples, any order.
  static EmpiricalDistribution from_samples(std::span<const double> values) {
    std::vector<double> w(values.size(), 1.0);
    return from_weighted(values, w);
  }

  // Samples with nonnegative multiplicities; zero-weight entries are dropped
  // and equal values merged.
  static EmpiricalDistribution from_weighted(std::span<const double> values, std::span<const double> weights) {
    if (values.size() != weights.size()) throw ComputeError("values and weights differ in length");
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return values[a] < values[b]; });
    EmpiricalDistribution d;
    d.kind_ = Kind::samples;
    for (auto i : order) {
      if (!std::isfinite(values[i])) throw ComputeError("non-finite sample value");
      if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) throw ComputeError("invalid sample weight");
      if (weights[i] == 0.0) continue;
      if (!d.values_.empty() && d.values_.back() == values[i])
        d.weights_.back() += weights[i];
      else {
        d.values_.push_back(values[i]);
        d.weights_.push_back(weights[i]);
      }
      d.total_ += weights[i];
    }
    return d;
  }

  // masses.size() + 1 == edges.size(); edges strictly increasing; masses sum to 1 +- 1e-9.
  static EmpiricalDistribution from_histogram(std::vector<double> edges, std::vector<double> masses) {
    if (masses.empty() || edges.size() != masses.size() + 1)
      throw ComputeError("histogram needs k masses and k+1 edges");
    for (std::size_t i = 1; i < edges.size(); ++i)
      if (!(edges[i] > edges[i - 1])) throw ComputeError("histogram edges must be strictly increasing");
    double sum = 0;
    for (double m : masses) {
      if (!(m >= 0.0) || !std::isfinite(m)) throw ComputeError("histogram mass must be finite and >= 0");
      sum += m;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw ComputeError("histogram masses sum to " + std::to_string(sum));
    EmpiricalDistribution d;
    d.kind_ = Kind::histogram;
    d.values_ = std::move(edges);
    d.weights_ = std::move(masses);
    d.total_ = 1.0;
    return d;
  }

  // Normalizes nonnegative counts into a histogram.
  static EmpiricalDistribution from_counts(std::vector<double> edges, std::span<const double> counts) {
    const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
    if (!(total > 0)) throw ComputeError("histogram counts sum to zero");
    std::vector<double> masses(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) masses[i] = counts[i] / total;
    return from_histogram(std::move(edges), std::move(masses));
  }

  Kind kind() const { return kind_; }
  bool empty() const { return total_ <= 0.0; }

  // samples: distinct sorted values and their multiplicities.
  std::span<const double> support() const { return values_; }
  std::span<const double> weights() const { return weights_; }
  double total_weight() const { return total_; }

  // histogram: bin edges and masses.
  std::span<const double> edges() const { return values_; }
  std::span<const double> masses() const { return weights_; }

 private:
  Kind kind_ = Kind::samples;
  std::vector<double> values_;
  std::vector<double> weights_;
  double total_ = 0.0;
};

// Equal-width histograms of both sample sets over their pooled [min, max].
// A zero-width pooled range becomes a single unit bin centered on the value.
inline std::pair<EmpiricalDistribution, EmpiricalDistribution> pooled_histograms(const EmpiricalDistribution& p,
                                                                                 const EmpiricalDistribution& q,
                                                                                 std::size_t bins = 256) {
  if (p.kind() != EmpiricalDistribution::Kind::samples || q.kind() != EmpiricalDistribution::Kind::samples)
    throw ComputeError("pooled_histograms needs sample distributions");
  if (p.empty() || q.empty()) throw ComputeError("pooled_histograms needs nonempty inputs");
  const double lo = std::min(p.support().front(), q.support().front());
  const double hi = std::max(p.support().back(), q.support().back());
  std::vector<double> edges;
  if (!(hi > lo)) {
    bins = 1;
    edges = {lo - 0.5, lo + 0.5};
  } else {
    edges.resize(bins + 1);
    for (std::size_t i = 0; i <= bins; ++i) edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
    edges.back() = hi;
  }
  auto bin_counts = [&](const EmpiricalDistribution& d) {
    std::vector<double> counts(bins, 0.0);
    for (std::size_t i = 0; i < d.support().size(); ++i) {
      std::size_t b = bins == 1 ? 0
                                : static_cast<std::size_t>((d.support()[i] - lo) / (hi - lo) * static_cast<double>(bins));
      counts[std::min(b, bins - 1)] += d.weights()[i];
    }
    return counts;
  };
  auto pc = bin_counts(p), qc = bin_counts(q);
  return {EmpiricalDistribution::from_counts(edges, pc), EmpiricalDistribution::from_counts(edges, qc)};
}

namespace detail {

inline void require_samples(const EmpiricalDistribution& p, const EmpiricalDistribution& q, const char* what) {
  if (p.kind() != EmpiricalDistribution::Kind::samples || q.kind() != EmpiricalDistribution::Kind::samples)
    throw ComputeError(std::string(what) + " requires sample distributions");
  if (p.empty() || q.empty()) throw ComputeError(std::string(what) + " requires nonempty samples");
}

inline void require_shared_bins(const EmpiricalDistribution& p, const EmpiricalDistribution& q, const char* what) {
  if (p.kind() != EmpiricalDistribution::Kind::histogram || q.kind() != EmpiricalDistribution::Kind::histogram)
    throw ComputeError(std::string(what) + " requires histogram distributions");
  if (!std::equal(p.edges().begin(), p.edges().end(), q.edges().begin(), q.edges().end()))
    throw ComputeError(std::string(what) + ": bin edges differ");
}

// Walks the merged support of two sample sets, calling
// step(x, next_x, F(x), G(x)) with right-continuous ECDF values at each
// distinct pooled point x; next_x is the following point (or x at the end).
template <typename Step>
void sweep_ecdfs(const EmpiricalDistribution& p, const EmpiricalDistribution& q, Step&& step) {
  auto ps = p.support(), pw = p.weights(), qs = q.support(), qw = q.weights();
  std::size_t i = 0, j = 0;
  double cp = 0, cq = 0;
  while (i < ps.size() || j < qs.size()) {
    double x;
    if (j >= qs.size() || (i < ps.size() && ps[i] <= qs[j]))
      x = ps[i];
    else
      x = qs[j];
    while (i < ps.size() && ps[i] == x) cp += pw[i++];
    while (j < qs.size() && qs[j] == x) cq += qw[j++];
    double next = x;
    if (i < ps.size() && j < qs.size())
      next = std::min(ps[i], qs[j]);
    else if (i < ps.size())
      next = ps[i];
    else if (j < qs.size())
      next = qs[j];
    // Final point: F = G = 1 exactly, avoids round-off in the running sum.
    const bool last = i >= ps.size() && j >= qs.size();
    step(x, next, last ? 1.0 : cp / p.total_weight(), last ? 1.0 : cq / q.total_weight());
  }
}

}  // namespace detail

// Sup-distance between the two CDFs.
inline double ks_statistic(const EmpiricalDistribution& p, const EmpiricalDistribution& q) {
  if (p.kind() != q.kind()) throw ComputeError("ks_statistic: distribution kinds differ");
  if (p.kind() == EmpiricalDistribution::Kind::histogram) {
    detail::require_shared_bins(p, q, "ks_statistic");
    double cp = 0, cq = 0, d = 0;
    for (std::size_t i = 0; i < p.masses().size(); ++i) {
      cp += p.masses()[i];
      cq += q.masses()[i];
      d = std::max(d, std::abs(cp - cq));
    }
    return std::min(d, 1.0);
  }
  detail::require_samples(p, q, "ks_statistic");
  double d = 0;
  detail::sweep_ecdfs(p, q, [&](double, double, double f, double g) { d = std::max(d, std::abs(f - g)); });
  return d;
}

// Two-sample Anderson-Darling statistic, Scholz-Stephens midrank (tie-aware)
// form, un-normalized. An all-tied pooled sample yields 0.
inline double ad_statistic(const EmpiricalDistribution& p, const EmpiricalDistribution& q) {
  detail::require_samples(p, q, "ad_statistic");
  if (p.total_weight() < 2 || q.total_weight() < 2) throw ComputeError("ad_statistic needs at least 2 points per sample");
  const double n1 = p.total_weight(), n2 = q.total_weight(), N = n1 + n2;
  double below = 0;       // pooled count strictly below the current value
  double below1 = 0, below2 = 0;
  double a1 = 0, a2 = 0;  // per-sample sums
  auto ps = p.support(), pw = p.weights(), qs = q.support(), qw = q.weights();
  std::size_t i = 0, j = 0;
  while (i < ps.size() || j < qs.size()) {
    double x;
    if (j >= qs.size() || (i < ps.size() && ps[i] <= qs[j]))
      x = ps[i];
    else
      x = qs[j];
    double f1 = 0, f2 = 0;
    while (i < ps.size() && ps[i] == x) f1 += pw[i++];
    while (j < qs.size() && qs[j] == x) f2 += qw[j++];
    const double l = f1 + f2;
    const double b = below + l / 2.0;
    const double m1 = below1 + f1 / 2.0, m2 = below2 + f2 / 2.0;
    const double denom = b * (N - b) - N * l / 4.0;
    if (denom > 0) {
      a1 += l / N * (N * m1 - b * n1) * (N * m1 - b * n1) / denom;
      a2 += l / N * (N * m2 - b * n2) * (N * m2 - b * n2) / denom;
    }
    below += l;
    below1 += f1;
    below2 += f2;
  }
  return (N - 1.0) / N * (a1 / n1 + a2 / n2);
}

// Energy distance D = sqrt(2E|X-Y| - E|X-X'| - E|Y-Y'|), evaluated through
// the one-dimensional identity D^2 = 2 * integral (F - G)^2 dx.
inline double energy_distance(const EmpiricalDistribution& p, const EmpiricalDistribution& q) {
  detail::require_samples(p, q, "energy_distance");
  double acc = 0;
  detail::sweep_ecdfs(p, q, [&](double x, double next, double f, double g) { acc += (f - g) * (f - g) * (next - x); });
  return std::sqrt(2.0 * acc);
}

// W1 = integral |F - G| dx.
inline double wasserstein_1d(const EmpiricalDistribution& p, const EmpiricalDistribution& q) {
  detail::require_samples(p, q, "wasserstein_1d");
  double acc = 0;
  detail::sweep_ecdfs(p, q, [&](double x, double next, double f, double g) { acc += std::abs(f - g) * (next - x); });
  return acc;
}

inline constexpr double kKlSmoothing = 1e-10;
inline constexpr double kBhattacharyyaFloor = 1e-12;

namespace detail {

// Sum p ln(p/q) over p > 0, no smoothing.
inline double kl_terms(std::span<const double> p, std::span<const double> q) {
  double acc = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0) acc += p[i] * std::log(p[i] / q[i]);
  return std::max(acc, 0.0);
}

}  // namespace detail

// KL(P || Q) in nats; Q gets eps added to every bin and is renormalized.
inline double kl_divergence(const EmpiricalDistribution& p, const EmpiricalDistribution& q) {
  detail::require_shared_bins(p, q, "kl_divergence");
  const auto qm = q.masses();
  const double norm = 1.0 + kKlSmoothing * static_cast<double>(qm.size());
  std::vector<double> smoothed(qm.size());
  for (std::size_t i = 0; i < qm.size(); ++i) smoothed[i] = (qm[i] + kKlSmoothing) / norm;
  return detail::kl_terms(p.masses(), smoothed);
}

inline double js_divergence(const EmpiricalDistribution& p, const EmpiricalDistribution& q) {
  detail::require_shared_bins(p, q, "js_divergence");
  const auto pm = p.masses(), qm = q.masses();
  std::vector<double> mid(pm.size());
  for (std::size_t i = 0; i < pm.size(); ++i) mid[i] = 0.5 * (pm[i] + qm[i]);
  // Evaluated as a single symmetric sum so that f(P,Q) == f(Q,P) bitwise.
  double acc = 0;
  for (std::size_t i = 0; i < pm.size(); ++i) {
    double a = pm[i] > 0 ? pm[i] * std::log(pm[i] / mid[i]) : 0.0;
    double b = qm[i] > 0 ? qm[i] * std::log(qm[i] / mid[i]) : 0.0;
    acc += 0.5 * (a + b);
  }
  return std::clamp(acc, 0.0, std::log(2.0));
}

// -ln(sum sqrt(p q)), with the coefficient floored at 1e-12.
inline double bhattacharyya_distance(const EmpiricalDistribution& p, const EmpiricalDistribution& q) {
  detail::require_shared_bins(p, q, "bhattacharyya_distance");
  double bc = 0;
  for (std::size_t i = 0; i < p.masses().size(); ++i) bc += std::sqrt(p.masses()[i] * q.masses()[i]);
  return std::max(0.0, -std::log(std::max(bc, kBhattacharyyaFloor)));
}

// ---------------------------------------------------------------------------
// All seven measures at once, used by the annotation and pixel sub-metrics.

enum class Measure { ks, ad, kl, js, energy, wasserstein, bhattacharyya };

inline constexpr Measure kAllMeasures[] = {Measure::ks,     Measure::ad,          Measure::kl,           Measure::js,
                                           Measure::energy, Measure::wasserstein, Measure::bhattacharyya};

inline std::string to_string(Measure m) {
  switch (m) {
    case Measure::ks: return "ks";
    case Measure::ad: return "ad";
    case Measure::kl: return "kl";
    case Measure::js: return "js";
    case Measure::energy: return "energy";
    case Measure::wasserstein: return "wasserstein";
    case Measure::bhattacharyya: return "bhattacharyya";
  }
  return "?";
}

// Results of every measure for one compared quantity. A measure whose
// preconditions fail (e.g. A-D on a single point) is absent.
struct MeasureRow {
  std::vector<std::pair<Measure, std::optional<double>>> values;

  std::optional<double> get(Measure m) const {
    for (const auto& [k, v] : values)
      if (k == m) return v;
    return std::nullopt;
  }
};

// Sample measures on (p, q); histogram measures on (hp, hq).
inline MeasureRow all_measures(const EmpiricalDistribution& p, const EmpiricalDistribution& q,
                               const EmpiricalDistribution& hp, const EmpiricalDistribution& hq) {
  MeasureRow row;
  for (auto m : kAllMeasures) {
    std::optional<double> v;
    try {
      switch (m) {
        case Measure::ks: v = ks_statistic(p, q); break;
        case Measure::ad: v = ad_statistic(p, q); break;
        case Measure::kl: v = kl_divergence(hp, hq); break;
        case Measure::js: v = js_divergence(hp, hq); break;
        case Measure::energy: v = energy_distance(p, q); break;
        case Measure::wasserstein: v = wasserstein_1d(p, q); break;
        case Measure::bhattacharyya: v = bhattacharyya_distance(hp, hq); break;
      }
    } catch (const ComputeError&) {
      v.reset();
    }
    row.values.emplace_back(m, v);
  }
  return row;
}

}  // namespace sdqm
