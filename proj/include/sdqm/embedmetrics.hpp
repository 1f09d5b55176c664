#pragma once

// Embedding-space sub-metrics: divergence-frontier scores (Mauve, FI and
// their smoothed variants), alpha-precision / beta-recall / authenticity,
// the log cluster metric, real-vs-synthetic separability, and the
// feature-extractor pairing evaluation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "sdqm/dataio.hpp"
#include "sdqm/error.hpp"
#include "sdqm/kmeans.hpp"
#include "sdqm/rng.hpp"

namespace sdqm {

// ---------------------------------------------------------------------------
// Quantization

struct QuantizedPair {
  std::size_t k = 0;  // non-empty clusters
  std::vector<double> p, q;
  std::vector<double> counts_real, counts_synth;
  std::vector<double> centroids;  // k * dim
  std::size_t dim = 0;
  std::size_t requested_k = 0;

  bool reduced() const { return k < requested_k; }
};

// Default cluster count for a joint set of n points: min(16, floor(sqrt(n/2))), at least 2.
inline std::size_t default_quantization_k(std::size_t n) {
  const auto k = static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(n) / 2.0)));
  return std::max<std::size_t>(2, std::min<std::size_t>(16, k));
}

namespace detail {

inline std::vector<float> stack_rows(const EmbeddingSet& a, const EmbeddingSet& b) {
  std::vector<float> joint;
  joint.reserve(a.values.size() + b.values.size());
  joint.insert(joint.end(), a.values.begin(), a.values.end());
  joint.insert(joint.end(), b.values.begin(), b.values.end());
  return joint;
}

}  // namespace detail

// Joint k-means over real then synthetic rows; p and q are the per-source
// cluster occupancies. Clusters left empty are dropped, reducing k.
inline QuantizedPair quantize(const EmbeddingSet& real, const EmbeddingSet& synth, std::size_t k, std::uint64_t seed) {
  check_same_dim(real, synth);
  if (real.size() == 0 || synth.size() == 0) throw ComputeError("quantize: empty embedding set");
  const std::size_t n = real.size() + synth.size();
  if (k > n) throw ComputeError("quantize: k=" + std::to_string(k) + " exceeds joint size " + std::to_string(n));
  const auto km = kmeans(detail::stack_rows(real, synth), real.dim, k, seed);

  std::vector<double> cr(km.k, 0.0), cs(km.k, 0.0);
  for (std::size_t i = 0; i < n; ++i) (i < real.size() ? cr : cs)[km.assignment[i]] += 1.0;

  QuantizedPair qp;
  qp.dim = real.dim;
  qp.requested_k = k;
  for (std::size_t c = 0; c < km.k; ++c) {
    if (cr[c] + cs[c] == 0) continue;
    qp.counts_real.push_back(cr[c]);
    qp.counts_synth.push_back(cs[c]);
    qp.centroids.insert(qp.centroids.end(), km.centroids.begin() + static_cast<std::ptrdiff_t>(c * real.dim),
                        km.centroids.begin() + static_cast<std::ptrdiff_t>((c + 1) * real.dim));
  }
  qp.k = qp.counts_real.size();
  for (std::size_t c = 0; c < qp.k; ++c) {
    qp.p.push_back(qp.counts_real[c] / static_cast<double>(real.size()));
    qp.q.push_back(qp.counts_synth[c] / static_cast<double>(synth.size()));
  }
  return qp;
}

// ---------------------------------------------------------------------------
// Divergence frontier

inline constexpr double kMauveScaling = 5.0;
inline constexpr std::size_t kFrontierGrid = 100;

struct FrontierScores {
  double mauve = 1, mauve_star = 1, fi = 0, fi_star = 0;
};

struct FrontierSummary {
  double mauve = 1;
  double fi = 0;
};

namespace detail {

inline double kl_masses(const std::vector<double>& p, const std::vector<double>& r) {
  double acc = 0;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (p[i] > 0) acc += p[i] * std::log(p[i] / r[i]);
  return std::max(acc, 0.0);
}

}  // namespace detail

// Mauve = area under the frontier (exp(-c KL(q||M)), exp(-c KL(p||M))) for
// mixtures M = l p + (1-l) q, l = i/(grid+1), closed by (0,1) and (1,0).
// FI = grid mean of (KL(p||M) + KL(q||M))/2 divided by the same mean for
// disjoint supports, which is its maximum.
inline FrontierSummary divergence_frontier(const std::vector<double>& p, const std::vector<double>& q,
                                           double c = kMauveScaling, std::size_t grid = kFrontierGrid) {
  if (p.size() != q.size() || p.empty()) throw ComputeError("divergence_frontier: mass vectors differ in length");
  if (!(c > 0)) throw ComputeError("divergence_frontier: scaling constant must be positive");
  if (grid == 0) throw ComputeError("divergence_frontier: grid must be nonempty");
  std::vector<std::pair<double, double>> curve;
  curve.reserve(grid + 2);
  curve.emplace_back(0.0, 1.0);
  double fi_raw = 0, fi_max = 0;
  const double denom = static_cast<double>(grid + 1);
  std::vector<double> mix(p.size());
  for (std::size_t i = 1; i <= grid; ++i) {
    const double wi = static_cast<double>(i), wo = static_cast<double>(grid + 1 - i);
    for (std::size_t b = 0; b < p.size(); ++b) mix[b] = (wi * p[b] + wo * q[b]) / denom;
    const double kl_p = detail::kl_masses(p, mix), kl_q = detail::kl_masses(q, mix);
    curve.emplace_back(std::exp(-c * kl_q), std::exp(-c * kl_p));
    fi_raw += 0.5 * (kl_p + kl_q);
    fi_max += 0.5 * (-std::log(wi / denom) - std::log(wo / denom));
  }
  curve.emplace_back(1.0, 0.0);
  std::stable_sort(curve.begin(), curve.end(), [](const auto& a, const auto& b) {
    return a.first < b.first || (a.first == b.first && a.second > b.second);
  });
  double area = 0;
  for (std::size_t i = 1; i < curve.size(); ++i)
    area += (curve[i].first - curve[i - 1].first) * 0.5 * (curve[i].second + curve[i - 1].second);
  return {std::clamp(area, 0.0, 1.0), std::clamp(fi_raw / fi_max, 0.0, 1.0)};
}

// Add-1/2 smoothing of cluster counts.
inline std::vector<double> smoothed_masses(const std::vector<double>& counts) {
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0) + 0.5 * static_cast<double>(counts.size());
  std::vector<double> out(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) out[i] = (counts[i] + 0.5) / total;
  return out;
}

inline FrontierScores frontier_scores(const QuantizedPair& qp, double c = kMauveScaling,
                                      std::size_t grid = kFrontierGrid) {
  const auto raw = divergence_frontier(qp.p, qp.q, c, grid);
  const auto smooth = divergence_frontier(smoothed_masses(qp.counts_real), smoothed_masses(qp.counts_synth), c, grid);
  return {raw.mauve, smooth.mauve, raw.fi, smooth.fi};
}

// ---------------------------------------------------------------------------
// Alpha-precision, beta-recall, authenticity

inline constexpr std::size_t kQuantileLevels = 20;

struct PrecisionRecallScores {
  double alpha_precision = 0;
  double beta_recall = 0;
  double authenticity = 0;
};

namespace detail {

inline std::vector<double> centroid(const EmbeddingSet& s) {
  std::vector<double> c(s.dim, 0.0);
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t d = 0; d < s.dim; ++d) c[d] += s.values[i * s.dim + d];
  for (auto& v : c) v /= static_cast<double>(s.size());
  return c;
}

inline double distance_to(std::span<const float> x, const std::vector<double>& c) {
  double acc = 0;
  for (std::size_t d = 0; d < c.size(); ++d) {
    const double diff = x[d] - c[d];
    acc += diff * diff;
  }
  return std::sqrt(acc);
}

inline double row_distance(std::span<const float> a, std::span<const float> b) {
  double acc = 0;
  for (std::size_t d = 0; d < a.size(); ++d) {
    const double diff = static_cast<double>(a[d]) - static_cast<double>(b[d]);
    acc += diff * diff;
  }
  return std::sqrt(acc);
}

// Linear-interpolation quantile of sorted values.
inline double quantile_sorted(const std::vector<double>& sorted, double level) {
  const double pos = level * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

// Fraction of `probe` inside the level-quantile ball of `reference` (center =
// reference mean), compared with the ideal fraction `level` over a uniform
// grid of levels in (0,1]: 1 - 2 * mean |fraction - level|, clamped to [0,1].
inline double ball_coverage_score(const EmbeddingSet& reference, const EmbeddingSet& probe, std::size_t levels) {
  if (reference.size() == 0 || probe.size() == 0) throw ComputeError("precision/recall: empty embedding set");
  check_same_dim(reference, probe);
  const auto center = centroid(reference);
  std::vector<double> ref_d(reference.size()), probe_d(probe.size());
  for (std::size_t i = 0; i < reference.size(); ++i) ref_d[i] = distance_to(reference.row(i), center);
  for (std::size_t i = 0; i < probe.size(); ++i) probe_d[i] = distance_to(probe.row(i), center);
  std::sort(ref_d.begin(), ref_d.end());
  std::sort(probe_d.begin(), probe_d.end());
  double deviation = 0;
  for (std::size_t j = 1; j <= levels; ++j) {
    const double level = static_cast<double>(j) / static_cast<double>(levels);
    const double radius = quantile_sorted(ref_d, level);
    const auto inside = std::upper_bound(probe_d.begin(), probe_d.end(), radius) - probe_d.begin();
    deviation += std::abs(static_cast<double>(inside) / static_cast<double>(probe.size()) - level);
  }
  return std::clamp(1.0 - 2.0 * deviation / static_cast<double>(levels), 0.0, 1.0);
}

}  // namespace detail

// Synthetic points measured against quantile balls of the real set.
inline double alpha_precision(const EmbeddingSet& real, const EmbeddingSet& synth,
                              std::size_t levels = kQuantileLevels) {
  return detail::ball_coverage_score(real, synth, levels);
}

// Real points measured against quantile balls of the synthetic set.
inline double beta_recall(const EmbeddingSet& real, const EmbeddingSet& synth, std::size_t levels = kQuantileLevels) {
  return detail::ball_coverage_score(synth, real, levels);
}

// Fraction of synthetic points farther from their nearest real neighbour than
// that neighbour is from its own nearest real neighbour.
inline double authenticity(const EmbeddingSet& real, const EmbeddingSet& synth) {
  check_same_dim(real, synth);
  if (real.size() < 2) throw ComputeError("authenticity needs at least 2 real points");
  if (synth.size() == 0) throw ComputeError("authenticity: empty synthetic set");
  std::vector<double> real_nn(real.size(), std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < real.size(); ++i)
    for (std::size_t j = i + 1; j < real.size(); ++j) {
      const double d = detail::row_distance(real.row(i), real.row(j));
      real_nn[i] = std::min(real_nn[i], d);
      real_nn[j] = std::min(real_nn[j], d);
    }
  std::size_t authentic = 0;
  for (std::size_t s = 0; s < synth.size(); ++s) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < real.size(); ++i) {
      const double d = detail::row_distance(synth.row(s), real.row(i));
      if (d < best) {
        best = d;
        best_i = i;
      }
    }
    if (best > real_nn[best_i]) ++authentic;
  }
  return static_cast<double>(authentic) / static_cast<double>(synth.size());
}

inline PrecisionRecallScores precision_recall_authenticity(const EmbeddingSet& real, const EmbeddingSet& synth) {
  return {alpha_precision(real, synth), beta_recall(real, synth), authenticity(real, synth)};
}

// ---------------------------------------------------------------------------
// Clusterability

inline constexpr std::size_t kClusterabilityK = 10;
inline constexpr double kLogClusterFloor = 1e-12;

struct LogClusterResult {
  double log_value = 0;   // l: ln(max(mean, floor))
  double mean_square = 0; // c: mean over clusters of (n_i^R/n_i - n^R/n)^2
  std::size_t k = 0;      // non-empty clusters used
  std::size_t requested_k = 0;
};

// Log cluster metric from per-cluster (real, total) counts. Empty clusters are excluded.
inline LogClusterResult log_cluster_from_counts(const std::vector<double>& real_counts,
                                                const std::vector<double>& total_counts) {
  double n_real = 0, n = 0;
  for (std::size_t i = 0; i < total_counts.size(); ++i) {
    n_real += real_counts[i];
    n += total_counts[i];
  }
  if (!(n > 0)) throw ComputeError("log_cluster: no points");
  const double global = n_real / n;
  LogClusterResult r;
  r.requested_k = total_counts.size();
  double acc = 0;
  for (std::size_t i = 0; i < total_counts.size(); ++i) {
    if (total_counts[i] == 0) continue;
    const double diff = real_counts[i] / total_counts[i] - global;
    acc += diff * diff;
    ++r.k;
  }
  r.mean_square = acc / static_cast<double>(r.k);
  r.log_value = std::log(std::max(r.mean_square, kLogClusterFloor));
  return r;
}

inline LogClusterResult log_cluster(const EmbeddingSet& real, const EmbeddingSet& synth,
                                    std::size_t k = kClusterabilityK, std::uint64_t seed = 0) {
  check_same_dim(real, synth);
  const std::size_t n = real.size() + synth.size();
  if (k < 2 || k > n) throw ComputeError("log_cluster: need 2 <= k <= joint size");
  const auto km = kmeans(detail::stack_rows(real, synth), real.dim, k, seed);
  std::vector<double> rc(k, 0.0), tc(k, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    tc[km.assignment[i]] += 1;
    if (i < real.size()) rc[km.assignment[i]] += 1;
  }
  auto r = log_cluster_from_counts(rc, tc);
  r.requested_k = k;
  return r;
}

// ---------------------------------------------------------------------------
// Separability: small feed-forward classifiers trained to tell real from synthetic.

struct SeparabilityResult {
  double accuracy = 0;         // held-out accuracy of the selected model
  std::size_t param_count = 0;
  std::string architecture;
};

struct SeparabilityOptions {
  std::vector<std::vector<std::size_t>> architectures = {{}, {8}, {8, 8}, {32}, {32, 32}, {128}, {128, 128}};
  std::size_t epochs = 50;
  std::size_t patience = 5;
  std::size_t batch_size = 32;
  double learning_rate = 5e-3;
  double validation_fraction = 0.2;
  std::size_t min_per_class = 20;
};

namespace detail {

// Dense ReLU network with a single logit output, trained with Adam on
// binary cross-entropy.
class BinaryMlp {
 public:
  BinaryMlp(std::size_t input, const std::vector<std::size_t>& hidden, Rng& rng) {
    std::size_t in = input;
    auto widths = hidden;
    widths.push_back(1);
    for (std::size_t li = 0; li < widths.size(); ++li) {
      const std::size_t out = widths[li];
      Layer l{in, out, std::vector<double>(in * out), std::vector<double>(out, 0.0)};
      const bool last = li + 1 == widths.size();
      const double scale = std::sqrt((last ? 1.0 : 2.0) / static_cast<double>(in));
      for (auto& w : l.w) w = rng.normal() * scale;
      layers_.push_back(std::move(l));
      in = out;
    }
    for (const auto& l : layers_) {
      m_.emplace_back(l.w.size() + l.b.size(), 0.0);
      v_.emplace_back(l.w.size() + l.b.size(), 0.0);
    }
  }

  std::size_t param_count() const {
    std::size_t n = 0;
    for (const auto& l : layers_) n += l.w.size() + l.b.size();
    return n;
  }

  double logit(const double* x) const {
    std::vector<std::vector<double>> acts;
    return forward(x, acts);
  }

  // One Adam step on a mini-batch.
  void train_batch(const std::vector<const double*>& xs, const std::vector<double>& ys, double lr) {
    std::vector<std::vector<double>> grads;
    for (const auto& l : layers_) grads.emplace_back(l.w.size() + l.b.size(), 0.0);
    std::vector<std::vector<double>> acts;
    for (std::size_t s = 0; s < xs.size(); ++s) {
      const double z = forward(xs[s], acts);
      const double prob = 1.0 / (1.0 + std::exp(-z));
      std::vector<double> delta{(prob - ys[s]) / static_cast<double>(xs.size())};
      for (std::size_t li = layers_.size(); li-- > 0;) {
        const auto& l = layers_[li];
        const auto& input = acts[li];
        auto& g = grads[li];
        for (std::size_t o = 0; o < l.out; ++o) {
          for (std::size_t i = 0; i < l.in; ++i) g[o * l.in + i] += delta[o] * input[i];
          g[l.w.size() + o] += delta[o];
        }
        if (li == 0) break;
        std::vector<double> prev(l.in, 0.0);
        for (std::size_t o = 0; o < l.out; ++o)
          for (std::size_t i = 0; i < l.in; ++i) prev[i] += l.w[o * l.in + i] * delta[o];
        for (std::size_t i = 0; i < l.in; ++i)
          if (input[i] <= 0) prev[i] = 0;  // ReLU
        delta = std::move(prev);
      }
    }
    ++step_;
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
    for (std::size_t li = 0; li < layers_.size(); ++li) {
      auto& l = layers_[li];
      for (std::size_t j = 0; j < grads[li].size(); ++j) {
        const double g = grads[li][j];
        m_[li][j] = b1 * m_[li][j] + (1 - b1) * g;
        v_[li][j] = b2 * v_[li][j] + (1 - b2) * g * g;
        const double upd = lr * (m_[li][j] / c1) / (std::sqrt(v_[li][j] / c2) + eps);
        if (j < l.w.size())
          l.w[j] -= upd;
        else
          l.b[j - l.w.size()] -= upd;
      }
    }
  }

 private:
  struct Layer {
    std::size_t in, out;
    std::vector<double> w;  // out * in
    std::vector<double> b;
  };

  // acts[i] = input to layer i.
  double forward(const double* x, std::vector<std::vector<double>>& acts) const {
    acts.assign(layers_.size(), {});
    acts[0].assign(x, x + layers_[0].in);
    for (std::size_t li = 0; li < layers_.size(); ++li) {
      const auto& l = layers_[li];
      std::vector<double> out(l.out);
      for (std::size_t o = 0; o < l.out; ++o) {
        double s = l.b[o];
        for (std::size_t i = 0; i < l.in; ++i) s += l.w[o * l.in + i] * acts[li][i];
        out[o] = s;
      }
      if (li + 1 == layers_.size()) return out[0];
      for (auto& v : out) v = std::max(v, 0.0);
      acts[li + 1] = std::move(out);
    }
    return 0.0;
  }

  std::vector<Layer> layers_;
  std::vector<std::vector<double>> m_, v_;
  std::size_t step_ = 0;
};

inline std::string describe_architecture(const std::vector<std::size_t>& hidden) {
  if (hidden.empty()) return "linear";
  std::string s = "mlp";
  for (auto h : hidden) s += "-" + std::to_string(h);
  return s;
}

}  // namespace detail

// Labels real = 0, synthetic = 1; stratified train/validation split; every
// architecture in the grid is trained with early stopping on validation loss
// and scored by validation accuracy at its best epoch. The best accuracy wins,
// ties going to the smaller model.
inline SeparabilityResult separability(const EmbeddingSet& real, const EmbeddingSet& synth, std::uint64_t seed,
                                       const SeparabilityOptions& opt = {}) {
  check_same_dim(real, synth);
  if (real.size() < opt.min_per_class || synth.size() < opt.min_per_class)
    throw ComputeError("separability needs at least " + std::to_string(opt.min_per_class) + " points per set");
  const std::size_t dim = real.dim;
  Rng split_rng(derive_seed(seed, 0x5e9));

  std::vector<std::size_t> train, val;
  std::vector<double> labels;
  std::vector<double> features;
  auto add_class = [&](const EmbeddingSet& set, double label) {
    std::vector<std::size_t> order(set.size());
    std::iota(order.begin(), order.end(), 0);
    split_rng.shuffle(order);
    const auto n_val = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::round(opt.validation_fraction * static_cast<double>(set.size()))));
    for (std::size_t r = 0; r < order.size(); ++r) {
      const std::size_t idx = labels.size();
      for (auto v : set.row(order[r])) features.push_back(v);
      labels.push_back(label);
      (r < n_val ? val : train).push_back(idx);
    }
  };
  add_class(real, 0.0);
  add_class(synth, 1.0);

  // Standardize with training statistics.
  std::vector<double> mean(dim, 0.0), sd(dim, 0.0);
  for (auto i : train)
    for (std::size_t d = 0; d < dim; ++d) mean[d] += features[i * dim + d];
  for (auto& m : mean) m /= static_cast<double>(train.size());
  for (auto i : train)
    for (std::size_t d = 0; d < dim; ++d) {
      const double diff = features[i * dim + d] - mean[d];
      sd[d] += diff * diff;
    }
  for (auto& s : sd) s = std::sqrt(s / static_cast<double>(train.size()));
  for (std::size_t i = 0; i < labels.size(); ++i)
    for (std::size_t d = 0; d < dim; ++d)
      features[i * dim + d] = sd[d] > 0 ? (features[i * dim + d] - mean[d]) / sd[d] : 0.0;

  SeparabilityResult best;
  bool have_best = false;
  for (std::size_t a = 0; a < opt.architectures.size(); ++a) {
    const auto& hidden = opt.architectures[a];
    Rng rng(derive_seed(seed, 0xa7c, a));
    detail::BinaryMlp net(dim, hidden, rng);
    double best_loss = std::numeric_limits<double>::infinity();
    double acc_at_best = 0;
    std::size_t since_best = 0;
    auto order = train;
    for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
      rng.shuffle(order);
      for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
        std::vector<const double*> xs;
        std::vector<double> ys;
        for (std::size_t j = start; j < std::min(order.size(), start + opt.batch_size); ++j) {
          xs.push_back(&features[order[j] * dim]);
          ys.push_back(labels[order[j]]);
        }
        net.train_batch(xs, ys, opt.learning_rate);
      }
      double loss = 0;
      std::size_t correct = 0;
      for (auto i : val) {
        const double z = net.logit(&features[i * dim]);
        // log(1 + exp(-z)) for y=1, log(1 + exp(z)) for y=0, computed stably.
        const double s = labels[i] > 0.5 ? -z : z;
        loss += s > 0 ? s + std::log1p(std::exp(-s)) : std::log1p(std::exp(s));
        if ((z > 0) == (labels[i] > 0.5)) ++correct;
      }
      loss /= static_cast<double>(val.size());
      if (loss < best_loss) {
        best_loss = loss;
        acc_at_best = static_cast<double>(correct) / static_cast<double>(val.size());
        since_best = 0;
      } else if (++since_best >= opt.patience) {
        break;
      }
    }
    const auto params = net.param_count();
    if (!have_best || acc_at_best > best.accuracy || (acc_at_best == best.accuracy && params < best.param_count)) {
      best = {acc_at_best, params, detail::describe_architecture(hidden)};
      have_best = true;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Feature-extractor pairing evaluation: row i of `a` is paired with row i of `b`.

struct PairingEval {
  double cos_sum = 0, cos_mean = 0, euc_sum = 0, euc_mean = 0;
};

inline PairingEval extractor_pairing_eval(const EmbeddingSet& a, const EmbeddingSet& b) {
  check_same_dim(a, b);
  if (a.size() != b.size()) throw ComputeError("extractor_pairing_eval: sets differ in row count");
  if (a.size() == 0) throw ComputeError("extractor_pairing_eval: no pairs");
  PairingEval r;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double dot = 0, na = 0, nb = 0, sq = 0;
    auto x = a.row(i), y = b.row(i);
    for (std::size_t d = 0; d < a.dim; ++d) {
      const double u = x[d], v = y[d];
      dot += u * v;
      na += u * u;
      nb += v * v;
      sq += (u - v) * (u - v);
    }
    if (na == 0 || nb == 0) throw ComputeError("extractor_pairing_eval: zero-norm vector in pair " + std::to_string(i));
    r.cos_sum += dot / (std::sqrt(na) * std::sqrt(nb));
    r.euc_sum += std::sqrt(sq);
  }
  r.cos_mean = r.cos_sum / static_cast<double>(a.size());
  r.euc_mean = r.euc_sum / static_cast<double>(a.size());
  return r;
}

}  // namespace sdqm
