#pragma once

// Evolutionary search for subset pairs (d1, d2) of a joint embedding pool
// whose sub-metric value hits a sweep of target values.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <iterator>
#include <limits>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdqm/dataio.hpp"
#include "sdqm/embedmetrics.hpp"
#include "sdqm/error.hpp"
#include "sdqm/parallel.hpp"
#include "sdqm/rng.hpp"

namespace sdqm {

struct EvolutionConfig {
  std::size_t k_l = 50;
  std::size_t k_u = 200;
  std::size_t generations = 200;
  std::size_t targets = 11;
  std::size_t population = 50;
  double p_mutation = 0.2;
  double p_crossover = 0.8;
  double stop_threshold = 0.005;
  std::uint64_t seed = 0;

  void validate() const {
    if (k_l < 1 || k_l > k_u) throw ConfigError("evolve: need 1 <= k_l <= k_u");
    if (!(p_mutation >= 0 && p_mutation <= 1) || !(p_crossover >= 0 && p_crossover <= 1))
      throw ConfigError("evolve: probabilities must lie in [0,1]");
    if (!(stop_threshold > 0)) throw ConfigError("evolve: stop threshold must be positive");
    if (population < 2) throw ConfigError("evolve: population must be at least 2");
    if (targets < 1) throw ConfigError("evolve: need at least one target");
  }
};

// Distance of c outside [a, b].
inline double dist(double a, double b, double c) {
  if (a > b) throw ComputeError("dist: lower bound exceeds upper bound");
  if (c < a) return a - c;
  if (c > b) return c - b;
  return 0.0;
}

struct Individual {
  std::vector<std::size_t> d1;  // sorted pool indices
  std::vector<std::size_t> d2;
  double value = std::numeric_limits<double>::quiet_NaN();  // metric on (d1, d2)
  double fitness = std::numeric_limits<double>::infinity();
};

// A sub-metric evaluated on (subset 1 as "real", subset 2 as "synthetic").
struct MetricEvaluator {
  std::string name;
  double lo = 0, hi = 1;  // sweep range
  double range = 1;       // Range(m) in the size penalty
  std::function<double(const EmbeddingSet&, const EmbeddingSet&)> fn;
};

inline MetricEvaluator builtin_evaluator(const std::string& name) {
  if (name == "alpha_precision")
    return {name, 0, 1, 1, [](const EmbeddingSet& a, const EmbeddingSet& b) { return alpha_precision(a, b); }};
  if (name == "beta_recall")
    return {name, 0, 1, 1, [](const EmbeddingSet& a, const EmbeddingSet& b) { return beta_recall(a, b); }};
  if (name == "authenticity")
    return {name, 0, 1, 1, [](const EmbeddingSet& a, const EmbeddingSet& b) { return authenticity(a, b); }};
  throw ConfigError("evolve: unsupported metric '" + name + "' (alpha_precision, beta_recall, authenticity)");
}

inline double penalized_fitness(double value, double target, std::size_t n1, std::size_t n2,
                                const EvolutionConfig& cfg, double range_m) {
  const double kl = static_cast<double>(cfg.k_l), ku = static_cast<double>(cfg.k_u);
  const double penalty = (dist(kl, ku, static_cast<double>(n1)) + dist(kl, ku, static_cast<double>(n2))) /
                         std::max(ku - kl, 1.0) * range_m;
  return std::abs(target - value) + penalty;
}

// Evaluates the metric on the individual's subsets and returns its fitness.
inline double fitness(Individual& ind, const EmbeddingSet& pool, const MetricEvaluator& metric, double target,
                      const EvolutionConfig& cfg) {
  ind.value = metric.fn(subset_rows(pool, ind.d1), subset_rows(pool, ind.d2));
  ind.fitness = penalized_fitness(ind.value, target, ind.d1.size(), ind.d2.size(), cfg, metric.range);
  return ind.fitness;
}

inline std::vector<double> sweep_targets(double lo, double hi, std::size_t n) {
  if (n == 1) return {lo};
  std::vector<double> t(n);
  for (std::size_t j = 0; j < n; ++j)
    t[j] = j + 1 == n ? hi : lo + static_cast<double>(j) * (hi - lo) / static_cast<double>(n - 1);
  return t;
}

// Joint pool: real rows then synthetic rows, ids prefixed by origin.
inline EmbeddingSet make_pool(const EmbeddingSet& real, const EmbeddingSet& synth) {
  check_same_dim(real, synth);
  EmbeddingSet pool;
  pool.dim = real.dim;
  for (const auto& id : real.ids) pool.ids.push_back("real/" + id);
  for (const auto& id : synth.ids) pool.ids.push_back("synth/" + id);
  pool.values = real.values;
  pool.values.insert(pool.values.end(), synth.values.begin(), synth.values.end());
  return pool;
}

namespace detail {

inline constexpr std::size_t kTournament = 3;
inline constexpr std::size_t kMinSubset = 2;  // keeps every built-in metric defined

inline bool contains(const std::vector<std::size_t>& sorted, std::size_t x) {
  return std::binary_search(sorted.begin(), sorted.end(), x);
}

inline void insert_sorted(std::vector<std::size_t>& v, std::size_t x) { v.insert(std::upper_bound(v.begin(), v.end(), x), x); }

inline Individual random_individual(std::size_t pool_size, const EvolutionConfig& cfg, Rng& rng) {
  const std::size_t n1 = rng.between(cfg.k_l, cfg.k_u), n2 = rng.between(cfg.k_l, cfg.k_u);
  // Partial Fisher-Yates over the pool without materializing it.
  std::vector<std::size_t> picked;
  std::unordered_map<std::size_t, std::size_t> moved;
  auto slot = [&](std::size_t i) {
    auto it = moved.find(i);
    return it == moved.end() ? i : it->second;
  };
  const std::size_t total = std::min(pool_size, n1 + n2);
  for (std::size_t i = 0; i < total; ++i) {
    const std::size_t j = i + rng.below(pool_size - i);
    const std::size_t vi = slot(i), vj = slot(j);
    moved[j] = vi;
    picked.push_back(vj);
  }
  Individual ind;
  const std::size_t first = std::min(n1, total);
  ind.d1.assign(picked.begin(), picked.begin() + static_cast<std::ptrdiff_t>(first));
  ind.d2.assign(picked.begin() + static_cast<std::ptrdiff_t>(first), picked.end());
  std::sort(ind.d1.begin(), ind.d1.end());
  std::sort(ind.d2.begin(), ind.d2.end());
  return ind;
}

inline std::size_t tournament(const std::vector<Individual>& pop, Rng& rng) {
  std::size_t best = rng.below(pop.size());
  for (std::size_t t = 1; t < kTournament; ++t) {
    const std::size_t c = rng.below(pop.size());
    if (pop[c].fitness < pop[best].fitness || (pop[c].fitness == pop[best].fitness && c < best)) best = c;
  }
  return best;
}

// Uniform exchange of membership: indices held by both parents in the same
// subset are kept, others inherited with probability 1/2. An index landing in
// both child subsets stays where the fitter parent had it.
inline Individual crossover(const Individual& a, const Individual& b, Rng& rng) {
  const bool a_fitter = a.fitness <= b.fitness;
  auto mix = [&](const std::vector<std::size_t>& x, const std::vector<std::size_t>& y,
                 std::vector<std::size_t>& from_a_only, std::vector<std::size_t>& from_b_only) {
    std::vector<std::size_t> uni, child;
    std::set_union(x.begin(), x.end(), y.begin(), y.end(), std::back_inserter(uni));
    for (std::size_t idx : uni) {
      const bool in_x = contains(x, idx), in_y = contains(y, idx);
      if ((in_x && in_y) || rng.bernoulli(0.5)) {
        child.push_back(idx);
        if (in_x && !in_y) from_a_only.push_back(idx);
        if (in_y && !in_x) from_b_only.push_back(idx);
      }
    }
    return child;
  };
  std::vector<std::size_t> d1_a, d1_b, d2_a, d2_b;
  Individual c;
  c.d1 = mix(a.d1, b.d1, d1_a, d1_b);
  c.d2 = mix(a.d2, b.d2, d2_a, d2_b);
  std::vector<std::size_t> conflicts;
  std::set_intersection(c.d1.begin(), c.d1.end(), c.d2.begin(), c.d2.end(), std::back_inserter(conflicts));
  for (std::size_t idx : conflicts) {
    // idx came into d1 from one parent and into d2 from the other.
    const bool d1_from_a = contains(d1_a, idx);
    const bool keep_in_d1 = d1_from_a == a_fitter;
    auto& drop = keep_in_d1 ? c.d2 : c.d1;
    drop.erase(std::lower_bound(drop.begin(), drop.end(), idx));
  }
  return c;
}

inline std::size_t unused_index(const Individual& ind, std::size_t pool_size, Rng& rng) {
  if (ind.d1.size() + ind.d2.size() >= pool_size) return pool_size;
  for (;;) {
    const std::size_t x = rng.below(pool_size);
    if (!contains(ind.d1, x) && !contains(ind.d2, x)) return x;
  }
}

// One of add / remove / swap on d1 or d2.
inline void mutate(Individual& ind, std::size_t pool_size, Rng& rng) {
  auto& set = rng.bernoulli(0.5) ? ind.d2 : ind.d1;
  switch (rng.below(3)) {
    case 0: {
      const std::size_t x = unused_index(ind, pool_size, rng);
      if (x < pool_size) insert_sorted(set, x);
      break;
    }
    case 1:
      if (set.size() > kMinSubset) set.erase(set.begin() + static_cast<std::ptrdiff_t>(rng.below(set.size())));
      break;
    default: {
      if (set.empty()) break;
      const std::size_t x = unused_index(ind, pool_size, rng);
      if (x >= pool_size) break;
      set.erase(set.begin() + static_cast<std::ptrdiff_t>(rng.below(set.size())));
      insert_sorted(set, x);
    }
  }
}

inline void ensure_min_size(Individual& ind, std::size_t pool_size, Rng& rng) {
  for (auto* set : {&ind.d1, &ind.d2})
    while (set->size() < kMinSubset) {
      const std::size_t x = unused_index(ind, pool_size, rng);
      if (x >= pool_size) throw ComputeError("evolve: pool too small");
      insert_sorted(*set, x);
    }
}

}  // namespace detail

struct SweepResult {
  std::string metric;
  double target = 0;
  double achieved = 0;
  double fitness = 0;
  std::size_t generations = 0;  // breeding generations run
  bool converged = false;
  Individual best;
};

struct GenerationProgress {
  std::string metric;
  double target = 0;
  std::size_t generation = 0;
  double best_fitness = 0;
};

using ProgressCallback = std::function<void(const GenerationProgress&)>;

// Single target: evolve until min fitness < s or cfg.generations elapse.
inline SweepResult evolve_target(const EmbeddingSet& pool, const MetricEvaluator& metric, double target,
                                 std::uint64_t stream, const EvolutionConfig& cfg,
                                 const ProgressCallback& progress = {}) {
  const std::size_t n = pool.size();
  if (2 * std::max(cfg.k_l, detail::kMinSubset) > n)
    throw ComputeError("evolve: pool of " + std::to_string(n) + " cannot hold two disjoint subsets of size " +
                       std::to_string(cfg.k_l));
  std::vector<Individual> pop(cfg.population);
  parallel_for(pop.size(), [&](std::size_t i) {
    Rng rng(derive_seed(cfg.seed, stream, 0, i));
    pop[i] = detail::random_individual(n, cfg, rng);
    fitness(pop[i], pool, metric, target, cfg);
  });
  auto best_of = [&] {
    std::size_t b = 0;
    for (std::size_t i = 1; i < pop.size(); ++i)
      if (pop[i].fitness < pop[b].fitness) b = i;
    return b;
  };
  std::size_t gen = 0;
  std::size_t best = best_of();
  while (pop[best].fitness >= cfg.stop_threshold && gen < cfg.generations) {
    ++gen;
    std::vector<Individual> next(pop.size());
    next[0] = pop[best];  // elitism
    parallel_for(pop.size() - 1, [&](std::size_t slot) {
      Rng rng(derive_seed(cfg.seed, stream, gen, slot + 1));
      const auto& a = pop[detail::tournament(pop, rng)];
      const auto& b = pop[detail::tournament(pop, rng)];
      Individual child = rng.bernoulli(cfg.p_crossover) ? detail::crossover(a, b, rng) : a;
      if (rng.bernoulli(cfg.p_mutation)) detail::mutate(child, n, rng);
      detail::ensure_min_size(child, n, rng);
      fitness(child, pool, metric, target, cfg);
      next[slot + 1] = std::move(child);
    });
    pop = std::move(next);
    best = best_of();
    if (progress) progress({metric.name, target, gen, pop[best].fitness});
  }
  SweepResult r;
  r.metric = metric.name;
  r.target = target;
  r.best = pop[best];
  r.achieved = r.best.value;
  r.fitness = r.best.fitness;
  r.generations = gen;
  r.converged = r.fitness < cfg.stop_threshold;
  return r;
}

// Every metric x every equally spaced target over the metric's range.
inline std::vector<SweepResult> run_sweep(const EmbeddingSet& pool, const std::vector<MetricEvaluator>& metrics,
                                          const EvolutionConfig& cfg, const ProgressCallback& progress = {}) {
  cfg.validate();
  std::vector<SweepResult> out;
  for (std::size_t m = 0; m < metrics.size(); ++m) {
    const auto targets = sweep_targets(metrics[m].lo, metrics[m].hi, cfg.targets);
    for (std::size_t t = 0; t < targets.size(); ++t)
      out.push_back(evolve_target(pool, metrics[m], targets[t], derive_seed(cfg.seed, m + 1, t + 1), cfg, progress));
  }
  return out;
}

inline std::string sweep_result_jsonl(const SweepResult& r, const EmbeddingSet& pool) {
  nlohmann::ordered_json j;
  j["metric"] = r.metric;
  j["target"] = r.target;
  j["achieved"] = r.achieved;
  j["fitness"] = r.fitness;
  j["generations"] = r.generations;
  j["converged"] = r.converged;
  auto ids = [&](const std::vector<std::size_t>& idx) {
    std::vector<std::string> v;
    for (auto i : idx) v.push_back(pool.ids[i]);
    return v;
  };
  j["d1"] = ids(r.best.d1);
  j["d2"] = ids(r.best.d2);
  return j.dump() + "\n";
}

}  // namespace sdqm
