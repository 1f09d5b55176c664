// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sdqm/cli/commands.hpp"
#include "sdqm/fixture.hpp"
#include "sdqm/sdqm.hpp"

using namespace sdqm;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

int failures = 0;

void run(const char* name, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = budget_s <= 0 || s < budget_s;
  const bool ok = o.ok && in_time;
  if (!ok) ++failures;
  char timing[64];
  if (budget_s > 0)
    std::snprintf(timing, sizeof timing, "%.2fs < %.0fs", s, budget_s);
  else
    std::snprintf(timing, sizeof timing, "%.2fs", s);
  std::printf("%s %-28s %s [%s]\n", ok ? "PASS" : "FAIL", name, o.detail.c_str(), timing);
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

EmbeddingSet gaussian(Rng& rng, std::size_t n, std::size_t dim, double shift = 0) {
  EmbeddingSet s;
  s.dim = dim;
  for (std::size_t i = 0; i < n; ++i) {
    s.ids.push_back("e" + std::to_string(i));
    for (std::size_t d = 0; d < dim; ++d) s.values.push_back(static_cast<float>(rng.normal() + shift));
  }
  return s;
}

std::vector<double> random_sample(Rng& rng) {
  const std::size_t n = 2 + rng.below(199);
  const int style = static_cast<int>(rng.below(3));
  std::vector<double> v(n);
  for (auto& x : v) {
    if (style == 0)
      x = rng.normal() * 3 + 1;
    else if (style == 1)
      x = std::round(rng.normal() * 4) / 2;  // heavy ties
    else
      x = std::exp(rng.normal());
  }
  return v;
}

Outcome statdist_oracles() {
  Rng rng(20240601);
  double worst = 0;
  const char* worst_name = "";
  for (int t = 0; t < 200; ++t) {
    auto a = random_sample(rng), b = random_sample(rng);
    if (t % 7 == 0) b = a;
    const auto p = EmpiricalDistribution::from_samples(a), q = EmpiricalDistribution::from_samples(b);
    const auto [hp, hq] = pooled_histograms(p, q);
    const double lo = std::min(*std::min_element(a.begin(), a.end()), *std::min_element(b.begin(), b.end()));
    const double hi = std::max(*std::max_element(a.begin(), a.end()), *std::max_element(b.begin(), b.end()));
    const auto oa = oracle::hist(a, lo, hi), ob = oracle::hist(b, lo, hi);
    const std::pair<const char*, double> diffs[] = {
        {"ks", ks_statistic(p, q) - oracle::ks(a, b)},
        {"ad", ad_statistic(p, q) - oracle::anderson_darling(a, b)},
        {"energy", energy_distance(p, q) - oracle::energy(a, b)},
        {"wasserstein", wasserstein_1d(p, q) - oracle::wasserstein(a, b)},
        {"kl", kl_divergence(hp, hq) - oracle::kl(oa, ob)},
        {"js", js_divergence(hp, hq) - oracle::js(oa, ob)},
        {"bhattacharyya", bhattacharyya_distance(hp, hq) - oracle::bhattacharyya(oa, ob)},
    };
    for (const auto& [n, d] : diffs)
      if (std::abs(d) > worst) {
        worst = std::abs(d);
        worst_name = n;
      }
  }
  return {worst <= 1e-10, fmt("200 cases, max |diff| %.2e", worst) + " (" + worst_name + ")"};
}

Outcome frontier_extremes() {
  Rng rng(99);
  double worst_mauve = 0, worst_fi = 0;
  for (int t = 0; t < 50; ++t) {
    const auto e = gaussian(rng, 20 + rng.below(100), 2 + rng.below(6));
    const auto qp = quantize(e, e, default_quantization_k(2 * e.size()), rng.next());
    const auto f = frontier_scores(qp);
    worst_mauve = std::max(worst_mauve, std::abs(f.mauve - 1));
    worst_fi = std::max(worst_fi, std::abs(f.fi));
  }
  const auto dj = divergence_frontier({1, 0}, {0, 1});
  const bool ok = worst_mauve <= 1e-9 && worst_fi <= 1e-9 && dj.fi >= 0.99 && dj.mauve <= 0.02;
  return {ok, fmt("identity |mauve-1|<=%.1e |fi|<=%.1e; disjoint fi=%.4f mauve=%.4f", worst_mauve, worst_fi, dj.fi,
                  dj.mauve)};
}

Outcome precision_recall_sanity() {
  double worst_auth = 0, worst_beta = 0, worst_alpha = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    Rng rng(seed);
    const auto real = gaussian(rng, 500, 8);
    worst_auth = std::max(worst_auth, authenticity(real, real));
    // per-coordinate sd 1, radius ~ sqrt(8); shift of 30 per coordinate is > 10x the spread
    const auto far = gaussian(rng, 500, 8, 30.0);
    worst_alpha = std::max(worst_alpha, alpha_precision(real, far));
    worst_beta = std::max(worst_beta, beta_recall(real, far));
  }
  const bool ok = worst_auth <= 0.02 && worst_beta <= 0.01 && worst_alpha <= 0.01;
  return {ok, fmt("5 seeds: copy authenticity<=%.4f; far alpha<=%.4f beta<=%.4f", worst_auth, worst_alpha, worst_beta)};
}

Outcome log_cluster_cases() {
  const auto hand = log_cluster_from_counts({4, 0}, {4, 4});
  const auto prop = log_cluster_from_counts({5, 10, 15}, {10, 20, 30});
  const bool ok = std::abs(hand.log_value - std::log(0.25)) <= 1e-9 &&
                  prop.log_value == std::log(kLogClusterFloor);
  return {ok, fmt("hand l=%.10f; proportional l=%.4f", hand.log_value, prop.log_value)};
}

AnnotationSet random_annotations(Rng& rng) {
  AnnotationSet a;
  const std::size_t images = 1 + rng.below(6);
  for (std::size_t i = 0; i < images; ++i) {
    ImageInfo im;
    im.id = "i" + std::to_string(i);
    im.width = 10 + static_cast<int>(rng.below(300));
    im.height = 10 + static_cast<int>(rng.below(300));
    a.images.push_back(im);
  }
  const std::size_t objects = rng.below(30);
  for (std::size_t o = 0; o < objects; ++o) {
    const auto& im = a.images[rng.below(images)];
    ObjectAnnotation ob;
    ob.image_id = im.id;
    ob.category_id = 1;
    const double w = im.width, h = im.height;
    ob.bbox.x = rng.bernoulli(0.3) ? std::floor(rng.uniform() * w) : rng.uniform() * w;
    ob.bbox.y = rng.uniform() * h;
    ob.bbox.w = rng.bernoulli(0.1) ? 0.0 : rng.uniform() * (w - ob.bbox.x);
    ob.bbox.h = rng.uniform() * (h - ob.bbox.y);
    a.objects.push_back(ob);
  }
  return a;
}

Outcome heatmap_oracle() {
  Rng rng(5150);
  int exact = 0;
  double self_rmse = 0;
  for (int t = 0; t < 20; ++t) {
    const auto ann = random_annotations(rng);
    const auto hm = build_heatmap(ann, 64, 64);
    if (hm.cells == oracle::heatmap(ann, 64, 64)) ++exact;
    self_rmse = std::max(self_rmse, spatial_distribution_difference(hm, hm));
  }
  return {exact == 20 && self_rmse == 0.0, fmt("%.0f/20 exact matches; rmse(A,A)=%.1f", exact, self_rmse)};
}

DetectionLog random_log(Rng& rng, EntropySource mode) {
  DetectionLog log;
  log.mode = mode;
  const std::size_t n = 1 + rng.below(500);
  for (std::size_t i = 0; i < n; ++i) {
    double p = rng.uniform();
    if (rng.bernoulli(0.05)) p = 0.0;
    log.records.push_back({"img" + std::to_string(i), 1, p});
  }
  return log;
}

Outcome vinfo_checks() {
  Rng rng(31337);
  double worst_direct = 0, worst_concat = 0;
  for (int t = 0; t < 100; ++t) {
    const auto a = random_log(rng, EntropySource::predictive), b = random_log(rng, EntropySource::predictive);
    long double direct = 0;
    for (const auto& r : a.records) direct += -std::log2(std::max(r.p_gt, kEntropyEps));
    direct /= static_cast<long double>(a.records.size());
    worst_direct = std::max(worst_direct, std::abs(entropy_from_log(a) - static_cast<double>(direct)));
    DetectionLog ab = a;
    ab.records.insert(ab.records.end(), b.records.begin(), b.records.end());
    const double na = static_cast<double>(a.records.size()), nb = static_cast<double>(b.records.size());
    const double weighted = (na * entropy_from_log(a) + nb * entropy_from_log(b)) / (na + nb);
    worst_concat = std::max(worst_concat, std::abs(entropy_from_log(ab) - weighted));
  }
  return {worst_direct <= 1e-12 && worst_concat <= 1e-12,
          fmt("direct mean |diff|<=%.1e; concatenation |diff|<=%.1e", worst_direct, worst_concat)};
}

EmbeddingSet two_gaussian_pool(std::uint64_t seed) {
  Rng rng(seed);
  auto a = gaussian(rng, 1000, 8, 0.0);
  const auto b = gaussian(rng, 1000, 8, 3.0);
  return make_pool(a, b);
}

Outcome evolve_convergence() {
  const auto pool = two_gaussian_pool(2024);
  EvolutionConfig cfg;
  cfg.seed = 11;
  const std::vector<MetricEvaluator> metrics = {builtin_evaluator("alpha_precision")};
  const auto first = run_sweep(pool, metrics, cfg);
  const auto second = run_sweep(pool, metrics, cfg);
  int converged = 0;
  bool same = first.size() == second.size();
  double worst = 0;
  for (std::size_t i = 0; i < first.size(); ++i) {
    if (first[i].fitness < cfg.stop_threshold && first[i].generations <= cfg.generations) ++converged;
    worst = std::max(worst, first[i].fitness);
    if (same)
      same = first[i].fitness == second[i].fitness && first[i].best.d1 == second[i].best.d1 &&
             first[i].best.d2 == second[i].best.d2 && first[i].generations == second[i].generations;
  }
  return {converged >= 8 && same, fmt("%.0f/11 targets under 0.005 (worst %.4f); repeat identical=", converged, worst) +
                                      (same ? "yes" : "no")};
}

Outcome fusion_recovery() {
  const auto t = fixture::fusion_table(500, 0.01, 4242);
  std::vector<FeatureRow> train, eval;
  std::vector<double> ytrain, yeval;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    (i < 400 ? train : eval).push_back(build_feature_row(t.rows[i]));
    (i < 400 ? ytrain : yeval).push_back(t.labels[i]);
  }
  auto held_out = [&](RegressorKind kind) {
    const auto m = fit(train, ytrain, kind, 17);
    std::vector<double> pred;
    for (const auto& r : eval) pred.push_back(m.predict(r.values));
    return pearson(pred, yeval);
  };
  const double rf = held_out(RegressorKind::random_forest);
  const double lin = held_out(RegressorKind::linear);
  const double ridge = held_out(RegressorKind::ridge);
  Matrix X;
  for (const auto& r : train) X.push_back(r.values);
  const auto k1 = kfold_evaluate(X, ytrain, 10, RegressorKind::random_forest, 17);
  const auto k2 = kfold_evaluate(X, ytrain, 10, RegressorKind::random_forest, 17);
  const bool repeat = k1.predictions == k2.predictions && held_out(RegressorKind::random_forest) == rf;
  const bool ok = rf >= 0.90 && ridge >= lin - 0.01 && repeat;
  return {ok, fmt("rf=%.4f linear=%.4f ridge=%.4f; 10-fold rf pearson %.4f", rf, lin, ridge, k1.mean_pearson) +
                  fmt(" +- %.4f", k1.sd_pearson) + "; repeat identical=" + (repeat ? "yes" : "no")};
}

std::string slurp(const fs::path& p) { return sdqm::detail::read_file(p); }

Outcome end_to_end_identity() {
  const fs::path root = fs::path(SDQM_TEST_TMP) / "acceptance_identity";
  fs::remove_all(root);
  fixture::PairOptions opt;
  opt.identical = true;
  const auto config = fixture::write_dataset_pair(root, opt);
  std::vector<std::string> names = {"submetrics.csv", "report.json", "report.txt"};
  std::vector<std::string> first;
  SubMetricVector v;
  for (int runs = 0; runs < 2; ++runs) {
    cli::Overrides ov;
    ov.config = config;
    ov.out = root / ("out" + std::to_string(runs));
    const auto cfg = cli::load_config(ov);
    std::ostringstream log;
    if (cli::cmd_submetrics(cfg, log) != 0) return {false, "submetrics exited nonzero: " + log.str()};
    for (const auto& e : fs::directory_iterator(cfg.out))
      if (e.path().filename() != "timings.json" &&
          std::find(names.begin(), names.end(), e.path().filename().string()) == names.end())
        names.push_back(e.path().filename().string());
    if (runs == 0) {
      v = parse_submetric_csv(slurp(cfg.out / "submetrics.csv")).rows.at(0);
      for (const auto& n : names) first.push_back(slurp(cfg.out / n));
    }
  }
  std::size_t identical = 0;
  for (std::size_t i = 0; i < first.size(); ++i)
    if (fs::exists(root / "out1" / names[i]) && slurp(root / "out1" / names[i]) == first[i]) ++identical;
  const double ks = v.require("label_ks"), rmse = v.require("spatial_rmse"), mauve = v.require("mauve"),
               auth = v.require("authenticity");
  const bool ok = ks == 0 && rmse == 0 && std::abs(mauve - 1) <= 1e-6 && auth <= 0.02 && identical == first.size();
  return {ok, fmt("ks=%.6f rmse=%.6f mauve=%.6f authenticity=%.6f", ks, rmse, mauve, auth) +
                  fmt("; %.0f/%.0f report files byte-identical", static_cast<double>(identical),
                      static_cast<double>(first.size()))};
}

}  // namespace

int main() {
  fs::create_directories(SDQM_TEST_TMP);
  run("statdist-oracles", 10, statdist_oracles);
  run("frontier-identity-extremes", 5, frontier_extremes);
  run("precision-recall-sanity", 0, precision_recall_sanity);
  run("log-cluster-closed-form", 0, log_cluster_cases);
  run("heatmap-rasterization", 0, heatmap_oracle);
  run("v-information", 0, vinfo_checks);
  run("evolve-convergence", 120, evolve_convergence);
  run("fusion-recovery", 60, fusion_recovery);
  run("end-to-end-identity", 0, end_to_end_identity);
  std::printf("%d failure(s)\n", failures);
  return failures == 0 ? 0 : 1;
}
