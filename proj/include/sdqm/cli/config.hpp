#pragma once

// Run configuration: one TOML file plus command-line overrides.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <tomlplusplus/toml.hpp>

#include "sdqm/dataio.hpp"
#include "sdqm/error.hpp"
#include "sdqm/embedmetrics.hpp"
#include "sdqm/evolve.hpp"
#include "sdqm/fuse.hpp"
#include "sdqm/structmetrics.hpp"
#include "sdqm/vinfo.hpp"

namespace sdqm::cli {

// Sub-metric groups computed by `submetrics`, in report order.
inline const std::vector<std::string>& metric_groups() {
  static const std::vector<std::string> g = {"frontier",      "precision_recall", "separability",
                                             "clusterability", "bbox_match",       "pixel_intensity",
                                             "label_overlap", "spatial",          "vinfo"};
  return g;
}

inline const std::vector<std::string>& group_columns(const std::string& group) {
  static const std::map<std::string, std::vector<std::string>> cols = {
      {"frontier", {"mauve", "mauve_star", "fi", "fi_star"}},
      {"precision_recall", {"alpha_precision", "beta_recall", "authenticity"}},
      {"separability", {"separability_accuracy", "separability_params"}},
      {"clusterability", {"cluster_c", "cluster_l"}},
      {"bbox_match", {"bbox_ed_aspect", "bbox_ed_size", "bbox_ed_area"}},
      {"pixel_intensity", {"pixel_ad_red", "pixel_ad_green", "pixel_ad_blue"}},
      {"label_overlap", {"label_ks"}},
      {"spatial", {"spatial_rmse"}},
      {"vinfo", {"vinfo_h_y", "vinfo_h_y_given_x", "vinfo_v"}},
  };
  auto it = cols.find(group);
  if (it == cols.end()) throw ConfigError("unknown metric group '" + group + "'");
  return it->second;
}

struct MetricsConfig {
  std::vector<std::string> enabled = metric_groups();
  std::string pair_id = "pair";
  std::vector<std::string> metadata_keys;
  std::size_t quantization_k = 0;  // 0 = default rule
  std::size_t cluster_k = kClusterabilityK;
  int heatmap_size = kHeatmapCanvas;
  double entropy_eps = kEntropyEps;
};

struct FitConfig {
  std::optional<fs::path> submetrics;
  std::optional<fs::path> labels;
  RegressorKind regressor = RegressorKind::random_forest;
  std::size_t folds = 10;
  std::vector<std::string> groups = default_groups();
  bool reduce = false;
  FitOptions options;
};

struct ScoreConfig {
  std::optional<fs::path> model;
  std::optional<fs::path> submetrics;
};

struct PlotConfig {
  std::optional<fs::path> predictions;
};

struct EvolveSection {
  EvolutionConfig params;
  std::vector<std::string> metrics = {"alpha_precision"};
};

struct RunConfig {
  DatasetPair pair;
  MetricsConfig metrics;
  EvolveSection evolve;
  FitConfig fit;
  ScoreConfig score;
  PlotConfig plot;
  std::uint64_t seed = 0;
  fs::path out = "sdqm-out";
  std::string hash;  // hex FNV-1a of config bytes + overrides (excluding --out)
};

struct Overrides {
  std::optional<fs::path> config;
  std::optional<std::uint64_t> seed;
  std::optional<fs::path> out;
  std::optional<std::string> metrics;
  std::optional<std::string> regressor;
};

inline std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else if (c != ' ') {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

inline std::vector<std::string> validate_metric_list(const std::vector<std::string>& names) {
  std::set<std::string> wanted;
  for (const auto& n : names) {
    group_columns(n);  // throws on unknown
    wanted.insert(n);
  }
  if (wanted.empty()) throw ConfigError("metric list is empty");
  std::vector<std::string> out;
  for (const auto& g : metric_groups())
    if (wanted.count(g)) out.push_back(g);
  return out;
}

namespace detail {

class Section {
 public:
  Section(const toml::table* t, std::string name, fs::path base) : t_(t), name_(std::move(name)), base_(std::move(base)) {}

  // Rejects keys outside `allowed`.
  void check_keys(std::initializer_list<const char*> allowed) const {
    if (!t_) return;
    for (auto&& [k, v] : *t_) {
      bool ok = false;
      for (const char* a : allowed) ok = ok || k.str() == a;
      if (!ok) throw ConfigError("unknown key '" + where(std::string(k.str())) + "'");
    }
  }

  const toml::node* node(const char* key) const { return t_ ? t_->get(key) : nullptr; }

  std::optional<std::string> str(const char* key) const {
    auto n = node(key);
    if (!n) return std::nullopt;
    if (!n->is_string()) throw ConfigError(where(key) + " must be a string");
    return n->value<std::string>();
  }

  std::optional<fs::path> path(const char* key) const {
    auto s = str(key);
    if (!s) return std::nullopt;
    fs::path p(*s);
    return p.is_absolute() ? p : base_ / p;
  }

  std::optional<std::int64_t> integer(const char* key, std::int64_t min = INT64_MIN) const {
    auto n = node(key);
    if (!n) return std::nullopt;
    if (!n->is_integer()) throw ConfigError(where(key) + " must be an integer");
    const auto v = *n->value<std::int64_t>();
    if (v < min) throw ConfigError(where(key) + " must be at least " + std::to_string(min));
    return v;
  }

  std::optional<double> number(const char* key) const {
    auto n = node(key);
    if (!n) return std::nullopt;
    if (!n->is_number()) throw ConfigError(where(key) + " must be a number");
    return n->value<double>();
  }

  std::optional<bool> boolean(const char* key) const {
    auto n = node(key);
    if (!n) return std::nullopt;
    if (!n->is_boolean()) throw ConfigError(where(key) + " must be true or false");
    return n->value<bool>();
  }

  std::optional<std::vector<std::string>> strings(const char* key) const {
    auto n = node(key);
    if (!n) return std::nullopt;
    auto arr = n->as_array();
    if (!arr) throw ConfigError(where(key) + " must be an array of strings");
    std::vector<std::string> out;
    for (auto&& e : *arr) {
      if (!e.is_string()) throw ConfigError(where(key) + " must be an array of strings");
      out.push_back(*e.value<std::string>());
    }
    return out;
  }

 private:
  std::string where(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

  const toml::table* t_;
  std::string name_;
  fs::path base_;
};

inline DatasetSide read_side(const Section& s) {
  s.check_keys({"annotations", "embeddings", "images", "category_map"});
  return {s.path("annotations"), s.path("embeddings"), s.path("images")};
}

}  // namespace detail

// Parses TOML text; relative paths resolve against `base`.
inline RunConfig parse_config(std::string_view text, const fs::path& base, const std::string& source = "<config>") {
  toml::table doc;
  try {
    doc = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    const auto& b = e.source().begin;
    throw ConfigError(source + ":" + std::to_string(b.line) + ":" + std::to_string(b.column) + ": " +
                      std::string(e.description()));
  }
  static const std::set<std::string> sections = {"real", "synthetic", "detection", "metrics",
                                                 "evolve", "fit",     "score",     "plot"};
  for (auto&& [k, v] : doc) {
    const std::string key(k.str());
    if (key == "seed" || key == "out") continue;
    if (!sections.count(key)) throw ConfigError("unknown key '" + key + "'");
    if (!v.is_table()) throw ConfigError("'" + key + "' must be a table");
  }
  auto section = [&](const char* name) { return detail::Section(doc[name].as_table(), name, base); };

  RunConfig cfg;
  detail::Section top(&doc, "", base);
  if (auto s = top.integer("seed", 0)) cfg.seed = static_cast<std::uint64_t>(*s);
  if (auto o = top.path("out")) cfg.out = *o;

  cfg.pair.real = detail::read_side(section("real"));
  {
    auto s = section("synthetic");
    cfg.pair.synthetic = detail::read_side(s);
    cfg.pair.category_map = s.path("category_map");
  }
  if (section("real").node("category_map")) throw ConfigError("real.category_map is not allowed; use synthetic.category_map");
  {
    auto s = section("detection");
    s.check_keys({"predictive", "conditional", "eps"});
    cfg.pair.predictive_log = s.path("predictive");
    cfg.pair.conditional_log = s.path("conditional");
    if (auto e = s.number("eps")) cfg.metrics.entropy_eps = *e;
  }
  {
    auto s = section("metrics");
    s.check_keys({"enabled", "pair_id", "metadata_keys", "quantization_k", "cluster_k", "heatmap_size"});
    if (auto v = s.strings("enabled")) cfg.metrics.enabled = validate_metric_list(*v);
    if (auto v = s.str("pair_id")) cfg.metrics.pair_id = *v;
    if (auto v = s.strings("metadata_keys")) cfg.metrics.metadata_keys = *v;
    if (auto v = s.integer("quantization_k", 0)) cfg.metrics.quantization_k = static_cast<std::size_t>(*v);
    if (auto v = s.integer("cluster_k", 2)) cfg.metrics.cluster_k = static_cast<std::size_t>(*v);
    if (auto v = s.integer("heatmap_size", 8)) cfg.metrics.heatmap_size = static_cast<int>(*v);
  }
  {
    auto s = section("evolve");
    s.check_keys({"metrics", "k_l", "k_u", "generations", "targets", "population", "p_mutation", "p_crossover",
                  "stop_threshold"});
    auto& p = cfg.evolve.params;
    if (auto v = s.strings("metrics")) cfg.evolve.metrics = *v;
    if (auto v = s.integer("k_l", 1)) p.k_l = static_cast<std::size_t>(*v);
    if (auto v = s.integer("k_u", 1)) p.k_u = static_cast<std::size_t>(*v);
    if (auto v = s.integer("generations", 0)) p.generations = static_cast<std::size_t>(*v);
    if (auto v = s.integer("targets", 1)) p.targets = static_cast<std::size_t>(*v);
    if (auto v = s.integer("population", 2)) p.population = static_cast<std::size_t>(*v);
    if (auto v = s.number("p_mutation")) p.p_mutation = *v;
    if (auto v = s.number("p_crossover")) p.p_crossover = *v;
    if (auto v = s.number("stop_threshold")) p.stop_threshold = *v;
    for (const auto& m : cfg.evolve.metrics) builtin_evaluator(m);
  }
  {
    auto s = section("fit");
    s.check_keys({"submetrics", "labels", "regressor", "folds", "groups", "reduce", "trees", "min_leaf",
                  "ridge_alpha"});
    cfg.fit.submetrics = s.path("submetrics");
    cfg.fit.labels = s.path("labels");
    if (auto v = s.str("regressor")) cfg.fit.regressor = parse_regressor_kind(*v);
    if (auto v = s.integer("folds", 2)) cfg.fit.folds = static_cast<std::size_t>(*v);
    if (auto v = s.strings("groups")) cfg.fit.groups = canonical_groups(*v);
    if (auto v = s.boolean("reduce")) cfg.fit.reduce = *v;
    if (auto v = s.integer("trees", 1)) cfg.fit.options.forest.trees = static_cast<std::size_t>(*v);
    if (auto v = s.integer("min_leaf", 1)) cfg.fit.options.forest.min_leaf = static_cast<std::size_t>(*v);
    if (auto v = s.number("ridge_alpha")) cfg.fit.options.ridge_alpha = *v;
  }
  {
    auto s = section("score");
    s.check_keys({"model", "submetrics"});
    cfg.score.model = s.path("model");
    cfg.score.submetrics = s.path("submetrics");
  }
  {
    auto s = section("plot");
    s.check_keys({"predictions"});
    cfg.plot.predictions = s.path("predictions");
  }
  return cfg;
}

// Loads the config (if any), applies overrides and computes the provenance hash.
inline RunConfig load_config(const Overrides& ov) {
  std::string text;
  fs::path base = fs::current_path();
  std::string source = "<defaults>";
  if (ov.config) {
    if (!fs::exists(*ov.config)) throw ConfigError("config file '" + ov.config->string() + "' does not exist");
    text = sdqm::detail::read_file(*ov.config);
    base = fs::absolute(*ov.config).parent_path();
    source = ov.config->string();
  }
  RunConfig cfg = parse_config(text, base, source);
  std::string salt;
  if (ov.seed) {
    cfg.seed = *ov.seed;
    salt += "\n--seed=" + std::to_string(*ov.seed);
  }
  if (ov.metrics) {
    cfg.metrics.enabled = validate_metric_list(split_list(*ov.metrics));
    salt += "\n--metrics=" + *ov.metrics;
  }
  if (ov.regressor) {
    cfg.fit.regressor = parse_regressor_kind(*ov.regressor);
    salt += "\n--regressor=" + *ov.regressor;
  }
  if (ov.out) cfg.out = *ov.out;
  cfg.evolve.params.seed = cfg.seed;
  cfg.evolve.params.validate();
  cfg.hash = hex64(fnv1a64(salt, fnv1a64(text)));
  return cfg;
}

}  // namespace sdqm::cli
