#pragma once

// Sub-metric vectors, engineered regression terms, SDQM regressor fitting,
// correlation and cross-validation.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdqm/error.hpp"
#include "sdqm/regress.hpp"
#include "sdqm/rng.hpp"

namespace sdqm {

// Every sub-component column, in CSV order.
inline const std::vector<std::string>& submetric_names() {
  static const std::vector<std::string> names = {
      "mauve",          "mauve_star",     "fi",
      "fi_star",        "alpha_precision", "beta_recall",
      "authenticity",   "separability_accuracy", "separability_params",
      "cluster_c",      "cluster_l",      "bbox_ed_aspect",
      "bbox_ed_size",   "bbox_ed_area",   "pixel_ad_red",
      "pixel_ad_green", "pixel_ad_blue",  "label_ks",
      "spatial_rmse",   "vinfo_h_y",      "vinfo_h_y_given_x",
      "vinfo_v"};
  return names;
}

inline bool is_submetric_name(std::string_view n) {
  const auto& all = submetric_names();
  return std::find(all.begin(), all.end(), n) != all.end();
}

struct SubMetricVector {
  std::string pair_id;
  std::map<std::string, double> values;  // present fields only

  void set(const std::string& name, double v) {
    if (!is_submetric_name(name)) throw ValidationError("unknown sub-metric '" + name + "'");
    if (!std::isfinite(v)) throw ValidationError("sub-metric '" + name + "' is not finite");
    values[name] = v;
  }
  std::optional<double> get(const std::string& name) const {
    auto it = values.find(name);
    if (it == values.end()) return std::nullopt;
    return it->second;
  }
  double require(const std::string& name) const {
    auto v = get(name);
    if (!v) throw ValidationError("pair '" + pair_id + "': missing required field '" + name + "'");
    return *v;
  }
};

// ---------------------------------------------------------------------------
// Feature groups and engineered terms

struct FeatureGroup {
  std::string name;
  std::vector<std::string> fields;  // sub-metric columns consumed
  bool default_on = true;
};

inline const std::vector<FeatureGroup>& feature_groups() {
  static const std::vector<FeatureGroup> groups = {
      {"mauve", {"mauve", "mauve_star"}, false},
      {"fi", {"fi_star"}, true},
      {"alpha_precision", {"alpha_precision"}, true},
      {"beta_recall", {"beta_recall"}, true},
      {"authenticity", {"authenticity"}, false},
      {"separability", {"separability_accuracy", "separability_params"}, true},
      {"clusterability", {"cluster_c", "cluster_l"}, false},
      {"bbox_match", {"bbox_ed_aspect", "bbox_ed_size", "bbox_ed_area"}, true},
      {"pixel_intensity", {"pixel_ad_green", "pixel_ad_red"}, true},
      {"label_overlap", {"label_ks"}, true},
      {"spatial", {"spatial_rmse"}, true},
      {"vinfo", {"vinfo_h_y", "vinfo_h_y_given_x", "vinfo_v"}, true},
  };
  return groups;
}

inline const FeatureGroup& feature_group(const std::string& name) {
  for (const auto& g : feature_groups())
    if (g.name == name) return g;
  throw ConfigError("unknown feature group '" + name + "'");
}

inline std::vector<std::string> default_groups() {
  std::vector<std::string> out;
  for (const auto& g : feature_groups())
    if (g.default_on) out.push_back(g.name);
  return out;
}

// Groups in canonical order, duplicates removed.
inline std::vector<std::string> canonical_groups(const std::vector<std::string>& groups) {
  std::set<std::string> wanted(groups.begin(), groups.end());
  std::vector<std::string> out;
  for (const auto& g : feature_groups())
    if (wanted.erase(g.name)) out.push_back(g.name);
  if (!wanted.empty()) throw ConfigError("unknown feature group '" + *wanted.begin() + "'");
  return out;
}

struct Term {
  std::string name;
  double value;
};

inline std::vector<Term> group_terms(const std::string& group, const SubMetricVector& v) {
  auto sq = [](const std::string& n) { return n + "^2"; };
  auto mul = [](const std::string& a, const std::string& b) { return a + "*" + b; };
  if (group == "mauve") {
    const double m = v.require("mauve"), s = v.require("mauve_star");
    return {{sq("mauve_star"), s * s}, {mul("mauve", "mauve_star"), m * s}};
  }
  if (group == "fi") return {{"fi_star", v.require("fi_star")}};
  if (group == "alpha_precision") return {{"alpha_precision", v.require("alpha_precision")}};
  if (group == "beta_recall" || group == "authenticity" || group == "spatial") {
    const std::string f = group == "spatial" ? "spatial_rmse" : group;
    const double x = v.require(f);
    return {{f, x}, {sq(f), x * x}};
  }
  if (group == "separability")
    return {{"separability_accuracy", v.require("separability_accuracy")},
            {"separability_params", v.require("separability_params")}};
  if (group == "clusterability") {
    const double c = v.require("cluster_c"), l = v.require("cluster_l");
    return {{sq("cluster_c"), c * c},
            {sq("cluster_l"), l * l},
            {mul("cluster_c", "cluster_l"), c * l},
            {"cluster_c", c},
            {"cluster_l", l}};
  }
  if (group == "bbox_match") {
    const double ar = v.require("bbox_ed_aspect"), sz = v.require("bbox_ed_size"), ar_ = v.require("bbox_ed_area");
    return {{"bbox_ed_aspect", ar},           {"bbox_ed_size", sz},          {"bbox_ed_area", ar_},
            {sq("bbox_ed_aspect"), ar * ar}, {sq("bbox_ed_size"), sz * sz}, {mul("bbox_ed_aspect", "bbox_ed_size"), ar * sz}};
  }
  if (group == "pixel_intensity") {
    const double g = v.require("pixel_ad_green"), r = v.require("pixel_ad_red");
    return {{"pixel_ad_green", g}, {sq("pixel_ad_red"), r * r}, {mul("pixel_ad_green", "pixel_ad_red"), g * r}};
  }
  if (group == "label_overlap") {
    const double k = v.require("label_ks");
    return {{sq("label_ks"), k * k}};
  }
  if (group == "vinfo") {
    const double h = v.require("vinfo_h_y"), hc = v.require("vinfo_h_y_given_x"), vi = v.require("vinfo_v");
    return {{"vinfo_h_y", h}, {"vinfo_h_y_given_x", hc}, {"vinfo_v", vi}, {mul("vinfo_v", "vinfo_h_y_given_x"), vi * hc}};
  }
  throw ConfigError("unknown feature group '" + group + "'");
}

struct FeatureRow {
  std::vector<std::string> names;
  std::vector<double> values;
};

inline FeatureRow build_feature_row(const SubMetricVector& v, const std::vector<std::string>& groups = default_groups()) {
  FeatureRow row;
  for (const auto& g : canonical_groups(groups))
    for (auto& t : group_terms(g, v)) {
      row.names.push_back(t.name);
      row.values.push_back(t.value);
    }
  return row;
}

// Sub-metric columns needed to build rows for `groups`.
inline std::vector<std::string> required_fields(const std::vector<std::string>& groups) {
  std::set<std::string> need;
  for (const auto& g : canonical_groups(groups))
    for (const auto& f : feature_group(g).fields) need.insert(f);
  std::vector<std::string> out;
  for (const auto& n : submetric_names())
    if (need.count(n)) out.push_back(n);
  return out;
}

// ---------------------------------------------------------------------------
// Sub-metric CSV

inline std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string s(buf);
  if (s == "-0.000000") s = "0.000000";
  return s;
}

inline std::string submetric_csv_header(const std::vector<std::string>& columns) {
  std::string h = "pair_id";
  for (const auto& c : columns) h += "," + c;
  return h + "\n";
}

inline std::string submetric_csv_row(const SubMetricVector& v, const std::vector<std::string>& columns) {
  std::string line = v.pair_id;
  for (const auto& c : columns) {
    line += ",";
    if (auto x = v.get(c)) line += format_value(*x);
  }
  return line + "\n";
}

struct SubMetricTable {
  std::vector<std::string> columns;  // excluding pair_id
  std::vector<SubMetricVector> rows;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

inline double parse_double(const std::string& s, const std::string& where) {
  std::size_t used = 0;
  double v;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ParseError(where + ": '" + s + "' is not a number");
  }
  if (used != s.size() || !std::isfinite(v)) throw ParseError(where + ": '" + s + "' is not a finite number");
  return v;
}

}  // namespace detail

// Header must start with pair_id; unknown columns are kept in `columns` so
// callers can report them, but are not loaded into the vectors.
inline SubMetricTable parse_submetric_csv(std::string_view text, const std::string& source = "<memory>") {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source + ": empty CSV");
  auto header = detail::split_csv_line(line);
  if (header.empty() || header[0] != "pair_id") throw ParseError(source + ": first column must be pair_id");
  SubMetricTable t;
  t.columns.assign(header.begin() + 1, header.end());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = detail::split_csv_line(line);
    const auto where = source + ": line " + std::to_string(line_no);
    if (cells.size() != header.size())
      throw ParseError(where + ": expected " + std::to_string(header.size()) + " fields, got " +
                       std::to_string(cells.size()));
    SubMetricVector v;
    v.pair_id = cells[0];
    for (std::size_t i = 1; i < cells.size(); ++i)
      if (!cells[i].empty() && is_submetric_name(header[i]))
        v.set(header[i], detail::parse_double(cells[i], where + ", column " + header[i]));
    t.rows.push_back(std::move(v));
  }
  return t;
}

// Two-column label file: pair_id,<label>.
inline std::map<std::string, double> parse_labels_csv(std::string_view text, const std::string& source = "<memory>") {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source + ": empty label file");
  auto header = detail::split_csv_line(line);
  if (header.size() != 2 || header[0] != "pair_id") throw ParseError(source + ": header must be pair_id,<label>");
  std::map<std::string, double> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = detail::split_csv_line(line);
    const auto where = source + ": line " + std::to_string(line_no);
    if (cells.size() != 2) throw ParseError(where + ": expected 2 fields");
    if (!out.emplace(cells[0], detail::parse_double(cells[1], where)).second)
      throw ValidationError(where + ": duplicate pair_id '" + cells[0] + "'");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Correlation

struct Correlation {
  double pearson = 0;
  double spearman = 0;
};

inline double pearson(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ComputeError("correlation: length mismatch");
  if (a.size() < 3) throw ComputeError("correlation: need at least 3 points");
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= n;
  mb /= n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (!(saa > 0) || !(sbb > 0)) throw ComputeError("correlation: zero variance");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

// 1-based ranks, ties share their average rank.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> order(v.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> rank(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = r;
    i = j + 1;
  }
  return rank;
}

inline double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ComputeError("correlation: length mismatch");
  return pearson(average_ranks(a), average_ranks(b));
}

inline Correlation correlation(const std::vector<double>& predictions, const std::vector<double>& labels) {
  return {pearson(predictions, labels), spearman(predictions, labels)};
}

// ---------------------------------------------------------------------------
// Regressor model

enum class RegressorKind { random_forest, linear, ridge };

inline std::string to_string(RegressorKind k) {
  switch (k) {
    case RegressorKind::random_forest: return "random_forest";
    case RegressorKind::linear: return "linear";
    case RegressorKind::ridge: return "ridge";
  }
  return "?";
}

inline RegressorKind parse_regressor_kind(const std::string& s) {
  if (s == "rf" || s == "random_forest") return RegressorKind::random_forest;
  if (s == "linear") return RegressorKind::linear;
  if (s == "ridge") return RegressorKind::ridge;
  throw ConfigError("unknown regressor '" + s + "' (rf, linear, ridge)");
}

struct FitOptions {
  ForestOptions forest;
  double ridge_alpha = 1.0;
};

struct RegressorModel {
  RegressorKind kind = RegressorKind::random_forest;
  std::vector<std::string> features;  // term names
  std::vector<std::string> groups;
  std::uint64_t seed = 0;
  std::size_t folds = 0;
  double label_min = 0, label_max = 0;
  RandomForest forest;
  LinearModel linear;

  double predict(const std::vector<double>& x) const {
    if (x.size() != features.size())
      throw ConfigError("model expects " + std::to_string(features.size()) + " features, got " +
                        std::to_string(x.size()));
    return kind == RegressorKind::random_forest ? forest.predict(x) : linear.predict(x);
  }
};

// No row-count or label-range checks; used inside cross-validation.
inline RegressorModel fit_model(const Matrix& X, const std::vector<double>& y, RegressorKind kind, std::uint64_t seed,
                                const FitOptions& opt = {}) {
  detail::check_design(X, y);
  RegressorModel m;
  m.kind = kind;
  m.seed = seed;
  m.label_min = *std::min_element(y.begin(), y.end());
  m.label_max = *std::max_element(y.begin(), y.end());
  switch (kind) {
    case RegressorKind::random_forest: m.forest = RandomForest::fit(X, y, seed, opt.forest); break;
    case RegressorKind::linear: m.linear = fit_linear(X, y); break;
    case RegressorKind::ridge: m.linear = fit_ridge(X, y, opt.ridge_alpha); break;
  }
  m.features.resize(X[0].size());
  for (std::size_t i = 0; i < m.features.size(); ++i) m.features[i] = "x" + std::to_string(i);
  return m;
}

inline constexpr std::size_t kMinFitRows = 10;

// Fits on engineered rows; labels are mAP50 values in [0,1].
inline RegressorModel fit(const std::vector<FeatureRow>& rows, const std::vector<double>& labels, RegressorKind kind,
                          std::uint64_t seed, const std::vector<std::string>& groups = default_groups(),
                          const FitOptions& opt = {}) {
  if (rows.size() < kMinFitRows)
    throw ComputeError("fit: need at least " + std::to_string(kMinFitRows) + " rows, got " +
                       std::to_string(rows.size()));
  for (double l : labels)
    if (!(l >= 0.0 && l <= 1.0)) throw ValidationError("fit: label " + format_value(l) + " outside [0,1]");
  Matrix X;
  for (const auto& r : rows) {
    if (r.names != rows[0].names) throw ValidationError("fit: rows have different feature schemas");
    X.push_back(r.values);
  }
  auto m = fit_model(X, labels, kind, seed, opt);
  m.features = rows[0].names;
  m.groups = canonical_groups(groups);
  return m;
}

inline double predict_sdqm(const RegressorModel& model, const SubMetricVector& v) {
  const auto row = build_feature_row(v, model.groups);
  if (row.names != model.features) throw ConfigError("predict: feature schema differs from the model's");
  return model.predict(row.values);
}

// ---------------------------------------------------------------------------
// Model serialization

inline nlohmann::ordered_json tree_to_json(const RegressionTree& t, int node = 0) {
  const auto& n = t.nodes[node];
  nlohmann::ordered_json j;
  if (n.feature < 0) {
    j["value"] = n.value;
    return j;
  }
  j["feature"] = n.feature;
  j["threshold"] = n.threshold;
  j["left"] = tree_to_json(t, n.left);
  j["right"] = tree_to_json(t, n.right);
  return j;
}

inline int tree_from_json(const nlohmann::json& j, RegressionTree& t, std::size_t features, int depth = 0) {
  if (depth > 10000) throw ParseError("model: tree too deep");
  const int id = static_cast<int>(t.nodes.size());
  t.nodes.emplace_back();
  if (j.contains("value")) {
    t.nodes[id].value = j.at("value").get<double>();
    return id;
  }
  const int f = j.at("feature").get<int>();
  if (f < 0 || static_cast<std::size_t>(f) >= features) throw ParseError("model: split feature out of range");
  t.nodes[id].feature = f;
  t.nodes[id].threshold = j.at("threshold").get<double>();
  const int l = tree_from_json(j.at("left"), t, features, depth + 1);
  t.nodes[id].left = l;
  const int r = tree_from_json(j.at("right"), t, features, depth + 1);
  t.nodes[id].right = r;
  return id;
}

inline std::string model_to_json(const RegressorModel& m) {
  nlohmann::ordered_json j;
  j["format"] = "sdqm-regressor";
  j["version"] = 1;
  j["kind"] = to_string(m.kind);
  j["features"] = m.features;
  j["groups"] = m.groups;
  j["seed"] = m.seed;
  j["folds"] = m.folds;
  j["label_range"] = {m.label_min, m.label_max};
  if (m.kind == RegressorKind::random_forest) {
    auto trees = nlohmann::ordered_json::array();
    for (const auto& t : m.forest.trees) trees.push_back(tree_to_json(t));
    j["forest"] = {{"trees", trees}};
  } else {
    j["linear"] = {{"intercept", m.linear.intercept}, {"coefficients", m.linear.coefficients}};
  }
  return j.dump(1) + "\n";
}

inline RegressorModel model_from_json(std::string_view text, const std::string& source = "<memory>") {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(source + ": " + e.what());
  }
  try {
    if (j.at("format") != "sdqm-regressor") throw ParseError(source + ": not an sdqm-regressor file");
    if (j.at("version") != 1) throw ParseError(source + ": unsupported model version");
    RegressorModel m;
    m.kind = parse_regressor_kind(j.at("kind").get<std::string>());
    m.features = j.at("features").get<std::vector<std::string>>();
    m.groups = j.at("groups").get<std::vector<std::string>>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.folds = j.at("folds").get<std::size_t>();
    m.label_min = j.at("label_range").at(0).get<double>();
    m.label_max = j.at("label_range").at(1).get<double>();
    if (m.kind == RegressorKind::random_forest) {
      for (const auto& t : j.at("forest").at("trees")) {
        RegressionTree tree;
        tree_from_json(t, tree, m.features.size());
        m.forest.trees.push_back(std::move(tree));
      }
      if (m.forest.trees.empty()) throw ParseError(source + ": forest has no trees");
    } else {
      m.linear.intercept = j.at("linear").at("intercept").get<double>();
      m.linear.coefficients = j.at("linear").at("coefficients").get<std::vector<double>>();
      if (m.linear.coefficients.size() != m.features.size())
        throw ParseError(source + ": coefficient count differs from feature count");
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(source + ": malformed model: " + e.what());
  } catch (const ConfigError& e) {
    throw ParseError(source + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Cross-validation

struct FoldResult {
  std::size_t size = 0;
  std::optional<Correlation> corr;  // absent when the fold is too small or constant
};

struct KFoldReport {
  std::size_t k = 0;
  std::vector<FoldResult> folds;
  double mean_pearson = 0, sd_pearson = 0;
  double mean_spearman = 0, sd_spearman = 0;
  std::optional<Correlation> pooled;  // over all out-of-fold predictions
  std::vector<double> predictions;    // out-of-fold, in input row order
};

namespace detail {

inline std::pair<double, double> mean_sd(const std::vector<double>& v) {
  if (v.empty()) return {std::nan(""), std::nan("")};
  double m = 0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  if (v.size() < 2) return {m, 0.0};
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return {m, std::sqrt(s / static_cast<double>(v.size() - 1))};
}

inline std::optional<Correlation> try_correlation(const std::vector<double>& p, const std::vector<double>& y) {
  try {
    return correlation(p, y);
  } catch (const ComputeError&) {
    return std::nullopt;
  }
}

}  // namespace detail

inline KFoldReport kfold_evaluate(const Matrix& X, const std::vector<double>& y, std::size_t k, RegressorKind kind,
                                  std::uint64_t seed, const FitOptions& opt = {}) {
  detail::check_design(X, y);
  if (k < 2) throw ComputeError("kfold: k must be at least 2");
  if (k > X.size())
    throw ComputeError("kfold: k=" + std::to_string(k) + " exceeds row count " + std::to_string(X.size()));
  std::vector<std::size_t> order(X.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(derive_seed(seed, 0x6b666f6cULL));
  rng.shuffle(order);

  KFoldReport rep;
  rep.k = k;
  rep.predictions.assign(X.size(), 0.0);
  rep.folds.resize(k);
  std::vector<double> ps, ss;
  const std::size_t n = X.size();
  for (std::size_t f = 0; f < k; ++f) {
    const std::size_t lo = f * n / k, hi = (f + 1) * n / k;
    Matrix Xtr;
    std::vector<double> ytr, pred, truth;
    for (std::size_t i = 0; i < n; ++i)
      if (i < lo || i >= hi) {
        Xtr.push_back(X[order[i]]);
        ytr.push_back(y[order[i]]);
      }
    const auto model = fit_model(Xtr, ytr, kind, derive_seed(seed, f + 1), opt);
    for (std::size_t i = lo; i < hi; ++i) {
      const double p = model.predict(X[order[i]]);
      rep.predictions[order[i]] = p;
      pred.push_back(p);
      truth.push_back(y[order[i]]);
    }
    rep.folds[f].size = hi - lo;
    rep.folds[f].corr = detail::try_correlation(pred, truth);
    if (rep.folds[f].corr) {
      ps.push_back(rep.folds[f].corr->pearson);
      ss.push_back(rep.folds[f].corr->spearman);
    }
  }
  std::tie(rep.mean_pearson, rep.sd_pearson) = detail::mean_sd(ps);
  std::tie(rep.mean_spearman, rep.sd_spearman) = detail::mean_sd(ss);
  rep.pooled = detail::try_correlation(rep.predictions, y);
  return rep;
}

// ---------------------------------------------------------------------------
// Backward feature reduction

inline constexpr double kReductionTolerance = 0.01;
inline constexpr std::size_t kReductionFolds = 5;
inline constexpr std::size_t kMinReductionRows = 20;

struct ReductionStep {
  std::string removed;
  double pearson_before = 0;
  double pearson_after = 0;
};

struct ReductionResult {
  std::vector<std::string> retained;
  std::vector<ReductionStep> steps;  // removal order
  double final_pearson = 0;
};

// Cross-validated (pooled out-of-fold) Pearson of a linear fit on `groups`.
inline double cv_pearson(const std::vector<SubMetricVector>& rows, const std::vector<double>& labels,
                         const std::vector<std::string>& groups, std::uint64_t seed) {
  Matrix X;
  for (const auto& r : rows) X.push_back(build_feature_row(r, groups).values);
  const auto rep = kfold_evaluate(X, labels, kReductionFolds, RegressorKind::linear, seed);
  return rep.pooled ? rep.pooled->pearson : 0.0;
}

// Greedy backward elimination over feature groups: at each step drop the group
// whose removal leaves the highest CV Pearson, unless that still costs more
// than the tolerance.
inline ReductionResult backward_feature_reduction(const std::vector<SubMetricVector>& rows,
                                                  const std::vector<double>& labels,
                                                  const std::vector<std::string>& groups, std::uint64_t seed,
                                                  double tolerance = kReductionTolerance) {
  if (rows.size() < kMinReductionRows)
    throw ComputeError("backward_feature_reduction: need at least " + std::to_string(kMinReductionRows) +
                       " rows, got " + std::to_string(rows.size()));
  if (rows.size() != labels.size()) throw ComputeError("backward_feature_reduction: label count differs");
  ReductionResult res;
  res.retained = canonical_groups(groups);
  double current = cv_pearson(rows, labels, res.retained, seed);
  while (res.retained.size() > 1) {
    std::size_t best = 0;
    double best_r = -2;
    for (std::size_t i = 0; i < res.retained.size(); ++i) {
      auto trial = res.retained;
      trial.erase(trial.begin() + static_cast<std::ptrdiff_t>(i));
      const double r = cv_pearson(rows, labels, trial, seed);
      if (r > best_r) {
        best_r = r;
        best = i;
      }
    }
    if (current - best_r > tolerance) break;
    res.steps.push_back({res.retained[best], current, best_r});
    res.retained.erase(res.retained.begin() + static_cast<std::ptrdiff_t>(best));
    current = best_r;
  }
  res.final_pearson = current;
  return res;
}

}  // namespace sdqm
