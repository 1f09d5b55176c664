#pragma once

// Subcommand implementations. Each returns a process exit code:
// 0 ok, 1 computation/loader error, 2 config or schema error.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdqm/cli/config.hpp"
#include "sdqm/sdqm.hpp"

namespace sdqm::cli {

using ojson = nlohmann::ordered_json;

// Value rounded to the 6-decimal text form used in every output file.
inline double rounded(double v) { return std::stod(format_value(v)); }

inline ojson measures_json(const MeasureRow& row) {
  ojson j = ojson::object();
  for (const auto& [m, v] : row.values) j[to_string(m)] = v ? ojson(rounded(*v)) : ojson(nullptr);
  return j;
}

inline void write_text(const fs::path& p, const std::string& s) { sdqm::detail::write_file(p, s); }

// ---------------------------------------------------------------------------
// Shared, lazily loaded inputs

template <typename T>
class Lazy {
 public:
  explicit Lazy(std::function<T()> make) : make_(std::move(make)) {}

  const T& get() {
    std::call_once(once_, [&] {
      try {
        value_.emplace(make_());
      } catch (...) {
        error_ = std::current_exception();
      }
    });
    if (error_) std::rethrow_exception(error_);
    return *value_;
  }

 private:
  std::function<T()> make_;
  std::once_flag once_;
  std::optional<T> value_;
  std::exception_ptr error_;
};

inline fs::path need(const std::optional<fs::path>& p, const std::string& key, const std::string& group) {
  if (!p) throw ConfigError(key + " is not configured (needed by " + group + ")");
  return *p;
}

struct Inputs {
  const RunConfig& cfg;
  Lazy<EmbeddingSet> real_emb{[this] { return load_embeddings(*cfg.pair.real.embeddings); }};
  Lazy<EmbeddingSet> synth_emb{[this] { return load_embeddings(*cfg.pair.synthetic.embeddings); }};
  Lazy<AnnotationSet> real_ann{[this] { return load_annotations(*cfg.pair.real.annotations); }};
  Lazy<AnnotationSet> synth_ann{[this] {
    auto raw = load_annotations(*cfg.pair.synthetic.annotations);
    if (!cfg.pair.category_map) return raw;
    return apply_category_map(raw, real_ann.get(), load_category_map(*cfg.pair.category_map));
  }};
  Lazy<PixelHistograms> real_px{[this] { return pixel_histograms(*cfg.pair.real.images); }};
  Lazy<PixelHistograms> synth_px{[this] { return pixel_histograms(*cfg.pair.synthetic.images); }};
  Lazy<DetectionLog> predictive{[this] { return load_detection_log(*cfg.pair.predictive_log); }};
  Lazy<DetectionLog> conditional{[this] { return load_detection_log(*cfg.pair.conditional_log); }};

  explicit Inputs(const RunConfig& c) : cfg(c) {}
};

// Fails fast (config error) when a group's inputs are not configured.
inline void check_group_inputs(const RunConfig& cfg, const std::string& g) {
  const auto& p = cfg.pair;
  if (g == "frontier" || g == "precision_recall" || g == "separability" || g == "clusterability") {
    need(p.real.embeddings, "real.embeddings", g);
    need(p.synthetic.embeddings, "synthetic.embeddings", g);
  } else if (g == "bbox_match" || g == "label_overlap" || g == "spatial") {
    need(p.real.annotations, "real.annotations", g);
    need(p.synthetic.annotations, "synthetic.annotations", g);
  } else if (g == "pixel_intensity") {
    need(p.real.images, "real.images", g);
    need(p.synthetic.images, "synthetic.images", g);
  } else if (g == "vinfo") {
    need(p.predictive_log, "detection.predictive", g);
    need(p.conditional_log, "detection.conditional", g);
  }
}

// ---------------------------------------------------------------------------
// submetrics

struct GroupResult {
  std::string name;
  bool ok = false;
  std::string error;
  std::vector<std::pair<std::string, double>> values;
  ojson details = ojson::object();
  std::vector<std::string> warnings;
  std::vector<std::string> artifacts;
  double seconds = 0;

  void put(const std::string& column, double v) { values.emplace_back(column, v); }
};

inline void compute_group(GroupResult& r, Inputs& in, const RunConfig& cfg) {
  const auto& g = r.name;
  const auto& m = cfg.metrics;
  if (g == "frontier") {
    const auto& a = in.real_emb.get();
    const auto& b = in.synth_emb.get();
    const std::size_t k = m.quantization_k ? m.quantization_k : default_quantization_k(a.size() + b.size());
    const auto qp = quantize(a, b, k, derive_seed(cfg.seed, 1));
    const auto s = frontier_scores(qp);
    r.put("mauve", s.mauve);
    r.put("mauve_star", s.mauve_star);
    r.put("fi", s.fi);
    r.put("fi_star", s.fi_star);
    r.details = {{"clusters", qp.k}, {"requested_clusters", qp.requested_k}, {"scaling", kMauveScaling}};
    if (qp.reduced())
      r.warnings.push_back("frontier: quantization produced " + std::to_string(qp.k) + " of " +
                           std::to_string(qp.requested_k) + " clusters");
  } else if (g == "precision_recall") {
    const auto s = precision_recall_authenticity(in.real_emb.get(), in.synth_emb.get());
    r.put("alpha_precision", s.alpha_precision);
    r.put("beta_recall", s.beta_recall);
    r.put("authenticity", s.authenticity);
  } else if (g == "separability") {
    const auto s = separability(in.real_emb.get(), in.synth_emb.get(), derive_seed(cfg.seed, 2));
    r.put("separability_accuracy", s.accuracy);
    r.put("separability_params", static_cast<double>(s.param_count));
    r.details = {{"architecture", s.architecture}};
  } else if (g == "clusterability") {
    const auto s = log_cluster(in.real_emb.get(), in.synth_emb.get(), m.cluster_k, derive_seed(cfg.seed, 3));
    r.put("cluster_c", s.mean_square);
    r.put("cluster_l", s.log_value);
    r.details = {{"clusters", s.k}, {"requested_clusters", s.requested_k}};
    if (s.k < s.requested_k)
      r.warnings.push_back("clusterability: " + std::to_string(s.requested_k - s.k) + " empty clusters excluded");
  } else if (g == "bbox_match") {
    const auto s = bbox_match(in.real_ann.get(), in.synth_ann.get());
    r.put("bbox_ed_aspect", s.ed_aspect());
    r.put("bbox_ed_size", s.ed_size());
    r.put("bbox_ed_area", s.ed_area());
    r.details = {{"aspect_ratio", measures_json(s.aspect_ratio)},
                 {"size", measures_json(s.size)},
                 {"area", measures_json(s.area)}};
  } else if (g == "pixel_intensity") {
    const auto& a = in.real_px.get();
    const auto& b = in.synth_px.get();
    const auto s = pixel_intensity_match(a, b);
    r.put("pixel_ad_red", s.ad_red());
    r.put("pixel_ad_green", s.ad_green());
    r.put("pixel_ad_blue", s.ad_blue());
    r.details = {{"red", measures_json(s.channels[0])},
                 {"green", measures_json(s.channels[1])},
                 {"blue", measures_json(s.channels[2])},
                 {"real_images", a.images},
                 {"synthetic_images", b.images}};
    if (a.skipped) r.warnings.push_back("pixel_intensity: skipped " + std::to_string(a.skipped) + " undecodable real files");
    if (b.skipped)
      r.warnings.push_back("pixel_intensity: skipped " + std::to_string(b.skipped) + " undecodable synthetic files");
    save_pixel_histograms(cfg.out / "pixels_real.sdqm", a);
    save_pixel_histograms(cfg.out / "pixels_synthetic.sdqm", b);
    r.artifacts = {"pixels_real.sdqm", "pixels_synthetic.sdqm"};
  } else if (g == "label_overlap") {
    const auto s = label_overlap(in.real_ann.get(), in.synth_ann.get(), m.metadata_keys);
    r.put("label_ks", s.ks);
    r.details = {{"measures", measures_json(s.measures)}, {"keys", s.keys}};
    if (s.no_shared_categories) r.warnings.push_back("label_overlap: no shared categories; K-S set to 1");
  } else if (g == "spatial") {
    const auto a = build_heatmap(in.real_ann.get(), m.heatmap_size, m.heatmap_size);
    const auto b = build_heatmap(in.synth_ann.get(), m.heatmap_size, m.heatmap_size);
    r.put("spatial_rmse", spatial_distribution_difference(a, b));
    r.details = {{"working_size", m.heatmap_size}, {"pooled_width", a.width}, {"pooled_height", a.height}};
    save_heatmap(cfg.out / "heatmap_real.sdqm", a);
    save_heatmap(cfg.out / "heatmap_synthetic.sdqm", b);
    r.artifacts = {"heatmap_real.sdqm", "heatmap_synthetic.sdqm"};
  } else if (g == "vinfo") {
    const auto s = v_information(in.predictive.get(), in.conditional.get(), m.entropy_eps);
    r.put("vinfo_h_y", s.h_y);
    r.put("vinfo_h_y_given_x", s.h_y_given_x);
    r.put("vinfo_v", s.v_information);
  } else {
    throw ConfigError("unknown metric group '" + g + "'");
  }
}

struct SubmetricsOutcome {
  SubMetricVector vector;
  std::vector<GroupResult> groups;
  std::vector<std::string> warnings;
  bool partial = false;
};

inline SubmetricsOutcome compute_submetrics(const RunConfig& cfg) {
  for (const auto& g : cfg.metrics.enabled) check_group_inputs(cfg, g);
  fs::create_directories(cfg.out);
  Inputs in(cfg);
  SubmetricsOutcome out;
  out.groups.resize(cfg.metrics.enabled.size());
  parallel_for(out.groups.size(), [&](std::size_t i) {
    auto& r = out.groups[i];
    r.name = cfg.metrics.enabled[i];
    const auto t0 = std::chrono::steady_clock::now();
    try {
      compute_group(r, in, cfg);
      r.ok = true;
    } catch (const std::exception& e) {
      r.ok = false;
      r.values.clear();
      r.error = e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  });

  // Loader-level warnings, in fixed order.
  auto clamp_note = [&](Lazy<AnnotationSet>& a, const char* side) {
    try {
      if (const auto n = a.get().clamp_warnings)
        out.warnings.push_back(std::string(side) + " annotations: " + std::to_string(n) + " boxes clamped to image bounds");
    } catch (const std::exception&) {
    }
  };
  const bool uses_ann = std::any_of(out.groups.begin(), out.groups.end(), [](const GroupResult& g) {
    return g.name == "bbox_match" || g.name == "label_overlap" || g.name == "spatial";
  });
  if (uses_ann) {
    clamp_note(in.real_ann, "real");
    clamp_note(in.synth_ann, "synthetic");
  }
  out.vector.pair_id = cfg.metrics.pair_id;
  for (const auto& g : out.groups) {
    for (const auto& w : g.warnings) out.warnings.push_back(w);
    if (!g.ok) {
      out.partial = true;
      out.warnings.push_back(g.name + ": failed: " + g.error);
    }
    for (const auto& [k, v] : g.values) out.vector.set(k, v);
  }
  return out;
}

inline std::vector<std::string> enabled_columns(const std::vector<std::string>& groups) {
  std::set<std::string> cols;
  for (const auto& g : groups)
    for (const auto& c : group_columns(g)) cols.insert(c);
  std::vector<std::string> out;
  for (const auto& n : submetric_names())
    if (cols.count(n)) out.push_back(n);
  return out;
}

inline std::string render_text_report(const SubmetricsOutcome& o, const RunConfig& cfg) {
  std::ostringstream s;
  s << "SDQM sub-metric report\n";
  s << "pair_id      " << o.vector.pair_id << "\n";
  s << "config_hash  " << cfg.hash << "\n";
  s << "status       " << (o.partial ? "PARTIAL" : "complete") << "\n\n";
  for (const auto& g : o.groups) {
    s << "[" << g.name << "] " << (g.ok ? "ok" : "FAILED: " + g.error) << "\n";
    for (const auto& [k, v] : g.values) {
      char line[128];
      std::snprintf(line, sizeof line, "  %-24s %s\n", k.c_str(), format_value(v).c_str());
      s << line;
    }
  }
  if (!o.warnings.empty()) {
    s << "\nwarnings\n";
    for (const auto& w : o.warnings) s << "  - " << w << "\n";
  }
  return s.str();
}

inline int cmd_submetrics(const RunConfig& cfg, std::ostream& log = std::cerr) {
  const auto o = compute_submetrics(cfg);
  const auto columns = enabled_columns(cfg.metrics.enabled);
  write_text(cfg.out / "submetrics.csv", submetric_csv_header(columns) + submetric_csv_row(o.vector, columns));

  ojson rep;
  rep["config_hash"] = cfg.hash;
  rep["pair_id"] = o.vector.pair_id;
  rep["seed"] = cfg.seed;
  rep["partial"] = o.partial;
  ojson groups = ojson::object();
  ojson timings = ojson::object();
  for (const auto& g : o.groups) {
    ojson j;
    j["status"] = g.ok ? "ok" : "error";
    if (!g.ok) j["error"] = g.error;
    ojson vals = ojson::object();
    for (const auto& [k, v] : g.values) vals[k] = rounded(v);
    j["values"] = vals;
    j["details"] = g.details;
    j["warnings"] = g.warnings;
    j["artifacts"] = g.artifacts;
    groups[g.name] = j;
    timings[g.name] = g.seconds;
  }
  rep["groups"] = groups;
  rep["warnings"] = o.warnings;
  write_text(cfg.out / "report.json", rep.dump(2) + "\n");
  write_text(cfg.out / "report.txt", render_text_report(o, cfg));
  write_text(cfg.out / "timings.json", ojson{{"config_hash", cfg.hash}, {"seconds", timings}}.dump(2) + "\n");

  for (const auto& w : o.warnings) log << "warning: " << w << "\n";
  if (o.partial) {
    for (const auto& g : o.groups)
      if (!g.ok) log << "error: metric '" << g.name << "' failed: " << g.error << "\n";
    return 1;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// evolve

inline int cmd_evolve(const RunConfig& cfg, std::ostream& log = std::cerr) {
  need(cfg.pair.real.embeddings, "real.embeddings", "evolve");
  need(cfg.pair.synthetic.embeddings, "synthetic.embeddings", "evolve");
  std::vector<MetricEvaluator> metrics;
  for (const auto& m : cfg.evolve.metrics) metrics.push_back(builtin_evaluator(m));
  const auto pool = make_pool(load_embeddings(*cfg.pair.real.embeddings), load_embeddings(*cfg.pair.synthetic.embeddings));
  fs::create_directories(cfg.out);
  const auto results = run_sweep(pool, metrics, cfg.evolve.params, [&](const GenerationProgress& p) {
    log << "evolve " << p.metric << " target=" << format_value(p.target) << " gen=" << p.generation
        << " best=" << format_value(p.best_fitness) << "\n";
  });
  std::string jsonl;
  std::size_t converged = 0;
  for (const auto& r : results) {
    jsonl += sweep_result_jsonl(r, pool);
    converged += r.converged;
  }
  write_text(cfg.out / "subsets.jsonl", jsonl);
  log << "evolve: " << converged << "/" << results.size() << " targets converged\n";
  return 0;
}

// ---------------------------------------------------------------------------
// fit

struct LabeledTable {
  std::vector<SubMetricVector> rows;
  std::vector<double> labels;
};

inline LabeledTable load_labeled_table(const fs::path& table, const fs::path& labels) {
  const auto t = parse_submetric_csv(sdqm::detail::read_file(table), table.string());
  const auto l = parse_labels_csv(sdqm::detail::read_file(labels), labels.string());
  LabeledTable out;
  for (const auto& r : t.rows) {
    auto it = l.find(r.pair_id);
    if (it == l.end()) throw ValidationError(labels.string() + ": no label for pair '" + r.pair_id + "'");
    out.rows.push_back(r);
    out.labels.push_back(it->second);
  }
  return out;
}

inline ojson correlation_json(const std::optional<Correlation>& c) {
  if (!c) return nullptr;
  return {{"pearson", rounded(c->pearson)}, {"spearman", rounded(c->spearman)}};
}

inline ojson kfold_json(const KFoldReport& r) {
  ojson folds = ojson::array();
  for (const auto& f : r.folds) folds.push_back({{"size", f.size}, {"correlation", correlation_json(f.corr)}});
  return {{"k", r.k},
          {"mean_pearson", rounded(r.mean_pearson)},
          {"sd_pearson", rounded(r.sd_pearson)},
          {"mean_spearman", rounded(r.mean_spearman)},
          {"sd_spearman", rounded(r.sd_spearman)},
          {"pooled", correlation_json(r.pooled)},
          {"folds", folds}};
}

inline int cmd_fit(const RunConfig& cfg, std::ostream& log = std::cerr) {
  const auto data = load_labeled_table(need(cfg.fit.submetrics, "fit.submetrics", "fit"),
                                       need(cfg.fit.labels, "fit.labels", "fit"));
  auto groups = cfg.fit.groups;
  ojson reduction = nullptr;
  if (cfg.fit.reduce) {
    const auto red = backward_feature_reduction(data.rows, data.labels, groups, cfg.seed);
    groups = red.retained;
    ojson steps = ojson::array();
    for (const auto& s : red.steps)
      steps.push_back({{"removed", s.removed},
                       {"pearson_before", rounded(s.pearson_before)},
                       {"pearson_after", rounded(s.pearson_after)}});
    reduction = {{"retained", red.retained}, {"steps", steps}, {"final_pearson", rounded(red.final_pearson)}};
  }
  std::vector<FeatureRow> rows;
  Matrix X;
  for (const auto& r : data.rows) {
    rows.push_back(build_feature_row(r, groups));
    X.push_back(rows.back().values);
  }
  auto model = fit(rows, data.labels, cfg.fit.regressor, cfg.seed, groups, cfg.fit.options);
  const auto kf = kfold_evaluate(X, data.labels, cfg.fit.folds, cfg.fit.regressor, cfg.seed, cfg.fit.options);
  model.folds = cfg.fit.folds;

  fs::create_directories(cfg.out);
  write_text(cfg.out / "model.json", model_to_json(model));
  ojson rep;
  rep["config_hash"] = cfg.hash;
  rep["kind"] = to_string(model.kind);
  rep["rows"] = rows.size();
  rep["groups"] = groups;
  rep["features"] = model.features;
  rep["kfold"] = kfold_json(kf);
  rep["reduction"] = reduction;
  write_text(cfg.out / "fit_report.json", rep.dump(2) + "\n");
  std::string csv = "pair_id,prediction,label\n";
  for (std::size_t i = 0; i < data.rows.size(); ++i)
    csv += data.rows[i].pair_id + "," + format_value(kf.predictions[i]) + "," + format_value(data.labels[i]) + "\n";
  write_text(cfg.out / "predictions.csv", csv);
  log << "fit: " << to_string(model.kind) << " on " << rows.size() << " rows; " << kf.k
      << "-fold pearson=" << format_value(kf.mean_pearson) << " sd=" << format_value(kf.sd_pearson) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// score

struct SchemaDiff {
  std::vector<std::string> missing;
  std::vector<std::string> unexpected;
  bool empty() const { return missing.empty() && unexpected.empty(); }
};

inline SchemaDiff schema_diff(const std::vector<std::string>& required, const std::vector<std::string>& header) {
  SchemaDiff d;
  const std::set<std::string> have(header.begin(), header.end());
  for (const auto& r : required)
    if (!have.count(r)) d.missing.push_back(r);
  for (const auto& h : header)
    if (!is_submetric_name(h)) d.unexpected.push_back(h);
  return d;
}

inline int cmd_score(const RunConfig& cfg, std::ostream& out = std::cout, std::ostream& log = std::cerr) {
  const auto model_path = need(cfg.score.model, "score.model", "score");
  const auto table_path = need(cfg.score.submetrics, "score.submetrics", "score");
  const auto model = model_from_json(sdqm::detail::read_file(model_path), model_path.string());
  const auto table = parse_submetric_csv(sdqm::detail::read_file(table_path), table_path.string());
  const auto diff = schema_diff(required_fields(model.groups), table.columns);
  if (!diff.empty()) {
    log << "schema mismatch between " << table_path.string() << " and model " << model_path.string() << "\n";
    for (const auto& m : diff.missing) log << "  - missing column: " << m << "\n";
    for (const auto& u : diff.unexpected) log << "  + unexpected column: " << u << "\n";
    return 2;
  }
  ojson scores = ojson::array();
  for (const auto& r : table.rows) {
    const double s = predict_sdqm(model, r);
    scores.push_back({{"pair_id", r.pair_id}, {"sdqm", rounded(s)}});
    out << r.pair_id << " " << format_value(s) << "\n";
  }
  fs::create_directories(cfg.out);
  write_text(cfg.out / "score.json",
             ojson{{"config_hash", cfg.hash}, {"model_kind", to_string(model.kind)}, {"scores", scores}}.dump(2) + "\n");
  return 0;
}

// ---------------------------------------------------------------------------
// plot

struct PlotData {
  std::vector<std::string> ids;
  std::vector<double> predictions;
  std::vector<double> labels;
};

inline PlotData make_plot_data(std::vector<std::string> ids, std::vector<double> predictions,
                               std::vector<double> labels) {
  if (predictions.empty()) throw ComputeError("plot: no data points");
  if (predictions.size() != labels.size() || ids.size() != labels.size())
    throw ComputeError("plot: " + std::to_string(predictions.size()) + " predictions but " +
                       std::to_string(labels.size()) + " labels");
  return {std::move(ids), std::move(predictions), std::move(labels)};
}

inline PlotData parse_predictions_csv(std::string_view text, const std::string& source) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw ComputeError(source + ": empty predictions file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "pair_id,prediction,label") throw ParseError(source + ": header must be pair_id,prediction,label");
  std::vector<std::string> ids;
  std::vector<double> p, l;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto cells = sdqm::detail::split_csv_line(line);
    const auto where = source + ": line " + std::to_string(n);
    if (cells.size() != 3) throw ComputeError(where + ": expected prediction and label (length mismatch)");
    ids.push_back(cells[0]);
    p.push_back(sdqm::detail::parse_double(cells[1], where));
    l.push_back(sdqm::detail::parse_double(cells[2], where));
  }
  return make_plot_data(std::move(ids), std::move(p), std::move(l));
}

inline std::string fmt3(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  std::string s(buf);
  if (s == "-0.000") s = "0.000";
  return s;
}

inline std::string correlation_annotation(const PlotData& d) {
  try {
    const auto c = correlation(d.predictions, d.labels);
    return "pearson=" + fmt3(c.pearson) + " spearman=" + fmt3(c.spearman);
  } catch (const ComputeError&) {
    return "pearson=n/a spearman=n/a";
  }
}

// Scatter of label (y) against prediction (x) with the OLS line of label on prediction.
inline std::string render_svg(const PlotData& d) {
  const double W = 480, H = 480, M = 56;
  auto [xmin_it, xmax_it] = std::minmax_element(d.predictions.begin(), d.predictions.end());
  auto [ymin_it, ymax_it] = std::minmax_element(d.labels.begin(), d.labels.end());
  double x0 = *xmin_it, x1 = *xmax_it, y0 = *ymin_it, y1 = *ymax_it;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  auto sx = [&](double x) { return M + (x - x0) / (x1 - x0) * (W - 2 * M); };
  auto sy = [&](double y) { return H - M - (y - y0) / (y1 - y0) * (H - 2 * M); };
  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
    << " " << H << "\">\n";
  s << "<rect x=\"0\" y=\"0\" width=\"" << W << "\" height=\"" << H << "\" fill=\"white\"/>\n";
  s << "<line x1=\"" << M << "\" y1=\"" << H - M << "\" x2=\"" << W - M << "\" y2=\"" << H - M
    << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << M << "\" y1=\"" << M << "\" x2=\"" << M << "\" y2=\"" << H - M << "\" stroke=\"black\"/>\n";
  s << "<text x=\"" << W / 2 << "\" y=\"" << H - 16 << "\" text-anchor=\"middle\" font-size=\"13\">SDQM</text>\n";
  s << "<text x=\"16\" y=\"" << H / 2 << "\" text-anchor=\"middle\" font-size=\"13\" transform=\"rotate(-90 16 "
    << H / 2 << ")\">mAP50</text>\n";
  s << "<text x=\"" << M << "\" y=\"" << H - M + 16 << "\" font-size=\"10\">" << fmt3(x0) << "</text>\n";
  s << "<text x=\"" << W - M << "\" y=\"" << H - M + 16 << "\" text-anchor=\"end\" font-size=\"10\">" << fmt3(x1)
    << "</text>\n";
  s << "<text x=\"" << M - 4 << "\" y=\"" << H - M << "\" text-anchor=\"end\" font-size=\"10\">" << fmt3(y0)
    << "</text>\n";
  s << "<text x=\"" << M - 4 << "\" y=\"" << M + 4 << "\" text-anchor=\"end\" font-size=\"10\">" << fmt3(y1)
    << "</text>\n";
  for (std::size_t i = 0; i < d.predictions.size(); ++i)
    s << "<circle cx=\"" << fmt3(sx(d.predictions[i])) << "\" cy=\"" << fmt3(sy(d.labels[i]))
      << "\" r=\"3\" fill=\"steelblue\"/>\n";
  // reference line
  const double n = static_cast<double>(d.predictions.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < d.predictions.size(); ++i) mx += d.predictions[i], my += d.labels[i];
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < d.predictions.size(); ++i) {
    sxy += (d.predictions[i] - mx) * (d.labels[i] - my);
    sxx += (d.predictions[i] - mx) * (d.predictions[i] - mx);
  }
  if (sxx > 0) {
    const double slope = sxy / sxx, icpt = my - slope * mx;
    const double lx0 = *xmin_it, lx1 = *xmax_it;
    s << "<line x1=\"" << fmt3(sx(lx0)) << "\" y1=\"" << fmt3(sy(icpt + slope * lx0)) << "\" x2=\"" << fmt3(sx(lx1))
      << "\" y2=\"" << fmt3(sy(icpt + slope * lx1)) << "\" stroke=\"firebrick\" stroke-dasharray=\"4 3\"/>\n";
  }
  s << "<text x=\"" << M + 8 << "\" y=\"" << M - 12 << "\" font-size=\"13\">" << correlation_annotation(d)
    << "</text>\n";
  s << "</svg>\n";
  return s.str();
}

inline int cmd_plot(const RunConfig& cfg, std::ostream& log = std::cerr) {
  const auto path = need(cfg.plot.predictions, "plot.predictions", "plot");
  const auto d = parse_predictions_csv(sdqm::detail::read_file(path), path.string());
  fs::create_directories(cfg.out);
  std::string csv = "pair_id,prediction,label\n";
  for (std::size_t i = 0; i < d.ids.size(); ++i)
    csv += d.ids[i] + "," + format_value(d.predictions[i]) + "," + format_value(d.labels[i]) + "\n";
  write_text(cfg.out / "scatter.csv", csv);
  write_text(cfg.out / "scatter.svg", render_svg(d));
  log << "plot: " << d.ids.size() << " points, " << correlation_annotation(d) << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// validate

inline int cmd_validate(const RunConfig& cfg, std::ostream& out = std::cout) {
  const auto& p = cfg.pair;
  std::optional<std::size_t> dim_real;
  auto side = [&](const DatasetSide& s, const char* name) {
    if (s.annotations) {
      const auto a = load_annotations(*s.annotations);
      out << name << ".annotations: " << a.images.size() << " images, " << a.objects.size() << " objects, "
          << a.clamp_warnings << " clamped\n";
    }
    if (s.embeddings) {
      const auto e = load_embeddings(*s.embeddings);
      out << name << ".embeddings: " << e.size() << " x " << e.dim << "\n";
      if (!dim_real)
        dim_real = e.dim;
      else if (*dim_real != e.dim)
        throw ValidationError("embedding dims differ: real " + std::to_string(*dim_real) + ", synthetic " +
                              std::to_string(e.dim));
    }
    if (s.images) {
      const auto h = pixel_histograms(*s.images);
      out << name << ".images: " << h.images << " decoded, " << h.skipped << " skipped\n";
    }
  };
  side(p.real, "real");
  side(p.synthetic, "synthetic");
  if (p.category_map) {
    const auto m = load_category_map(*p.category_map);
    out << "synthetic.category_map: " << m.synthetic_to_real.size() << " mappings\n";
  }
  if (p.predictive_log) {
    const auto l = load_detection_log(*p.predictive_log);
    if (l.mode != EntropySource::predictive) throw ValidationError("detection.predictive has mode 'conditional'");
    out << "detection.predictive: " << l.records.size() << " records\n";
  }
  if (p.conditional_log) {
    const auto l = load_detection_log(*p.conditional_log);
    if (l.mode != EntropySource::conditional) throw ValidationError("detection.conditional has mode 'predictive'");
    out << "detection.conditional: " << l.records.size() << " records\n";
  }
  out << "config_hash: " << cfg.hash << "\n";
  return 0;
}

// Maps library exceptions onto exit codes.
template <typename F>
int run_guarded(F&& f, std::ostream& log = std::cerr) {
  try {
    return f();
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    log << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace sdqm::cli
