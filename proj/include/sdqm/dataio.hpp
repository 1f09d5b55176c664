#pragma once

// On-disk artifact formats: COCO-subset annotation JSON, the SDQM binary
// matrix format (embeddings, heatmaps, histograms) with its ids sidecar, and
// JSONL detection logs.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdqm/error.hpp"

namespace sdqm {

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Embeddings

struct EmbeddingSet {
  std::vector<std::string> ids;
  std::size_t dim = 0;
  std::vector<float> values;  // row-major, ids.size() * dim

  std::size_t size() const { return ids.size(); }
  std::span<const float> row(std::size_t i) const { return {values.data() + i * dim, dim}; }

  // Throws ValidationError when any invariant is broken.
  void validate() const {
    if (ids.empty()) throw ValidationError("embedding set is empty");
    if (dim == 0) throw ValidationError("embedding dim must be positive");
    if (values.size() != ids.size() * dim)
      throw ValidationError("embedding payload has " + std::to_string(values.size()) +
                            " values, expected " + std::to_string(ids.size() * dim));
    for (std::size_t i = 0; i < values.size(); ++i)
      if (!std::isfinite(values[i]))
        throw ValidationError("non-finite embedding value at row " + std::to_string(i / dim));
    std::unordered_set<std::string> seen;
    for (const auto& id : ids)
      if (!seen.insert(id).second) throw ValidationError("duplicate embedding id '" + id + "'");
  }
};

// Copies the given rows into a new set (ids preserved).
inline EmbeddingSet subset_rows(const EmbeddingSet& set, std::span<const std::size_t> rows) {
  EmbeddingSet out;
  out.dim = set.dim;
  out.ids.reserve(rows.size());
  out.values.reserve(rows.size() * set.dim);
  for (auto r : rows) {
    out.ids.push_back(set.ids[r]);
    auto src = set.row(r);
    out.values.insert(out.values.end(), src.begin(), src.end());
  }
  return out;
}

namespace detail {

inline constexpr std::array<char, 4> kMagic = {'S', 'D', 'Q', 'M'};
inline constexpr std::uint32_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderBytes = 4 + 4 + 8 + 4;

template <typename T>
void put_le(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i)
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return static_cast<T>(v);
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const fs::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

// "<dir>/<stem>.ids.json" next to a matrix file.
inline fs::path sidecar_path(const fs::path& matrix_path) {
  auto p = matrix_path;
  p.replace_extension(".ids.json");
  return p;
}

// Turns a byte offset into "line L, column C" for parse errors.
inline std::string line_context(std::string_view text, std::size_t byte) {
  std::size_t line = 1, col = 1;
  for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace detail

// Canonical serialization of a matrix file. Identical inputs produce identical bytes.
inline std::string encode_matrix(std::uint64_t rows, std::uint32_t dim, std::span<const float> values) {
  std::string out;
  out.reserve(detail::kHeaderBytes + values.size() * 4);
  out.append(detail::kMagic.data(), 4);
  detail::put_le<std::uint32_t>(out, detail::kFormatVersion);
  detail::put_le<std::uint64_t>(out, rows);
  detail::put_le<std::uint32_t>(out, dim);
  for (float f : values) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    detail::put_le<std::uint32_t>(out, bits);
  }
  return out;
}

inline void save_matrix(const fs::path& path, std::span<const std::string> row_ids, std::size_t dim,
                        std::span<const float> values) {
  detail::write_file(path, encode_matrix(row_ids.size(), static_cast<std::uint32_t>(dim), values));
  detail::write_file(detail::sidecar_path(path), json(std::vector<std::string>(row_ids.begin(), row_ids.end())).dump() + "\n");
}

inline void save_embeddings(const fs::path& path, const EmbeddingSet& set) {
  save_matrix(path, set.ids, set.dim, set.values);
}

// Decodes the binary payload only; ids are filled with row indices.
inline EmbeddingSet decode_matrix(std::string_view bytes, const std::string& source = "<memory>") {
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < detail::kHeaderBytes)
    throw ParseError(source + ": truncated header (" + std::to_string(bytes.size()) + " bytes)");
  if (!std::equal(detail::kMagic.begin(), detail::kMagic.end(), bytes.begin()))
    throw ParseError(source + ": magic mismatch, expected 'SDQM'");
  const auto version = detail::get_le<std::uint32_t>(p + 4);
  if (version != detail::kFormatVersion)
    throw ParseError(source + ": unsupported version " + std::to_string(version));
  const auto rows = detail::get_le<std::uint64_t>(p + 8);
  const auto dim = detail::get_le<std::uint32_t>(p + 16);
  if (rows == 0) throw ValidationError(source + ": N must be at least 1");
  if (dim == 0) throw ValidationError(source + ": dim must be positive");
  const std::uint64_t payload = bytes.size() - detail::kHeaderBytes;
  if (rows > UINT64_MAX / 4 / dim) throw ParseError(source + ": header size overflow");
  const std::uint64_t expected = rows * dim * 4;
  if (payload < expected)
    throw ParseError(source + ": truncated payload, expected " + std::to_string(expected) +
                     " bytes after header, found " + std::to_string(payload));
  if (payload > expected)
    throw ParseError(source + ": " + std::to_string(payload - expected) + " trailing bytes after payload");

  EmbeddingSet set;
  set.dim = dim;
  set.values.resize(rows * dim);
  for (std::uint64_t i = 0; i < rows * dim; ++i) {
    const auto bits = detail::get_le<std::uint32_t>(p + detail::kHeaderBytes + 4 * i);
    float f;
    std::memcpy(&f, &bits, 4);
    if (!std::isfinite(f))
      throw ValidationError(source + ": non-finite value at row " + std::to_string(i / dim) + ", column " +
                            std::to_string(i % dim));
    set.values[i] = f;
  }
  set.ids.resize(rows);
  for (std::uint64_t i = 0; i < rows; ++i) set.ids[i] = std::to_string(i);
  return set;
}

// Reads `path` and its `<stem>.ids.json` sidecar.
inline EmbeddingSet load_embeddings(const fs::path& path) {
  if (!fs::exists(path)) throw ParseError("embedding file '" + path.string() + "' does not exist");
  auto set = decode_matrix(detail::read_file(path), path.string());
  const auto sidecar = detail::sidecar_path(path);
  if (!fs::exists(sidecar)) throw ParseError("missing ids sidecar '" + sidecar.string() + "'");
  const auto text = detail::read_file(sidecar);
  json ids;
  try {
    ids = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(sidecar.string() + ": " + detail::line_context(text, e.byte) + ": " + e.what());
  }
  if (!ids.is_array() || ids.size() != set.size())
    throw ValidationError(sidecar.string() + ": expected an array of " + std::to_string(set.size()) +
                          " strings");
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!ids[i].is_string()) throw ValidationError(sidecar.string() + ": id " + std::to_string(i) + " is not a string");
    set.ids[i] = ids[i].get<std::string>();
  }
  set.validate();
  return set;
}

// ---------------------------------------------------------------------------
// Annotations

struct ImageInfo {
  std::string id;
  int width = 0;
  int height = 0;
  std::map<std::string, std::string> metadata;
};

struct BoundingBox {
  double x = 0, y = 0, w = 0, h = 0;
};

struct ObjectAnnotation {
  std::string image_id;
  int category_id = 0;
  BoundingBox bbox;
};

struct AnnotationSet {
  std::vector<ImageInfo> images;
  std::vector<ObjectAnnotation> objects;  // file order
  std::map<int, std::string> categories;
  std::size_t clamp_warnings = 0;  // boxes clamped into their image during load

  // image id -> position in `images`
  std::unordered_map<std::string, std::size_t> image_index() const {
    std::unordered_map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < images.size(); ++i) idx.emplace(images[i].id, i);
    return idx;
  }
};

namespace detail {

inline std::string id_string(const json& v, const std::string& what) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  throw ValidationError(what + " must be an integer or string");
}

inline std::string metadata_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

}  // namespace detail

namespace detail {
inline AnnotationSet parse_annotations_impl(std::string_view text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source + ": " + detail::line_context(text, e.byte) + ": " + e.what());
  }
  if (!doc.is_object()) throw ValidationError(source + ": top level must be an object");
  for (const auto& key : {"images", "annotations", "categories"})
    if (!doc.contains(key) || !doc[key].is_array())
      throw ValidationError(source + ": missing array '" + std::string(key) + "'");

  AnnotationSet set;
  for (const auto& img : doc["images"]) {
    ImageInfo info;
    info.id = detail::id_string(img.value("id", json()), source + ": image id");
    if (!img.contains("width") || !img.contains("height") || !img["width"].is_number() || !img["height"].is_number())
      throw ValidationError(source + ": image '" + info.id + "' needs numeric width and height");
    info.width = img["width"].get<int>();
    info.height = img["height"].get<int>();
    if (info.width <= 0 || info.height <= 0)
      throw ValidationError(source + ": image '" + info.id + "' has non-positive dimensions");
    if (img.contains("metadata")) {
      if (!img["metadata"].is_object()) throw ValidationError(source + ": metadata of '" + info.id + "' must be an object");
      for (const auto& [k, v] : img["metadata"].items()) info.metadata[k] = detail::metadata_string(v);
    }
    set.images.push_back(std::move(info));
  }
  const auto index = set.image_index();
  if (index.size() != set.images.size()) throw ValidationError(source + ": duplicate image ids");

  for (const auto& cat : doc["categories"]) {
    if (!cat.contains("id") || !cat["id"].is_number_integer())
      throw ValidationError(source + ": category id must be an integer");
    set.categories[cat["id"].get<int>()] = cat.value("name", std::string());
  }

  std::vector<std::string> dangling;
  std::size_t position = 0;
  for (const auto& ann : doc["annotations"]) {
    ObjectAnnotation obj;
    obj.image_id = detail::id_string(ann.value("image_id", json()), source + ": annotation image_id");
    if (!ann.contains("category_id") || !ann["category_id"].is_number_integer())
      throw ValidationError(source + ": annotation " + std::to_string(position) + " lacks integer category_id");
    obj.category_id = ann["category_id"].get<int>();
    const auto& b = ann.value("bbox", json());
    if (!b.is_array() || b.size() != 4 || !std::all_of(b.begin(), b.end(), [](const json& v) { return v.is_number(); }))
      throw ValidationError(source + ": annotation " + std::to_string(position) + " bbox must be [x,y,w,h]");
    obj.bbox = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(), b[3].get<double>()};

    auto it = index.find(obj.image_id);
    if (it == index.end()) {
      dangling.push_back(obj.image_id);
      ++position;
      continue;
    }
    const auto& img = set.images[it->second];
    const double x0 = std::max(0.0, obj.bbox.x), y0 = std::max(0.0, obj.bbox.y);
    const double x1 = std::min<double>(img.width, obj.bbox.x + obj.bbox.w);
    const double y1 = std::min<double>(img.height, obj.bbox.y + obj.bbox.h);
    if (!(obj.bbox.w > 0) || !(obj.bbox.h > 0) || !(x1 > x0) || !(y1 > y0))
      throw ValidationError(source + ": annotation " + std::to_string(position) + " on image '" + obj.image_id +
                            "' has an empty box after clamping");
    BoundingBox clamped{x0, y0, x1 - x0, y1 - y0};
    if (clamped.x != obj.bbox.x || clamped.y != obj.bbox.y || clamped.w != obj.bbox.w || clamped.h != obj.bbox.h)
      ++set.clamp_warnings;
    obj.bbox = clamped;
    set.objects.push_back(std::move(obj));
    ++position;
  }
  if (!dangling.empty()) {
    std::set<std::string> unique(dangling.begin(), dangling.end());
    std::string list;
    for (const auto& d : unique) list += (list.empty() ? "" : ", ") + d;
    throw ValidationError(source + ": annotations reference unknown image ids: " + list);
  }
  return set;
}
}  // namespace detail

inline AnnotationSet parse_annotations(std::string_view text, const std::string& source = "<memory>") {
  try {
    return detail::parse_annotations_impl(text, source);
  } catch (const json::exception& e) {  // wrong JSON type somewhere in the document
    throw ValidationError(source + ": " + e.what());
  }
}

inline AnnotationSet load_annotations(const fs::path& path) {
  if (!fs::exists(path)) throw ParseError("annotation file '" + path.string() + "' does not exist");
  return parse_annotations(detail::read_file(path), path.string());
}

// Synthetic category id -> real category id. Unmapped synthetic categories
// are dropped when the map is applied.
struct CategoryMap {
  std::map<int, int> synthetic_to_real;
};

namespace detail {
inline CategoryMap parse_category_map_impl(std::string_view text, const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(source + ": " + detail::line_context(text, e.byte) + ": " + e.what());
  }
  if (!doc.is_object() || !doc.contains("synthetic_to_real") || !doc["synthetic_to_real"].is_object())
    throw ValidationError(source + ": expected {\"synthetic_to_real\": {...}}");
  CategoryMap map;
  std::set<int> targets;
  for (const auto& [k, v] : doc["synthetic_to_real"].items()) {
    int from;
    try {
      std::size_t used = 0;
      from = std::stoi(k, &used);
      if (used != k.size()) throw std::invalid_argument(k);
    } catch (const std::exception&) {
      throw ValidationError(source + ": category key '" + k + "' is not an integer");
    }
    if (!v.is_number_integer()) throw ValidationError(source + ": category target for '" + k + "' must be an integer");
    const int to = v.get<int>();
    if (!targets.insert(to).second)
      throw ValidationError(source + ": real category " + std::to_string(to) + " is mapped twice");
    map.synthetic_to_real[from] = to;
  }
  return map;
}
}  // namespace detail

inline CategoryMap parse_category_map(std::string_view text, const std::string& source = "<memory>") {
  try {
    return detail::parse_category_map_impl(text, source);
  } catch (const json::exception& e) {  // wrong JSON type somewhere in the document
    throw ValidationError(source + ": " + e.what());
  }
}

inline CategoryMap load_category_map(const fs::path& path) {
  return parse_category_map(detail::read_file(path), path.string());
}

// Rewrites synthetic category ids into the real id space; unmapped objects
// and categories are removed. Every mapped target must exist in `real`.
inline AnnotationSet apply_category_map(const AnnotationSet& synthetic, const AnnotationSet& real,
                                        const CategoryMap& map) {
  for (const auto& [from, to] : map.synthetic_to_real)
    if (!real.categories.count(to))
      throw ValidationError("category map target " + std::to_string(to) + " is not a real category");
  AnnotationSet out;
  out.images = synthetic.images;
  out.clamp_warnings = synthetic.clamp_warnings;
  for (const auto& [from, to] : map.synthetic_to_real)
    if (synthetic.categories.count(from)) out.categories[to] = real.categories.at(to);
  for (const auto& obj : synthetic.objects) {
    auto it = map.synthetic_to_real.find(obj.category_id);
    if (it == map.synthetic_to_real.end()) continue;
    auto copy = obj;
    copy.category_id = it->second;
    out.objects.push_back(std::move(copy));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Detection logs

enum class EntropySource { conditional, predictive };

inline std::string to_string(EntropySource m) {
  return m == EntropySource::conditional ? "conditional" : "predictive";
}

struct DetectionRecord {
  std::string image_id;
  int gt_category = 0;
  double p_gt = 0;  // probability assigned to the ground-truth class
};

struct DetectionLog {
  std::vector<DetectionRecord> records;
  int class_count = 2;
  EntropySource mode = EntropySource::predictive;
};

namespace detail {
inline DetectionLog parse_detection_log_impl(std::string_view text, const std::string& source) {
  DetectionLog log;
  bool have_header = false;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(source + ": line " + std::to_string(line_no) + ": " + e.what());
    }
    const auto where = source + ": line " + std::to_string(line_no);
    if (!rec.is_object()) throw ValidationError(where + ": expected an object");
    if (!have_header) {
      if (!rec.contains("class_count") || !rec["class_count"].is_number_integer() || !rec.contains("mode"))
        throw ValidationError(where + ": first line must be the {class_count, mode} header");
      log.class_count = rec["class_count"].get<int>();
      if (log.class_count < 2) throw ValidationError(where + ": class_count must be at least 2");
      const auto mode = rec["mode"].is_string() ? rec["mode"].get<std::string>() : std::string();
      if (mode == "conditional")
        log.mode = EntropySource::conditional;
      else if (mode == "predictive")
        log.mode = EntropySource::predictive;
      else
        throw ValidationError(where + ": mode must be \"conditional\" or \"predictive\"");
      have_header = true;
      continue;
    }
    DetectionRecord r;
    if (!rec.contains("image_id") || !rec.contains("gt_category") || !rec["gt_category"].is_number_integer() ||
        !rec.contains("p_gt") || !rec["p_gt"].is_number())
      throw ValidationError(where + ": record needs image_id, integer gt_category and numeric p_gt");
    r.image_id = detail::id_string(rec["image_id"], where + ": image_id");
    r.gt_category = rec["gt_category"].get<int>();
    r.p_gt = rec["p_gt"].get<double>();
    if (!(r.p_gt >= 0.0 && r.p_gt <= 1.0))
      throw ValidationError(where + ": probability " + rec["p_gt"].dump() + " outside [0,1]");
    log.records.push_back(std::move(r));
  }
  if (log.records.empty()) throw ValidationError(source + ": no records");
  return log;
}
}  // namespace detail

inline DetectionLog parse_detection_log(std::string_view text, const std::string& source = "<memory>") {
  try {
    return detail::parse_detection_log_impl(text, source);
  } catch (const json::exception& e) {  // wrong JSON type somewhere in the document
    throw ValidationError(source + ": " + e.what());
  }
}

inline DetectionLog load_detection_log(const fs::path& path) {
  if (!fs::exists(path)) throw ParseError("detection log '" + path.string() + "' does not exist");
  return parse_detection_log(detail::read_file(path), path.string());
}

inline std::string encode_detection_log(const DetectionLog& log) {
  std::string out = json{{"class_count", log.class_count}, {"mode", to_string(log.mode)}}.dump() + "\n";
  for (const auto& r : log.records)
    out += json{{"image_id", r.image_id}, {"gt_category", r.gt_category}, {"p_gt", r.p_gt}}.dump() + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Dataset pairs

struct DatasetSide {
  std::optional<fs::path> annotations;
  std::optional<fs::path> embeddings;
  std::optional<fs::path> images;
};

struct DatasetPair {
  DatasetSide real;
  DatasetSide synthetic;
  std::optional<fs::path> predictive_log;
  std::optional<fs::path> conditional_log;
  std::optional<fs::path> category_map;
};

inline void check_same_dim(const EmbeddingSet& real, const EmbeddingSet& synthetic) {
  if (real.dim != synthetic.dim)
    throw ValidationError("embedding dims differ: real " + std::to_string(real.dim) + ", synthetic " +
                          std::to_string(synthetic.dim));
}

}  // namespace sdqm
