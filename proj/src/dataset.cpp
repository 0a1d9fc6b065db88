#include "padx/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "padx/errors.hpp"
#include "padx/image_io.hpp"
#include "padx/log.hpp"

namespace padx::dataset {

using nlohmann::json;

namespace {

std::string id_str(Id id) { return std::to_string(id); }

std::size_t line_of(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(
                 std::count(text.begin(), text.begin() + byte, '\n'));
}

class FieldReader {
 public:
  FieldReader(const json& obj, std::string where)
      : obj_(obj), where_(std::move(where)) {
    if (!obj_.is_object()) fail("expected an object");
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw ParseError(where_ + ": " + what);
  }

  const json& require(const char* key) const {
    auto it = obj_.find(key);
    if (it == obj_.end()) fail(std::string("missing field '") + key + "'");
    return *it;
  }

  Id id(const char* key) const {
    const json& v = require(key);
    if (!v.is_number_integer()) {
      fail(std::string("field '") + key + "' must be an integer");
    }
    return v.get<Id>();
  }

  int integral(const char* key) const {
    const json& v = require(key);
    if (!v.is_number()) fail(std::string("field '") + key + "' must be a number");
    const double d = v.get<double>();
    if (d != std::floor(d) || std::abs(d) > 1e9) {
      fail(std::string("field '") + key + "' must be a whole number");
    }
    return static_cast<int>(d);
  }

  std::string string(const char* key) const {
    const json& v = require(key);
    if (!v.is_string()) fail(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
  }

  void warn_unknown(std::initializer_list<const char*> known,
                    std::set<std::string>& reported) const {
    for (const auto& [key, value] : obj_.items()) {
      const bool is_known = std::any_of(known.begin(), known.end(),
                                        [&](const char* k) { return key == k; });
      if (!is_known && reported.insert(key).second) {
        logger().warn("{}: dropping unknown key '{}'", where_, key);
      }
    }
  }

  const std::string& where() const { return where_; }

 private:
  const json& obj_;
  std::string where_;
};

BBox parse_bbox(const json& v, const std::string& where) {
  if (!v.is_array() || v.size() != 4) {
    throw ParseError(where + ".bbox: expected [x, y, w, h]");
  }
  std::array<int, 4> xywh{};
  for (std::size_t i = 0; i < 4; ++i) {
    if (!v[i].is_number()) {
      throw ParseError(where + ".bbox[" + std::to_string(i) +
                       "]: expected a number");
    }
    const double d = v[i].get<double>();
    if (d != std::floor(d) || std::abs(d) > 1e9) {
      throw ParseError(where + ".bbox[" + std::to_string(i) +
                       "]: expected whole pixels, got " + v[i].dump());
    }
    xywh[i] = static_cast<int>(d);
  }
  return {xywh[0], xywh[1], xywh[2], xywh[3]};
}

const json& section(const json& root, const char* key) {
  auto it = root.find(key);
  if (it == root.end()) {
    throw ParseError(std::string("missing top-level key '") + key + "'");
  }
  if (!it->is_array()) {
    throw ParseError(std::string("top-level '") + key + "' must be an array");
  }
  return *it;
}

}  // namespace

const ImageRecord* Dataset::find_image(Id id) const {
  auto it = std::find_if(images.begin(), images.end(),
                         [id](const ImageRecord& r) { return r.id == id; });
  return it == images.end() ? nullptr : &*it;
}

const Category* Dataset::find_category(Id id) const {
  auto it = std::find_if(categories.begin(), categories.end(),
                         [id](const Category& c) { return c.id == id; });
  return it == categories.end() ? nullptr : &*it;
}

Id Dataset::max_image_id() const {
  Id best = 0;
  for (const auto& r : images) best = std::max(best, r.id);
  return best;
}

Id Dataset::max_annotation_id() const {
  Id best = 0;
  for (const auto& a : annotations) best = std::max(best, a.id);
  return best;
}

void Dataset::canonicalize() {
  auto by_id = [](const auto& a, const auto& b) { return a.id < b.id; };
  std::stable_sort(images.begin(), images.end(), by_id);
  std::stable_sort(annotations.begin(), annotations.end(), by_id);
  std::stable_sort(categories.begin(), categories.end(), by_id);
}

void validate(const Dataset& ds) {
  std::map<Id, const ImageRecord*> images;
  for (const auto& rec : ds.images) {
    if (!images.emplace(rec.id, &rec).second) {
      throw IntegrityError("duplicate image id " + id_str(rec.id));
    }
    if (rec.width < 1 || rec.height < 1) {
      throw IntegrityError("image " + id_str(rec.id) +
                           " has non-positive dimensions");
    }
  }
  std::unordered_set<Id> categories;
  for (const auto& cat : ds.categories) {
    if (!categories.insert(cat.id).second) {
      throw IntegrityError("duplicate category id " + id_str(cat.id));
    }
  }
  std::unordered_set<Id> annotations;
  for (const auto& ann : ds.annotations) {
    if (!annotations.insert(ann.id).second) {
      throw IntegrityError("duplicate annotation id " + id_str(ann.id));
    }
    auto img = images.find(ann.image_id);
    if (img == images.end()) {
      throw IntegrityError("annotation " + id_str(ann.id) +
                           " references missing image id " +
                           id_str(ann.image_id));
    }
    if (!categories.count(ann.category_id)) {
      throw IntegrityError("annotation " + id_str(ann.id) +
                           " references missing category id " +
                           id_str(ann.category_id));
    }
    if (!ann.bbox.fits_in(img->second->width, img->second->height)) {
      const BBox& b = ann.bbox;
      throw BoundsError("annotation " + id_str(ann.id) + " bbox [" +
                        std::to_string(b.x) + "," + std::to_string(b.y) + "," +
                        std::to_string(b.w) + "," + std::to_string(b.h) +
                        "] outside image " + id_str(ann.image_id) + " (" +
                        std::to_string(img->second->width) + "x" +
                        std::to_string(img->second->height) + ")");
    }
  }
}

Dataset parse_dataset(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError("line " + std::to_string(line_of(json_text, e.byte)) +
                     ": " + e.what());
  }
  if (!root.is_object()) throw ParseError("top level must be a JSON object");
  std::set<std::string> reported;
  for (const auto& [key, value] : root.items()) {
    if (key != "images" && key != "annotations" && key != "categories" &&
        reported.insert(key).second) {
      logger().warn("dropping unknown top-level key '{}'", key);
    }
  }

  Dataset ds;
  const json& images = section(root, "images");
  for (std::size_t i = 0; i < images.size(); ++i) {
    FieldReader r(images[i], "images[" + std::to_string(i) + "]");
    r.warn_unknown({"id", "file_name", "width", "height"}, reported);
    ds.images.push_back({r.id("id"), r.string("file_name"),
                         r.integral("width"), r.integral("height")});
  }
  const json& anns = section(root, "annotations");
  for (std::size_t i = 0; i < anns.size(); ++i) {
    FieldReader r(anns[i], "annotations[" + std::to_string(i) + "]");
    r.warn_unknown({"id", "image_id", "category_id", "bbox", "synthetic"},
                   reported);
    Instance inst;
    inst.id = r.id("id");
    inst.image_id = r.id("image_id");
    inst.category_id = r.id("category_id");
    inst.bbox = parse_bbox(r.require("bbox"), r.where());
    if (auto it = anns[i].find("synthetic"); it != anns[i].end()) {
      if (!it->is_boolean()) r.fail("field 'synthetic' must be a boolean");
      inst.synthetic = it->get<bool>();
    }
    ds.annotations.push_back(inst);
  }
  const json& cats = section(root, "categories");
  for (std::size_t i = 0; i < cats.size(); ++i) {
    FieldReader r(cats[i], "categories[" + std::to_string(i) + "]");
    r.warn_unknown({"id", "name", "supercategory"}, reported);
    ds.categories.push_back({r.id("id"), r.string("name")});
  }
  validate(ds);
  return ds;
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot read annotations '" + path.string() + "'",
                  path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_dataset(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string serialize_dataset(const Dataset& ds) {
  Dataset sorted = ds;
  sorted.canonicalize();
  json root = json::object();
  json images = json::array();
  for (const auto& r : sorted.images) {
    images.push_back({{"id", r.id},
                      {"file_name", r.file_name},
                      {"width", r.width},
                      {"height", r.height}});
  }
  json anns = json::array();
  for (const auto& a : sorted.annotations) {
    json obj = {{"id", a.id},
                {"image_id", a.image_id},
                {"category_id", a.category_id},
                {"bbox", {a.bbox.x, a.bbox.y, a.bbox.w, a.bbox.h}}};
    if (a.synthetic) obj["synthetic"] = true;
    anns.push_back(std::move(obj));
  }
  json cats = json::array();
  for (const auto& c : sorted.categories) {
    cats.push_back({{"id", c.id}, {"name", c.name}});
  }
  root["images"] = std::move(images);
  root["annotations"] = std::move(anns);
  root["categories"] = std::move(cats);
  return root.dump(2) + "\n";
}

void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
  validate(ds);
  const std::string text = serialize_dataset(ds);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot write annotations '" + path.string() + "'",
                  path.string());
  }
  out << text;
  out.flush();
  if (!out) {
    throw IoError("failed writing annotations '" + path.string() + "'",
                  path.string());
  }
}

std::size_t ClassStats::count_of(Id category_id) const {
  for (const auto& c : classes) {
    if (c.category_id == category_id) return c.count;
  }
  return 0;
}

ClassStats class_histogram(const Dataset& ds) {
  std::map<Id, std::size_t> counts;
  for (const auto& c : ds.categories) counts[c.id] = 0;
  for (const auto& a : ds.annotations) ++counts[a.category_id];

  ClassStats stats;
  stats.total = ds.annotations.size();
  for (const auto& [id, count] : counts) {
    const Category* cat = ds.find_category(id);
    stats.classes.push_back(
        {id, cat ? cat->name : std::string(), count,
         stats.total ? static_cast<double>(count) / stats.total : 0.0});
  }
  return stats;
}

HeadTailSplit split_head_tail(const ClassStats& stats, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw InputError("tail threshold must lie in (0, 1), got " +
                     std::to_string(threshold));
  }
  std::size_t max_count = 0;
  for (const auto& c : stats.classes) max_count = std::max(max_count, c.count);

  HeadTailSplit split;
  const double cutoff = threshold * static_cast<double>(max_count);
  for (const auto& c : stats.classes) {
    if (c.count == 0) continue;
    if (static_cast<double>(c.count) < cutoff) {
      split.tail.push_back(c.category_id);
    } else {
      split.head.push_back(c.category_id);
    }
  }
  return split;
}

std::filesystem::path ImageStore::resolve(const ImageRecord& rec) const {
  for (const auto& root : roots_) {
    auto candidate = root / rec.file_name;
    std::error_code ec;
    if (std::filesystem::exists(candidate, ec)) return candidate;
  }
  return roots_.empty() ? std::filesystem::path(rec.file_name)
                        : roots_.front() / rec.file_name;
}

ImageBuffer ImageStore::load(const ImageRecord& rec) const {
  return read_image(resolve(rec));
}

std::vector<InstancePatch> extract_instances(const Dataset& ds, Id category_id,
                                             const ImageStore& store) {
  if (!ds.find_category(category_id)) {
    throw IntegrityError("unknown category id " + id_str(category_id));
  }
  std::vector<Instance> wanted;
  for (const auto& a : ds.annotations) {
    if (a.category_id == category_id) wanted.push_back(a);
  }
  std::stable_sort(wanted.begin(), wanted.end(),
                   [](const Instance& a, const Instance& b) {
                     return a.image_id != b.image_id ? a.image_id < b.image_id
                                                     : a.id < b.id;
                   });

  std::vector<InstancePatch> patches;
  std::optional<Id> loaded_id;
  ImageBuffer img;
  for (const auto& inst : wanted) {
    if (loaded_id != inst.image_id) {
      const ImageRecord* rec = ds.find_image(inst.image_id);
      if (!rec) {
        throw IntegrityError("annotation " + id_str(inst.id) +
                             " references missing image id " +
                             id_str(inst.image_id));
      }
      img = store.load(*rec);
      loaded_id = inst.image_id;
    }
    patches.push_back({crop(img, inst.bbox), inst});
  }
  std::stable_sort(patches.begin(), patches.end(),
                   [](const InstancePatch& a, const InstancePatch& b) {
                     return a.source.id < b.source.id;
                   });
  return patches;
}

}  // namespace padx::dataset
