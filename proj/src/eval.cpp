#include "padx/eval.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

#include "padx/errors.hpp"

namespace padx::eval {

namespace {

std::vector<std::size_t> score_order(std::span<const Detection> dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return dets[a].score > dets[b].score;
  });
  return order;
}

}  // namespace

double iou(const Box& a, const Box& b) {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  if (inter <= 0.0) return 0.0;
  return inter / (a.w * a.h + b.w * b.h - inter);
}

std::vector<bool> match_detections(std::span<const Detection> dets,
                                   std::span<const Box> gts, double thresh) {
  std::vector<bool> tp(dets.size(), false);
  std::vector<bool> taken(gts.size(), false);
  for (std::size_t i : score_order(dets)) {
    double best = thresh;
    std::optional<std::size_t> match;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g]) continue;
      const double o = iou(dets[i].bbox, gts[g]);
      if (o >= best && (!match || o > best)) {
        best = o;
        match = g;
      }
    }
    if (match) {
      taken[*match] = true;
      tp[i] = true;
    }
  }
  return tp;
}

std::optional<double> average_precision(const std::vector<bool>& tp_in_score_order,
                                        std::size_t num_gt) {
  if (num_gt == 0) {
    if (tp_in_score_order.empty()) return std::nullopt;
    return 0.0;
  }
  const std::size_t n = tp_in_score_order.size();
  std::vector<double> recall(n), precision(n);
  std::size_t tp = 0;
  for (std::size_t i = 0; i < n; ++i) {
    tp += tp_in_score_order[i] ? 1 : 0;
    recall[i] = static_cast<double>(tp) / static_cast<double>(num_gt);
    precision[i] = static_cast<double>(tp) / static_cast<double>(i + 1);
  }
  // Precision envelope: best precision at this recall or beyond.
  for (std::size_t i = n; i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double sum = 0.0;
  for (int r = 0; r <= 100; ++r) {
    const double level = r / 100.0;
    auto it = std::lower_bound(recall.begin(), recall.end(), level);
    if (it != recall.end()) sum += precision[static_cast<std::size_t>(it - recall.begin())];
  }
  return sum / 101.0;
}

EvalResult evaluate(std::span<const Detection> dets, const dataset::Dataset& ds,
                    double thresh) {
  std::set<dataset::Id> images;
  for (const auto& rec : ds.images) images.insert(rec.id);
  for (const auto& d : dets) {
    if (!ds.find_category(d.category_id)) {
      throw IntegrityError("detection references unknown category id " +
                           std::to_string(d.category_id));
    }
    if (!images.count(d.image_id)) {
      throw IntegrityError("detection references unknown image id " +
                           std::to_string(d.image_id));
    }
  }

  using Key = std::pair<dataset::Id, dataset::Id>;  // (category, image)
  std::map<Key, std::vector<Box>> gts;
  std::map<Key, std::vector<std::size_t>> det_index;
  for (const auto& ann : ds.annotations) {
    gts[{ann.category_id, ann.image_id}].push_back(Box(ann.bbox));
  }
  for (std::size_t i = 0; i < dets.size(); ++i) {
    det_index[{dets[i].category_id, dets[i].image_id}].push_back(i);
  }

  // Per category: TP flag for every detection, pooled across images.
  std::map<dataset::Id, std::vector<std::pair<std::size_t, bool>>> pooled;
  for (const auto& [key, idx] : det_index) {
    std::vector<Detection> group;
    for (std::size_t i : idx) group.push_back(dets[i]);
    static const std::vector<Box> kNone;
    auto gt_it = gts.find(key);
    const auto& boxes = gt_it == gts.end() ? kNone : gt_it->second;
    const auto flags = match_detections(group, boxes, thresh);
    for (std::size_t j = 0; j < idx.size(); ++j) {
      pooled[key.first].push_back({idx[j], flags[j]});
    }
  }

  EvalResult result;
  std::vector<dataset::Category> cats = ds.categories;
  std::sort(cats.begin(), cats.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  double ap_sum = 0.0;
  std::size_t ap_count = 0;
  for (const auto& cat : cats) {
    ClassResult cr;
    cr.category_id = cat.id;
    cr.name = cat.name;
    for (const auto& ann : ds.annotations) cr.num_gt += ann.category_id == cat.id;

    auto& entries = pooled[cat.id];
    // Global score order; ties fall back to detection-list position.
    std::stable_sort(entries.begin(), entries.end(), [&](const auto& a, const auto& b) {
      if (dets[a.first].score != dets[b.first].score) {
        return dets[a.first].score > dets[b.first].score;
      }
      return a.first < b.first;
    });
    std::vector<bool> seq;
    seq.reserve(entries.size());
    for (const auto& [i, flag] : entries) {
      seq.push_back(flag);
      (flag ? cr.tp : cr.fp) += 1;
    }
    cr.fn = cr.num_gt - cr.tp;
    cr.ap = average_precision(seq, cr.num_gt);
    if (cr.num_gt > 0) {
      ap_sum += *cr.ap;
      ++ap_count;
    }
    result.classes.push_back(std::move(cr));
  }
  result.mean_ap = ap_count ? ap_sum / static_cast<double>(ap_count) : 0.0;
  return result;
}

std::vector<Detection> parse_detections(const std::string& json_text) {
  using nlohmann::json;
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("predictions: ") + e.what());
  }
  if (!root.is_array()) throw ParseError("predictions: expected a JSON array");
  std::vector<Detection> dets;
  dets.reserve(root.size());
  for (std::size_t i = 0; i < root.size(); ++i) {
    const json& o = root[i];
    const std::string where = "predictions[" + std::to_string(i) + "]";
    if (!o.is_object()) throw ParseError(where + ": expected an object");
    auto field = [&](const char* key) -> const json& {
      auto it = o.find(key);
      if (it == o.end()) {
        throw ParseError(where + ": missing field '" + key + "'");
      }
      return *it;
    };
    Detection d;
    if (!field("image_id").is_number_integer() ||
        !field("category_id").is_number_integer()) {
      throw ParseError(where + ": image_id and category_id must be integers");
    }
    d.image_id = field("image_id").get<dataset::Id>();
    d.category_id = field("category_id").get<dataset::Id>();
    const json& bb = field("bbox");
    if (!bb.is_array() || bb.size() != 4 ||
        !std::all_of(bb.begin(), bb.end(), [](const json& v) { return v.is_number(); })) {
      throw ParseError(where + ".bbox: expected [x, y, w, h]");
    }
    d.bbox = Box(bb[0].get<double>(), bb[1].get<double>(), bb[2].get<double>(),
                 bb[3].get<double>());
    if (!(d.bbox.w > 0.0 && d.bbox.h > 0.0)) {
      throw ParseError(where + ".bbox: width and height must be positive");
    }
    if (!field("score").is_number()) throw ParseError(where + ": score must be a number");
    d.score = field("score").get<double>();
    if (!(d.score >= 0.0 && d.score <= 1.0)) {
      throw ParseError(where + ": score must lie in [0, 1]");
    }
    dets.push_back(d);
  }
  return dets;
}

std::vector<Detection> load_detections(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path.string() + "'", path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_detections(buf.str());
}

}  // namespace padx::eval
