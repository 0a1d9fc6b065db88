#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "padx/core.hpp"
#include "padx/dataset.hpp"

namespace padx::eval {

// Real-valued box; detector output is rarely pixel aligned.
struct Box {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  Box() = default;
  Box(double x_, double y_, double w_, double h_) : x(x_), y(y_), w(w_), h(h_) {}
  Box(const BBox& b) : x(b.x), y(b.y), w(b.w), h(b.h) {}  // NOLINT
};

double iou(const Box& a, const Box& b);

struct Detection {
  dataset::Id image_id = 0;
  dataset::Id category_id = 0;
  Box bbox;
  double score = 0.0;
};

// Greedy one-to-one matching: detections in descending score (stable), each
// takes the unmatched ground truth with the highest IoU >= thresh. Returns a
// TP flag per detection in input order.
std::vector<bool> match_detections(std::span<const Detection> dets,
                                   std::span<const Box> gts, double thresh);

// 101-point interpolated AP of a score-ordered TP/FP sequence. nullopt when
// there is nothing to score (no ground truth and no detections).
std::optional<double> average_precision(
    const std::vector<bool>& tp_in_score_order, std::size_t num_gt);

struct ClassResult {
  dataset::Id category_id = 0;
  std::string name;
  std::optional<double> ap;
  std::size_t num_gt = 0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

struct EvalResult {
  std::vector<ClassResult> classes;  // by category id
  double mean_ap = 0.0;              // over categories with >= 1 ground truth
};

inline constexpr double kDefaultIouThreshold = 0.5;

EvalResult evaluate(std::span<const Detection> dets, const dataset::Dataset& ds,
                    double thresh = kDefaultIouThreshold);

// COCO results JSON: [{image_id, category_id, bbox: [x,y,w,h], score}, ...]
std::vector<Detection> parse_detections(const std::string& json_text);
std::vector<Detection> load_detections(const std::filesystem::path& path);

}  // namespace padx::eval
