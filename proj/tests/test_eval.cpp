#include <gtest/gtest.h>

#include "padx/errors.hpp"
#include "padx/eval.hpp"
#include "test_util.hpp"

namespace padx::eval {
namespace {

using dataset::Dataset;

Detection det(dataset::Id image, dataset::Id cat, Box b, double score) {
  return {image, cat, b, score};
}

// Two images, two classes. Class 1: one GT per image. Class 2: two GT in
// image 1.
Dataset two_class() {
  Dataset ds;
  ds.images = {{1, "a.png", 100, 100}, {2, "b.png", 100, 100}};
  ds.categories = {{1, "gun"}, {2, "knife"}};
  ds.annotations = {{1, 1, 1, {10, 10, 20, 20}, false},
                    {2, 2, 1, {50, 50, 20, 20}, false},
                    {3, 1, 2, {0, 0, 10, 10}, false},
                    {4, 1, 2, {60, 0, 10, 10}, false}};
  return ds;
}

TEST(Iou, Examples) {
  EXPECT_DOUBLE_EQ(iou({0, 0, 10, 10}, {0, 0, 10, 10}), 1.0);
  EXPECT_EQ(iou({0, 0, 10, 10}, {20, 0, 10, 10}), 0.0);
  EXPECT_EQ(iou({0, 0, 10, 10}, {10, 0, 10, 10}), 0.0);
  EXPECT_NEAR(iou({0, 0, 10, 10}, {5, 5, 10, 10}), 1.0 / 7.0, 1e-12);
}

TEST(Iou, SymmetricAndBounded) {
  Rng rng(1);
  for (int t = 0; t < 500; ++t) {
    const Box a{rng.uniform(0, 50), rng.uniform(0, 50), rng.uniform(0.5, 30), rng.uniform(0.5, 30)};
    const Box b{rng.uniform(0, 50), rng.uniform(0, 50), rng.uniform(0.5, 30), rng.uniform(0.5, 30)};
    EXPECT_EQ(iou(a, b), iou(b, a));
    EXPECT_GE(iou(a, b), 0.0);
    EXPECT_LE(iou(a, b), 1.0);
  }
}

TEST(Match, Examples) {
  const std::vector<Box> gt{{0, 0, 10, 10}};
  std::vector<Detection> one{det(1, 1, {0, 0, 10, 10}, 0.9)};
  EXPECT_EQ(match_detections(one, gt, 0.5), std::vector<bool>{true});

  std::vector<Detection> dup{det(1, 1, {1, 0, 10, 10}, 0.8), det(1, 1, {0, 0, 10, 10}, 0.9)};
  EXPECT_EQ(match_detections(dup, gt, 0.5), (std::vector<bool>{false, true}));

  // A 4x10 box inside the 10x10 ground truth: IoU 40/100.
  std::vector<Detection> low{det(1, 1, {0, 0, 4, 10}, 0.9)};
  ASSERT_NEAR(iou(low[0].bbox, gt[0]), 0.4, 1e-12);
  EXPECT_EQ(match_detections(low, gt, 0.5), std::vector<bool>{false});
}

TEST(Match, PrefersHighestIouAndInsertionOrderOnTies) {
  const std::vector<Box> gts{{0, 0, 10, 10}, {2, 0, 10, 10}};
  // Best match is GT 1 (IoU 1), leaving GT 0 for the next detection.
  std::vector<Detection> two{det(1, 1, {2, 0, 10, 10}, 0.9), det(1, 1, {0, 0, 10, 10}, 0.9)};
  EXPECT_EQ(match_detections(two, gts, 0.5), (std::vector<bool>{true, true}));
  // Equal scores: the first listed detection is processed first.
  const std::vector<Box> single{{0, 0, 10, 10}};
  std::vector<Detection> tie{det(1, 1, {0, 0, 10, 10}, 0.5), det(1, 1, {0, 0, 10, 10}, 0.5)};
  EXPECT_EQ(match_detections(tie, single, 0.5), (std::vector<bool>{true, false}));
}

TEST(AveragePrecision, Examples) {
  EXPECT_DOUBLE_EQ(*average_precision({true}, 1), 1.0);
  EXPECT_DOUBLE_EQ(*average_precision({}, 3), 0.0);
  EXPECT_NEAR(*average_precision({false, true}, 2), 51.0 * 0.5 / 101.0, 1e-12);
  EXPECT_FALSE(average_precision({}, 0).has_value());
  EXPECT_EQ(*average_precision({false}, 0), 0.0);
}

TEST(AveragePrecision, HandEnumeratedCurve) {
  // TP FP TP with 3 GT: recall 1/3, 1/3, 2/3; precision 1, 1/2, 2/3.
  // Envelope: r <= 1/3 -> 1 (34 levels), 1/3 < r <= 2/3 -> 2/3 (33 levels).
  EXPECT_NEAR(*average_precision({true, false, true}, 3), (34.0 + 33.0 * 2.0 / 3.0) / 101.0, 1e-12);
}

TEST(AveragePrecision, BoundedAndMonotoneUnderFpRemoval) {
  Rng rng(2);
  for (int t = 0; t < 300; ++t) {
    const std::size_t n = static_cast<std::size_t>(rng.uniform_int(1, 20));
    std::vector<bool> seq(n);
    std::size_t tps = 0;
    for (std::size_t i = 0; i < n; ++i) {
      seq[i] = rng.uniform01() < 0.5;
      tps += seq[i];
    }
    const std::size_t num_gt = tps + static_cast<std::size_t>(rng.uniform_int(0, 5));
    if (num_gt == 0) continue;
    const double ap = *average_precision(seq, num_gt);
    EXPECT_GE(ap, 0.0);
    EXPECT_LE(ap, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      if (seq[i]) continue;
      std::vector<bool> fewer = seq;
      fewer.erase(fewer.begin() + static_cast<std::ptrdiff_t>(i));
      EXPECT_GE(*average_precision(fewer, num_gt) + 1e-12, ap);
    }
  }
}

TEST(Evaluate, PerfectDetections) {
  const Dataset ds = two_class();
  std::vector<Detection> dets;
  for (const auto& a : ds.annotations) dets.push_back(det(a.image_id, a.category_id, a.bbox, 1.0));
  const EvalResult r = evaluate(dets, ds);
  for (const auto& c : r.classes) {
    EXPECT_EQ(*c.ap, 1.0);
    EXPECT_EQ(c.fp, 0u);
    EXPECT_EQ(c.fn, 0u);
  }
  EXPECT_EQ(r.mean_ap, 1.0);
}

TEST(Evaluate, EmptyDetections) {
  const EvalResult r = evaluate({}, two_class());
  for (const auto& c : r.classes) {
    EXPECT_EQ(*c.ap, 0.0);
    EXPECT_EQ(c.fn, c.num_gt);
  }
  EXPECT_EQ(r.mean_ap, 0.0);
}

TEST(Evaluate, MixedTwoClassHandCase) {
  const Dataset ds = two_class();
  const std::vector<Detection> dets{
      // class 1: TP (img 1), FP in img 1 (duplicate), TP (img 2)
      det(1, 1, {10, 10, 20, 20}, 0.9), det(1, 1, {11, 10, 20, 20}, 0.8),
      det(2, 1, {50, 50, 20, 20}, 0.7),
      // class 2: FP then TP, second GT missed
      det(1, 2, {30, 30, 10, 10}, 0.95), det(1, 2, {0, 0, 10, 10}, 0.9)};
  const EvalResult r = evaluate(dets, ds);
  ASSERT_EQ(r.classes.size(), 2u);
  // Class 1: TP FP TP, 2 GT -> recall 1/2, 1/2, 1; precision 1, 1/2, 2/3.
  // Envelope 1 for r <= 0.5 (51 levels), 2/3 above (50 levels).
  const double ap1 = (51.0 + 50.0 * 2.0 / 3.0) / 101.0;
  const double ap2 = 51.0 * 0.5 / 101.0;
  EXPECT_NEAR(*r.classes[0].ap, ap1, 1e-12);
  EXPECT_EQ(r.classes[0].tp, 2u);
  EXPECT_EQ(r.classes[0].fp, 1u);
  EXPECT_NEAR(*r.classes[1].ap, ap2, 1e-12);
  EXPECT_EQ(r.classes[1].fn, 1u);
  EXPECT_NEAR(r.mean_ap, (ap1 + ap2) / 2.0, 1e-12);
}

// Holds for distinct scores; tied scores follow insertion order.
TEST(Evaluate, PermutationInvariant) {
  const Dataset ds = two_class();
  Rng rng(5);
  std::vector<Detection> dets;
  for (int i = 0; i < 30; ++i) {
    const auto& a = ds.annotations[static_cast<std::size_t>(rng.uniform_int(0, 3))];
    Box b = a.bbox;
    b.x += rng.uniform(-6, 6);
    b.y += rng.uniform(-6, 6);
    dets.push_back(det(a.image_id, a.category_id, b, (i + 1) / 31.0));
  }
  const EvalResult ref = evaluate(dets, ds);
  for (int p = 0; p < 10; ++p) {
    for (std::size_t i = dets.size(); i > 1; --i) {
      std::swap(dets[i - 1], dets[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(i) - 1))]);
    }
    const EvalResult r = evaluate(dets, ds);
    for (std::size_t c = 0; c < r.classes.size(); ++c) {
      EXPECT_EQ(r.classes[c].tp, ref.classes[c].tp);
      EXPECT_NEAR(*r.classes[c].ap, *ref.classes[c].ap, 1e-12);
    }
  }
}

TEST(Evaluate, TiedScoresFollowInsertionOrder) {
  Dataset ds = two_class();
  ds.annotations.resize(1);
  // Equal scores: whichever detection is listed first takes the single GT.
  const Detection good = det(1, 1, {10, 10, 20, 20}, 0.5);
  const Detection bad = det(1, 1, {40, 40, 20, 20}, 0.5);
  const EvalResult a = evaluate(std::vector<Detection>{good, bad}, ds);
  const EvalResult b = evaluate(std::vector<Detection>{bad, good}, ds);
  EXPECT_NEAR(*a.classes[0].ap, 1.0, 1e-12);
  // FP then TP with one GT: recall 1 at precision 1/2 on every level.
  EXPECT_NEAR(*b.classes[0].ap, 0.5, 1e-12);
}

TEST(Evaluate, ClassWithoutGroundTruthExcludedFromMean) {
  Dataset ds = two_class();
  ds.categories.push_back({3, "empty"});
  std::vector<Detection> dets;
  for (const auto& a : ds.annotations) dets.push_back(det(a.image_id, a.category_id, a.bbox, 1.0));
  EvalResult r = evaluate(dets, ds);
  EXPECT_FALSE(r.classes[2].ap.has_value());
  EXPECT_EQ(r.mean_ap, 1.0);
  dets.push_back(det(1, 3, {0, 0, 5, 5}, 0.5));
  r = evaluate(dets, ds);
  EXPECT_EQ(*r.classes[2].ap, 0.0);
  EXPECT_EQ(r.mean_ap, 1.0);
}

TEST(Evaluate, UnknownIdsRejected) {
  const Dataset ds = two_class();
  EXPECT_THROW(evaluate(std::vector<Detection>{det(1, 9, {0, 0, 1, 1}, 0.5)}, ds), IntegrityError);
  EXPECT_THROW(evaluate(std::vector<Detection>{det(9, 1, {0, 0, 1, 1}, 0.5)}, ds), IntegrityError);
}

TEST(ParseDetections, ValidAndInvalid) {
  const auto d = parse_detections(
      R"([{"image_id": 1, "category_id": 2, "bbox": [1.5, 2, 3, 4.25], "score": 0.5}])");
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].bbox.x, 1.5);
  EXPECT_EQ(d[0].bbox.h, 4.25);
  EXPECT_TRUE(parse_detections("[]").empty());
  EXPECT_THROW(parse_detections("{}"), ParseError);
  EXPECT_THROW(parse_detections("[{"), ParseError);
  EXPECT_THROW(parse_detections(R"([{"image_id": 1, "category_id": 2, "bbox": [1, 2, 3], "score": 0.5}])"),
               ParseError);
  EXPECT_THROW(parse_detections(R"([{"image_id": 1, "category_id": 2, "bbox": [1, 2, 3, 4], "score": 1.5}])"),
               ParseError);
  EXPECT_THROW(parse_detections(R"([{"image_id": 1, "category_id": 2, "bbox": [1, 2, 0, 4], "score": 0.5}])"),
               ParseError);
  EXPECT_THROW(parse_detections(R"([{"image_id": "1", "category_id": 2, "bbox": [1, 2, 3, 4], "score": 0.5}])"),
               ParseError);
  EXPECT_THROW(parse_detections(R"([{"category_id": 2, "bbox": [1, 2, 3, 4], "score": 0.5}])"), ParseError);
}

}  // namespace
}  // namespace padx::eval
