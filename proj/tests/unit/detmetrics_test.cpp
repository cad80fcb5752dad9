#include <gtest/gtest.h>

#include <random>

#include "limeeval/detmetrics.hpp"
#include "limeeval/error.hpp"
#include "support/oracles.hpp"

using namespace limeeval;
using limeeval::testing::oracle_map;
using limeeval::testing::random_scene;

namespace {

GroundTruthSet one_box(BBox b = {0, 0, 10, 10}) {
  return {{{"a", 10, 10}}, {{"a", 1, b, false}}, {1}};
}

}  // namespace

TEST(Iou, Examples) {
  EXPECT_EQ(iou({0, 0, 2, 2}, {0, 0, 2, 2}), 1.0);
  EXPECT_EQ(iou({0, 0, 2, 2}, {5, 5, 2, 2}), 0.0);
  EXPECT_EQ(iou({0, 0, 2, 2}, {2, 0, 2, 2}), 0.0);  // touching edges
  EXPECT_DOUBLE_EQ(iou({0, 0, 2, 2}, {1, 1, 2, 2}), 1.0 / 7.0);
  EXPECT_EQ(iou({0, 0, 0, 0}, {0, 0, 0, 0}), 0.0);
}

TEST(Iou, Thresholds) {
  const auto t = iou_thresholds();
  EXPECT_EQ(t[0], 0.5);
  EXPECT_EQ(t[2], 0.6);
  EXPECT_EQ(t[9], 0.95);
}

TEST(EvaluateMap, PerfectAndEmpty) {
  const auto gt = one_box();
  for (double score : {0.01, 0.5, 1.0}) {
    const auto r = evaluate_map(gt, {{{"a", 1, {0, 0, 10, 10}, score}}});
    EXPECT_EQ(r.map, 1.0);
    EXPECT_EQ(r.ap50, 1.0);
  }
  const auto none = evaluate_map(gt, {});
  EXPECT_EQ(none.map, 0.0);
  EXPECT_EQ(none.ap50, 0.0);
}

TEST(EvaluateMap, IouPointSixCountsAtThreeThresholds) {
  const auto r = evaluate_map(one_box(), {{{"a", 1, {0, 0, 10, 6}, 0.9}}});
  EXPECT_EQ(r.map, 0.3);
  EXPECT_EQ(r.ap50, 1.0);
  EXPECT_EQ(r.per_threshold[2], 1.0);
  EXPECT_EQ(r.per_threshold[3], 0.0);
}

TEST(EvaluateMap, CategoriesWithoutGroundTruthAreSkipped) {
  GroundTruthSet gt = one_box();
  gt.categories = {1, 2};
  const auto r = evaluate_map(gt, {{{"a", 1, {0, 0, 10, 10}, 0.9}, {"a", 2, {0, 0, 5, 5}, 0.8}}});
  EXPECT_EQ(r.map, 1.0);
  EXPECT_EQ(r.per_category.size(), 1u);
}

TEST(EvaluateMap, IgnoredGroundTruthAbsorbsDetections) {
  GroundTruthSet gt{{{"a", 100, 100}},
                    {{"a", 1, {0, 0, 10, 10}, false}, {"a", 1, {50, 50, 40, 40}, true}},
                    {1}};
  // Two detections on the ignore region score above the true positive; they
  // must be neither TP nor FP.
  DetectionSet det{{{"a", 1, {50, 50, 40, 40}, 0.99},
                    {"a", 1, {52, 50, 38, 40}, 0.98},
                    {"a", 1, {0, 0, 10, 10}, 0.5}}};
  EXPECT_EQ(evaluate_map(gt, det).map, 1.0);
}

TEST(EvaluateMap, Errors) {
  const auto gt = one_box();
  EXPECT_THROW(evaluate_map(gt, {{{"a", 7, {0, 0, 1, 1}, 0.5}}}), ValidationError);
  EXPECT_THROW(evaluate_map(gt, {{{"zzz", 1, {0, 0, 1, 1}, 0.5}}}), ValidationError);
  EXPECT_THROW(evaluate_map(gt, {{{"a", 1, {0, 0, 1, 1}, 1.5}}}), ValidationError);
  EXPECT_THROW(evaluate_map(gt, {{{"a", 1, {0, 0, -1, 1}, 0.5}}}), ValidationError);
  GroundTruthSet bad = gt;
  bad.annotations[0].category_id = 3;
  EXPECT_THROW(evaluate_map(bad, {}), ValidationError);
}

TEST(EvaluateMap, CapsDetectionsPerImageAndCategory) {
  const auto gt = one_box();
  DetectionSet det;
  for (int i = 0; i < 150; ++i) det.detections.push_back({"a", 1, {60, 60, 5, 5}, 0.9});
  det.detections.push_back({"a", 1, {0, 0, 10, 10}, 0.1});
  // The true positive ranks 151st and falls outside the cap.
  EXPECT_EQ(evaluate_map(gt, det).map, 0.0);
}

TEST(EvaluateMap, GreedyPrefersHighestIouNotMaximumMatching) {
  // The top detection overlaps both boxes and takes the better one, which
  // leaves the second detection without a partner.
  GroundTruthSet gt{{{"a", 100, 100}},
                    {{"a", 1, {0, 0, 10, 10}, false}, {"a", 1, {1, 0, 10, 10}, false}},
                    {1}};
  DetectionSet det{{{"a", 1, {1, 0, 10, 10}, 0.9}, {"a", 1, {2, 0, 10, 10}, 0.8}}};
  const std::vector<std::vector<double>> ious = {
      {iou(det.detections[0].bbox, gt.annotations[0].bbox),
       iou(det.detections[0].bbox, gt.annotations[1].bbox)},
      {iou(det.detections[1].bbox, gt.annotations[0].bbox),
       iou(det.detections[1].bbox, gt.annotations[1].bbox)}};
  const double thr = 0.75;
  EXPECT_EQ(limeeval::testing::maximum_tp(ious, {false, false}, thr), 2u);
  const auto greedy = limeeval::testing::exhaustive_match(ious, {false, false}, thr);
  EXPECT_EQ(greedy, (std::vector<int>{1, 0}));

  const auto r = evaluate_map(gt, det);
  const auto o = oracle_map(gt, det);
  EXPECT_EQ(r.per_threshold, o.per_threshold);
}

TEST(EvaluateMap, MatchesExhaustiveOracle) {
  std::mt19937_64 rng(42);
  for (int n = 0; n < 60; ++n) {
    const auto scene = random_scene(rng, 5, 4, n % 3 == 0);
    const auto got = evaluate_map(scene.gt, scene.det);
    const auto want = oracle_map(scene.gt, scene.det);
    EXPECT_EQ(got.per_threshold, want.per_threshold) << "scene " << n;
    EXPECT_EQ(got.map, want.map) << "scene " << n;
    EXPECT_GE(got.ap50, got.map);
    EXPECT_LE(want.greedy_tp, want.maximum_tp);
  }
}

TEST(EvaluateMap, PermutationInvariantForDistinctScores) {
  std::mt19937_64 rng(43);
  for (int n = 0; n < 20; ++n) {
    auto scene = random_scene(rng, 6, 4);
    const auto base = evaluate_map(scene.gt, scene.det);
    std::shuffle(scene.det.detections.begin(), scene.det.detections.end(), rng);
    EXPECT_EQ(evaluate_map(scene.gt, scene.det).map, base.map);
  }
}

TEST(EvaluateMap, LowScoreClutterNeverHelps) {
  std::mt19937_64 rng(44);
  for (int n = 0; n < 30; ++n) {
    auto scene = random_scene(rng, 4, 3);
    const auto base = evaluate_map(scene.gt, scene.det);
    scene.det.detections.push_back({"s0", 1, {500, 500, 3, 3}, 0.0});
    const auto more = evaluate_map(scene.gt, scene.det);
    EXPECT_LE(more.map, base.map);
    for (const auto& [c, ap] : more.per_category) EXPECT_LE(ap, base.per_category.at(c));
  }
}

TEST(DetectionJson, RoundTripAndCocoFlavours) {
  const std::string gt_text = R"({
    "images": [{"id": 7, "width": 20, "height": 10}, {"id": "b", "width": 5, "height": 5}],
    "annotations": [
      {"id": 1, "image_id": 7, "category_id": 3, "bbox": [1, 2, 3, 4], "iscrowd": 1},
      {"id": 2, "image_id": "b", "category_id": 3, "bbox": [0, 0, 2, 2]}
    ],
    "categories": [{"id": 3, "name": "thing"}]
  })";
  const auto gt = ground_truth_from_json(gt_text);
  ASSERT_EQ(gt.images.size(), 2u);
  EXPECT_EQ(gt.images[0].id, "7");
  EXPECT_TRUE(gt.annotations[0].ignore);
  EXPECT_FALSE(gt.annotations[1].ignore);
  const auto again = ground_truth_from_json(to_json(gt));
  EXPECT_EQ(again.annotations[0].bbox, gt.annotations[0].bbox);
  EXPECT_EQ(again.categories, gt.categories);

  const auto det = detections_from_json(R"([{"image_id": 7, "category_id": 3,
      "bbox": [1, 2, 3, 4], "score": 0.5}])");
  EXPECT_EQ(det.detections[0].image_id, "7");
  EXPECT_EQ(detections_from_json(to_json(det)).detections[0].bbox, det.detections[0].bbox);

  EXPECT_THROW(ground_truth_from_json("{"), FormatError);
  EXPECT_THROW(ground_truth_from_json(R"({"images": []})"), FormatError);
  EXPECT_THROW(detections_from_json("{}"), FormatError);
  EXPECT_THROW(detections_from_json(R"([{"image_id": 1}])"), FormatError);
}
