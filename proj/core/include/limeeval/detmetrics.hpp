#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace limeeval {

/// Axis-aligned box as [x, y, w, h] in pixels.
struct BBox {
  double x = 0, y = 0, w = 0, h = 0;

  double area() const { return w * h; }
  bool operator==(const BBox&) const = default;
};

struct GtImage {
  std::string id;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
};

struct GtAnnotation {
  std::string image_id;
  std::int64_t category_id = 0;
  BBox bbox;
  bool ignore = false;
};

struct GroundTruthSet {
  std::vector<GtImage> images;
  std::vector<GtAnnotation> annotations;
  std::vector<std::int64_t> categories;
};

struct Detection {
  std::string image_id;
  std::int64_t category_id = 0;
  BBox bbox;
  double score = 0.0;
};

struct DetectionSet {
  std::vector<Detection> detections;
};

inline constexpr int kIouThresholdCount = 10;
inline constexpr int kRecallPointCount = 101;
inline constexpr std::size_t kMaxDetections = 100;

/// 0.50, 0.55, ..., 0.95.
std::array<double, kIouThresholdCount> iou_thresholds();

struct APResult {
  double map = 0.0;
  double ap50 = 0.0;
  /// AP averaged over thresholds, per category with at least one
  /// non-ignored ground truth.
  std::map<std::int64_t, double> per_category;
  /// AP averaged over categories, per IoU threshold.
  std::array<double, kIouThresholdCount> per_threshold{};
};

double iou(const BBox& a, const BBox& b);

void validate(const GroundTruthSet& gt);

/// COCO-protocol bbox AP. Detections are ranked by score (ties keep input
/// order), capped at kMaxDetections per image and category, and matched
/// greedily to the best unmatched ground truth at each threshold.
APResult evaluate_map(const GroundTruthSet& gt, const DetectionSet& det);

/// COCO annotation document subset: images, annotations, categories.
/// Numeric image ids are converted to their decimal string.
GroundTruthSet ground_truth_from_json(const std::string& text);
GroundTruthSet load_ground_truth(const std::filesystem::path& path);
std::string to_json(const GroundTruthSet& gt, int indent = -1);

/// COCO results list: [{image_id, category_id, bbox, score}, ...].
DetectionSet detections_from_json(const std::string& text);
DetectionSet load_detections(const std::filesystem::path& path);
std::string to_json(const DetectionSet& det, int indent = -1);

std::string to_json(const APResult& r, int indent = 2);

}  // namespace limeeval
