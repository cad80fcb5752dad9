#include "limeeval/detmetrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "limeeval/error.hpp"

namespace limeeval {

namespace {

using json = nlohmann::json;

struct MatchedDet {
  double score;
  bool tp;
  bool ignored;
};

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io_error("cannot open", path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string id_string(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  throw FormatError("image id must be a string or an integer");
}

BBox bbox_from_json(const json& v) {
  if (!v.is_array() || v.size() != 4) throw FormatError("bbox must be [x, y, w, h]");
  return {v[0].get<double>(), v[1].get<double>(), v[2].get<double>(),
          v[3].get<double>()};
}

bool flag(const json& obj, const char* key) {
  if (!obj.contains(key)) return false;
  const auto& v = obj.at(key);
  if (v.is_boolean()) return v.get<bool>();
  return v.get<double>() != 0.0;
}

void check_box(const BBox& b) {
  if (!std::isfinite(b.x) || !std::isfinite(b.y) || !std::isfinite(b.w) ||
      !std::isfinite(b.h)) {
    throw ValidationError("bbox has non-finite coordinates");
  }
  if (b.w < 0.0 || b.h < 0.0) throw ValidationError("bbox has negative extent");
}

// AP of one (category, threshold) cell from score-sorted matched detections.
double interpolated_ap(const std::vector<MatchedDet>& dets, std::size_t positives) {
  std::vector<double> recall;
  std::vector<double> precision;
  recall.reserve(dets.size());
  precision.reserve(dets.size());
  double tp = 0, fp = 0;
  for (const auto& d : dets) {
    if (d.ignored) continue;
    (d.tp ? tp : fp) += 1.0;
    recall.push_back(tp / static_cast<double>(positives));
    precision.push_back(tp / (tp + fp));
  }
  for (std::size_t i = precision.size(); i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double sum = 0.0;
  for (int r = 0; r < kRecallPointCount; ++r) {
    const double level = r / 100.0;
    const auto it = std::lower_bound(recall.begin(), recall.end(), level);
    if (it != recall.end()) sum += precision[static_cast<std::size_t>(it - recall.begin())];
  }
  return sum / kRecallPointCount;
}

}  // namespace

std::array<double, kIouThresholdCount> iou_thresholds() {
  std::array<double, kIouThresholdCount> t{};
  for (int i = 0; i < kIouThresholdCount; ++i) t[i] = (50 + 5 * i) / 100.0;
  return t;
}

double iou(const BBox& a, const BBox& b) {
  const double iw = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  const double ih = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return inter / uni;
}

void validate(const GroundTruthSet& gt) {
  std::set<std::string> images;
  for (const auto& im : gt.images) {
    if (!images.insert(im.id).second) {
      throw ValidationError("duplicate ground-truth image '" + im.id + "'");
    }
  }
  const std::set<std::int64_t> cats(gt.categories.begin(), gt.categories.end());
  for (const auto& a : gt.annotations) {
    if (!images.count(a.image_id)) {
      throw ValidationError("annotation references unknown image '" + a.image_id + "'");
    }
    if (!cats.count(a.category_id)) {
      throw ValidationError("annotation references unknown category " +
                            std::to_string(a.category_id));
    }
    check_box(a.bbox);
  }
}

APResult evaluate_map(const GroundTruthSet& gt, const DetectionSet& det) {
  validate(gt);
  const std::set<std::int64_t> cats(gt.categories.begin(), gt.categories.end());
  std::unordered_map<std::string, std::size_t> image_index;
  for (std::size_t i = 0; i < gt.images.size(); ++i) image_index[gt.images[i].id] = i;

  for (const auto& d : det.detections) {
    if (!cats.count(d.category_id)) {
      throw ValidationError("detection has unknown category " +
                            std::to_string(d.category_id));
    }
    if (!image_index.count(d.image_id)) {
      throw ValidationError("detection references unknown image '" + d.image_id + "'");
    }
    if (!std::isfinite(d.score) || d.score < 0.0 || d.score > 1.0) {
      throw ValidationError("detection score outside [0,1]");
    }
    check_box(d.bbox);
  }

  const std::size_t n_images = gt.images.size();
  // Per category, per image: ground truth and detections in input order.
  std::map<std::int64_t, std::vector<std::vector<const GtAnnotation*>>> gts;
  std::map<std::int64_t, std::vector<std::vector<const Detection*>>> dts;
  for (auto c : cats) {
    gts[c].resize(n_images);
    dts[c].resize(n_images);
  }
  for (const auto& a : gt.annotations) gts[a.category_id][image_index[a.image_id]].push_back(&a);
  for (const auto& d : det.detections) dts[d.category_id][image_index[d.image_id]].push_back(&d);

  const auto thresholds = iou_thresholds();
  APResult result;
  std::array<double, kIouThresholdCount> threshold_sum{};
  std::size_t evaluated = 0;

  for (auto c : cats) {
    std::size_t positives = 0;
    for (const auto& g : gts[c]) {
      for (const auto* a : g) positives += a->ignore ? 0 : 1;
    }
    if (positives == 0) continue;

    std::array<std::vector<MatchedDet>, kIouThresholdCount> matched;
    for (std::size_t im = 0; im < n_images; ++im) {
      auto g = gts[c][im];
      std::stable_partition(g.begin(), g.end(), [](const auto* a) { return !a->ignore; });
      auto d = dts[c][im];
      std::stable_sort(d.begin(), d.end(),
                       [](const auto* a, const auto* b) { return a->score > b->score; });
      if (d.size() > kMaxDetections) d.resize(kMaxDetections);

      std::vector<std::vector<double>> ious(d.size(), std::vector<double>(g.size()));
      for (std::size_t i = 0; i < d.size(); ++i) {
        for (std::size_t j = 0; j < g.size(); ++j) ious[i][j] = iou(d[i]->bbox, g[j]->bbox);
      }

      for (int t = 0; t < kIouThresholdCount; ++t) {
        std::vector<bool> gt_used(g.size(), false);
        for (std::size_t i = 0; i < d.size(); ++i) {
          double best = std::min(thresholds[t], 1.0 - 1e-10);
          long m = -1;
          for (std::size_t j = 0; j < g.size(); ++j) {
            // Ignored regions may absorb any number of detections.
            if (gt_used[j] && !g[j]->ignore) continue;
            if (m > -1 && !g[m]->ignore && g[j]->ignore) break;
            if (ious[i][j] < best) continue;
            best = ious[i][j];
            m = static_cast<long>(j);
          }
          MatchedDet md{d[i]->score, false, false};
          if (m > -1) {
            gt_used[static_cast<std::size_t>(m)] = true;
            md.ignored = g[m]->ignore;
            md.tp = !md.ignored;
          }
          matched[t].push_back(md);
        }
      }
    }

    double cat_sum = 0.0;
    for (int t = 0; t < kIouThresholdCount; ++t) {
      std::stable_sort(matched[t].begin(), matched[t].end(),
                       [](const auto& a, const auto& b) { return a.score > b.score; });
      const double ap = interpolated_ap(matched[t], positives);
      threshold_sum[t] += ap;
      cat_sum += ap;
    }
    result.per_category[c] = cat_sum / kIouThresholdCount;
    ++evaluated;
  }

  if (evaluated == 0) return result;
  double total = 0.0;
  for (int t = 0; t < kIouThresholdCount; ++t) {
    result.per_threshold[t] = threshold_sum[t] / static_cast<double>(evaluated);
    total += threshold_sum[t];
  }
  result.map = total / static_cast<double>(evaluated * kIouThresholdCount);
  result.ap50 = result.per_threshold[0];
  return result;
}

GroundTruthSet ground_truth_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("ground truth is not valid JSON: ") + e.what());
  }
  GroundTruthSet gt;
  try {
    for (const auto& im : doc.at("images")) {
      gt.images.push_back({id_string(im.at("id")), im.value("width", 0u),
                           im.value("height", 0u)});
    }
    for (const auto& a : doc.at("annotations")) {
      gt.annotations.push_back({id_string(a.at("image_id")),
                                a.at("category_id").get<std::int64_t>(),
                                bbox_from_json(a.at("bbox")),
                                flag(a, "ignore") || flag(a, "iscrowd")});
    }
    for (const auto& c : doc.at("categories")) {
      gt.categories.push_back(c.at("id").get<std::int64_t>());
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed ground truth: ") + e.what());
  }
  validate(gt);
  return gt;
}

GroundTruthSet load_ground_truth(const std::filesystem::path& path) {
  return ground_truth_from_json(read_file(path));
}

std::string to_json(const GroundTruthSet& gt, int indent) {
  json doc;
  doc["images"] = json::array();
  for (const auto& im : gt.images) {
    doc["images"].push_back({{"id", im.id}, {"width", im.width}, {"height", im.height}});
  }
  doc["annotations"] = json::array();
  std::int64_t ann_id = 1;
  for (const auto& a : gt.annotations) {
    doc["annotations"].push_back({{"id", ann_id++},
                                  {"image_id", a.image_id},
                                  {"category_id", a.category_id},
                                  {"bbox", {a.bbox.x, a.bbox.y, a.bbox.w, a.bbox.h}},
                                  {"ignore", a.ignore ? 1 : 0}});
  }
  doc["categories"] = json::array();
  for (auto c : gt.categories) {
    doc["categories"].push_back({{"id", c}, {"name", "category_" + std::to_string(c)}});
  }
  return doc.dump(indent);
}

DetectionSet detections_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("detections are not valid JSON: ") + e.what());
  }
  if (!doc.is_array()) throw FormatError("detections must be a JSON array");
  DetectionSet out;
  try {
    for (const auto& d : doc) {
      out.detections.push_back({id_string(d.at("image_id")),
                                d.at("category_id").get<std::int64_t>(),
                                bbox_from_json(d.at("bbox")),
                                d.at("score").get<double>()});
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed detections: ") + e.what());
  }
  return out;
}

DetectionSet load_detections(const std::filesystem::path& path) {
  return detections_from_json(read_file(path));
}

std::string to_json(const DetectionSet& det, int indent) {
  json doc = json::array();
  for (const auto& d : det.detections) {
    doc.push_back({{"image_id", d.image_id},
                   {"category_id", d.category_id},
                   {"bbox", {d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h}},
                   {"score", d.score}});
  }
  return doc.dump(indent);
}

std::string to_json(const APResult& r, int indent) {
  json doc;
  doc["mAP"] = r.map;
  doc["ap50"] = r.ap50;
  doc["per_category"] = json::object();
  for (const auto& [c, ap] : r.per_category) doc["per_category"][std::to_string(c)] = ap;
  doc["per_threshold"] = json::array();
  const auto t = iou_thresholds();
  for (int i = 0; i < kIouThresholdCount; ++i) {
    doc["per_threshold"].push_back({{"iou", t[i]}, {"ap", r.per_threshold[i]}});
  }
  return doc.dump(indent);
}

}  // namespace limeeval
