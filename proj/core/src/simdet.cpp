#include "limeeval/simdet.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <random>
#include <string_view>

#include "limeeval/error.hpp"

namespace limeeval {

namespace {

std::uint64_t stream_seed(std::uint64_t seed, std::string_view image_id,
                          std::uint64_t salt) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ salt;
  for (unsigned char c : image_id) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
  std::uint64_t out = 0;
  std::array<std::uint32_t, 2> words{};
  seq.generate(words.begin(), words.end());
  out = (std::uint64_t{words[0]} << 32) | words[1];
  return out;
}

float unit(double v) { return static_cast<float>(std::clamp(v, 0.0, 1.0)); }

struct Extent {
  double width;
  double height;
};

std::map<std::string, Extent> image_extents(const GroundTruthSet& gt) {
  std::map<std::string, Extent> ext;
  for (const auto& im : gt.images) ext[im.id] = {double(im.width), double(im.height)};
  for (const auto& a : gt.annotations) {
    auto& e = ext[a.image_id];
    e.width = std::max(e.width, a.bbox.x + a.bbox.w);
    e.height = std::max(e.height, a.bbox.y + a.bbox.h);
  }
  return ext;
}

}  // namespace

void validate(const SimSpec& spec) {
  if (!(spec.severity >= 0.0 && spec.severity <= 1.0)) {
    throw ValidationError("severity must lie in [0,1]");
  }
  if (!(spec.base_confidence > 0.0 && spec.base_confidence <= 1.0)) {
    throw ValidationError("base confidence must lie in (0,1]");
  }
  if (!(spec.noise_sigma >= 0.0) || !std::isfinite(spec.noise_sigma)) {
    throw ValidationError("noise sigma must be non-negative");
  }
  if (spec.grid_stride == 0) throw ValidationError("grid stride must be positive");
}

std::vector<DetectorHeatmaps> render_heatmaps(const GroundTruthSet& gt,
                                              const SimSpec& spec) {
  validate(spec);
  validate(gt);
  std::vector<std::int64_t> cats = gt.categories;
  std::sort(cats.begin(), cats.end());
  cats.erase(std::unique(cats.begin(), cats.end()), cats.end());
  if (cats.empty()) throw ValidationError("ground truth has no categories");
  std::map<std::int64_t, std::uint32_t> channel;
  for (std::size_t i = 0; i < cats.size(); ++i) channel[cats[i]] = static_cast<std::uint32_t>(i);

  const auto extents = image_extents(gt);
  std::map<std::string, std::vector<const GtAnnotation*>> boxes;
  for (const auto& a : gt.annotations) {
    if (!a.ignore) boxes[a.image_id].push_back(&a);
  }

  const double signal = spec.base_confidence * (1.0 - spec.severity);
  const double stride = spec.grid_stride;
  const auto k = static_cast<std::uint32_t>(cats.size());

  std::vector<DetectorHeatmaps> out;
  out.reserve(gt.images.size());
  for (const auto& im : gt.images) {
    const auto& ext = extents.at(im.id);
    const auto h = std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::ceil(ext.height / stride)));
    const auto w = std::max<std::uint32_t>(1, static_cast<std::uint32_t>(std::ceil(ext.width / stride)));
    ScaleMap s(h, w, k);

    std::mt19937_64 rng(stream_seed(spec.seed, im.id, 0x6865));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> bg_noise(s.cells());
    std::vector<double> cls_noise(s.cls.size());
    for (auto& n : bg_noise) n = spec.noise_sigma * gauss(rng);
    for (auto& n : cls_noise) n = spec.noise_sigma * gauss(rng);

    for (std::size_t c = 0; c < s.cells(); ++c) s.bg[c] = unit(1.0 - std::abs(bg_noise[c]));
    for (std::size_t n = 0; n < s.cls.size(); ++n) s.cls[n] = unit(std::abs(cls_noise[n]));

    const auto it = boxes.find(im.id);
    if (it != boxes.end()) {
      for (const auto* a : it->second) {
        const std::uint32_t y = channel.at(a->category_id);
        for (std::uint32_t i = 0; i < h; ++i) {
          const double cy = (i + 0.5) * stride;
          if (cy < a->bbox.y || cy > a->bbox.y + a->bbox.h) continue;
          for (std::uint32_t j = 0; j < w; ++j) {
            const double cx = (j + 0.5) * stride;
            if (cx < a->bbox.x || cx > a->bbox.x + a->bbox.w) continue;
            const std::size_t cell = std::size_t{i} * w + j;
            const float objectness = unit(signal + bg_noise[cell]);
            s.bg[cell] = std::min(s.bg[cell], 1.0f - objectness);
            const std::size_t idx = y * s.cells() + cell;
            s.cls[idx] = std::max(s.cls[idx], unit(signal + cls_noise[idx]));
          }
        }
      }
    }
    out.push_back({im.id, {std::move(s)}});
  }
  return out;
}

DetectionSet render_detections(const GroundTruthSet& gt, const SimSpec& spec) {
  validate(spec);
  validate(gt);
  std::map<std::string, std::vector<const GtAnnotation*>> boxes;
  for (const auto& a : gt.annotations) {
    if (!a.ignore) boxes[a.image_id].push_back(&a);
  }

  const double signal = spec.base_confidence * (1.0 - spec.severity);
  const double jitter = 0.1 * spec.severity;
  DetectionSet out;
  for (const auto& im : gt.images) {
    const auto it = boxes.find(im.id);
    if (it == boxes.end()) continue;
    std::mt19937_64 rng(stream_seed(spec.seed, im.id, 0x6474));
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (const auto* a : it->second) {
      // Draw a fixed number of variates per box so every severity sees the
      // same realisation.
      const double n = gauss(rng);
      const double u[4] = {uni(rng), uni(rng), uni(rng), uni(rng)};
      const double score = std::clamp(signal + spec.noise_sigma * n, 0.0, 1.0);
      if (score < 0.05) continue;
      const BBox& b = a->bbox;
      BBox jittered{b.x + jitter * b.w * u[0], b.y + jitter * b.h * u[1],
                    std::max(0.0, b.w + jitter * b.w * u[2]),
                    std::max(0.0, b.h + jitter * b.h * u[3])};
      out.detections.push_back({im.id, a->category_id, jittered, score});
    }
  }
  return out;
}

GroundTruthSet synthetic_ground_truth(std::size_t images, std::uint64_t seed,
                                      std::uint32_t width, std::uint32_t height,
                                      std::uint32_t categories,
                                      std::uint32_t max_boxes) {
  if (categories == 0 || max_boxes == 0 || width < 16 || height < 16) {
    throw ValidationError("synthetic scene parameters out of range");
  }
  GroundTruthSet gt;
  for (std::uint32_t c = 1; c <= categories; ++c) gt.categories.push_back(c);
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint32_t> count(1, max_boxes);
  std::uniform_int_distribution<std::uint32_t> cat(1, categories);
  for (std::size_t n = 0; n < images; ++n) {
    char id[32];
    std::snprintf(id, sizeof(id), "img_%04zu", n);
    gt.images.push_back({id, width, height});
    const auto boxes = count(rng);
    for (std::uint32_t b = 0; b < boxes; ++b) {
      std::uniform_int_distribution<std::uint32_t> bw(12, width / 2);
      std::uniform_int_distribution<std::uint32_t> bh(12, height / 2);
      const auto w = bw(rng);
      const auto h = bh(rng);
      std::uniform_int_distribution<std::uint32_t> bx(0, width - w);
      std::uniform_int_distribution<std::uint32_t> by(0, height - h);
      gt.annotations.push_back({id, cat(rng),
                                {double(bx(rng)), double(by(rng)), double(w), double(h)},
                                false});
    }
  }
  return gt;
}

}  // namespace limeeval
