#pragma once

#include <cstdint>
#include <vector>

#include "limeeval/detmetrics.hpp"
#include "limeeval/heatmap.hpp"

namespace limeeval {

/// Knobs of the synthetic oracle detector. Severity 0 reproduces the ground
/// truth at `base_confidence`; severity 1 leaves only the noise floor.
struct SimSpec {
  double severity = 0.0;
  double base_confidence = 0.95;
  double noise_sigma = 0.02;
  std::uint32_t grid_stride = 8;
  std::uint64_t seed = 0;
};

void validate(const SimSpec& spec);

/// One single-scale heatmap per ground-truth image, at `grid_stride`.
/// Class channels follow the sorted category ids. The noise draws depend on
/// (seed, image id) only, so a severity ladder shares one noise realisation.
std::vector<DetectorHeatmaps> render_heatmaps(const GroundTruthSet& gt,
                                              const SimSpec& spec);

/// Every ground-truth box as a detection with a degraded score and
/// severity-proportional box jitter; scores below 0.05 are dropped.
DetectionSet render_detections(const GroundTruthSet& gt, const SimSpec& spec);

/// Random scene fixture: `images` frames of width x height with 1..max_boxes
/// boxes each drawn from `categories` categories (ids 1..categories).
GroundTruthSet synthetic_ground_truth(std::size_t images, std::uint64_t seed,
                                      std::uint32_t width = 96,
                                      std::uint32_t height = 64,
                                      std::uint32_t categories = 3,
                                      std::uint32_t max_boxes = 4);

}  // namespace limeeval
