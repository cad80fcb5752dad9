#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "limeeval/heatmap.hpp"

namespace limeeval {

enum class ScaleAggregation { kSum };

/// How per-cell terms are combined within an image.
enum class PixelNormalization {
  kSum,       ///< plain sum over cells (default)
  kPerPixelMean,  ///< divided by the total cell count; for cross-resolution use
};

struct EnergyConfig {
  double temperature = 0.01;
  ScaleAggregation scale_aggregation = ScaleAggregation::kSum;
  PixelNormalization normalization = PixelNormalization::kSum;
  /// Below this value of cls*(1-bg) the square root is treated as flat.
  double epsilon = 1e-12;

  bool operator==(const EnergyConfig&) const = default;
};

void validate(const EnergyConfig& cfg);

struct EnergyReport {
  std::map<std::string, double> per_image;
  double dataset_energy = 0.0;
  EnergyConfig config;
};

/// Fuses class confidence with objectness: sqrt(cls * (1 - bg)) per class
/// and cell. `cls` is K*H*W class-major, `bg` is H*W.
std::vector<double> reweight(std::span<const float> cls, std::span<const float> bg,
                             std::size_t class_count, double epsilon = 1e-12);

/// Tempered log-sum-exp T * log(sum exp(x / T)), shifted by max(x).
double tempered_logsumexp(std::span<const double> x, double temperature);

/// Energy of one scale: -sum over cells of tempered_logsumexp of the
/// re-weighted class vector.
double scale_energy(const ScaleMap& s, const EnergyConfig& cfg);

/// Image energy, summed over scales. Lower is better.
double image_energy(const DetectorHeatmaps& h, const EnergyConfig& cfg);

/// Per-image energies and their arithmetic mean. Image ids must be unique.
EnergyReport dataset_energy(std::span<const DetectorHeatmaps> images,
                            const EnergyConfig& cfg);

/// Candidate names ordered by ascending dataset energy, ties by name.
std::vector<std::string> rank_candidates(
    const std::map<std::string, EnergyReport>& candidates);

struct ScaleGradient {
  std::vector<double> d_cls;  ///< same layout as ScaleMap::cls
  std::vector<double> d_bg;   ///< same layout as ScaleMap::bg
};

/// Analytic gradient of image_energy with respect to every input value.
/// Entries where cls*(1-bg) <= epsilon are zero.
std::vector<ScaleGradient> energy_gradient(const DetectorHeatmaps& h,
                                           const EnergyConfig& cfg);

std::string to_json(const EnergyReport& report, int indent = 2);
EnergyReport energy_report_from_json(const std::string& text);

}  // namespace limeeval
