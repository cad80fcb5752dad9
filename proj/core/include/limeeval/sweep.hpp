#pragma once

#include <string>
#include <vector>

#include "limeeval/energy.hpp"
#include "limeeval/heatmap.hpp"

namespace limeeval {

/// One distorted dataset: its detector heatmaps and its measured mAP.
struct SweepDataset {
  std::string label;
  std::vector<DetectorHeatmaps> heatmaps;
  double map = 0.0;
};

struct SweepRow {
  double temperature = 0.0;
  double pearson = 0.0;
  double spearman = 0.0;
  double spearman_p = 1.0;
  std::vector<double> energies;  ///< per dataset, input order
};

/// Temperatures of the standard ablation grid.
std::vector<double> default_sweep_temperatures();

/// For each temperature, the correlation between dataset energy and mAP
/// across `datasets`. Needs at least three datasets.
std::vector<SweepRow> sweep_temperature(const std::vector<SweepDataset>& datasets,
                                        const std::vector<double>& temperatures,
                                        const EnergyConfig& base = {});

/// CSV with header `temperature,pearson,spearman,spearman_p`.
std::string to_csv(const std::vector<SweepRow>& rows);
std::string to_json(const std::vector<SweepRow>& rows,
                    const std::vector<SweepDataset>& datasets, int indent = 2);

}  // namespace limeeval
