#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace limeeval {

struct PairedPoint {
  std::string label;
  double x = 0.0;
  double y = 0.0;
};

struct PairedSeries {
  std::vector<PairedPoint> points;

  std::vector<double> xs() const;
  std::vector<double> ys() const;
  std::size_t size() const { return points.size(); }
};

/// Product-moment correlation. Throws UndefinedCorrelationError when either
/// coordinate has zero variance.
double pearson(std::span<const double> x, std::span<const double> y);
double pearson(const PairedSeries& s);

/// 1-based ranks with ties replaced by their average rank.
std::vector<double> average_ranks(std::span<const double> v);

struct SpearmanResult {
  double r = 0.0;
  double p = 1.0;  ///< two-sided
};

/// Rank correlation with a two-sided p-value from the Student-t
/// approximation (n - 2 degrees of freedom). Needs n >= 3.
SpearmanResult spearman(const PairedSeries& s);

/// Two-sided p-value for a correlation `r` over `n` points via
/// t = r * sqrt((n - 2) / (1 - r^2)). |r| == 1 gives 0.
double correlation_p_value(double r, std::size_t n);

/// Exact two-sided permutation p-value of Spearman's r, enumerating all n!
/// orderings. Only for n <= 10.
double spearman_permutation_p_value(const PairedSeries& s);

struct CalibrationModel {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares of y on x.
CalibrationModel fit_calibration(const PairedSeries& s);

/// slope * energy + intercept, clamped to [0, 1].
double predict_map(const CalibrationModel& m, double energy);

/// Rows of `label,x,y`; blank lines, `#` comments and a header row (first
/// row whose value columns are not numbers) are skipped.
PairedSeries parse_pairs_csv(const std::string& text);
PairedSeries load_pairs(const std::filesystem::path& path);

std::string to_json(const CalibrationModel& m, int indent = 2);
CalibrationModel calibration_from_json(const std::string& text);
CalibrationModel load_calibration(const std::filesystem::path& path);

}  // namespace limeeval
