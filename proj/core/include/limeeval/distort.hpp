#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "limeeval/image.hpp"

namespace limeeval {

// ---------------------------------------------------------------- colour --

struct Hsv {
  double h = 0.0;  ///< degrees in [0, 360)
  double s = 0.0;  ///< [0, 1]
  double v = 0.0;  ///< [0, 1]
};

Hsv rgb_to_hsv(double r, double g, double b);
std::array<double, 3> hsv_to_rgb(const Hsv& hsv);

// ------------------------------------------------------------ parameters --

enum class Degradation {
  kGaussianBlur,
  kGaussianNoise,
  kImpulseNoise,
  kShotNoise,
  kBrightness,
  kSaturate,
};

enum class Exposure {
  kUnder1_5,
  kUnder2_0,
  kOver0_75,
  kOver0_5,
  kIdentity,
};

inline constexpr std::array<Degradation, 6> kAllDegradations = {
    Degradation::kGaussianBlur, Degradation::kGaussianNoise,
    Degradation::kImpulseNoise, Degradation::kShotNoise,
    Degradation::kBrightness,   Degradation::kSaturate};

inline constexpr std::array<Exposure, 5> kAllExposures = {
    Exposure::kUnder1_5, Exposure::kUnder2_0, Exposure::kOver0_75,
    Exposure::kOver0_5, Exposure::kIdentity};

inline constexpr int kLevelCount = 5;

/// Per-level constants of the synthetic distortion grid.
struct LevelTables {
  static constexpr std::array<double, 5> blur_sigma = {0.1, 0.2, 0.4, 0.8, 1.6};
  static constexpr std::array<double, 5> gauss_levels = {5, 10, 15, 20, 25};
  static constexpr std::array<double, 5> impulse_amount = {0.01, 0.025, 0.05, 0.075, 0.1};
  static constexpr std::array<double, 5> shot_levels = {60, 45, 30, 20, 12};
  static constexpr std::array<double, 5> brightness_delta = {0.1, 0.2, 0.3, 0.4, 0.5};
  static constexpr std::array<double, 5> saturate_alpha = {0.3, 0.1, 2, 5, 20};
  static constexpr std::array<double, 5> saturate_beta = {0, 0, 0, 0.1, 0.2};
};

double gamma_of(Exposure e);

std::string_view to_string(Degradation d);
std::string_view to_string(Exposure e);
Degradation parse_degradation(std::string_view name);
Exposure parse_exposure(std::string_view name);

struct DistortionSpec {
  Degradation degradation = Degradation::kGaussianBlur;
  int level_index = 0;
  Exposure exposure = Exposure::kIdentity;

  bool operator==(const DistortionSpec&) const = default;
};

void validate(const DistortionSpec& spec);

/// "degradation:level:exposure", e.g. "shot_noise:3:over_0.5".
std::string to_string(const DistortionSpec& spec);
DistortionSpec parse_spec(std::string_view text);

/// The full degradation x level x exposure grid (150 members).
std::vector<DistortionSpec> full_grid();

// ------------------------------------------------------------ operations --

using Rng = std::mt19937_64;

Image apply_gamma(const Image& img, double gamma);
Image apply_gaussian_blur(const Image& img, double sigma);
/// Normalised 1-D kernel of radius ceil(3 sigma).
std::vector<double> gaussian_kernel(double sigma);
/// `level` is on the 8-bit scale: the noise std is level / 255.
Image apply_gaussian_noise(const Image& img, double level, Rng& rng);
Image apply_impulse_noise(const Image& img, double amount, Rng& rng);
Image apply_shot_noise(const Image& img, double level, Rng& rng);
Image apply_brightness(const Image& img, double delta);
Image apply_saturate(const Image& img, double alpha, double beta);

/// Applies one degradation at its table level (no exposure shift).
Image apply_degradation(const Image& img, Degradation d, int level_index, Rng& rng);

/// Generator state derived from (seed, image id, spec).
std::uint64_t variant_stream_seed(std::uint64_t seed, std::string_view image_id,
                                  const DistortionSpec& spec);

/// Degradation first, then the exposure shift.
Image synthesize_variant(const Image& img, const DistortionSpec& spec,
                         std::uint64_t seed, std::string_view image_id);

struct ManifestEntry {
  DistortionSpec spec;
  std::vector<std::string> files;  ///< relative to the output directory
};

struct DistortionManifest {
  std::uint64_t seed = 0;
  std::vector<std::string> images;  ///< source image ids
  std::vector<ManifestEntry> variants;
};

/// Directory name of a variant under the output root.
std::string variant_dir_name(const DistortionSpec& spec);

/// Distorts every PNG in `input_dir` under each spec, writing
/// `<output_dir>/<variant>/<image>.png` and `<output_dir>/manifest.json`.
DistortionManifest synthesize_dataset(const std::filesystem::path& input_dir,
                                      const std::filesystem::path& output_dir,
                                      const std::vector<DistortionSpec>& specs,
                                      std::uint64_t seed);

std::string to_json(const DistortionManifest& m, int indent = 2);

}  // namespace limeeval
