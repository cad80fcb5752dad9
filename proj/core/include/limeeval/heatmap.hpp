#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace limeeval {

/// Detector output at one prediction scale, stored post-activation.
///
/// `bg` holds the background probability per cell (H*W, row-major) and
/// `cls` the per-class confidence (K*H*W, class-major then row-major). All
/// values lie in [0, 1].
struct ScaleMap {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint32_t class_count = 0;
  std::vector<float> bg;
  std::vector<float> cls;

  ScaleMap() = default;
  ScaleMap(std::uint32_t h, std::uint32_t w, std::uint32_t k);

  std::size_t cells() const { return std::size_t{height} * width; }

  float& bg_at(std::size_t i, std::size_t j) { return bg[i * width + j]; }
  float bg_at(std::size_t i, std::size_t j) const { return bg[i * width + j]; }
  float& cls_at(std::size_t y, std::size_t i, std::size_t j) {
    return cls[(y * height + i) * width + j];
  }
  float cls_at(std::size_t y, std::size_t i, std::size_t j) const {
    return cls[(y * height + i) * width + j];
  }

  bool operator==(const ScaleMap&) const = default;
};

/// All scales emitted by a detector for one image.
struct DetectorHeatmaps {
  std::string image_id;
  std::vector<ScaleMap> scales;

  std::uint32_t class_count() const {
    return scales.empty() ? 0 : scales.front().class_count;
  }

  bool operator==(const DetectorHeatmaps&) const = default;
};

/// Throws ValidationError / DimensionError when `s` is not a well-formed map.
void validate(const ScaleMap& s);
void validate(const DetectorHeatmaps& h);

// LMEH binary container. Integers are u32 little-endian, payload is f32
// little-endian:
//   "LMEH" | version=1 | S | K | per scale: H | W | bg[H*W] | cls[K*H*W]
// The image id is not part of the container; file-level helpers carry it in
// the file stem.
inline constexpr char kHeatmapMagic[4] = {'L', 'M', 'E', 'H'};
inline constexpr std::uint32_t kHeatmapVersion = 1;

std::vector<std::uint8_t> encode_heatmaps(const DetectorHeatmaps& h);
DetectorHeatmaps decode_heatmaps(std::span<const std::uint8_t> bytes,
                                 std::string image_id = {});

void write_heatmaps(const DetectorHeatmaps& h, std::ostream& sink);
DetectorHeatmaps read_heatmaps(std::istream& source, std::string image_id = {});

/// Writes `<dir>/<image_id>.lmeh`.
std::filesystem::path save_heatmaps(const DetectorHeatmaps& h,
                                    const std::filesystem::path& dir);
/// Reads one file; the image id is the file stem.
DetectorHeatmaps load_heatmaps(const std::filesystem::path& file);
/// Reads every `*.lmeh` in `dir`, sorted by file name.
std::vector<DetectorHeatmaps> load_heatmap_dir(const std::filesystem::path& dir);

}  // namespace limeeval
