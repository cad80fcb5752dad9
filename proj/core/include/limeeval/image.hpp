#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace limeeval {

/// RGB raster with channels as reals in [0, 1], interleaved row-major.
struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> data;

  Image() = default;
  Image(std::size_t w, std::size_t h, double fill = 0.0)
      : width(w), height(h), data(w * h * 3, fill) {}

  std::size_t pixels() const { return width * height; }

  double& at(std::size_t y, std::size_t x, std::size_t c) {
    return data[(y * width + x) * 3 + c];
  }
  double at(std::size_t y, std::size_t x, std::size_t c) const {
    return data[(y * width + x) * 3 + c];
  }

  bool operator==(const Image&) const = default;
};

/// v -> floor(v * 255 + 0.5), clamped to [0, 255].
std::uint8_t quantize(double v);

/// Rounds every channel to the 8-bit grid (values become k/255).
Image quantized(const Image& img);

std::vector<std::uint8_t> to_rgb8(const Image& img);
Image from_rgb8(std::size_t width, std::size_t height,
                const std::vector<std::uint8_t>& rgb);

/// Reads an 8-bit PNG (gray, palette and alpha variants are expanded to
/// RGB). Throws FormatError for anything that is not a PNG.
Image read_image(const std::filesystem::path& path);

/// Writes an 8-bit RGB PNG. Output bytes depend only on the pixel values.
void write_image(const Image& img, const std::filesystem::path& path);

}  // namespace limeeval
