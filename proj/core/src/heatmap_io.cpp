#include "limeeval/heatmap.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "limeeval/error.hpp"

namespace limeeval {

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

void put_f32(std::vector<std::uint8_t>& out, float v) {
  put_u32(out, std::bit_cast<std::uint32_t>(v));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t remaining() const { return bytes_.size() - pos_; }

  std::uint32_t u32(const char* field) {
    if (remaining() < 4) {
      throw FormatError(std::string("LMEH truncated while reading ") + field);
    }
    std::uint32_t v = 0;
    for (int b = 0; b < 4; ++b) v |= std::uint32_t{bytes_[pos_ + b]} << (8 * b);
    pos_ += 4;
    return v;
  }

  void f32_block(std::vector<float>& out, std::size_t count, const char* field) {
    if (count > remaining() / 4) {
      throw FormatError(std::string("LMEH truncated in ") + field + " payload");
    }
    out.resize(count);
    for (std::size_t n = 0; n < count; ++n) {
      std::uint32_t v = 0;
      for (int b = 0; b < 4; ++b) v |= std::uint32_t{bytes_[pos_ + b]} << (8 * b);
      out[n] = std::bit_cast<float>(v);
      pos_ += 4;
    }
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void check_unit_range(std::span<const float> values, const char* what) {
  for (float v : values) {
    if (!std::isfinite(v)) {
      throw ValidationError(std::string(what) + " contains a non-finite value");
    }
    if (v < 0.0f || v > 1.0f) {
      throw ValidationError(std::string(what) + " value " + std::to_string(v) +
                            " outside [0,1]");
    }
  }
}

}  // namespace

ScaleMap::ScaleMap(std::uint32_t h, std::uint32_t w, std::uint32_t k)
    : height(h),
      width(w),
      class_count(k),
      bg(std::size_t{h} * w, 0.0f),
      cls(std::size_t{k} * h * w, 0.0f) {}

void validate(const ScaleMap& s) {
  if (s.height == 0 || s.width == 0) {
    throw ValidationError("scale map must have positive height and width");
  }
  if (s.class_count == 0) throw ValidationError("class count must be >= 1");
  if (s.bg.size() != s.cells()) {
    throw DimensionError("bg has " + std::to_string(s.bg.size()) +
                         " values, expected " + std::to_string(s.cells()));
  }
  if (s.cls.size() != s.cells() * s.class_count) {
    throw DimensionError("cls has " + std::to_string(s.cls.size()) +
                         " values, expected " +
                         std::to_string(s.cells() * s.class_count));
  }
  check_unit_range(s.bg, "bg");
  check_unit_range(s.cls, "cls");
}

void validate(const DetectorHeatmaps& h) {
  if (h.scales.empty()) {
    throw ValidationError("heatmaps for '" + h.image_id + "' have no scales");
  }
  const auto k = h.scales.front().class_count;
  for (const auto& s : h.scales) {
    if (s.class_count != k) {
      throw DimensionError("scales disagree on class count (" +
                           std::to_string(k) + " vs " +
                           std::to_string(s.class_count) + ")");
    }
    validate(s);
  }
}

std::vector<std::uint8_t> encode_heatmaps(const DetectorHeatmaps& h) {
  validate(h);
  std::vector<std::uint8_t> out;
  std::size_t payload = 16;
  for (const auto& s : h.scales) payload += 8 + 4 * (s.bg.size() + s.cls.size());
  out.reserve(payload);

  out.insert(out.end(), std::begin(kHeatmapMagic), std::end(kHeatmapMagic));
  put_u32(out, kHeatmapVersion);
  put_u32(out, static_cast<std::uint32_t>(h.scales.size()));
  put_u32(out, h.class_count());
  for (const auto& s : h.scales) {
    put_u32(out, s.height);
    put_u32(out, s.width);
    for (float v : s.bg) put_f32(out, v);
    for (float v : s.cls) put_f32(out, v);
  }
  return out;
}

DetectorHeatmaps decode_heatmaps(std::span<const std::uint8_t> bytes,
                                 std::string image_id) {
  if (bytes.size() < 4 ||
      std::memcmp(bytes.data(), kHeatmapMagic, sizeof(kHeatmapMagic)) != 0) {
    throw FormatError("bad magic: expected \"LMEH\"");
  }
  Reader rd(bytes.subspan(4));
  const auto version = rd.u32("version");
  if (version != kHeatmapVersion) {
    throw FormatError("unsupported LMEH version " + std::to_string(version));
  }
  const auto scale_count = rd.u32("scale count");
  const auto k = rd.u32("class count");
  if (scale_count == 0) throw ValidationError("LMEH declares zero scales");
  if (k == 0) throw ValidationError("LMEH declares zero classes");

  DetectorHeatmaps h;
  h.image_id = std::move(image_id);
  // Each scale needs at least 8 header bytes; rejects absurd counts before
  // reserving.
  if (scale_count > rd.remaining() / 8) {
    throw FormatError("LMEH truncated: " + std::to_string(scale_count) +
                      " scales declared");
  }
  h.scales.reserve(scale_count);
  for (std::uint32_t n = 0; n < scale_count; ++n) {
    ScaleMap s;
    s.class_count = k;
    s.height = rd.u32("height");
    s.width = rd.u32("width");
    if (s.height == 0 || s.width == 0) {
      throw ValidationError("scale " + std::to_string(n) + " has zero extent");
    }
    const std::uint64_t cells = std::uint64_t{s.height} * s.width;
    const std::uint64_t cls_count = cells * k;
    if (cells > rd.remaining() / 4 || cls_count > rd.remaining() / 4) {
      throw FormatError("LMEH truncated in scale " + std::to_string(n));
    }
    rd.f32_block(s.bg, static_cast<std::size_t>(cells), "bg");
    rd.f32_block(s.cls, static_cast<std::size_t>(cls_count), "cls");
    h.scales.push_back(std::move(s));
  }
  if (rd.remaining() != 0) {
    throw FormatError("LMEH has " + std::to_string(rd.remaining()) +
                      " trailing bytes");
  }
  validate(h);
  return h;
}

void write_heatmaps(const DetectorHeatmaps& h, std::ostream& sink) {
  const auto bytes = encode_heatmaps(h);
  sink.write(reinterpret_cast<const char*>(bytes.data()),
             static_cast<std::streamsize>(bytes.size()));
  if (!sink) throw IoError("failed writing heatmaps for '" + h.image_id + "'");
}

DetectorHeatmaps read_heatmaps(std::istream& source, std::string image_id) {
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(source)),
                                  std::istreambuf_iterator<char>());
  if (source.bad()) throw IoError("failed reading heatmap stream");
  return decode_heatmaps(bytes, std::move(image_id));
}

std::filesystem::path save_heatmaps(const DetectorHeatmaps& h,
                                    const std::filesystem::path& dir) {
  if (h.image_id.empty()) throw ValidationError("heatmaps need an image id to be saved");
  std::filesystem::create_directories(dir);
  auto path = dir / (h.image_id + ".lmeh");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw_io_error("cannot open for writing", path.string());
  write_heatmaps(h, out);
  return path;
}

DetectorHeatmaps load_heatmaps(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw_io_error("cannot open heatmap file", file.string());
  try {
    return read_heatmaps(in, file.stem().string());
  } catch (const FormatError& e) {
    throw FormatError(file.string() + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(file.string() + ": " + e.what());
  }
}

std::vector<DetectorHeatmaps> load_heatmap_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw IoError("heatmap directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".lmeh") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<DetectorHeatmaps> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back(load_heatmaps(f));
  return out;
}

}  // namespace limeeval
