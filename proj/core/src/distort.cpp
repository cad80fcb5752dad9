#include "limeeval/distort.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "json.hpp"
#include "limeeval/error.hpp"
#include "limeeval/parallel.hpp"

namespace limeeval {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Mirror index into [0, n) without repeating the edge sample (d c b | a b c d).
std::size_t reflect_index(long i, long n) {
  if (n == 1) return 0;
  const long period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  if (i >= n) i = period - i;
  return static_cast<std::size_t>(i);
}

template <typename Fn>
Image map_hsv(const Image& img, Fn&& fn) {
  Image out = img;
  for (std::size_t p = 0; p < img.pixels(); ++p) {
    double* px = &out.data[p * 3];
    Hsv hsv = rgb_to_hsv(px[0], px[1], px[2]);
    fn(hsv);
    const auto rgb = hsv_to_rgb(hsv);
    for (int c = 0; c < 3; ++c) px[c] = std::clamp(rgb[c], 0.0, 1.0);
  }
  return out;
}

}  // namespace

double gamma_of(Exposure e) {
  switch (e) {
    case Exposure::kUnder1_5: return 1.5;
    case Exposure::kUnder2_0: return 2.0;
    case Exposure::kOver0_75: return 0.75;
    case Exposure::kOver0_5: return 0.5;
    case Exposure::kIdentity: return 1.0;
  }
  throw ValidationError("unknown exposure");
}

std::string_view to_string(Degradation d) {
  switch (d) {
    case Degradation::kGaussianBlur: return "gaussian_blur";
    case Degradation::kGaussianNoise: return "gaussian_noise";
    case Degradation::kImpulseNoise: return "impulse_noise";
    case Degradation::kShotNoise: return "shot_noise";
    case Degradation::kBrightness: return "brightness";
    case Degradation::kSaturate: return "saturate";
  }
  return "unknown";
}

std::string_view to_string(Exposure e) {
  switch (e) {
    case Exposure::kUnder1_5: return "under_1.5";
    case Exposure::kUnder2_0: return "under_2.0";
    case Exposure::kOver0_75: return "over_0.75";
    case Exposure::kOver0_5: return "over_0.5";
    case Exposure::kIdentity: return "identity_1.0";
  }
  return "unknown";
}

Degradation parse_degradation(std::string_view name) {
  for (auto d : kAllDegradations) {
    if (to_string(d) == name) return d;
  }
  throw ValidationError("unknown degradation '" + std::string(name) + "'");
}

Exposure parse_exposure(std::string_view name) {
  for (auto e : kAllExposures) {
    if (to_string(e) == name) return e;
  }
  throw ValidationError("unknown exposure '" + std::string(name) + "'");
}

void validate(const DistortionSpec& spec) {
  if (spec.level_index < 0 || spec.level_index >= kLevelCount) {
    throw ValidationError("level index " + std::to_string(spec.level_index) +
                          " outside 0.." + std::to_string(kLevelCount - 1));
  }
}

std::string to_string(const DistortionSpec& spec) {
  return std::string(to_string(spec.degradation)) + ":" +
         std::to_string(spec.level_index) + ":" +
         std::string(to_string(spec.exposure));
}

DistortionSpec parse_spec(std::string_view text) {
  const auto a = text.find(':');
  const auto b = a == std::string_view::npos ? a : text.find(':', a + 1);
  if (b == std::string_view::npos) {
    throw ValidationError("spec '" + std::string(text) +
                          "' is not degradation:level:exposure");
  }
  DistortionSpec spec;
  spec.degradation = parse_degradation(text.substr(0, a));
  const auto level = text.substr(a + 1, b - a - 1);
  if (level.size() != 1 || level[0] < '0' || level[0] > '9') {
    throw ValidationError("bad level '" + std::string(level) + "'");
  }
  spec.level_index = level[0] - '0';
  spec.exposure = parse_exposure(text.substr(b + 1));
  validate(spec);
  return spec;
}

std::vector<DistortionSpec> full_grid() {
  std::vector<DistortionSpec> grid;
  grid.reserve(kAllDegradations.size() * kLevelCount * kAllExposures.size());
  for (auto d : kAllDegradations) {
    for (int level = 0; level < kLevelCount; ++level) {
      for (auto e : kAllExposures) grid.push_back({d, level, e});
    }
  }
  return grid;
}

Image apply_gamma(const Image& img, double gamma) {
  if (!(gamma > 0.0)) throw ValidationError("gamma must be positive");
  Image out = img;
  if (gamma == 1.0) return out;
  for (auto& v : out.data) v = std::pow(v, gamma);
  return out;
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0)) throw ValidationError("blur sigma must be positive");
  const auto radius = static_cast<long>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (long i = -radius; i <= radius; ++i) {
    const double w = std::exp(-static_cast<double>(i * i) / (2.0 * sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = w;
    sum += w;
  }
  for (auto& w : k) w /= sum;
  return k;
}

Image apply_gaussian_blur(const Image& img, double sigma) {
  const auto kernel = gaussian_kernel(sigma);
  const long radius = static_cast<long>(kernel.size() / 2);
  const long w = static_cast<long>(img.width);
  const long h = static_cast<long>(img.height);

  Image tmp(img.width, img.height);
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (long k = -radius; k <= radius; ++k) {
          acc += kernel[static_cast<std::size_t>(k + radius)] *
                 img.at(static_cast<std::size_t>(y), reflect_index(x + k, w), c);
        }
        tmp.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), c) = acc;
      }
    }
  }
  Image out(img.width, img.height);
  for (long y = 0; y < h; ++y) {
    for (long x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (long k = -radius; k <= radius; ++k) {
          acc += kernel[static_cast<std::size_t>(k + radius)] *
                 tmp.at(reflect_index(y + k, h), static_cast<std::size_t>(x), c);
        }
        out.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), c) =
            std::clamp(acc, 0.0, 1.0);
      }
    }
  }
  return out;
}

Image apply_gaussian_noise(const Image& img, double level, Rng& rng) {
  if (level < 0.0) throw ValidationError("noise level must be non-negative");
  Image out = img;
  if (level == 0.0) return out;
  std::normal_distribution<double> noise(0.0, level / 255.0);
  for (auto& v : out.data) v = std::clamp(v + noise(rng), 0.0, 1.0);
  return out;
}

Image apply_impulse_noise(const Image& img, double amount, Rng& rng) {
  if (amount < 0.0 || amount > 1.0) {
    throw ValidationError("impulse amount must lie in [0,1]");
  }
  Image out = img;
  const std::size_t n = img.pixels();
  const auto count = static_cast<std::size_t>(std::llround(amount * static_cast<double>(n)));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  // Partial Fisher-Yates: the first `count` slots are a uniform sample
  // without replacement, in random order.
  for (std::size_t i = 0; i < count; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  const std::size_t salt = (count + 1) / 2;
  for (std::size_t i = 0; i < count; ++i) {
    const double v = i < salt ? 1.0 : 0.0;
    for (int c = 0; c < 3; ++c) out.data[idx[i] * 3 + c] = v;
  }
  return out;
}

Image apply_shot_noise(const Image& img, double level, Rng& rng) {
  if (!(level > 0.0)) throw ValidationError("shot noise level must be positive");
  Image out = img;
  for (auto& v : out.data) {
    const double mean = v * level;
    if (mean <= 0.0) {
      v = 0.0;
      continue;
    }
    std::poisson_distribution<long long> poisson(mean);
    v = std::clamp(static_cast<double>(poisson(rng)) / level, 0.0, 1.0);
  }
  return out;
}

Image apply_brightness(const Image& img, double delta) {
  return map_hsv(img, [delta](Hsv& hsv) { hsv.v = std::clamp(hsv.v + delta, 0.0, 1.0); });
}

Image apply_saturate(const Image& img, double alpha, double beta) {
  return map_hsv(img, [alpha, beta](Hsv& hsv) {
    hsv.s = std::clamp(alpha * hsv.s + beta, 0.0, 1.0);
  });
}

Image apply_degradation(const Image& img, Degradation d, int level_index, Rng& rng) {
  if (level_index < 0 || level_index >= kLevelCount) {
    throw ValidationError("level index out of range");
  }
  const auto i = static_cast<std::size_t>(level_index);
  switch (d) {
    case Degradation::kGaussianBlur:
      return apply_gaussian_blur(img, LevelTables::blur_sigma[i]);
    case Degradation::kGaussianNoise:
      return apply_gaussian_noise(img, LevelTables::gauss_levels[i], rng);
    case Degradation::kImpulseNoise:
      return apply_impulse_noise(img, LevelTables::impulse_amount[i], rng);
    case Degradation::kShotNoise:
      return apply_shot_noise(img, LevelTables::shot_levels[i], rng);
    case Degradation::kBrightness:
      return apply_brightness(img, LevelTables::brightness_delta[i]);
    case Degradation::kSaturate:
      return apply_saturate(img, LevelTables::saturate_alpha[i],
                            LevelTables::saturate_beta[i]);
  }
  throw ValidationError("unknown degradation");
}

std::uint64_t variant_stream_seed(std::uint64_t seed, std::string_view image_id,
                                  const DistortionSpec& spec) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ fnv1a(image_id));
  h = splitmix64(h ^ static_cast<std::uint64_t>(spec.degradation));
  h = splitmix64(h ^ static_cast<std::uint64_t>(spec.level_index));
  h = splitmix64(h ^ static_cast<std::uint64_t>(spec.exposure));
  return h;
}

Image synthesize_variant(const Image& img, const DistortionSpec& spec,
                         std::uint64_t seed, std::string_view image_id) {
  validate(spec);
  Rng rng(variant_stream_seed(seed, image_id, spec));
  Image degraded = apply_degradation(img, spec.degradation, spec.level_index, rng);
  return apply_gamma(degraded, gamma_of(spec.exposure));
}

std::string variant_dir_name(const DistortionSpec& spec) {
  return std::string(to_string(spec.degradation)) + "_" +
         std::to_string(spec.level_index) + "_" +
         std::string(to_string(spec.exposure));
}

DistortionManifest synthesize_dataset(const std::filesystem::path& input_dir,
                                      const std::filesystem::path& output_dir,
                                      const std::vector<DistortionSpec>& specs,
                                      std::uint64_t seed) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(input_dir, ec)) {
    throw IoError("input directory not found: " + input_dir.string());
  }
  for (const auto& s : specs) validate(s);

  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(input_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw IoError("no PNG images in " + input_dir.string());

  std::vector<Image> images(files.size());
  std::vector<std::string> ids(files.size());
  for (std::size_t i = 0; i < files.size(); ++i) {
    try {
      images[i] = read_image(files[i]);
    } catch (const Error& e) {
      throw IoError("unreadable input image " + files[i].string() + ": " + e.what());
    }
    ids[i] = files[i].stem().string();
  }

  DistortionManifest manifest;
  manifest.seed = seed;
  manifest.images = ids;
  manifest.variants.reserve(specs.size());
  for (const auto& spec : specs) {
    const auto dir = variant_dir_name(spec);
    fs::create_directories(output_dir / dir);
    ManifestEntry entry{spec, {}};
    for (const auto& id : ids) entry.files.push_back(dir + "/" + id + ".png");
    manifest.variants.push_back(std::move(entry));
  }

  const std::size_t jobs = specs.size() * images.size();
  parallel_for(jobs, [&](std::size_t job) {
    const std::size_t s = job / images.size();
    const std::size_t i = job % images.size();
    const Image out = synthesize_variant(images[i], specs[s], seed, ids[i]);
    write_image(out, output_dir / manifest.variants[s].files[i]);
  });

  const auto manifest_path = output_dir / "manifest.json";
  std::ofstream mf(manifest_path, std::ios::trunc);
  if (!mf) throw_io_error("cannot write manifest", manifest_path.string());
  mf << to_json(manifest) << "\n";
  if (!mf) throw_io_error("failed writing manifest", manifest_path.string());
  return manifest;
}

std::string to_json(const DistortionManifest& m, int indent) {
  nlohmann::ordered_json doc;
  doc["seed"] = m.seed;
  doc["images"] = m.images;
  doc["variants"] = nlohmann::ordered_json::object();
  for (const auto& v : m.variants) doc["variants"][to_string(v.spec)] = v.files;
  return doc.dump(indent);
}

}  // namespace limeeval
