#include "limeeval/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "json.hpp"
#include "limeeval/error.hpp"
#include "limeeval/parallel.hpp"

namespace limeeval {

namespace {

using json = nlohmann::json;

void check_inputs(std::span<const float> values, const char* what) {
  for (float v : values) {
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f) {
      throw ValidationError(std::string(what) + " value outside [0,1]");
    }
  }
}

// Re-weighted class vector of one cell, written into `out` (size K).
void reweight_cell(const ScaleMap& s, std::size_t cell, std::span<double> out) {
  const double objectness = 1.0 - static_cast<double>(s.bg[cell]);
  const std::size_t cells = s.cells();
  for (std::size_t y = 0; y < s.class_count; ++y) {
    const double p = static_cast<double>(s.cls[y * cells + cell]) * objectness;
    out[y] = p > 0.0 ? std::sqrt(p) : 0.0;
  }
}

}  // namespace

void validate(const EnergyConfig& cfg) {
  if (!(cfg.temperature > 0.0) || !std::isfinite(cfg.temperature)) {
    throw ValidationError("temperature must be a positive finite number");
  }
  if (!(cfg.epsilon > 0.0)) throw ValidationError("epsilon must be positive");
}

std::vector<double> reweight(std::span<const float> cls, std::span<const float> bg,
                             std::size_t class_count, double epsilon) {
  if (class_count == 0) throw DimensionError("class count must be >= 1");
  if (cls.size() != bg.size() * class_count) {
    throw DimensionError("cls has " + std::to_string(cls.size()) +
                         " values but bg implies " +
                         std::to_string(bg.size() * class_count));
  }
  if (!(epsilon > 0.0)) throw ValidationError("epsilon must be positive");
  check_inputs(cls, "cls");
  check_inputs(bg, "bg");

  const std::size_t cells = bg.size();
  std::vector<double> out(cls.size());
  for (std::size_t y = 0; y < class_count; ++y) {
    for (std::size_t c = 0; c < cells; ++c) {
      const double p = static_cast<double>(cls[y * cells + c]) *
                       (1.0 - static_cast<double>(bg[c]));
      out[y * cells + c] = p > 0.0 ? std::sqrt(p) : 0.0;
    }
  }
  return out;
}

double tempered_logsumexp(std::span<const double> x, double temperature) {
  if (x.empty()) throw DimensionError("log-sum-exp of an empty vector");
  const double m = *std::max_element(x.begin(), x.end());
  double acc = 0.0;
  for (double v : x) acc += std::exp((v - m) / temperature);
  return m + temperature * std::log(acc);
}

double scale_energy(const ScaleMap& s, const EnergyConfig& cfg) {
  std::vector<double> xr(s.class_count);
  double total = 0.0;
  for (std::size_t cell = 0; cell < s.cells(); ++cell) {
    reweight_cell(s, cell, xr);
    total += tempered_logsumexp(xr, cfg.temperature);
  }
  return -total;
}

double image_energy(const DetectorHeatmaps& h, const EnergyConfig& cfg) {
  validate(cfg);
  validate(h);
  double energy = 0.0;
  std::size_t cells = 0;
  for (const auto& s : h.scales) {
    energy += scale_energy(s, cfg);
    cells += s.cells();
  }
  if (cfg.normalization == PixelNormalization::kPerPixelMean) {
    energy /= static_cast<double>(cells);
  }
  return energy;
}

EnergyReport dataset_energy(std::span<const DetectorHeatmaps> images,
                            const EnergyConfig& cfg) {
  validate(cfg);
  if (images.empty()) throw UsageError("dataset_energy needs at least one image");
  {
    std::set<std::string_view> seen;
    for (const auto& h : images) {
      if (!seen.insert(h.image_id).second) {
        throw ValidationError("duplicate image id '" + h.image_id + "'");
      }
    }
  }

  std::vector<double> energies(images.size());
  parallel_for(images.size(),
               [&](std::size_t i) { energies[i] = image_energy(images[i], cfg); });

  EnergyReport report;
  report.config = cfg;
  for (std::size_t i = 0; i < images.size(); ++i) {
    report.per_image.emplace(images[i].image_id, energies[i]);
  }
  // Summation in image-id order so the mean does not depend on input order.
  double sum = 0.0;
  for (const auto& [id, e] : report.per_image) sum += e;
  report.dataset_energy = sum / static_cast<double>(report.per_image.size());
  return report;
}

std::vector<std::string> rank_candidates(
    const std::map<std::string, EnergyReport>& candidates) {
  if (candidates.empty()) return {};
  const auto& ref = candidates.begin()->second;
  for (const auto& [name, report] : candidates) {
    if (!(report.config == ref.config)) {
      throw ValidationError("candidate '" + name +
                            "' was scored with a different configuration");
    }
    if (report.per_image.size() != ref.per_image.size() ||
        !std::equal(report.per_image.begin(), report.per_image.end(),
                    ref.per_image.begin(),
                    [](const auto& a, const auto& b) { return a.first == b.first; })) {
      throw ValidationError("candidate '" + name +
                            "' covers a different image set");
    }
  }

  std::vector<std::pair<double, std::string>> order;
  order.reserve(candidates.size());
  for (const auto& [name, report] : candidates) {
    order.emplace_back(report.dataset_energy, name);
  }
  std::sort(order.begin(), order.end());
  std::vector<std::string> names;
  names.reserve(order.size());
  for (auto& [e, name] : order) names.push_back(std::move(name));
  return names;
}

std::vector<ScaleGradient> energy_gradient(const DetectorHeatmaps& h,
                                           const EnergyConfig& cfg) {
  validate(cfg);
  validate(h);

  std::size_t total_cells = 0;
  for (const auto& s : h.scales) total_cells += s.cells();
  const double norm = cfg.normalization == PixelNormalization::kPerPixelMean
                          ? 1.0 / static_cast<double>(total_cells)
                          : 1.0;

  std::vector<ScaleGradient> grads;
  grads.reserve(h.scales.size());
  for (const auto& s : h.scales) {
    const std::size_t cells = s.cells();
    const std::size_t k = s.class_count;
    ScaleGradient g{std::vector<double>(s.cls.size(), 0.0),
                    std::vector<double>(cells, 0.0)};
    std::vector<double> xr(k);
    std::vector<double> soft(k);
    for (std::size_t cell = 0; cell < cells; ++cell) {
      reweight_cell(s, cell, xr);
      const double m = *std::max_element(xr.begin(), xr.end());
      double z = 0.0;
      for (std::size_t y = 0; y < k; ++y) {
        soft[y] = std::exp((xr[y] - m) / cfg.temperature);
        z += soft[y];
      }
      const double objectness = 1.0 - static_cast<double>(s.bg[cell]);
      double d_bg = 0.0;
      for (std::size_t y = 0; y < k; ++y) {
        const double cls = s.cls[y * cells + cell];
        if (cls * objectness <= cfg.epsilon) continue;
        const double sy = soft[y] / z;
        g.d_cls[y * cells + cell] = -norm * sy * objectness / (2.0 * xr[y]);
        d_bg += sy * cls / (2.0 * xr[y]);
      }
      g.d_bg[cell] = norm * d_bg;
    }
    grads.push_back(std::move(g));
  }
  return grads;
}

std::string to_json(const EnergyReport& report, int indent) {
  json doc;
  doc["per_image"] = json::object();
  for (const auto& [id, e] : report.per_image) doc["per_image"][id] = e;
  doc["dataset_energy"] = report.dataset_energy;
  doc["temperature"] = report.config.temperature;
  doc["normalization"] = report.config.normalization == PixelNormalization::kSum
                             ? "sum"
                             : "per_pixel_mean";
  return doc.dump(indent);
}

EnergyReport energy_report_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("energy report is not valid JSON: ") + e.what());
  }
  try {
    EnergyReport r;
    for (const auto& [id, e] : doc.at("per_image").items()) {
      r.per_image[id] = e.get<double>();
    }
    r.dataset_energy = doc.at("dataset_energy").get<double>();
    r.config.temperature = doc.at("temperature").get<double>();
    if (doc.value("normalization", std::string("sum")) == "per_pixel_mean") {
      r.config.normalization = PixelNormalization::kPerPixelMean;
    }
    validate(r.config);
    return r;
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed energy report: ") + e.what());
  }
}

}  // namespace limeeval
