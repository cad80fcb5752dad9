#include "limeeval/sweep.hpp"

#include <charconv>
#include <sstream>

#include "json.hpp"
#include "limeeval/error.hpp"
#include "limeeval/stats.hpp"

namespace limeeval {

namespace {

// Shortest text that reads back as the same double.
std::string shortest(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return {buf, res.ptr};
}

}  // namespace

std::vector<double> default_sweep_temperatures() { return {0.1, 0.01, 0.001, 0.0001}; }

std::vector<SweepRow> sweep_temperature(const std::vector<SweepDataset>& datasets,
                                        const std::vector<double>& temperatures,
                                        const EnergyConfig& base) {
  if (datasets.size() < 3) {
    throw UndefinedCorrelationError(
        "temperature sweep needs at least three datasets, got " +
        std::to_string(datasets.size()));
  }
  if (temperatures.empty()) throw UsageError("no temperatures given");

  std::vector<SweepRow> rows;
  rows.reserve(temperatures.size());
  for (double t : temperatures) {
    EnergyConfig cfg = base;
    cfg.temperature = t;
    SweepRow row;
    row.temperature = t;
    PairedSeries series;
    for (const auto& d : datasets) {
      const double e = dataset_energy(d.heatmaps, cfg).dataset_energy;
      row.energies.push_back(e);
      series.points.push_back({d.label, e, d.map});
    }
    row.pearson = pearson(series);
    const auto sp = spearman(series);
    row.spearman = sp.r;
    row.spearman_p = sp.p;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string to_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "temperature,pearson,spearman,spearman_p\n";
  for (const auto& r : rows) {
    out << shortest(r.temperature) << ',' << shortest(r.pearson) << ','
        << shortest(r.spearman) << ',' << shortest(r.spearman_p) << '\n';
  }
  return out.str();
}

std::string to_json(const std::vector<SweepRow>& rows,
                    const std::vector<SweepDataset>& datasets, int indent) {
  nlohmann::json doc = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json row;
    row["temperature"] = r.temperature;
    row["pearson"] = r.pearson;
    row["spearman"] = r.spearman;
    row["spearman_p"] = r.spearman_p;
    row["datasets"] = nlohmann::json::array();
    for (std::size_t i = 0; i < r.energies.size() && i < datasets.size(); ++i) {
      row["datasets"].push_back({{"label", datasets[i].label},
                                 {"energy", r.energies[i]},
                                 {"map", datasets[i].map}});
    }
    doc.push_back(std::move(row));
  }
  return doc.dump(indent);
}

}  // namespace limeeval
