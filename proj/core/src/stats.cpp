#include "limeeval/stats.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "limeeval/error.hpp"

namespace limeeval {

namespace {

void check_series(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DimensionError("series lengths differ");
  if (x.size() < 2) throw UsageError("correlation needs at least two points");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) {
      throw ValidationError("series contains a non-finite value");
    }
  }
}

double mean(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& field, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(field, &used);
    if (used != field.size()) throw std::invalid_argument(field);
    return v;
  } catch (const std::exception&) {
    throw FormatError("line " + std::to_string(line) + ": '" + field +
                      "' is not a number");
  }
}

bool is_number(const std::string& field) {
  try {
    std::size_t used = 0;
    std::stod(field, &used);
    return used == field.size();
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace

std::vector<double> PairedSeries::xs() const {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.x);
  return out;
}

std::vector<double> PairedSeries::ys() const {
  std::vector<double> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.y);
  return out;
}

double pearson(std::span<const double> x, std::span<const double> y) {
  check_series(x, y);
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0.0 || syy <= 0.0) {
    throw UndefinedCorrelationError("correlation undefined: zero variance");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

double pearson(const PairedSeries& s) {
  const auto x = s.xs();
  const auto y = s.ys();
  return pearson(x, y);
}

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

double correlation_p_value(double r, std::size_t n) {
  if (n < 3) throw UsageError("p-value needs at least three points");
  if (std::abs(r) >= 1.0) return 0.0;
  const double df = static_cast<double>(n - 2);
  const double t = r * std::sqrt(df / (1.0 - r * r));
  const boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

SpearmanResult spearman(const PairedSeries& s) {
  if (s.size() < 3) throw UsageError("spearman needs at least three points");
  const auto x = s.xs();
  const auto y = s.ys();
  check_series(x, y);
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  SpearmanResult out;
  out.r = pearson(rx, ry);
  out.p = correlation_p_value(out.r, s.size());
  return out;
}

double spearman_permutation_p_value(const PairedSeries& s) {
  const std::size_t n = s.size();
  if (n < 3) throw UsageError("spearman needs at least three points");
  if (n > 10) throw UsageError("exact permutation p-value limited to n <= 10");
  const auto x = s.xs();
  const auto y = s.ys();
  check_series(x, y);
  const auto rx = average_ranks(x);
  auto ry = average_ranks(y);
  const double observed = std::abs(pearson(rx, ry));

  std::sort(ry.begin(), ry.end());
  std::size_t extreme = 0, total = 0;
  do {
    ++total;
    if (std::abs(pearson(rx, ry)) >= observed - 1e-12) ++extreme;
  } while (std::next_permutation(ry.begin(), ry.end()));
  return static_cast<double>(extreme) / static_cast<double>(total);
}

CalibrationModel fit_calibration(const PairedSeries& s) {
  const auto x = s.xs();
  const auto y = s.ys();
  check_series(x, y);
  const double mx = mean(x);
  const double my = mean(y);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0.0) throw UndefinedCorrelationError("calibration needs variance in x");

  CalibrationModel m;
  m.slope = sxy / sxx;
  m.intercept = my - m.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (m.slope * x[i] + m.intercept);
    ss_res += e * e;
  }
  m.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  return m;
}

double predict_map(const CalibrationModel& m, double energy) {
  return std::clamp(m.slope * energy + m.intercept, 0.0, 1.0);
}

PairedSeries parse_pairs_csv(const std::string& text) {
  PairedSeries s;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  bool seen_row = false;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> fields;
    std::stringstream ls(line);
    std::string f;
    while (std::getline(ls, f, ',')) fields.push_back(trim(f));
    if (fields.size() != 3) {
      throw FormatError("line " + std::to_string(lineno) +
                        ": expected label,x,y but found " +
                        std::to_string(fields.size()) + " fields");
    }
    const bool first_row = s.points.empty() && !seen_row;
    seen_row = true;
    if (first_row && !is_number(fields[1]) && !is_number(fields[2])) continue;
    s.points.push_back({fields[0], parse_number(fields[1], lineno),
                        parse_number(fields[2], lineno)});
  }
  return s;
}

PairedSeries load_pairs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_io_error("cannot open pairs file", path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_pairs_csv(ss.str());
}

std::string to_json(const CalibrationModel& m, int indent) {
  nlohmann::json doc;
  doc["slope"] = m.slope;
  doc["intercept"] = m.intercept;
  doc["r_squared"] = m.r_squared;
  return doc.dump(indent);
}

CalibrationModel calibration_from_json(const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    return {doc.at("slope").get<double>(), doc.at("intercept").get<double>(),
            doc.value("r_squared", 0.0)};
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed calibration model: ") + e.what());
  }
}

CalibrationModel load_calibration(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_io_error("cannot open calibration model", path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return calibration_from_json(ss.str());
}

}  // namespace limeeval
