// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "limeeval/distort.hpp"
#include "limeeval/elo.hpp"
#include "limeeval/energy.hpp"
#include "limeeval/image.hpp"
#include "limeeval/stats.hpp"
#include "support/oracles.hpp"

namespace fs = std::filesystem;
using namespace limeeval;
using namespace limeeval::testing;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      if (!detail.empty()) detail += "; ";
      detail += what;
    }
  }
};

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

DetectorHeatmaps single_scale(std::uint32_t k, std::uint32_t h, std::uint32_t w, float cls,
                              float bg) {
  ScaleMap s(h, w, k);
  std::fill(s.cls.begin(), s.cls.end(), cls);
  std::fill(s.bg.begin(), s.bg.end(), bg);
  return {"x", {s}};
}

// ------------------------------------------------------------------------

Verdict energy_kernel() {
  Verdict o;
  for (double t : {1.0, 0.1, 0.01, 0.0001}) {
    EnergyConfig cfg;
    cfg.temperature = t;
    const double e = image_energy(single_scale(1, 1, 1, 1.0f, 0.0f), cfg);
    o.require(std::abs(e + 1.0) <= 1e-9, "closed form at T=" + fmt(t) + " gave " + fmt(e));
  }

  EnergyConfig cfg;
  cfg.temperature = 0.01;
  const double e80 = image_energy(single_scale(80, 2, 2, 0.0f, 0.3f), cfg);
  const double want80 = -4.0 * 0.01 * std::log(80.0);
  o.require(std::abs(e80 - want80) <= 1e-9, "K=80 zero-signal gave " + fmt(e80));
  // The commonly quoted decimal -0.1752765 is a rounded approximation of
  // -0.04 ln 80 = -0.1752811; only the closed form is held to 1e-9.
  o.require(std::abs(want80 + 0.1752765) < 1e-5, "K=80 reference value");

  // x_r = (0.9, 0.1) from cls = (0.81, 0.01), bg = 0. The f32 storage moves
  // x_r slightly, so the reference uses the stored values.
  ScaleMap s(1, 1, 2);
  s.cls = {0.81f, 0.01f};
  s.bg = {0.0f};
  cfg.temperature = 1e-4;
  const double tiny = image_energy({"x", {s}}, cfg);
  const std::vector<long double> xr = {std::sqrt(static_cast<long double>(s.cls[0])),
                                       std::sqrt(static_cast<long double>(s.cls[1]))};
  const long double reference = -extended_cell_lse(xr, 1e-4L);
  o.require(std::isfinite(tiny), "tiny-T energy not finite");
  o.require(std::abs(tiny - static_cast<double>(reference)) <= 1e-9,
            "tiny-T vs extended precision: " + fmt(tiny) + " vs " +
                fmt(static_cast<double>(reference)));
  o.require(std::abs(tiny + 0.9) <= 1e-4 * std::log(2.0) + 1e-7,
            "tiny-T not within T ln K of -max: " + fmt(tiny));
  return o;
}

Verdict gradient_suite() {
  Verdict o;
  std::mt19937_64 rng(20240611);
  std::uniform_int_distribution<std::uint32_t> kd(1, 5), hd(1, 6), wd(1, 6);
  double worst = 0.0;
  std::size_t compared = 0;
  for (int n = 0; n < 100; ++n) {
    EnergyConfig cfg;
    cfg.temperature = n % 2 == 0 ? 0.1 : 0.01;
    // Interior values keep the probe away from the square-root singularity.
    const auto h = random_heatmaps(rng, "g" + std::to_string(n), 1, kd(rng), hd(rng), wd(rng),
                                   0.02, 0.98);
    const auto r = check_gradient(h, cfg);
    worst = std::max(worst, r.worst_relative);
    compared += r.compared;
  }
  o.require(worst < 1e-4, "worst relative error " + fmt(worst));
  o.detail = o.pass ? "worst relative error " + fmt(worst) + " over " +
                          std::to_string(compared) + " partials"
                    : o.detail;
  return o;
}

Verdict stability_sweep() {
  Verdict o;
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::uniform_int_distribution<std::uint32_t> kd(1, 80), hd(1, 8);
  for (double t : {0.1, 0.01, 0.001, 0.0001}) {
    EnergyConfig cfg;
    cfg.temperature = t;
    for (int n = 0; n < 200; ++n) {
      auto h = random_heatmaps(rng, "s", 1 + n % 3, kd(rng), hd(rng), hd(rng));
      // Every fifth instance uses saturated 0/1 values.
      if (n % 5 == 0) {
        for (auto& s : h.scales) {
          for (auto& v : s.cls) v = u01(rng) < 0.5 ? 0.0f : 1.0f;
          for (auto& v : s.bg) v = u01(rng) < 0.5 ? 0.0f : 1.0f;
        }
      }
      const double e = image_energy(h, cfg);
      if (!std::isfinite(e)) {
        o.require(false, "non-finite energy at T=" + fmt(t));
        return o;
      }

      // Monotonicity under a single-element bump.
      auto& s = h.scales[n % h.scales.size()];
      const std::size_t cell = static_cast<std::size_t>(u01(rng) * s.cells()) % s.cells();
      const std::size_t y = static_cast<std::size_t>(u01(rng) * s.class_count) % s.class_count;
      auto up_cls = h;
      auto& c = up_cls.scales[n % h.scales.size()].cls[y * s.cells() + cell];
      c = static_cast<float>(std::min(1.0, c + u01(rng) * (1.0 - c)));
      auto up_bg = h;
      auto& b = up_bg.scales[n % h.scales.size()].bg[cell];
      b = static_cast<float>(std::min(1.0, b + u01(rng) * (1.0 - b)));
      o.require(image_energy(up_cls, cfg) <= e, "raising cls raised energy at T=" + fmt(t));
      o.require(image_energy(up_bg, cfg) >= e, "raising bg lowered energy at T=" + fmt(t));

      for (const auto& g : energy_gradient(h, cfg)) {
        for (double d : g.d_cls) o.require(std::isfinite(d) && d <= 0.0, "dE/dcls > 0");
        for (double d : g.d_bg) o.require(std::isfinite(d) && d >= 0.0, "dE/dbg < 0");
      }

      // Per-cell limit: |LSE_T - max| <= T ln K.
      const auto xr = reweight(s.cls, s.bg, s.class_count);
      std::vector<double> col(s.class_count);
      for (std::size_t y2 = 0; y2 < s.class_count; ++y2) col[y2] = xr[y2 * s.cells() + cell];
      const double lse = tempered_logsumexp(col, t);
      const double mx = *std::max_element(col.begin(), col.end());
      o.require(lse - mx >= -1e-12 && lse - mx <= t * std::log(double(s.class_count)) + 1e-12,
                "limit bound violated at T=" + fmt(t));
      if (!o.pass) return o;
    }
  }
  return o;
}

Verdict desk_correlation() {
  Verdict o;
  const std::vector<double> temps = {0.01, 0.001, 0.0001};
  const auto ladder = severity_ladder(50, 20, temps, 11);
  std::string summary;
  for (double t : temps) {
    PairedSeries s;
    for (const auto& p : ladder) s.points.push_back({fmt(p.severity), p.energy.at(t), p.map});
    const auto r = spearman(s);
    summary += (summary.empty() ? "" : ", ") + std::string("T=") + fmt(t) + " r=" + fmt(r.r);
    o.require(r.r <= -0.9, "spearman " + fmt(r.r) + " at T=" + fmt(t));
  }
  if (o.pass) o.detail = summary;
  return o;
}

Verdict map_oracle() {
  Verdict o;
  std::mt19937_64 rng(5150);
  std::size_t greedy_tp = 0, max_tp = 0;
  for (int n = 0; n < 25; ++n) {
    const auto scene = random_scene(rng, 5, 4, n % 2 == 1);
    const auto got = evaluate_map(scene.gt, scene.det);
    const auto want = oracle_map(scene.gt, scene.det);
    for (int t = 0; t < kIouThresholdCount; ++t) {
      o.require(got.per_threshold[t] == want.per_threshold[t],
                "scene " + std::to_string(n) + " threshold " + std::to_string(t) + ": " +
                    fmt(got.per_threshold[t]) + " vs " + fmt(want.per_threshold[t]));
    }
    o.require(got.map == want.map, "scene " + std::to_string(n) + " mAP differs");
    o.require(got.ap50 >= got.map, "ap50 < mAP in scene " + std::to_string(n));
    greedy_tp += want.greedy_tp;
    max_tp += want.maximum_tp;
  }
  o.require(greedy_tp <= max_tp, "greedy found more TPs than the maximum");

  GroundTruthSet gt{{{"a", 10, 10}}, {{"a", 1, {0, 0, 10, 10}, false}}, {1}};
  DetectionSet det{{{"a", 1, {0, 0, 10, 6}, 0.9}}};
  const auto single = evaluate_map(gt, det);
  o.require(single.map == 0.3, "IoU=0.6 case gave " + fmt(single.map));
  if (o.pass) {
    o.detail = "TP greedy/max over scenes " + std::to_string(greedy_tp) + "/" +
               std::to_string(max_tp);
  }
  return o;
}

std::string read_bytes(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Verdict distortion_grid() {
  Verdict o;
  const fs::path root = fs::temp_directory_path() /
                        ("limeeval_accept_" + std::to_string(std::random_device{}()));
  fs::create_directories(root / "in");
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 10; ++i) {
    Image img(32, 24);
    for (auto& v : img.data) v = u(rng);
    write_image(img, root / "in" / ("im" + std::to_string(i) + ".png"));
  }

  const auto grid = full_grid();
  o.require(grid.size() == 150, "grid has " + std::to_string(grid.size()) + " specs");
  const auto m1 = synthesize_dataset(root / "in", root / "run1", grid, 99);
  const auto m2 = synthesize_dataset(root / "in", root / "run2", grid, 99);
  o.require(m1.variants.size() == 150, "manifest lists " + std::to_string(m1.variants.size()));
  std::set<std::string> dirs;
  std::size_t files = 0, differing = 0;
  for (std::size_t v = 0; v < m1.variants.size(); ++v) {
    dirs.insert(variant_dir_name(m1.variants[v].spec));
    for (const auto& f : m1.variants[v].files) {
      ++files;
      differing += read_bytes(root / "run1" / f) != read_bytes(root / "run2" / f);
    }
  }
  o.require(dirs.size() == 150, "distinct variant directories " + std::to_string(dirs.size()));
  o.require(files == 1500, "files written " + std::to_string(files));
  o.require(differing == 0, std::to_string(differing) + " files differ across reruns");
  o.require(read_bytes(root / "run1" / "manifest.json") ==
                read_bytes(root / "run2" / "manifest.json"),
            "manifests differ");
  fs::remove_all(root);

  Image gray(256, 256, 0.5);
  for (std::size_t i = 0; i < LevelTables::gauss_levels.size(); ++i) {
    const double level = LevelTables::gauss_levels[i];
    Rng r(1000 + i);
    const auto out = apply_gaussian_noise(gray, level, r);
    double sum = 0, sq = 0;
    for (std::size_t k = 0; k < out.data.size(); ++k) {
      const double d = out.data[k] - gray.data[k];
      sum += d;
      sq += d * d;
    }
    const double n = static_cast<double>(out.data.size());
    const double sd = std::sqrt(sq / n - (sum / n) * (sum / n));
    o.require(std::abs(sd - level / 255.0) <= 0.05 * level / 255.0,
              "noise level " + fmt(level) + " std " + fmt(sd));
  }

  std::size_t lattice_failures = 0;
  // 17 evenly spaced 8-bit values per channel: 0, 16, ..., 240, 255.
  std::vector<int> ticks;
  for (int i = 0; i < 16; ++i) ticks.push_back(16 * i);
  ticks.push_back(255);
  for (int r : ticks) {
    for (int g : ticks) {
      for (int b : ticks) {
        const auto hsv = rgb_to_hsv(r / 255.0, g / 255.0, b / 255.0);
        const auto back = hsv_to_rgb(hsv);
        lattice_failures += quantize(back[0]) != r || quantize(back[1]) != g ||
                            quantize(back[2]) != b;
      }
    }
  }
  o.require(lattice_failures == 0, std::to_string(lattice_failures) + " lattice points drift");
  return o;
}

Verdict statistics() {
  Verdict o;
  const double p = correlation_p_value(0.703, 15);
  o.require(std::abs(p - 0.0035) <= 0.0005, "p(0.703, 15) = " + fmt(p));

  // A concrete n = 15 ranking with sum d^2 = 166, i.e. r = 0.7036.
  std::mt19937_64 rng(15);
  std::vector<int> perm(15);
  std::iota(perm.begin(), perm.end(), 0);
  auto d2 = [&] {
    int s = 0;
    for (int i = 0; i < 15; ++i) s += (perm[i] - i) * (perm[i] - i);
    return s;
  };
  std::uniform_int_distribution<int> pick(0, 14);
  std::uniform_int_distribution<int> coin(0, 9);
  while (d2() != 166) {
    const int a = pick(rng), b = pick(rng);
    const int before = std::abs(d2() - 166);
    std::swap(perm[a], perm[b]);
    if (std::abs(d2() - 166) > before && coin(rng) != 0) std::swap(perm[a], perm[b]);
  }
  PairedSeries ranked;
  for (int i = 0; i < 15; ++i) ranked.points.push_back({"", double(i), double(perm[i])});
  const auto sp = spearman(ranked);
  o.require(std::abs(sp.r - (1.0 - 6.0 * 166 / 3360.0)) < 1e-12, "rank series r " + fmt(sp.r));
  o.require(std::abs(sp.p - 0.0035) <= 0.0005, "rank series p " + fmt(sp.p));

  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int trial = 0; trial < 20; ++trial) {
    PairedSeries s;
    std::vector<double> x, y;
    for (int i = 0; i < 10 + trial; ++i) {
      const double xi = u(rng);
      const double yi = 0.7 * xi + 0.5 * u(rng);
      x.push_back(xi);
      y.push_back(yi);
      s.points.push_back({"", xi, yi});
    }
    o.require(std::abs(pearson(s) - direct_pearson(x, y)) <= 1e-9, "pearson mismatch");

    const double n = static_cast<double>(x.size());
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      sxx += (x[i] - mx) * (x[i] - mx);
      sxy += (x[i] - mx) * (y[i] - my);
    }
    const auto model = fit_calibration(s);
    o.require(std::abs(model.slope - sxy / sxx) <= 1e-9, "slope mismatch");
    o.require(std::abs(model.intercept - (my - sxy / sxx * mx)) <= 1e-9, "intercept mismatch");
  }
  if (o.pass) o.detail = "p(0.703, 15) = " + fmt(p);
  return o;
}

Verdict elo() {
  Verdict o;
  const EloParams params;
  {
    RatingTable t("input", params);
    t.apply({"v0", "i", Attribute::kOverall, "a", "b", limeeval::Outcome::kABetter, 0});
    o.require(t.rating(Attribute::kOverall, "a") == 1508.0, "decisive winner");
    o.require(t.rating(Attribute::kOverall, "b") == 1492.0, "decisive loser");
  }
  {
    RatingTable t("input", params);
    t.apply({"v0", "i", Attribute::kOverall, "a", "b", limeeval::Outcome::kBothGood, 0});
    o.require(t.rating(Attribute::kOverall, "a") == 1504.0, "both_good a");
    o.require(t.rating(Attribute::kOverall, "b") == 1504.0, "both_good b");
    o.require(t.rating(Attribute::kOverall, "input") == 1492.0, "both_good baseline");
  }

  std::mt19937_64 rng(10000);
  const std::vector<std::string> methods = {"input", "m1", "m2", "m3", "m4", "m5", "m6"};
  std::uniform_int_distribution<std::size_t> pm(0, methods.size() - 1);
  std::uniform_int_distribution<int> po(0, 3), pa(0, 4);
  std::vector<VoteRecord> votes;
  for (int i = 0; i < 10000; ++i) {
    VoteRecord v;
    v.vote_id = "v" + std::to_string(i);
    v.image_id = "img";
    v.attribute = kAllAttributes[pa(rng)];
    v.method_a = methods[pm(rng)];
    do {
      v.method_b = methods[pm(rng)];
    } while (v.method_b == v.method_a);
    v.outcome = static_cast<limeeval::Outcome>(po(rng));
    v.timestamp = i;
    votes.push_back(v);
  }
  const auto table = replay(votes, "input", params);
  double expected_total = 0.0;
  for (auto a : kAllAttributes) {
    for (const auto& m : methods) expected_total += table.has(a, m) ? params.initial_rating : 0.0;
  }
  const double drift = std::abs(table.total_rating() - expected_total);
  o.require(drift <= 1e-6, "total rating drift " + fmt(drift));

  auto shuffled = votes;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  o.require(replay(shuffled, "input", params) == table, "replay depends on input order");
  o.require(replay(votes, "input", params) == table, "replay not deterministic");
  if (o.pass) o.detail = "drift " + fmt(drift) + " over 10000 votes";
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Verdict()> run;
    double budget_seconds;  // <= 0: no runtime limit
  };
  const std::vector<Criterion> criteria = {
      {"energy-kernel-exactness", energy_kernel, 1.0},
      {"gradient-suite", gradient_suite, 10.0},
      {"stability-sweep", stability_sweep, 0.0},
      {"desk-scale-correlation", desk_correlation, 120.0},
      {"map-oracle-equivalence", map_oracle, 0.0},
      {"distortion-grid", distortion_grid, 60.0},
      {"statistics", statistics, 0.0},
      {"elo", elo, 0.0},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.require(false, std::string("exception: ") + e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c.budget_seconds > 0 && secs >= c.budget_seconds) {
      o.require(false, "runtime " + fmt(secs) + "s exceeds " + fmt(c.budget_seconds) + "s");
    }
    failures += !o.pass;
    std::printf("%s %-26s %8.3fs  %s\n", o.pass ? "PASS" : "FAIL", c.name, secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
