#include "cli.hpp"

#include <atomic>
#include <charconv>
#include <csignal>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "limeeval/bench.hpp"
#include "limeeval/detmetrics.hpp"
#include "limeeval/distort.hpp"
#include "limeeval/elo.hpp"
#include "limeeval/energy.hpp"
#include "limeeval/error.hpp"
#include "limeeval/heatmap.hpp"
#include "limeeval/simdet.hpp"
#include "limeeval/stats.hpp"
#include "limeeval/sweep.hpp"

namespace limeeval::cli {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr double kDefaultTemperature = 0.01;

/// Shortest round-trip form, always with a decimal point ("1.0", "0.3").
std::string num(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  std::string s(buf, res.ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw_io_error("cannot open for writing", path.string());
  f << text;
  if (!text.empty() && text.back() != '\n') f << '\n';
  if (!f) throw_io_error("failed writing", path.string());
}

// Rows of `label,heatmap_dir,map`; relative dirs resolve against the file.
std::vector<SweepDataset> load_sweep_datasets(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw_io_error("cannot open dataset list", path.string());
  std::vector<SweepDataset> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != 3) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) +
                        ": expected label,heatmap_dir,map");
    }
    if (out.empty() && f[2] == "map") continue;
    fs::path dir = f[1];
    if (dir.is_relative()) dir = path.parent_path() / dir;
    double map = 0.0;
    try {
      map = std::stod(f[2]);
    } catch (const std::exception&) {
      throw FormatError(path.string() + ":" + std::to_string(lineno) + ": bad mAP '" +
                        f[2] + "'");
    }
    out.push_back({f[0], load_heatmap_dir(dir), map});
  }
  return out;
}

EnergyConfig energy_config(double temperature, bool per_pixel_mean) {
  EnergyConfig cfg;
  cfg.temperature = temperature;
  if (per_pixel_mean) cfg.normalization = PixelNormalization::kPerPixelMean;
  validate(cfg);
  return cfg;
}

std::atomic<BenchHttpServer*> g_server{nullptr};

extern "C" void handle_stop_signal(int) {
  if (auto* s = g_server.load()) s->stop();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"limeeval: label-free energy scoring and evaluation toolkit", "limeeval"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::function<void()> action;
  bool as_json = false;
  auto json_flag = [&](CLI::App* sub) {
    sub->add_flag("--json", as_json, "Print machine-readable JSON on stdout");
  };

  // distort ----------------------------------------------------------------
  auto* distort = app.add_subcommand("distort", "Synthesize distortion variants of a PNG folder");
  std::string d_in, d_out;
  std::uint64_t d_seed = 0;
  std::vector<std::string> d_specs;
  bool d_full = false;
  distort->add_option("--input-dir", d_in, "Folder of source PNG images")->required();
  distort->add_option("--output-dir", d_out, "Destination folder")->required();
  distort->add_option("--seed", d_seed, "Generator seed")->required();
  auto* spec_opt = distort->add_option("--spec", d_specs, "degradation:level:exposure (repeatable)");
  auto* grid_opt = distort->add_flag("--full-grid", d_full, "All 150 grid points");
  spec_opt->excludes(grid_opt);
  json_flag(distort);
  distort->callback([&] {
    action = [&] {
      std::vector<DistortionSpec> specs;
      if (d_full) {
        specs = full_grid();
      } else {
        if (d_specs.empty()) throw UsageError("distort needs --spec or --full-grid");
        for (const auto& s : d_specs) specs.push_back(parse_spec(s));
      }
      const auto manifest = synthesize_dataset(d_in, d_out, specs, d_seed);
      if (as_json) {
        out << to_json(manifest) << "\n";
      } else {
        out << "wrote " << manifest.variants.size() << " variants x "
            << manifest.images.size() << " images to " << d_out << "\n";
      }
    };
  });

  // energy -----------------------------------------------------------------
  auto* energy = app.add_subcommand("energy", "Score heatmap folders with the energy function");
  std::string e_dir, e_out;
  std::vector<std::string> e_candidates;
  double e_temp = kDefaultTemperature;
  bool e_mean = false;
  auto* heat_opt = energy->add_option("--heatmaps", e_dir, "Folder of .lmeh files");
  auto* cand_opt = energy->add_option("--candidate", e_candidates,
                                      "NAME=DIR, repeatable; ranks candidates");
  heat_opt->excludes(cand_opt);
  energy->add_option("--temperature", e_temp, "Temperature T")->capture_default_str();
  energy->add_flag("--per-pixel-mean", e_mean, "Normalise by cell count");
  energy->add_option("--out", e_out, "Write the JSON report here");
  json_flag(energy);
  energy->callback([&] {
    action = [&] {
      const auto cfg = energy_config(e_temp, e_mean);
      if (!e_dir.empty()) {
        const auto maps = load_heatmap_dir(e_dir);
        const auto report = dataset_energy(maps, cfg);
        if (!e_out.empty()) write_text(e_out, to_json(report));
        if (as_json) {
          out << to_json(report) << "\n";
        } else {
          for (const auto& [id, v] : report.per_image) out << id << "\t" << num(v) << "\n";
          out << "dataset_energy\t" << num(report.dataset_energy) << "\n";
        }
        return;
      }
      if (e_candidates.empty()) throw UsageError("energy needs --heatmaps or --candidate");
      std::map<std::string, EnergyReport> reports;
      for (const auto& c : e_candidates) {
        const auto eq = c.find('=');
        if (eq == std::string::npos || eq == 0) {
          throw UsageError("--candidate expects NAME=DIR, got '" + c + "'");
        }
        const auto maps = load_heatmap_dir(c.substr(eq + 1));
        reports[c.substr(0, eq)] = dataset_energy(maps, cfg);
      }
      const auto order = rank_candidates(reports);
      json doc = json::array();
      for (std::size_t i = 0; i < order.size(); ++i) {
        doc.push_back({{"rank", i + 1},
                       {"name", order[i]},
                       {"dataset_energy", reports[order[i]].dataset_energy}});
      }
      if (!e_out.empty()) write_text(e_out, doc.dump(2));
      if (as_json) {
        out << doc.dump(2) << "\n";
      } else {
        for (std::size_t i = 0; i < order.size(); ++i) {
          out << i + 1 << "\t" << order[i] << "\t" << num(reports[order[i]].dataset_energy)
              << "\n";
        }
      }
    };
  });

  // map --------------------------------------------------------------------
  auto* mapcmd = app.add_subcommand("map", "COCO-protocol mAP and AP50");
  std::string m_gt, m_det, m_out;
  mapcmd->add_option("--gt", m_gt, "COCO-style ground truth JSON")->required();
  mapcmd->add_option("--det", m_det, "COCO results-style detections JSON")->required();
  mapcmd->add_option("--out", m_out, "Write the JSON report here");
  json_flag(mapcmd);
  mapcmd->callback([&] {
    action = [&] {
      const auto result = evaluate_map(load_ground_truth(m_gt), load_detections(m_det));
      if (!m_out.empty()) write_text(m_out, to_json(result));
      if (as_json) {
        out << to_json(result) << "\n";
      } else {
        out << "mAP=" << num(result.map) << "\nAP50=" << num(result.ap50) << "\n";
      }
    };
  });

  // correlate --------------------------------------------------------------
  auto* correlate = app.add_subcommand("correlate", "Pearson and Spearman correlation of pairs");
  std::string c_pairs;
  correlate->add_option("--pairs", c_pairs, "CSV rows label,x,y")->required();
  json_flag(correlate);
  correlate->callback([&] {
    action = [&] {
      const auto series = load_pairs(c_pairs);
      const double rho = pearson(series);
      const auto sp = spearman(series);
      if (as_json) {
        out << json{{"n", series.size()},
                    {"pearson", rho},
                    {"pearson_abs", std::abs(rho)},
                    {"spearman", sp.r},
                    {"spearman_abs", std::abs(sp.r)},
                    {"spearman_p", sp.p}}
                   .dump(2)
            << "\n";
      } else {
        out << "n=" << series.size() << "\n"
            << "pearson rho=" << num(rho) << " |rho|=" << num(std::abs(rho)) << "\n"
            << "spearman r=" << num(sp.r) << " |r|=" << num(std::abs(sp.r))
            << " p=" << num(sp.p) << "\n";
      }
    };
  });

  // calibrate --------------------------------------------------------------
  auto* calibrate = app.add_subcommand("calibrate", "Least-squares energy -> mAP calibration");
  std::string k_pairs, k_out;
  calibrate->add_option("--pairs", k_pairs, "CSV rows label,energy,map")->required();
  calibrate->add_option("--out", k_out, "Model JSON destination")->required();
  json_flag(calibrate);
  calibrate->callback([&] {
    action = [&] {
      const auto model = fit_calibration(load_pairs(k_pairs));
      write_text(k_out, to_json(model));
      if (as_json) {
        out << to_json(model) << "\n";
      } else {
        out << "slope=" << num(model.slope) << " intercept=" << num(model.intercept)
            << " r_squared=" << num(model.r_squared) << "\n";
      }
    };
  });

  // predict ----------------------------------------------------------------
  auto* predict = app.add_subcommand("predict", "Predict mAP from energy with a calibration model");
  std::string p_model, p_dir;
  std::optional<double> p_energy;
  double p_temp = kDefaultTemperature;
  predict->add_option("--model", p_model, "Calibration model JSON")->required();
  auto* pe = predict->add_option("--energy", p_energy, "Dataset energy value");
  auto* ph = predict->add_option("--heatmaps", p_dir, "Score this folder first");
  pe->excludes(ph);
  predict->add_option("--temperature", p_temp, "Temperature used with --heatmaps")
      ->capture_default_str();
  json_flag(predict);
  predict->callback([&] {
    action = [&] {
      const auto model = load_calibration(p_model);
      double e = 0.0;
      if (p_energy) {
        e = *p_energy;
      } else if (!p_dir.empty()) {
        e = dataset_energy(load_heatmap_dir(p_dir), energy_config(p_temp, false)).dataset_energy;
      } else {
        throw UsageError("predict needs --energy or --heatmaps");
      }
      const double m = predict_map(model, e);
      if (as_json) {
        out << json{{"energy", e}, {"predicted_map", m}}.dump(2) << "\n";
      } else {
        out << "energy=" << num(e) << " predicted_mAP=" << num(m) << "\n";
      }
    };
  });

  // elo --------------------------------------------------------------------
  auto* elo = app.add_subcommand("elo", "Replay a vote log into Elo leaderboards");
  std::string l_votes, l_attr, l_baseline = "input";
  EloParams l_params;
  elo->add_option("--votes", l_votes, "Line-delimited JSON vote log")->required();
  elo->add_option("--attribute", l_attr, "Only this attribute");
  elo->add_option("--k", l_params.k_decisive, "k for decisive votes")->capture_default_str();
  elo->add_option("--k-both", l_params.k_both, "k for both_good / both_bad")->capture_default_str();
  elo->add_option("--init", l_params.initial_rating, "Initial rating")->capture_default_str();
  elo->add_option("--baseline", l_baseline, "Baseline (unenhanced) method")->capture_default_str();
  json_flag(elo);
  elo->callback([&] {
    action = [&] {
      const auto table = replay(load_vote_log(l_votes), l_baseline, l_params);
      std::vector<Attribute> attrs;
      if (l_attr.empty()) {
        attrs.assign(kAllAttributes.begin(), kAllAttributes.end());
      } else {
        attrs.push_back(parse_attribute(l_attr));
      }
      json doc = json::object();
      for (auto a : attrs) {
        const auto board = table.leaderboard(a);
        if (as_json) {
          doc[std::string(to_string(a))] = json::parse(to_json(board));
          continue;
        }
        out << "[" << to_string(a) << "]\n";
        for (const auto& e : board) {
          out << e.method << "\t" << num(e.rating) << "\t" << e.vote_count << "\n";
        }
      }
      if (as_json) out << doc.dump(2) << "\n";
    };
  });

  // simdet -----------------------------------------------------------------
  auto* simdet = app.add_subcommand("simdet", "Render synthetic detector outputs from ground truth");
  std::string s_gt, s_heat, s_dets;
  SimSpec s_spec;
  simdet->add_option("--gt", s_gt, "COCO-style ground truth JSON")->required();
  simdet->add_option("--severity", s_spec.severity, "Degradation severity in [0,1]")->required();
  simdet->add_option("--seed", s_spec.seed, "Noise seed")->required();
  simdet->add_option("--out-heatmaps", s_heat, "Folder for .lmeh files")->required();
  simdet->add_option("--out-dets", s_dets, "Detections JSON destination")->required();
  simdet->add_option("--base-confidence", s_spec.base_confidence)->capture_default_str();
  simdet->add_option("--noise-sigma", s_spec.noise_sigma)->capture_default_str();
  simdet->add_option("--stride", s_spec.grid_stride)->capture_default_str();
  json_flag(simdet);
  simdet->callback([&] {
    action = [&] {
      const auto gt = load_ground_truth(s_gt);
      const auto maps = render_heatmaps(gt, s_spec);
      for (const auto& h : maps) save_heatmaps(h, s_heat);
      const auto dets = render_detections(gt, s_spec);
      write_text(s_dets, to_json(dets));
      if (as_json) {
        out << json{{"heatmaps", maps.size()}, {"detections", dets.detections.size()}}.dump(2)
            << "\n";
      } else {
        out << "wrote " << maps.size() << " heatmaps and " << dets.detections.size()
            << " detections\n";
      }
    };
  });

  // scene ------------------------------------------------------------------
  auto* scene = app.add_subcommand("scene", "Generate a random ground-truth fixture");
  std::size_t g_images = 50;
  std::uint64_t g_seed = 0;
  std::string g_out;
  scene->add_option("--images", g_images, "Image count")->capture_default_str();
  scene->add_option("--seed", g_seed, "Seed")->required();
  scene->add_option("--out", g_out, "Ground truth JSON destination")->required();
  scene->callback([&] {
    action = [&] {
      const auto gt = synthetic_ground_truth(g_images, g_seed);
      write_text(g_out, to_json(gt, 2));
      out << "wrote " << gt.images.size() << " images, " << gt.annotations.size()
          << " boxes\n";
    };
  });

  // sweep ------------------------------------------------------------------
  auto* sweep = app.add_subcommand("sweep", "Energy/mAP correlation across temperatures");
  std::string w_list, w_out;
  std::vector<double> w_temps = default_sweep_temperatures();
  sweep->add_option("--datasets", w_list, "CSV rows label,heatmap_dir,map")->required();
  sweep->add_option("--temperatures", w_temps, "Temperatures")->delimiter(',')->capture_default_str();
  sweep->add_option("--out", w_out, "Write CSV here");
  json_flag(sweep);
  sweep->callback([&] {
    action = [&] {
      const auto datasets = load_sweep_datasets(w_list);
      const auto rows = sweep_temperature(datasets, w_temps);
      if (!w_out.empty()) write_text(w_out, to_csv(rows));
      out << (as_json ? to_json(rows, datasets) + "\n" : to_csv(rows));
    };
  });

  // serve ------------------------------------------------------------------
  auto* serve = app.add_subcommand("serve", "Run the pairwise voting service");
  std::string v_manifest, v_log, v_host = "127.0.0.1", v_static;
  int v_port = 8080;
  std::optional<std::uint64_t> v_seed;
  std::size_t v_rate = 0;
  serve->add_option("--manifest", v_manifest, "Method manifest JSON")->required();
  serve->add_option("--votes-log", v_log, "Append-only vote log")->required();
  serve->add_option("--port", v_port, "TCP port")->required();
  serve->add_option("--host", v_host, "Bind address")->capture_default_str();
  serve->add_option("--static-dir", v_static, "Serve browser assets from here");
  serve->add_option("--seed", v_seed, "Pair sampler seed");
  serve->add_option("--rate-limit", v_rate, "Votes per minute per client token (0 = off)");
  serve->callback([&] {
    action = [&] {
      BenchService::Options opts;
      if (v_seed) opts.seed = *v_seed;
      BenchService service(load_method_manifest(v_manifest), v_log, opts);
      BenchHttpServer http(service, {v_static, v_rate});
      const int port = http.bind(v_host, v_port);
      g_server.store(&http);
      std::signal(SIGINT, handle_stop_signal);
      std::signal(SIGTERM, handle_stop_signal);
      err << "serving on http://" << v_host << ":" << port << " (" << service.vote_count()
          << " votes replayed)\n";
      http.serve();
      g_server.store(nullptr);
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* failing = &app;
    for (auto* sub : app.get_subcommands()) failing = sub;
    err << failing->help();
    return kExitUsage;
  }

  try {
    if (action) action();
    return kExitOk;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "I/O error: " << e.what() << "\n";
    return kExitIo;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace limeeval::cli
