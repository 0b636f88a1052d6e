#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>

#include "lgrn/checkpoint.hpp"
#include "lgrn/dataset.hpp"
#include "lgrn/error.hpp"
#include "lgrn/eval.hpp"
#include "lgrn/fileutil.hpp"
#include "lgrn/image_io.hpp"
#include "lgrn/parallel.hpp"
#include "lgrn/pipeline.hpp"
#include "lgrn/training.hpp"

namespace lgrn::cli {

namespace fs = std::filesystem;

namespace {

// Run-level settings that are not owned by a library module but should still
// be settable from a config file.
struct SynthRun {
  int count = 10;
  int start = 0;
};

struct InferRun {
  std::string mode = "combined";
  bool tiled = true;
  int refine_passes = 1;
  bool heatmaps = false;
};

struct AblateRun {
  bool tiled = true;
  int refine_passes = 1;
};

struct EvalRun {
  std::string method = "external";
};

const std::vector<ConfigField<SynthRun>>& synth_run_fields() {
  static const std::vector<ConfigField<SynthRun>> f = {
      {"count", "number of samples to generate", &SynthRun::count},
      {"start", "index of the first sample", &SynthRun::start},
  };
  return f;
}

const std::vector<ConfigField<InferRun>>& infer_run_fields() {
  static const std::vector<ConfigField<InferRun>> f = {
      {"mode", "local, global or combined", &InferRun::mode},
      {"tiled", "run the local net patch-wise and stitch", &InferRun::tiled},
      {"refine_passes", "global refinement passes", &InferRun::refine_passes},
      {"heatmaps", "also write heatmap PNGs", &InferRun::heatmaps},
  };
  return f;
}

const std::vector<ConfigField<AblateRun>>& ablate_run_fields() {
  static const std::vector<ConfigField<AblateRun>> f = {
      {"tiled", "run the local net patch-wise and stitch", &AblateRun::tiled},
      {"refine_passes", "global refinement passes", &AblateRun::refine_passes},
  };
  return f;
}

const std::vector<ConfigField<EvalRun>>& eval_run_fields() {
  static const std::vector<ConfigField<EvalRun>> f = {
      {"method", "method name written to the report", &EvalRun::method},
  };
  return f;
}

template <typename Cfg>
std::string type_name(const ConfigField<Cfg>& field) {
  return std::visit(
      [](auto ptr) -> std::string {
        using V = std::remove_cvref_t<decltype(std::declval<Cfg>().*ptr)>;
        if constexpr (std::is_same_v<V, bool>) return "BOOL";
        else if constexpr (std::is_same_v<V, double>) return "FLOAT";
        else if constexpr (std::is_same_v<V, std::string>) return "TEXT";
        else return "INT";
      },
      field.member);
}

// Config keys of one subcommand. Each key becomes a --key option (plus a
// --dashed-key alias) whose help shows the built-in default. Precedence after
// parsing: command line, then --config file, then the default.
class KeyRegistry {
 public:
  template <typename Cfg>
  void add(CLI::App& app, Cfg& cfg, const std::vector<ConfigField<Cfg>>& fields,
           const std::map<std::string, std::string>& aliases = {}) {
    for (const auto& f : fields) {
      entries_.push_back({f.key, {}, nullptr, [&cfg, f](const std::string& v) { set_field(cfg, f, v); }});
      Entry& e = entries_.back();
      std::string names = "--" + f.key;
      std::string dashed = f.key;
      std::replace(dashed.begin(), dashed.end(), '_', '-');
      if (dashed != f.key) names += ",--" + dashed;
      if (auto it = aliases.find(f.key); it != aliases.end()) names += "," + it->second;
      const bool is_bool = std::holds_alternative<bool Cfg::*>(f.member);
      const std::string def = field_value(cfg, f);
      e.option = app.add_option(names, e.value, f.help);
      if (is_bool) {
        // default_str would be substituted for a bare flag, so only show it.
        e.option->expected(0, 1)->option_text("BOOL [" + def + "]");
      } else {
        e.option->type_name(type_name(f))->default_str(def);
      }
    }
  }

  void resolve(const std::string& config_path) {
    KeyValues file;
    if (!config_path.empty()) {
      if (!fs::exists(config_path)) throw UsageError("config file " + config_path + " not found");
      file = read_key_values(config_path);
      for (const auto& [k, v] : file) {
        const bool known =
            std::any_of(entries_.begin(), entries_.end(), [&](const Entry& e) { return e.key == k; });
        if (!known) throw UsageError("unknown key '" + k + "' in " + config_path);
      }
    }
    for (Entry& e : entries_) {
      if (e.option->count() > 0) {
        // A bare boolean flag (no value) means true.
        const auto& raw = e.option->results();
        e.apply(raw.empty() || raw.front().empty() ? "true" : raw.front());
      } else if (auto it = file.find(e.key); it != file.end()) {
        e.apply(it->second);
      }
    }
  }

 private:
  struct Entry {
    std::string key;
    std::string value;
    CLI::Option* option;
    std::function<void(const std::string&)> apply;
  };
  std::deque<Entry> entries_;
};

struct Common {
  std::string config;
  int jobs = 1;
  int verbose = 0;
  bool quiet = false;
};

void add_common(CLI::App& sub, Common& c) {
  sub.add_option("--config", c.config, "key = value file; command-line options override it");
  sub.add_option("-j,--jobs", c.jobs, "worker threads for per-image work")->default_str("1")->check(
      CLI::PositiveNumber);
  sub.add_flag("-v,--verbose", c.verbose, "more progress output");
  sub.add_flag("-q,--quiet", c.quiet, "no progress output");
}

class NullBuffer : public std::streambuf {
 protected:
  int overflow(int c) override { return c; }
};

std::vector<SynthSample> load_dataset(const std::string& dir, const char* what) {
  if (dir.empty()) throw UsageError(std::string("--") + what + " is required");
  if (!fs::is_directory(dir)) throw DataError("dataset directory " + dir + " not found");
  auto samples = read_dataset(dir);
  if (samples.empty()) throw DataError("dataset " + dir + " contains no images (expected " + dir + "/images/*.png)");
  return samples;
}

nn::ModelParams load_model(const std::string& path, const char* flag) {
  if (path.empty()) throw UsageError(std::string(flag) + " is required");
  if (!fs::exists(path)) throw DataError("checkpoint " + path + " not found");
  return load_checkpoint(path);
}

std::vector<std::string> ids_of(const std::vector<SynthSample>& samples) {
  std::vector<std::string> ids;
  for (const auto& s : samples) ids.push_back(sample_id(s.index));
  return ids;
}

std::string dataset_name(const std::string& dir) {
  fs::path p = fs::path(dir).lexically_normal();
  if (p.filename().empty()) p = p.parent_path();
  return p.filename().string();
}

// --- plot drawing ----------------------------------------------------------------

using Rgb = std::array<std::uint8_t, 3>;

void put(RgbImage& img, int x, int y, Rgb c) {
  if (x >= 0 && y >= 0 && x < img.width && y < img.height) img.at(x, y) = c;
}

void draw_line(RgbImage& img, double x0, double y0, double x1, double y1, Rgb c) {
  const int n = static_cast<int>(std::ceil(std::max(std::abs(x1 - x0), std::abs(y1 - y0)))) + 1;
  for (int i = 0; i <= n; ++i) {
    const double t = static_cast<double>(i) / n;
    put(img, static_cast<int>(std::lround(x0 + t * (x1 - x0))), static_cast<int>(std::lround(y0 + t * (y1 - y0))), c);
  }
}

void draw_circle(RgbImage& img, double cx, double cy, double r, Rgb c) {
  const int n = std::max(16, static_cast<int>(2 * M_PI * r * 2));
  for (int i = 0; i < n; ++i) {
    const double a = 2 * M_PI * i / n;
    put(img, static_cast<int>(std::lround(cx + r * std::cos(a))), static_cast<int>(std::lround(cy + r * std::sin(a))), c);
  }
}

void draw_cross(RgbImage& img, double cx, double cy, int arm, Rgb c) {
  draw_line(img, cx - arm, cy - arm, cx + arm, cy + arm, c);
  draw_line(img, cx - arm, cy + arm, cx + arm, cy - arm, c);
}

RgbImage overlay(const Tensor<float>& image, const StrutPointSet& gt, const StrutPointSet& pred,
                 const MatchResult& match, double tolerance) {
  RgbImage img(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x) {
      const auto g = static_cast<std::uint8_t>(std::lround(std::clamp(image.at(y, x), 0.0f, 1.0f) * 255.0f));
      img.at(x, y) = {g, g, g};
    }
  for (const auto& p : match.pairs)
    draw_line(img, pred.points[p.pred].x, pred.points[p.pred].y, gt.points[p.gt].x, gt.points[p.gt].y,
              {255, 220, 0});
  for (const auto& p : gt.points) draw_circle(img, p.x, p.y, tolerance, {0, 220, 0});
  for (const auto& p : pred.points) draw_cross(img, p.x, p.y, 3, {255, 40, 40});
  return img;
}

}  // namespace

const std::vector<std::string>& subcommands() {
  static const std::vector<std::string> names = {"synth", "train-local", "train-global", "infer",
                                                 "eval",  "ablate",      "plot"};
  return names;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"LGRN stent strut detector: synthetic data, training, inference and evaluation", "lgrn"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "help for every subcommand");

  Common common;
  std::map<std::string, KeyRegistry> registry;
  std::function<void(std::ostream&)> action;
  std::string data_dir, val_dir, out_dir, local_ckpt, global_ckpt, global_only_ckpt, pred_dir;

  NullBuffer null_buffer;
  std::ostream null_stream(&null_buffer);
  auto log = [&]() -> std::ostream& { return common.quiet ? null_stream : err; };

  // synth ------------------------------------------------------------------------------
  SynthConfig synth;
  SynthRun synth_run;
  auto* s_synth = app.add_subcommand("synth", "generate a synthetic dataset");
  add_common(*s_synth, common);
  s_synth->add_option("-o,--out", out_dir, "output dataset directory")->required();
  registry[s_synth->get_name()].add(*s_synth, synth, SynthConfig::fields(), {{"rng_seed", "--seed"}});
  registry[s_synth->get_name()].add(*s_synth, synth_run, synth_run_fields());
  s_synth->callback([&] {
    action = [&](std::ostream&) {
      synth.validate();
      if (synth_run.count < 1) throw UsageError("count must be >= 1");
      if (synth_run.start < 0) throw UsageError("start must be >= 0");
      std::vector<SynthSample> samples(synth_run.count);
      parallel_for(synth_run.count, common.jobs,
                   [&](int i) { samples[i] = generate_sample(synth, synth_run.start + i); });
      write_dataset(samples, out_dir, &synth);
      log() << "wrote " << samples.size() << " samples to " << out_dir << '\n';
    };
  });

  // train-local --------------------------------------------------------------------------
  TrainConfig train;
  LocalNetSpec local_spec;
  auto* s_tl = app.add_subcommand("train-local", "train the local patch network");
  add_common(*s_tl, common);
  s_tl->add_option("-d,--data", data_dir, "training dataset directory")->required();
  s_tl->add_option("--val", val_dir, "validation dataset directory");
  s_tl->add_option("-o,--out", out_dir, "output directory for checkpoints and loss curves")->required();
  registry[s_tl->get_name()].add(*s_tl, train, TrainConfig::fields());
  registry[s_tl->get_name()].add(*s_tl, local_spec, local_spec_fields());
  s_tl->callback([&] {
    action = [&](std::ostream& o) {
      const auto samples = load_dataset(data_dir, "data");
      const auto pairs = make_training_pairs(samples, train.footprint_radius);
      std::vector<TrainingPair> val;
      if (!val_dir.empty()) val = make_training_pairs(load_dataset(val_dir, "val"), train.footprint_radius);
      auto result = train_local(pairs, val, local_spec, train, {out_dir, "local", &log()});
      o << "local checkpoint: " << (fs::path(out_dir) / "local.ckpt").string() << '\n';
    };
  });

  // train-global -------------------------------------------------------------------------
  GlobalNetSpec global_spec;
  AttentionSpec attention_spec;
  auto* s_tg = app.add_subcommand("train-global", "train the global refiner and attention module");
  add_common(*s_tg, common);
  s_tg->add_option("-d,--data", data_dir, "training dataset directory")->required();
  s_tg->add_option("--val", val_dir, "validation dataset directory");
  s_tg->add_option("--local", local_ckpt, "trained local checkpoint (not needed with global_only)");
  s_tg->add_option("-o,--out", out_dir, "output directory for checkpoints and loss curves")->required();
  registry[s_tg->get_name()].add(*s_tg, train, TrainConfig::fields());
  registry[s_tg->get_name()].add(*s_tg, global_spec, global_spec_fields());
  registry[s_tg->get_name()].add(*s_tg, attention_spec, attention_spec_fields());
  s_tg->callback([&] {
    action = [&](std::ostream& o) {
      const auto samples = load_dataset(data_dir, "data");
      const auto pairs = make_training_pairs(samples, train.footprint_radius);
      std::vector<TrainingPair> val;
      if (!val_dir.empty()) val = make_training_pairs(load_dataset(val_dir, "val"), train.footprint_radius);
      std::vector<Tensor<float>> maps, val_maps;
      if (!train.global_only) {
        const auto local = load_model(local_ckpt, "--local");
        maps = compute_local_maps(local, pairs);
        val_maps = compute_local_maps(local, val);
      }
      const std::string prefix = train.global_only ? "global_only" : "global";
      train_global(pairs, maps, val, val_maps, global_spec, attention_spec, train, {out_dir, prefix, &log()});
      o << "global checkpoint: " << (fs::path(out_dir) / (prefix + ".ckpt")).string() << '\n';
    };
  });

  // infer --------------------------------------------------------------------------------
  ExtractionConfig extraction;
  TileGrid grid;
  InferRun infer_run;
  auto* s_inf = app.add_subcommand("infer", "detect struts and write one CSV per image");
  add_common(*s_inf, common);
  s_inf->add_option("-d,--data", data_dir, "dataset directory with images/")->required();
  s_inf->add_option("--local", local_ckpt, "local checkpoint (modes local, combined)");
  s_inf->add_option("--global", global_ckpt, "global checkpoint (modes global, combined)");
  s_inf->add_option("-o,--out", out_dir, "output directory for <id>.csv predictions")->required();
  registry[s_inf->get_name()].add(*s_inf, infer_run, infer_run_fields());
  registry[s_inf->get_name()].add(*s_inf, extraction, extraction_fields());
  registry[s_inf->get_name()].add(*s_inf, grid, tile_grid_fields());
  s_inf->callback([&] {
    action = [&](std::ostream& o) {
      DetectOptions opts;
      opts.mode = parse_detect_mode(infer_run.mode);
      opts.tiled = infer_run.tiled;
      opts.grid = grid;
      opts.extraction = extraction;
      opts.refine_passes = infer_run.refine_passes;
      if (opts.tiled) grid.validate();
      nn::ModelParams local, global;
      if (opts.mode != DetectMode::kGlobalOnly) local = load_model(local_ckpt, "--local");
      if (opts.mode != DetectMode::kLocalOnly) global = load_model(global_ckpt, "--global");
      const Detector detector(opts.mode != DetectMode::kGlobalOnly ? &local : nullptr,
                              opts.mode != DetectMode::kLocalOnly ? &global : nullptr);
      const auto samples = load_dataset(data_dir, "data");
      std::vector<DetectionResult> results(samples.size());
      parallel_for(static_cast<int>(samples.size()), common.jobs,
                   [&](int i) { results[i] = detector.detect(samples[i].image, opts); });
      for (std::size_t i = 0; i < samples.size(); ++i) {
        const std::string id = sample_id(samples[i].index);
        write_points_csv(fs::path(out_dir) / (id + ".csv"), results[i].points, &results[i].scores);
        if (infer_run.heatmaps) {
          if (!results[i].local_map.values.empty())
            write_png_gray8(fs::path(out_dir) / "heatmaps" / (id + "_local.png"), results[i].local_map.values);
          if (!results[i].refined_map.values.empty())
            write_png_gray8(fs::path(out_dir) / "heatmaps" / (id + "_refined.png"), results[i].refined_map.values);
        }
        if (common.verbose > 0)
          log() << id << ": " << results[i].points.size() << " points, local " << results[i].timing.local_ms
                << " ms, global " << results[i].timing.global_ms << " ms, extract " << results[i].timing.extract_ms
                << " ms\n";
      }
      std::vector<std::pair<std::string, std::string>> conf = to_entries(infer_run, infer_run_fields());
      for (auto& kv : to_entries(extraction, extraction_fields())) conf.push_back(kv);
      for (auto& kv : to_entries(grid, tile_grid_fields())) conf.push_back(kv);
      write_text_atomic(fs::path(out_dir) / "infer.conf", format_key_values(conf));
      o << "wrote predictions for " << samples.size() << " images to " << out_dir << '\n';
    };
  });

  // eval ---------------------------------------------------------------------------------
  EvalConfig eval_cfg;
  EvalRun eval_run;
  auto* s_eval = app.add_subcommand("eval", "score predicted point files against ground truth");
  add_common(*s_eval, common);
  s_eval->add_option("-d,--data", data_dir, "ground-truth dataset directory")->required();
  s_eval->add_option("-p,--pred-dir", pred_dir, "directory with <id>.csv predictions")->required();
  s_eval->add_option("-o,--out", out_dir, "write metrics.csv and metrics.txt here");
  registry[s_eval->get_name()].add(*s_eval, eval_cfg, eval_fields());
  registry[s_eval->get_name()].add(*s_eval, eval_run, eval_run_fields());
  s_eval->callback([&] {
    action = [&](std::ostream& o) {
      const auto samples = load_dataset(data_dir, "data");
      const auto ids = ids_of(samples);
      std::vector<std::string> warnings;
      const auto preds = ingest_external(pred_dir, ids, &warnings);
      for (const auto& w : warnings) err << "warning: " << w << '\n';
      std::vector<ImageScore> scores(samples.size());
      parallel_for(static_cast<int>(samples.size()), common.jobs, [&](int i) {
        scores[i] = {ids[i], match_points(preds.at(ids[i]), samples[i].points, eval_cfg.tolerance)};
      });
      MetricsReport report = compute_metrics(scores, eval_run.method, dataset_name(data_dir));
      report.config["tolerance"] = format_double(eval_cfg.tolerance);
      o << report_text(report);
      if (!out_dir.empty()) {
        write_text_atomic(fs::path(out_dir) / "metrics.csv", report_csv(report));
        write_text_atomic(fs::path(out_dir) / "metrics.txt", report_text(report));
      }
    };
  });

  // ablate -------------------------------------------------------------------------------
  AblateRun ablate_run;
  auto* s_abl = app.add_subcommand("ablate", "compare local-only, global-only and combined detection");
  add_common(*s_abl, common);
  s_abl->add_option("-d,--data", data_dir, "held-out dataset directory")->required();
  s_abl->add_option("--local", local_ckpt, "local checkpoint")->required();
  s_abl->add_option("--global", global_ckpt, "global checkpoint trained on local maps")->required();
  s_abl->add_option("--global-only-model", global_only_ckpt,
                    "global checkpoint trained without the local channel (default: --global with a zero channel)");
  s_abl->add_option("-o,--out", out_dir, "write ablation.csv, ablation.txt and per-method metrics here");
  registry[s_abl->get_name()].add(*s_abl, ablate_run, ablate_run_fields());
  registry[s_abl->get_name()].add(*s_abl, extraction, extraction_fields());
  registry[s_abl->get_name()].add(*s_abl, grid, tile_grid_fields());
  registry[s_abl->get_name()].add(*s_abl, eval_cfg, eval_fields());
  s_abl->callback([&] {
    action = [&](std::ostream& o) {
      const auto local = load_model(local_ckpt, "--local");
      const auto global = load_model(global_ckpt, "--global");
      nn::ModelParams global_only = global;
      if (!global_only_ckpt.empty()) global_only = load_model(global_only_ckpt, "--global-only-model");
      else log() << "note: no --global-only-model given; global-only row feeds a zero local channel to --global\n";
      const auto samples = load_dataset(data_dir, "data");
      const auto ids = ids_of(samples);
      const Detector combined(&local, &global);
      const Detector alone(nullptr, &global_only);

      struct Row {
        const char* name;
        DetectMode mode;
        const Detector* det;
      };
      const Row rows[] = {{"Local-Network", DetectMode::kLocalOnly, &combined},
                          {"Global-Network", DetectMode::kGlobalOnly, &alone},
                          {"Local-Global", DetectMode::kCombined, &combined}};
      std::vector<MetricsReport> reports;
      for (const Row& row : rows) {
        DetectOptions opts;
        opts.mode = row.mode;
        opts.tiled = ablate_run.tiled;
        opts.grid = grid;
        opts.extraction = extraction;
        opts.refine_passes = ablate_run.refine_passes;
        std::vector<ImageScore> scores(samples.size());
        parallel_for(static_cast<int>(samples.size()), common.jobs, [&](int i) {
          const auto r = row.det->detect(samples[i].image, opts);
          scores[i] = {ids[i], match_points(r.points, samples[i].points, eval_cfg.tolerance)};
        });
        reports.push_back(compute_metrics(scores, row.name, dataset_name(data_dir)));
        reports.back().config["tolerance"] = format_double(eval_cfg.tolerance);
        log() << row.name << " done\n";
      }
      o << comparison_table(reports);
      if (!out_dir.empty()) {
        write_text_atomic(fs::path(out_dir) / "ablation.csv", comparison_csv(reports));
        write_text_atomic(fs::path(out_dir) / "ablation.txt", comparison_table(reports));
        for (const auto& r : reports) {
          std::string stem = r.method;
          std::transform(stem.begin(), stem.end(), stem.begin(), [](unsigned char c) { return std::tolower(c); });
          write_text_atomic(fs::path(out_dir) / (stem + "_metrics.csv"), report_csv(r));
        }
      }
    };
  });

  // plot ---------------------------------------------------------------------------------
  auto* s_plot = app.add_subcommand("plot", "overlay ground truth (circles), predictions (crosses) and matches");
  add_common(*s_plot, common);
  s_plot->add_option("-d,--data", data_dir, "ground-truth dataset directory")->required();
  s_plot->add_option("-p,--pred-dir", pred_dir, "directory with <id>.csv predictions")->required();
  s_plot->add_option("-o,--out", out_dir, "output directory for overlay PNGs")->required();
  registry[s_plot->get_name()].add(*s_plot, eval_cfg, eval_fields());
  s_plot->callback([&] {
    action = [&](std::ostream& o) {
      const auto samples = load_dataset(data_dir, "data");
      const auto ids = ids_of(samples);
      std::vector<std::string> warnings;
      const auto preds = ingest_external(pred_dir, ids, &warnings);
      for (const auto& w : warnings) err << "warning: " << w << '\n';
      parallel_for(static_cast<int>(samples.size()), common.jobs, [&](int i) {
        const auto& pred = preds.at(ids[i]);
        const auto m = match_points(pred, samples[i].points, eval_cfg.tolerance);
        write_png_rgb(fs::path(out_dir) / (ids[i] + ".png"),
                      overlay(samples[i].image.pixels, samples[i].points, pred, m, eval_cfg.tolerance));
      });
      o << "wrote " << samples.size() << " overlays to " << out_dir << '\n';
    };
  });

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : static_cast<int>(ExitCode::kUsage);
  }

  try {
    for (CLI::App* sub : app.get_subcommands()) registry[sub->get_name()].resolve(common.config);
    if (!action) throw UsageError("no subcommand given");
    action(out);
    return static_cast<int>(ExitCode::kOk);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kUsage);
  } catch (const NumericError& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kNumeric);
  } catch (const DataError& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kData);
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kData);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return static_cast<int>(ExitCode::kData);
  }
}

}  // namespace lgrn::cli
