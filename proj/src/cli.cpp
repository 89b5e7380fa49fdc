#include "lfdeblur/cli.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <set>
#include <thread>
#include <vector>

#include "lfdeblur/config_io.hpp"
#include "lfdeblur/light_field.hpp"
#include "lfdeblur/metrics.hpp"
#include "lfdeblur/model/checkpoint.hpp"
#include "lfdeblur/model/network.hpp"
#include "lfdeblur/png_io.hpp"
#include "lfdeblur/train/dataset.hpp"
#include "lfdeblur/train/loop.hpp"
#include "lfdeblur/trajectory.hpp"
#include "lfdeblur/warp.hpp"

namespace lfdeblur {

namespace fs = std::filesystem;

namespace {

bool dir_is_light_field(const fs::path& dir) {
  return fs::is_directory(dir) && fs::exists(dir / "view_00_00.png");
}

// Sorted names of immediate subdirectories that hold a view grid.
std::vector<std::string> scene_subdirs(const fs::path& root) {
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(root))
    if (dir_is_light_field(entry.path())) names.push_back(entry.path().filename().string());
  std::sort(names.begin(), names.end());
  return names;
}

// Runs body(i) for i in [0, n) on up to `jobs` threads. The first exception
// wins and is rethrown on the calling thread.
void parallel_for(int jobs, int64_t n, const std::function<void(int64_t)>& body) {
  jobs = int(std::min<int64_t>(std::max(jobs, 1), n));
  if (jobs <= 1) {
    for (int64_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<int64_t> next{0};
  std::mutex err_mutex;
  std::exception_ptr error;
  auto worker = [&] {
    for (;;) {
      const int64_t i = next.fetch_add(1);
      if (i >= n) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!error) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  for (int t = 0; t < jobs; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

std::pair<int64_t, int64_t> parse_index_pair(const std::string& flag, const std::string& text) {
  long long a = 0, b = 0;
  char tail = 0;
  if (std::sscanf(text.c_str(), "%lld,%lld%c", &a, &b, &tail) != 2)
    throw ConfigError(flag + ": expected two comma-separated indices, got '" + text + "'");
  return {a, b};
}

std::string resolve_model_ckpt(const std::string& path) {
  if (fs::is_directory(path)) return (fs::path(path) / "model.ckpt").string();
  return path;
}

void apply_overrides(ToolConfig& cfg, const std::vector<std::string>& sets) {
  for (const std::string& kv : sets) {
    const size_t eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    auto trim = [](std::string s) {
      const size_t a = s.find_first_not_of(" \t");
      const size_t b = s.find_last_not_of(" \t");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    apply_config_line(cfg, trim(kv.substr(0, eq)), trim(kv.substr(eq + 1)));
  }
}

// ---------------------------------------------------------------- synth ----

struct SynthArgs {
  std::string in, out, config;
  int jobs = 1;
  SynthConfig flags;  // staging area for explicit flag values
  CLI::Option *o_dof = nullptr, *o_trans = nullptr, *o_rot = nullptr, *o_samples = nullptr,
              *o_seed = nullptr, *o_disparity = nullptr, *o_baseline = nullptr;
};

void synth_scene(const fs::path& in_dir, const fs::path& out_dir, const SynthConfig& scfg,
                 uint64_t seed, std::mutex& print_mutex) {
  const LightField sharp = load_light_field(in_dir.string());
  CameraTrajectory traj =
      sample_trajectory(seed, scfg.dof, scfg.trans_mag, scfg.rot_mag, scfg.samples);
  traj.baseline = scfg.baseline;
  const LightField blurred = synthesize_blur(sharp, traj, scfg.disparity);
  fs::create_directories(out_dir);
  save_light_field(sharp, (out_dir / "sharp").string());
  save_light_field(blurred, (out_dir / "blur").string());
  save_trajectory((out_dir / "trajectory.txt").string(), traj);
  std::lock_guard<std::mutex> lock(print_mutex);
  std::printf("synth %s: %" PRId64 "x%" PRId64 " views of %" PRId64 "x%" PRId64
              ", %d poses, seed %" PRIu64 "\n",
              out_dir.filename().string().c_str(), sharp.U(), sharp.V(), sharp.X(), sharp.Y(),
              int(traj.poses.size()), seed);
}

int run_synth(const SynthArgs& args) {
  SynthConfig scfg = args.config.empty() ? SynthConfig{} : parse_config_file(args.config).synth;
  if (args.o_dof->count()) scfg.dof = args.flags.dof;
  if (args.o_trans->count()) scfg.trans_mag = args.flags.trans_mag;
  if (args.o_rot->count()) scfg.rot_mag = args.flags.rot_mag;
  if (args.o_samples->count()) scfg.samples = args.flags.samples;
  if (args.o_seed->count()) scfg.seed = args.flags.seed;
  if (args.o_disparity->count()) scfg.disparity = args.flags.disparity;
  if (args.o_baseline->count()) scfg.baseline = args.flags.baseline;
  scfg.validate();

  std::mutex print_mutex;
  if (dir_is_light_field(args.in)) {
    synth_scene(args.in, args.out, scfg, scfg.seed, print_mutex);
    return 0;
  }
  const std::vector<std::string> scenes = scene_subdirs(args.in);
  if (scenes.empty())
    throw IoError(args.in + " holds neither a view grid nor scene subdirectories");
  parallel_for(args.jobs, int64_t(scenes.size()), [&](int64_t i) {
    synth_scene(fs::path(args.in) / scenes[size_t(i)], fs::path(args.out) / scenes[size_t(i)],
                scfg, mix_seed(scfg.seed, uint64_t(i)), print_mutex);
  });
  return 0;
}

// ---------------------------------------------------------------- train ----

struct TrainArgs {
  std::string data, out, config, resume, precision = "f32";
  std::vector<std::string> sets;
};

template <class T>
int run_train_typed(const TrainArgs& args, const ToolConfig& cfg) {
  const std::vector<ScenePair> scenes = load_dataset(args.data);
  fs::create_directories(args.out);
  {
    std::ofstream cfg_out(fs::path(args.out) / "config.txt");
    cfg_out << serialize_config(cfg);
  }
  std::cout << serialize_config(cfg);
  std::cout << "scenes: " << scenes.size() << ", parameters: " << count_params(cfg.model).total
            << ", precision: " << args.precision << "\n";

  const auto log_mode = args.resume.empty() ? std::ios::trunc : std::ios::app;
  std::ofstream log(fs::path(args.out) / "train.log", log_mode);
  TrainOptions opt;
  opt.out_dir = args.out;
  opt.resume_dir = args.resume;
  opt.record_losses = false;
  opt.log = [&](int64_t step, int64_t epoch, double loss, double lr) {
    char line[160];
    std::snprintf(line, sizeof line, "step=%" PRId64 " epoch=%" PRId64 " loss=%.6f lr=%.3e", step,
                  epoch, loss, lr);
    std::cout << line << "\n";
    log << line << "\n";
    log.flush();
  };

  const auto t0 = std::chrono::steady_clock::now();
  TrainRun<T> run = train_loop<T>(scenes, cfg.model, cfg.train, opt);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  char tail[200];
  std::snprintf(tail, sizeof tail,
                "done: %" PRId64 " steps, best center-patch psnr %.2f dB, %.1f s", run.state.step,
                run.state.best_psnr, secs);
  std::cout << tail << "\n";
  log << tail << "\n";
  return 0;
}

int run_train(const TrainArgs& args) {
  ToolConfig cfg = args.config.empty() ? ToolConfig{} : parse_config_file(args.config);
  apply_overrides(cfg, args.sets);
  cfg.model.validate();
  cfg.train.validate();
  if (args.precision == "f32") return run_train_typed<float>(args, cfg);
  if (args.precision == "f64") return run_train_typed<double>(args, cfg);
  throw ConfigError("--precision must be f32 or f64, got '" + args.precision + "'");
}

// ---------------------------------------------------------------- infer ----

struct InferArgs {
  std::string ckpt, in, out;
};

int run_infer(const InferArgs& args) {
  const ModelParams<float> params = load_model_checkpoint<float>(resolve_model_ckpt(args.ckpt));
  const LightField blurred = load_light_field(args.in);
  const Tensor<float> input = cast_tensor<float>(blurred.data());
  const auto t0 = std::chrono::steady_clock::now();
  Tensor<float> pred = forward_nocache(params, input);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const LightField restored(cast_tensor<double>(pred));
  save_light_field(restored, args.out);
  std::printf("infer: %" PRId64 "x%" PRId64 " views of %" PRId64 "x%" PRId64
              ", %" PRId64 " parameters, %.2f s\n",
              restored.U(), restored.V(), restored.X(), restored.Y(), total_params(params), secs);
  return 0;
}

// ----------------------------------------------------------------- eval ----

struct EvalArgs {
  std::string pred, gt, report;
  int jobs = 1;
};

int run_eval(const EvalArgs& args) {
  std::vector<SceneMetrics> rows;
  if (dir_is_light_field(args.pred) && dir_is_light_field(args.gt)) {
    const LightField p = load_light_field(args.pred);
    const LightField g = load_light_field(args.gt);
    std::string name = fs::path(args.pred).filename().string();
    if (name.empty()) name = "pair";
    rows.push_back({name, evaluate_pair(p, g)});
  } else {
    const std::vector<std::string> pred_scenes = scene_subdirs(args.pred);
    const std::vector<std::string> gt_scenes = scene_subdirs(args.gt);
    if (pred_scenes != gt_scenes) {
      std::string msg = "eval: scene sets differ;";
      for (const auto& s : pred_scenes)
        if (!std::count(gt_scenes.begin(), gt_scenes.end(), s)) msg += " only-pred:" + s;
      for (const auto& s : gt_scenes)
        if (!std::count(pred_scenes.begin(), pred_scenes.end(), s)) msg += " only-gt:" + s;
      throw IoError(msg);
    }
    if (gt_scenes.empty()) throw IoError("eval: no scenes found under " + args.gt);
    rows.resize(gt_scenes.size());
    parallel_for(args.jobs, int64_t(gt_scenes.size()), [&](int64_t i) {
      const std::string& name = gt_scenes[size_t(i)];
      const LightField p = load_light_field((fs::path(args.pred) / name).string());
      const LightField g = load_light_field((fs::path(args.gt) / name).string());
      rows[size_t(i)] = {name, evaluate_pair(p, g)};
    });
  }
  const MetricReport report = make_report(std::move(rows));
  std::cout << report_to_text(report);
  if (!args.report.empty()) save_report(args.report, report);
  return 0;
}

// ---------------------------------------------------------------- slice ----

struct SliceArgs {
  std::string in, out;
  std::string sai, micro, epi_h, epi_v;
  int upscale = 1;
};

int run_slice(const SliceArgs& args) {
  const int given = int(!args.sai.empty()) + int(!args.micro.empty()) + int(!args.epi_h.empty()) +
                    int(!args.epi_v.empty());
  if (given != 1)
    throw ConfigError("slice: give exactly one of --sai, --micro, --epi-h, --epi-v");
  if (args.upscale < 1) throw ConfigError("slice: --upscale must be >= 1");
  const LightField lf = load_light_field(args.in);
  Image img;
  std::string what;
  if (!args.sai.empty()) {
    const auto [u, v] = parse_index_pair("--sai", args.sai);
    img = lf.sai(u, v);
    what = "view (" + std::to_string(u) + ", " + std::to_string(v) + ")";
  } else if (!args.micro.empty()) {
    const auto [x, y] = parse_index_pair("--micro", args.micro);
    img = lf.micro_lens(x, y);
    what = "micro-lens image at (" + std::to_string(x) + ", " + std::to_string(y) + ")";
  } else if (!args.epi_h.empty()) {
    const auto [u, y] = parse_index_pair("--epi-h", args.epi_h);
    img = epi(lf, EpiOrientation::Horizontal, u, y);
    what = "horizontal epi at u=" + std::to_string(u) + ", y=" + std::to_string(y);
  } else {
    const auto [v, x] = parse_index_pair("--epi-v", args.epi_v);
    img = epi(lf, EpiOrientation::Vertical, v, x);
    what = "vertical epi at v=" + std::to_string(v) + ", x=" + std::to_string(x);
  }
  if (args.upscale > 1) img = upscale_nearest(img, args.upscale);
  write_png(args.out, img);
  std::printf("slice: %s -> %s (%" PRId64 "x%" PRId64 ")\n", what.c_str(), args.out.c_str(),
              img.dim(1), img.dim(0));
  return 0;
}

// ----------------------------------------------------------------- info ----

struct InfoArgs {
  std::string config, ckpt;
  std::vector<std::string> sets;
};

int run_info(const InfoArgs& args) {
  ToolConfig cfg;
  if (!args.ckpt.empty()) {
    cfg.model = peek_checkpoint_config(resolve_model_ckpt(args.ckpt));
  } else {
    if (!args.config.empty()) cfg = parse_config_file(args.config);
    apply_overrides(cfg, args.sets);
  }
  cfg.model.validate();
  std::cout << serialize_config(cfg);

  const ParamReport report = count_params(cfg.model);
  size_t width = 6;
  for (const auto& row : report.rows) width = std::max(width, row.module.size());
  std::cout << "\nparameters\n";
  for (const auto& row : report.rows)
    std::printf("  %-*s %10" PRId64 "\n", int(width), row.module.c_str(), row.count);
  std::printf("  %-*s %10" PRId64 "\n", int(width), "total", report.total);

  const ModelParams<float> params = make_params<float>(cfg.model);
  const int64_t enumerated = total_params(params);
  std::printf("  %-*s %10" PRId64 "\n", int(width), "tensors", enumerated);
  if (enumerated != report.total) {
    std::printf("  parameter accounting mismatch\n");
    return 1;
  }
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
  CLI::App app{"light-field motion deblurring toolkit"};
  app.require_subcommand(1);
  int rc = 0;

  SynthArgs synth;
  CLI::App* s = app.add_subcommand(
      "synth", "blur a sharp view grid (or a directory of them) along a sampled camera path");
  s->add_option("--in", synth.in, "sharp views, or a directory of scene subdirectories")
      ->required()
      ->check(CLI::ExistingDirectory);
  s->add_option("--out", synth.out, "output directory (gets blur/, sharp/, trajectory.txt)")
      ->required();
  s->add_option("--config", synth.config, "config file (synth.* keys)")
      ->check(CLI::ExistingFile);
  synth.o_dof = s->add_option("--dof", synth.flags.dof, "3 (translation) or 6 (with rotation)");
  synth.o_trans = s->add_option("--trans-mag", synth.flags.trans_mag, "endpoint translation bound");
  synth.o_rot = s->add_option("--rot-mag", synth.flags.rot_mag, "endpoint rotation bound, radians");
  synth.o_samples = s->add_option("--samples", synth.flags.samples, "poses per exposure");
  synth.o_seed = s->add_option("--seed", synth.flags.seed, "trajectory seed (per-scene mixed)");
  synth.o_disparity =
      s->add_option("--disparity", synth.flags.disparity, "reference plane disparity, pixels");
  synth.o_baseline = s->add_option("--baseline", synth.flags.baseline, "inter-view spacing");
  s->add_option("--jobs", synth.jobs, "parallel scenes")->check(CLI::PositiveNumber);
  s->callback([&] { rc = run_synth(synth); });

  TrainArgs train;
  CLI::App* t = app.add_subcommand("train", "train the deblurring network on paired scenes");
  t->add_option("--data", train.data, "dataset root: scene dirs with blur/ and sharp/")
      ->required()
      ->check(CLI::ExistingDirectory);
  t->add_option("--out", train.out, "run directory for checkpoints, config.txt, train.log")
      ->required();
  t->add_option("--config", train.config, "config file")->check(CLI::ExistingFile);
  t->add_option("--set", train.sets, "override, e.g. --set train.total_epochs=40");
  t->add_option("--resume", train.resume, "checkpoint directory to resume from")
      ->check(CLI::ExistingDirectory);
  t->add_option("--precision", train.precision, "f32 or f64");
  t->callback([&] { rc = run_train(train); });

  InferArgs infer;
  CLI::App* i = app.add_subcommand("infer", "deblur a view grid with a trained checkpoint");
  i->add_option("--ckpt", infer.ckpt, "model.ckpt file or checkpoint directory")
      ->required()
      ->check(CLI::ExistingPath);
  i->add_option("--in", infer.in, "blurred views")->required()->check(CLI::ExistingDirectory);
  i->add_option("--out", infer.out, "output view directory")->required();
  i->callback([&] { rc = run_infer(infer); });

  EvalArgs eval;
  CLI::App* e = app.add_subcommand("eval", "image-quality metrics for restored vs reference views");
  e->add_option("--pred", eval.pred, "restored views, or a directory of scenes")
      ->required()
      ->check(CLI::ExistingDirectory);
  e->add_option("--gt", eval.gt, "reference views, matching --pred layout")
      ->required()
      ->check(CLI::ExistingDirectory);
  e->add_option("--report", eval.report, "also write the table to this file");
  e->add_option("--jobs", eval.jobs, "parallel scenes")->check(CLI::PositiveNumber);
  e->callback([&] { rc = run_eval(eval); });

  SliceArgs slice;
  CLI::App* l = app.add_subcommand("slice", "extract a view, micro-lens image, or epipolar image");
  l->add_option("--in", slice.in, "view directory")->required()->check(CLI::ExistingDirectory);
  l->add_option("--out", slice.out, "output PNG")->required();
  l->add_option("--sai", slice.sai, "view indices u,v");
  l->add_option("--micro", slice.micro, "spatial position x,y");
  l->add_option("--epi-h", slice.epi_h, "fixed u,y (varies v over rows x)");
  l->add_option("--epi-v", slice.epi_v, "fixed v,x (varies u over columns y)");
  l->add_option("--upscale", slice.upscale, "nearest-neighbour upscale factor");
  l->callback([&] { rc = run_slice(slice); });

  InfoArgs info;
  CLI::App* n = app.add_subcommand("info", "echo a resolved config and its parameter budget");
  n->add_option("--config", info.config, "config file")->check(CLI::ExistingFile);
  n->add_option("--set", info.sets, "override, e.g. --set model.channels=16");
  n->add_option("--ckpt", info.ckpt, "read the architecture from a checkpoint instead")
      ->excludes("--config");
  n->callback([&] { rc = run_info(info); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    // usage problems exit 2; --help exits 0; runtime failures throw Error
    return app.exit(err) == 0 ? 0 : 2;
  }
  return rc;
}

}  // namespace lfdeblur
