#pragma once

#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "lfdeblur/metrics.hpp"
#include "lfdeblur/model/checkpoint.hpp"
#include "lfdeblur/train/adam.hpp"
#include "lfdeblur/train/dataset.hpp"

namespace lfdeblur {

// Everything beyond the weights needed to continue a run bit-exactly:
// progress counters, the data RNG, and the Adam moments.
template <class T>
struct TrainState {
  int64_t epoch = 0;  // epochs completed
  int64_t step = 0;   // optimizer updates completed
  double best_psnr = -std::numeric_limits<double>::infinity();
  DetRng rng;
  ModelParams<T> m, v;
};

template <class T>
void save_train_checkpoint(const std::string& dir, const ModelParams<T>& params,
                           const TrainState<T>& state) {
  std::filesystem::create_directories(dir);
  save_model_checkpoint((std::filesystem::path(dir) / "model.ckpt").string(), params);

  nlohmann::json tensors = nlohmann::json::array();
  std::vector<char> payload;
  for_each_tensor(state.m, [&](const std::string& name, const Tensor<T>& t) {
    ckpt::append_tensor(tensors, payload, "m." + name, t);
  });
  for_each_tensor(state.v, [&](const std::string& name, const Tensor<T>& t) {
    ckpt::append_tensor(tensors, payload, "v." + name, t);
  });
  const DetRng::State rs = state.rng.save();
  uint64_t best_bits;
  static_assert(sizeof(best_bits) == sizeof(state.best_psnr));
  std::memcpy(&best_bits, &state.best_psnr, sizeof(best_bits));
  uint64_t cache_bits;
  std::memcpy(&cache_bits, &rs.cache, sizeof(cache_bits));
  nlohmann::json header{{"kind", "train_state"},
                        {"precision", ckpt::dtype_name<T>()},
                        {"config", ckpt::config_to_json(params.cfg)},
                        {"tensors", tensors},
                        {"extra",
                         {{"epoch", state.epoch},
                          {"step", state.step},
                          {"best_psnr_bits", best_bits},
                          {"rng_state", rs.state},
                          {"rng_cached", rs.cached != 0},
                          {"rng_cache_bits", cache_bits}}}};
  ckpt::write_file((std::filesystem::path(dir) / "state.ckpt").string(), header, payload);
}

template <class T>
void load_train_checkpoint(const std::string& dir, ModelParams<T>& params, TrainState<T>& state,
                           const ModelConfig* expected) {
  const std::string model_path = (std::filesystem::path(dir) / "model.ckpt").string();
  const std::string state_path = (std::filesystem::path(dir) / "state.ckpt").string();
  params = load_model_checkpoint<T>(model_path, expected);
  ckpt::File file = ckpt::read_file(state_path);
  if (file.header.value("kind", "") != "train_state")
    throw IoError(state_path + ": not a training-state checkpoint");
  const ModelConfig stored = ckpt::config_from_json(file.header.at("config"));
  if (!(stored == params.cfg))
    throw ConfigError(state_path + ": state does not match the model checkpoint");
  state.m = make_params<T>(params.cfg);
  state.v = make_params<T>(params.cfg);
  std::map<std::string, const nlohmann::json*> entries;
  for (const auto& e : file.header.at("tensors")) entries[e.at("name").get<std::string>()] = &e;
  auto load_into = [&](const std::string& prefix, ModelParams<T>& tree) {
    for_each_tensor(tree, [&](const std::string& name, Tensor<T>& t) {
      auto it = entries.find(prefix + name);
      if (it == entries.end())
        throw IoError(state_path + ": missing tensor " + prefix + name);
      t = ckpt::extract_tensor<T>(file, *it->second, state_path);
    });
  };
  load_into("m.", state.m);
  load_into("v.", state.v);
  const auto& extra = file.header.at("extra");
  state.epoch = extra.at("epoch").get<int64_t>();
  state.step = extra.at("step").get<int64_t>();
  uint64_t best_bits = extra.at("best_psnr_bits").get<uint64_t>();
  std::memcpy(&state.best_psnr, &best_bits, sizeof(best_bits));
  DetRng::State rs;
  rs.state = extra.at("rng_state").get<uint64_t>();
  rs.cached = extra.at("rng_cached").get<bool>() ? 1 : 0;
  uint64_t cache_bits = extra.at("rng_cache_bits").get<uint64_t>();
  std::memcpy(&rs.cache, &cache_bits, sizeof(cache_bits));
  state.rng.restore(rs);
}

struct TrainOptions {
  std::string out_dir;     // empty: keep everything in memory, write nothing
  std::string resume_dir;  // empty: fresh run
  std::function<void(int64_t step, int64_t epoch, double loss, double lr)> log;
  bool record_losses = true;
};

template <class T>
struct TrainRun {
  ModelParams<T> params;
  TrainState<T> state;
  std::vector<double> losses;  // one entry per optimizer step of this call
};

// Deterministic end-of-epoch validation: PSNR of the central training patch
// of every scene, averaged. Keeps "best" meaningful without held-out data.
template <class T>
double eval_center_psnr(const std::vector<ScenePair>& scenes, const ModelParams<T>& params,
                        const TrainConfig& tcfg, ModelWorkspace<T>& ws) {
  double sum = 0;
  for (const ScenePair& s : scenes) {
    const int64_t x0 = (s.blurred.X() - tcfg.patch_x) / 2;
    const int64_t y0 = (s.blurred.Y() - tcfg.patch_y) / 2;
    const LightField in = s.blurred.crop(x0, y0, tcfg.patch_x, tcfg.patch_y);
    const LightField gt = s.sharp.crop(x0, y0, tcfg.patch_x, tcfg.patch_y);
    Tensor<T> input = cast_tensor<T>(in.data());
    Tensor<T> pred;
    forward(params, input, ws, pred);
    sum += psnr(cast_tensor<double>(pred), gt.data());
  }
  return sum / double(scenes.size());
}

// Round-robin scenes within an epoch; one Adam update per batch; L1 objective
// averaged over the batch. Checkpoints land in out_dir/{last,best,epoch_N}.
template <class T>
TrainRun<T> train_loop(const std::vector<ScenePair>& scenes, const ModelConfig& mcfg,
                       const TrainConfig& tcfg, const TrainOptions& opt = {}) {
  mcfg.validate();
  tcfg.validate();
  check_dataset(scenes, mcfg, tcfg);

  TrainRun<T> run;
  if (!opt.resume_dir.empty()) {
    load_train_checkpoint(opt.resume_dir, run.params, run.state, &mcfg);
  } else {
    run.params = init_params<T>(mcfg, tcfg.seed);
    run.state.rng = DetRng(mix_seed(tcfg.seed, 0x64617461));
    run.state.m = make_params<T>(mcfg);
    run.state.v = make_params<T>(mcfg);
  }

  ModelParams<T> grads = make_params<T>(mcfg);
  ModelWorkspace<T> ws;
  Tensor<T> sample({int64_t(mcfg.views_u), int64_t(mcfg.views_v), int64_t(tcfg.patch_x),
                    int64_t(tcfg.patch_y), int64_t(3)});
  Tensor<T> target(sample.shape());
  Tensor<T> dout(sample.shape());
  const int64_t plane = sample.size();
  const int64_t steps_per_epoch = int64_t(scenes.size()) * tcfg.patches_per_scene;

  double last_finite_loss = std::numeric_limits<double>::quiet_NaN();
  for (int64_t epoch = run.state.epoch; epoch < tcfg.total_epochs; ++epoch) {
    const double lr = lr_at(tcfg, int(epoch));
    for (int64_t s = 0; s < steps_per_epoch; ++s) {
      const ScenePair& scene = scenes[size_t(s % int64_t(scenes.size()))];
      Batch batch = sample_batch(scene, mcfg, tcfg, run.state.rng);
      zero_params(grads);
      double loss_sum = 0;
      for (int64_t b = 0; b < tcfg.batch_size; ++b) {
        const double* in_src = batch.input.data() + b * plane;
        const double* gt_src = batch.target.data() + b * plane;
        for (int64_t i = 0; i < plane; ++i) {
          sample.data()[i] = T(in_src[i]);
          target.data()[i] = T(gt_src[i]);
        }
        Tensor<T> pred;
        forward(run.params, sample, ws, pred);
        loss_sum += double(l1_loss(pred.data(), target.data(), plane));
        dout.set_zero();
        l1_loss_backward(pred.data(), target.data(), dout.data(), plane);
        if (tcfg.batch_size > 1) {
          const T inv = T(1) / T(tcfg.batch_size);
          for (int64_t i = 0; i < plane; ++i) dout.data()[i] *= inv;
        }
        backward(run.params, ws, dout, grads);
      }
      const double loss = loss_sum / double(tcfg.batch_size);
      if (!std::isfinite(loss)) {
        std::string last = std::isfinite(last_finite_loss)
                               ? " last finite loss " + std::to_string(last_finite_loss) + ";"
                               : "";
        throw TrainError("training diverged: non-finite loss at step " +
                         std::to_string(run.state.step + 1) + " (epoch " + std::to_string(epoch) +
                         ", lr " + std::to_string(lr) + ");" + last +
                         " reduce the learning rate or check the data for non-finite values");
      }
      last_finite_loss = loss;
      adam_step(run.params, grads, run.state.m, run.state.v, tcfg, lr, run.state.step + 1);
      run.state.step += 1;
      if (opt.record_losses) run.losses.push_back(loss);
      if (opt.log && run.state.step % tcfg.log_every == 0)
        opt.log(run.state.step, epoch, loss, lr);
    }
    run.state.epoch = epoch + 1;

    const double val = eval_center_psnr(scenes, run.params, tcfg, ws);
    if (!opt.out_dir.empty()) {
      namespace fs = std::filesystem;
      if (val > run.state.best_psnr) {
        run.state.best_psnr = val;
        save_train_checkpoint((fs::path(opt.out_dir) / "best").string(), run.params, run.state);
      }
      save_train_checkpoint((fs::path(opt.out_dir) / "last").string(), run.params, run.state);
      if (tcfg.ckpt_every > 0 && (epoch + 1) % tcfg.ckpt_every == 0)
        save_train_checkpoint(
            (fs::path(opt.out_dir) / ("epoch_" + std::to_string(epoch + 1))).string(), run.params,
            run.state);
    } else if (val > run.state.best_psnr) {
      run.state.best_psnr = val;
    }
  }
  return run;
}

}  // namespace lfdeblur
