#include <cmath>
#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "lfdeblur/error.hpp"
#include "lfdeblur/train/adam.hpp"
#include "lfdeblur/train/augment.hpp"
#include "lfdeblur/train/config.hpp"
#include "lfdeblur/train/dataset.hpp"
#include "lfdeblur/train/loop.hpp"
#include "lfdeblur/warp.hpp"
#include "test_support.hpp"

using namespace lfdeblur;
using namespace lfdeblur::testsup;

namespace {

ModelConfig small_model() {
  ModelConfig cfg;
  cfg.views_u = 2;
  cfg.views_v = 2;
  cfg.channels = 4;
  cfg.kernel = 3;
  cfg.gen_hidden = 3;
  cfg.num_blocks = 1;
  cfg.angular_kernel = 3;
  cfg.attention_hidden = 8;
  cfg.global_residual = true;
  return cfg;
}

TrainConfig small_train() {
  TrainConfig tcfg;
  tcfg.batch_size = 1;
  tcfg.patch_x = 8;
  tcfg.patch_y = 8;
  tcfg.base_lr = 1e-3;
  tcfg.warm_epochs = 1000;  // constant lr throughout these runs
  tcfg.total_epochs = 4;
  tcfg.patches_per_scene = 5;
  tcfg.seed = 3;
  return tcfg;
}

std::vector<ScenePair> synthetic_scene(uint64_t seed) {
  DetRng rng(seed);
  ScenePair pair;
  pair.name = "synthetic";
  pair.sharp = random_lf(rng, 2, 2, 12, 12);
  const CameraTrajectory traj = sample_trajectory(seed, 3, 1.0, 0.0, 6);
  pair.blurred = synthesize_blur(pair.sharp, traj, 1.5);
  std::vector<ScenePair> scenes;
  scenes.push_back(std::move(pair));
  return scenes;
}

std::vector<char> slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  REQUIRE(f.good());
  return std::vector<char>(std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_SUITE("train") {

TEST_CASE("learning-rate schedule holds through the warm window then decays by decades") {
  TrainConfig cfg;
  cfg.base_lr = 1e-3;
  cfg.warm_epochs = 200;
  cfg.decay_every = 100;
  CHECK(lr_at(cfg, 0) == 1e-3);
  CHECK(lr_at(cfg, 199) == 1e-3);
  CHECK(lr_at(cfg, 200) == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(lr_at(cfg, 250) == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(lr_at(cfg, 299) == doctest::Approx(1e-4).epsilon(1e-12));
  CHECK(lr_at(cfg, 300) == doctest::Approx(1e-5).epsilon(1e-12));
  CHECK(lr_at(cfg, 350) == doctest::Approx(1e-5).epsilon(1e-12));
  CHECK(lr_at(cfg, 400) == doctest::Approx(1e-6).epsilon(1e-12));
  double prev = cfg.base_lr;
  for (int e = 0; e <= 500; ++e) {
    const double lr = lr_at(cfg, e);
    CHECK(lr <= prev);
    CHECK(lr > 0.0);
    prev = lr;
  }
  CHECK_THROWS_AS(lr_at(cfg, -1), ConfigError);
}

TEST_CASE("mean absolute error and its oracle") {
  DetRng rng(41);
  const int64_t n = 257;
  std::vector<double> p(static_cast<size_t>(n)), t(static_cast<size_t>(n));
  for (double& v : p) v = rng.uniform();
  CHECK(l1_loss(p.data(), p.data(), n) == 0.0);

  for (size_t i = 0; i < size_t(n); ++i) t[i] = p[i] + 0.1;
  CHECK(l1_loss(p.data(), t.data(), n) == doctest::Approx(0.1).epsilon(1e-12));

  for (double& v : t) v = rng.uniform();
  double acc = 0;
  for (size_t i = 0; i < size_t(n); ++i) acc += std::abs(p[i] - t[i]);
  CHECK(l1_loss(p.data(), t.data(), n) == doctest::Approx(acc / double(n)).epsilon(1e-9));
}

TEST_CASE("dense gradients agree with central finite differences") {
  DetRng rng(42);
  const int64_t m = 3, k = 4, n = 5;
  std::vector<double> x(static_cast<size_t>(m * k)), w(static_cast<size_t>(k * n)), b(static_cast<size_t>(n)), r(static_cast<size_t>(m * n));
  for (double& v : x) v = rng.normal();
  for (double& v : w) v = rng.normal();
  for (double& v : b) v = rng.normal();
  for (double& v : r) v = rng.normal();  // random linear readout weights

  auto objective = [&]() {
    std::vector<double> y(static_cast<size_t>(m * n));
    dense_forward(x.data(), w.data(), b.data(), y.data(), m, k, n);
    double s = 0;
    for (size_t i = 0; i < y.size(); ++i) s += y[i] * r[i];
    return s;
  };

  std::vector<double> y(static_cast<size_t>(m * n));
  dense_forward(x.data(), w.data(), b.data(), y.data(), m, k, n);
  std::vector<double> dx(static_cast<size_t>(m * k), 0.0), dw(static_cast<size_t>(k * n), 0.0), db(static_cast<size_t>(n), 0.0);
  dense_backward(r.data(), x.data(), w.data(), dx.data(), dw.data(), db.data(), m, k, n);

  const double h = 1e-6;
  auto probe = [&](double* slot, double analytic) {
    const double save = *slot;
    *slot = save + h;
    const double lp = objective();
    *slot = save - h;
    const double lm = objective();
    *slot = save;
    const double fd = (lp - lm) / (2 * h);
    CHECK(std::abs(fd - analytic) <= 1e-8 * std::max(1.0, std::abs(fd)));
  };
  for (size_t i = 0; i < x.size(); ++i) probe(&x[i], dx[i]);
  for (size_t i = 0; i < w.size(); ++i) probe(&w[i], dw[i]);
  for (size_t i = 0; i < b.size(); ++i) probe(&b[i], db[i]);
}

TEST_CASE("adam follows the hand-stepped scalar recursion and leaves zero-grad slots alone") {
  const ModelConfig cfg = small_model();
  TrainConfig tcfg;
  ModelParams<double> p = init_params<double>(cfg, 9);
  ModelParams<double> snapshot = p;
  ModelParams<double> grads = make_params<double>(cfg);
  ModelParams<double> m = make_params<double>(cfg), v = make_params<double>(cfg);

  const double g = 2.0, lr = 0.01;
  grads.stem.b.data()[0] = g;

  // independent scalar recursion for the one touched slot
  double sm = 0, sv = 0, sp = p.stem.b.data()[0];
  for (int64_t t = 1; t <= 3; ++t) {
    adam_step(p, grads, m, v, tcfg, lr, t);
    sm = tcfg.beta1 * sm + (1 - tcfg.beta1) * g;
    sv = tcfg.beta2 * sv + (1 - tcfg.beta2) * g * g;
    const double mh = sm / (1 - std::pow(tcfg.beta1, double(t)));
    const double vh = sv / (1 - std::pow(tcfg.beta2, double(t)));
    sp -= lr * mh / (std::sqrt(vh) + tcfg.adam_eps);
    CHECK(std::abs(p.stem.b.data()[0] - sp) < 1e-15);
  }

  // every other parameter is bit-identical to its initial value
  std::vector<Tensor<double>*> before, after;
  for_each_tensor(snapshot, [&](const std::string&, Tensor<double>& t) { before.push_back(&t); });
  for_each_tensor(p, [&](const std::string&, Tensor<double>& t) { after.push_back(&t); });
  REQUIRE(before.size() == after.size());
  for (size_t ti = 0; ti < before.size(); ++ti)
    for (int64_t i = 0; i < before[ti]->size(); ++i) {
      if (after[ti] == &p.stem.b && i == 0) continue;
      CHECK(after[ti]->data()[i] == before[ti]->data()[i]);
    }

  CHECK_THROWS_AS(adam_step(p, grads, m, v, tcfg, lr, 0), TrainError);
}

TEST_CASE("augmentations preserve epipolar structure") {
  DetRng rng(43);
  const int64_t d = 1;
  const LightField lf = shifted_copies_lf(rng, 4, 4, 12, 12, d);
  auto wrap = [](int64_t i, int64_t n) { return ((i % n) + n) % n; };

  CHECK(bit_equal(apply_augment(lf, AugmentOp::None).data(), lf.data()));
  CHECK(bit_equal(apply_augment(apply_augment(lf, AugmentOp::FlipH), AugmentOp::FlipH).data(),
                  lf.data()));
  CHECK(bit_equal(apply_augment(apply_augment(lf, AugmentOp::FlipV), AugmentOp::FlipV).data(),
                  lf.data()));

  // flips keep the epi slope; rotation negates it
  const LightField h = apply_augment(lf, AugmentOp::FlipH);
  const Image eh = epi(h, EpiOrientation::Horizontal, 1, 3);
  for (int64_t v = 0; v < 4; ++v)
    for (int64_t x = 0; x < 12; ++x)
      CHECK(eh(v, x, 0) == eh(0, wrap(x - v * d, 12), 0));

  const LightField vf = apply_augment(lf, AugmentOp::FlipV);
  const Image ev = epi(vf, EpiOrientation::Vertical, 1, 3);
  for (int64_t u = 0; u < 4; ++u)
    for (int64_t y = 0; y < 12; ++y)
      CHECK(ev(u, y, 0) == ev(0, wrap(y - u * d, 12), 0));

  const LightField q = apply_augment(lf, AugmentOp::Rotate90);
  const Image eq = epi(q, EpiOrientation::Horizontal, 1, 3);
  for (int64_t v = 0; v < 4; ++v)
    for (int64_t x = 0; x < 12; ++x)
      CHECK(eq(v, x, 0) == eq(0, wrap(x + v * d, 12), 0));

  const LightField rect = shifted_copies_lf(rng, 3, 3, 8, 10, d);
  CHECK_THROWS_AS(apply_augment(rect, AugmentOp::Rotate90), ShapeError);
}

TEST_CASE("batches crop and augment both fields with the same draw") {
  DetRng rng(44);
  ScenePair scene;
  scene.name = "pair";
  scene.blurred = random_lf(rng, 3, 3, 20, 20);
  Tensor<double> complement({3, 3, 20, 20, 3});
  for (int64_t i = 0; i < complement.size(); ++i)
    complement.data()[i] = 1.0 - scene.blurred.data().data()[i];
  scene.sharp = LightField(std::move(complement));

  ModelConfig mcfg = small_model();
  mcfg.views_u = 3;
  mcfg.views_v = 3;
  TrainConfig tcfg = small_train();
  tcfg.batch_size = 8;
  tcfg.patch_x = 9;
  tcfg.patch_y = 9;

  DetRng draw(7);
  for (int round = 0; round < 4; ++round) {
    const Batch batch = sample_batch(scene, mcfg, tcfg, draw);
    REQUIRE(batch.input.rank() == 6);
    CHECK(batch.input.dim(0) == 8);
    CHECK(batch.input.dim(1) == 3);
    CHECK(batch.input.dim(2) == 3);
    CHECK(batch.input.dim(3) == 9);
    CHECK(batch.input.dim(4) == 9);
    CHECK(batch.input.dim(5) == 3);
    REQUIRE(batch.target.same_shape(batch.input));
    // any mismatch between the two crops or augmentations breaks the sum
    for (int64_t i = 0; i < batch.input.size(); ++i)
      CHECK(batch.input.data()[i] + batch.target.data()[i] == doctest::Approx(1.0).epsilon(1e-12));
  }

  // the sampler consumes the stream deterministically
  DetRng d1(5), d2(5), d3(6);
  const Batch a = sample_batch(scene, mcfg, tcfg, d1);
  const Batch b = sample_batch(scene, mcfg, tcfg, d2);
  const Batch c = sample_batch(scene, mcfg, tcfg, d3);
  CHECK(bit_equal(a.input, b.input));
  CHECK(bit_equal(a.target, b.target));
  CHECK_FALSE(bit_equal(a.input, c.input));
}

TEST_CASE("dataset checks reject mismatched shapes") {
  DetRng rng(45);
  std::vector<ScenePair> scenes = synthetic_scene(45);
  ModelConfig mcfg = small_model();
  TrainConfig tcfg = small_train();
  CHECK_NOTHROW(check_dataset(scenes, mcfg, tcfg));

  CHECK_THROWS_AS(check_dataset({}, mcfg, tcfg), TrainError);

  ModelConfig wrong_grid = mcfg;
  wrong_grid.views_u = 3;
  CHECK_THROWS_AS(check_dataset(scenes, wrong_grid, tcfg), TrainError);

  TrainConfig big_patch = tcfg;
  big_patch.patch_x = 64;
  CHECK_THROWS_AS(check_dataset(scenes, mcfg, big_patch), TrainError);
}

TEST_CASE("training descends on a small synthetic problem") {
  const std::vector<ScenePair> scenes = synthetic_scene(46);
  const ModelConfig mcfg = small_model();
  TrainConfig tcfg = small_train();
  tcfg.total_epochs = 40;  // 200 steps at 5 per epoch
  const TrainRun<float> run = train_loop<float>(scenes, mcfg, tcfg);
  REQUIRE(run.losses.size() == 200);
  double head = 0, tail = 0;
  for (int i = 0; i < 5; ++i) {
    head += run.losses[size_t(i)] / 5.0;
    tail += run.losses[run.losses.size() - 1 - size_t(i)] / 5.0;
  }
  CHECK(tail < 0.9 * head);
  CHECK(run.state.step == 200);
  CHECK(run.state.epoch == 40);
  CHECK(std::isfinite(run.state.best_psnr));
}

TEST_CASE("training is bit deterministic across identical runs") {
  const std::vector<ScenePair> scenes = synthetic_scene(47);
  const ModelConfig mcfg = small_model();
  const TrainConfig tcfg = small_train();
  TempDir td;
  TrainOptions oa;
  oa.out_dir = td.sub("a");
  TrainOptions ob;
  ob.out_dir = td.sub("b");
  const TrainRun<float> ra = train_loop<float>(scenes, mcfg, tcfg, oa);
  const TrainRun<float> rb = train_loop<float>(scenes, mcfg, tcfg, ob);
  REQUIRE(ra.losses.size() == rb.losses.size());
  for (size_t i = 0; i < ra.losses.size(); ++i) CHECK(ra.losses[i] == rb.losses[i]);
  CHECK(slurp(td.sub("a") + "/last/model.ckpt") == slurp(td.sub("b") + "/last/model.ckpt"));
  CHECK(slurp(td.sub("a") + "/last/state.ckpt") == slurp(td.sub("b") + "/last/state.ckpt"));
}

TEST_CASE("resuming reproduces the uninterrupted run exactly") {
  const std::vector<ScenePair> scenes = synthetic_scene(48);
  const ModelConfig mcfg = small_model();
  const TrainConfig tcfg = small_train();  // 4 epochs total
  TempDir td;

  TrainOptions full;
  full.out_dir = td.sub("full");
  const TrainRun<float> whole = train_loop<float>(scenes, mcfg, tcfg, full);

  TrainConfig half_cfg = tcfg;
  half_cfg.total_epochs = 2;
  TrainOptions first;
  first.out_dir = td.sub("half");
  const TrainRun<float> h1 = train_loop<float>(scenes, mcfg, half_cfg, first);

  TrainOptions second;
  second.out_dir = td.sub("resumed");
  second.resume_dir = td.sub("half") + "/last";
  const TrainRun<float> h2 = train_loop<float>(scenes, mcfg, tcfg, second);

  REQUIRE(h1.losses.size() + h2.losses.size() == whole.losses.size());
  for (size_t i = 0; i < h1.losses.size(); ++i) CHECK(h1.losses[i] == whole.losses[i]);
  for (size_t i = 0; i < h2.losses.size(); ++i)
    CHECK(h2.losses[i] == whole.losses[h1.losses.size() + i]);
  CHECK(slurp(td.sub("full") + "/last/model.ckpt") ==
        slurp(td.sub("resumed") + "/last/model.ckpt"));
  CHECK(slurp(td.sub("full") + "/last/state.ckpt") ==
        slurp(td.sub("resumed") + "/last/state.ckpt"));
}

TEST_CASE("train-state checkpoints round trip the optimizer and rng state") {
  TempDir td;
  const ModelConfig cfg = small_model();
  ModelParams<float> p = init_params<float>(cfg, 50);
  TrainState<float> st;
  st.epoch = 7;
  st.step = 123;
  st.best_psnr = 31.25;
  st.m = make_params<float>(cfg);
  st.v = make_params<float>(cfg);
  DetRng fill(51);
  for_each_tensor(st.m, [&](const std::string&, Tensor<float>& t) {
    for (int64_t i = 0; i < t.size(); ++i) t.data()[i] = float(fill.normal());
  });
  for_each_tensor(st.v, [&](const std::string&, Tensor<float>& t) {
    for (int64_t i = 0; i < t.size(); ++i) t.data()[i] = float(fill.uniform());
  });
  st.rng = DetRng(52);
  (void)st.rng.normal();  // leave a cached Box-Muller draw pending

  const std::string dir = td.sub("state");
  save_train_checkpoint(dir, p, st);
  ModelParams<float> p2;
  TrainState<float> st2;
  load_train_checkpoint(dir, p2, st2, &cfg);

  CHECK(st2.epoch == 7);
  CHECK(st2.step == 123);
  CHECK(st2.best_psnr == 31.25);
  std::vector<Tensor<float>*> ms, ms2;
  for_each_tensor(st.m, [&](const std::string&, Tensor<float>& t) { ms.push_back(&t); });
  for_each_tensor(st2.m, [&](const std::string&, Tensor<float>& t) { ms2.push_back(&t); });
  REQUIRE(ms.size() == ms2.size());
  for (size_t i = 0; i < ms.size(); ++i)
    CHECK(std::memcmp(ms[i]->data(), ms2[i]->data(), size_t(ms[i]->size()) * 4) == 0);
  // the restored stream continues exactly where the saved one left off
  for (int i = 0; i < 10; ++i) CHECK(st.rng.normal() == st2.rng.normal());
}

TEST_CASE("divergence aborts with a diagnostic naming the step") {
  const std::vector<ScenePair> scenes = synthetic_scene(53);
  const ModelConfig mcfg = small_model();
  TrainConfig tcfg = small_train();
  tcfg.base_lr = 1e22;  // guaranteed float overflow within a few updates
  tcfg.total_epochs = 2;
  try {
    (void)train_loop<float>(scenes, mcfg, tcfg);
    FAIL("expected TrainError");
  } catch (const TrainError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("step") != std::string::npos);
    CHECK(msg.find("lr") != std::string::npos);
  }
}

}  // TEST_SUITE
