#pragma once

#include <chrono>
#include <limits>
#include <string>
#include <vector>

#include "lfdeblur/model/network.hpp"

namespace lfdeblur {

// Central finite differences vs the analytic backward, double precision,
// on small random problems. The objective is the mean absolute deviation
// from a random target, so every layer's gradient path is exercised.

struct GradCheckCase {
  std::string name;
  ModelConfig cfg;
  int64_t X = 6, Y = 5;
};

// Each model feature in isolation plus the full assembly; checking these
// covers every trainable tensor kind.
inline std::vector<GradCheckCase> grad_check_cases() {
  std::vector<GradCheckCase> cases;
  {
    GradCheckCase c;
    c.name = "stem+static-conv+angular+plain-head";
    c.cfg = ModelConfig{2, 2, 4, 3, 2, 2, 3, 0, false, false, false, false};
    cases.push_back(c);
  }
  {
    GradCheckCase c;
    c.name = "generated-kernel-conv";
    c.cfg = ModelConfig{2, 2, 4, 3, 2, 2, 3, 0, true, false, false, false};
    cases.push_back(c);
  }
  {
    GradCheckCase c;
    c.name = "fusion-head";
    c.cfg = ModelConfig{2, 2, 4, 3, 2, 1, 3, 5, false, true, false, false};
    cases.push_back(c);
  }
  {
    GradCheckCase c;
    c.name = "fusion-head+view-coords";
    c.cfg = ModelConfig{2, 2, 4, 3, 2, 1, 3, 5, false, true, true, false};
    cases.push_back(c);
  }
  {
    GradCheckCase c;
    c.name = "full-model+global-residual";
    c.cfg = ModelConfig{3, 2, 3, 3, 2, 2, 3, 4, true, true, true, true};
    c.X = 5;
    c.Y = 4;
    cases.push_back(c);
  }
  return cases;
}

namespace detail {

inline double gradcheck_objective(const ModelParams<double>& p, const Tensor<double>& input,
                                  const Tensor<double>& target, ModelWorkspace<double>& ws) {
  Tensor<double> pred;
  forward(p, input, ws, pred);
  return double(l1_loss(pred.data(), target.data(), pred.size()));
}

}  // namespace detail

// Max relative error between analytic and finite-difference gradients over
// every parameter and input element; errors are normalized by the largest
// finite-difference magnitude seen in the case.
inline double grad_check_once(const GradCheckCase& gc, uint64_t seed, double h = 1e-5) {
  const ModelConfig& cfg = gc.cfg;
  cfg.validate();
  ModelParams<double> p = init_params<double>(cfg, seed);
  // Widen the damped-by-design tensors so their paths carry signal.
  DetRng rng(mix_seed(seed, 0x6763));
  for_each_tensor(p, [&rng](const std::string& name, Tensor<double>& t) {
    const bool boost = name == "head.att2.w" || name.find("kgen.w") != std::string::npos;
    for (int64_t i = 0; i < t.size(); ++i) {
      if (boost)
        t.data()[i] = rng.normal(0.0, 0.3);
      else if (t.data()[i] == 0.0)
        t.data()[i] = rng.normal(0.0, 0.1);  // biases off zero
    }
  });

  Tensor<double> input({int64_t(cfg.views_u), int64_t(cfg.views_v), gc.X, gc.Y, int64_t(3)});
  Tensor<double> target(input.shape());
  for (int64_t i = 0; i < input.size(); ++i) input.data()[i] = rng.uniform();
  for (int64_t i = 0; i < target.size(); ++i) target.data()[i] = rng.uniform();

  ModelWorkspace<double> ws;
  ModelParams<double> grads = make_params<double>(cfg);
  Tensor<double> pred;
  forward(p, input, ws, pred);
  Tensor<double> dout(pred.shape());
  l1_loss_backward(pred.data(), target.data(), dout.data(), pred.size());
  Tensor<double> dinput;
  backward(p, ws, dout, grads, &dinput);

  double max_abs_diff = 0, max_fd = 0;
  auto probe = [&](double* slot, double analytic) {
    const double save = *slot;
    *slot = save + h;
    const double lp = detail::gradcheck_objective(p, input, target, ws);
    *slot = save - h;
    const double lm = detail::gradcheck_objective(p, input, target, ws);
    *slot = save;
    const double fd = (lp - lm) / (2.0 * h);
    const double diff = std::abs(fd - analytic);
    if (diff > max_abs_diff) max_abs_diff = diff;
    if (std::abs(fd) > max_fd) max_fd = std::abs(fd);
  };

  std::vector<Tensor<double>*> ptensors, gtensors;
  for_each_tensor(p, [&](const std::string&, Tensor<double>& t) { ptensors.push_back(&t); });
  for_each_tensor(grads, [&](const std::string&, Tensor<double>& t) { gtensors.push_back(&t); });
  for (size_t ti = 0; ti < ptensors.size(); ++ti)
    for (int64_t i = 0; i < ptensors[ti]->size(); ++i)
      probe(ptensors[ti]->data() + i, gtensors[ti]->data()[i]);
  for (int64_t i = 0; i < input.size(); ++i) probe(input.data() + i, dinput.data()[i]);

  return max_abs_diff / (max_fd > 1e-12 ? max_fd : 1e-12);
}

struct GradCheckResult {
  std::string name;
  double rel_err = 0;
  int attempts = 1;
  double seconds = 0;
  bool passed = false;
};

// L1 has kinks; a failing case is retried on fresh draws (up to 3) before it
// counts as a real failure.
inline GradCheckResult run_grad_check(const GradCheckCase& gc, double tol) {
  GradCheckResult res;
  res.name = gc.name;
  const auto start = std::chrono::steady_clock::now();
  double best = std::numeric_limits<double>::infinity();
  for (int attempt = 0; attempt < 3; ++attempt) {
    res.attempts = attempt + 1;
    const double err = grad_check_once(gc, 1000 + uint64_t(attempt) * 77);
    if (err < best) best = err;
    if (best <= tol) break;
  }
  res.rel_err = best;
  res.passed = best <= tol;
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return res;
}

inline std::vector<GradCheckResult> run_grad_checks(double tol = 1e-4) {
  std::vector<GradCheckResult> out;
  for (const GradCheckCase& gc : grad_check_cases()) out.push_back(run_grad_check(gc, tol));
  return out;
}

}  // namespace lfdeblur
