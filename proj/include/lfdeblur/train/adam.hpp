#pragma once

#include <cmath>

#include "lfdeblur/model/network.hpp"
#include "lfdeblur/train/config.hpp"

namespace lfdeblur {

// Adam with bias correction. Moments live in two parameter-shaped pytrees;
// `t` is the 1-based update count after this step.
template <class T>
void adam_step(ModelParams<T>& params, const ModelParams<T>& grads, ModelParams<T>& m,
               ModelParams<T>& v, const TrainConfig& cfg, double lr, int64_t t) {
  if (t < 1) throw TrainError("adam_step: update count must be >= 1");
  const double b1 = cfg.beta1, b2 = cfg.beta2, eps = cfg.adam_eps;
  const double bc1 = 1.0 - std::pow(b1, double(t));
  const double bc2 = 1.0 - std::pow(b2, double(t));

  // The trees share one enumeration order, so walk them in lockstep.
  std::vector<Tensor<T>*> gs, ms, vs;
  for_each_tensor(const_cast<ModelParams<T>&>(grads),
                  [&gs](const std::string&, Tensor<T>& tn) { gs.push_back(&tn); });
  for_each_tensor(m, [&ms](const std::string&, Tensor<T>& tn) { ms.push_back(&tn); });
  for_each_tensor(v, [&vs](const std::string&, Tensor<T>& tn) { vs.push_back(&tn); });
  size_t i = 0;
  for_each_tensor(params, [&](const std::string&, Tensor<T>& pt) {
    Tensor<T>& gt = *gs[i];
    Tensor<T>& mt = *ms[i];
    Tensor<T>& vt = *vs[i];
    ++i;
    T* pp = pt.data();
    const T* gp = gt.data();
    T* mp = mt.data();
    T* vp = vt.data();
    for (int64_t j = 0; j < pt.size(); ++j) {
      const double g = double(gp[j]);
      const double mn = b1 * double(mp[j]) + (1.0 - b1) * g;
      const double vn = b2 * double(vp[j]) + (1.0 - b2) * g * g;
      mp[j] = T(mn);
      vp[j] = T(vn);
      const double mhat = mn / bc1;
      const double vhat = vn / bc2;
      pp[j] = T(double(pp[j]) - lr * mhat / (std::sqrt(vhat) + eps));
    }
  });
}

}  // namespace lfdeblur
