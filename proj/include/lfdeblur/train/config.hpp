#pragma once

#include <cmath>
#include <cstdint>

#include "lfdeblur/error.hpp"

namespace lfdeblur {

// Optimization protocol. Defaults mirror the full training recipe; the
// desk-scale presets shrink the data and model, not the rules.
struct TrainConfig {
  int batch_size = 4;
  int patch_x = 64;             // training crop extent along x
  int patch_y = 64;             // and along y
  double base_lr = 1e-3;
  int warm_epochs = 200;        // epochs at base_lr before decay starts
  int decay_every = 100;        // epochs between decade drops afterwards
  double decay_factor = 10.0;
  int total_epochs = 500;
  uint64_t seed = 1;
  bool augment = true;          // paired spatial/angular flips and rotations
  int patches_per_scene = 32;   // steps per epoch = scenes * patches_per_scene
  int ckpt_every = 0;           // epochs between periodic checkpoints (0 = only best/last)
  int log_every = 1;            // steps between log lines
  // Adam moments
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const {
    if (batch_size < 1) throw ConfigError("train config: batch size must be positive");
    if (patch_x < 1 || patch_y < 1) throw ConfigError("train config: patch must be positive");
    if (!(base_lr > 0)) throw ConfigError("train config: base_lr must be positive");
    if (warm_epochs < 0 || decay_every < 1 || !(decay_factor > 1))
      throw ConfigError("train config: bad decay schedule");
    if (total_epochs < 1) throw ConfigError("train config: total_epochs must be positive");
    if (patches_per_scene < 1)
      throw ConfigError("train config: patches_per_scene must be positive");
    if (ckpt_every < 0 || log_every < 1) throw ConfigError("train config: bad logging cadence");
  }

  bool operator==(const TrainConfig&) const = default;
};

// Step schedule: base_lr through the warm window, then a decade drop every
// decay_every epochs (first drop at epoch == warm_epochs).
inline double lr_at(const TrainConfig& cfg, int epoch) {
  if (epoch < 0) throw ConfigError("lr_at: negative epoch");
  if (epoch < cfg.warm_epochs) return cfg.base_lr;
  const int drops = 1 + (epoch - cfg.warm_epochs) / cfg.decay_every;
  return cfg.base_lr / std::pow(cfg.decay_factor, double(drops));
}

}  // namespace lfdeblur
