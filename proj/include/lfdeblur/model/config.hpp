#pragma once

#include <cstdint>
#include <string>

#include "lfdeblur/error.hpp"

namespace lfdeblur {

// Architecture hyperparameters. Defaults give the full-size 5x5 network
// (644,332 trainable parameters).
struct ModelConfig {
  int views_u = 5;           // U: angular grid rows
  int views_v = 5;           // V: angular grid columns
  int channels = 24;         // C: feature width
  int kernel = 3;            // k: spatial kernel size (odd)
  int gen_hidden = 4;        // C_K: kernel-generator bottleneck width
  int num_blocks = 8;        // residual view-adaptive blocks
  int angular_kernel = 3;    // k_a: kernel size over the view grid (odd)
  int attention_hidden = 0;  // fusion MLP hidden width; 0 = U*V*C
  bool use_vasc = true;      // per-view generated kernels (off: one shared static kernel per block)
  bool use_dpva = true;      // fusion head (off: plain per-view conv to RGB)
  bool use_ape = true;       // append view coordinates to the fusion MLP input
  bool global_residual = false;  // add the network input to the output

  int n_views() const { return views_u * views_v; }
  int att_hidden() const {
    return attention_hidden > 0 ? attention_hidden : views_u * views_v * channels;
  }

  void validate() const {
    if (views_u < 1 || views_v < 1) throw ConfigError("config: view grid must be at least 1x1");
    if (channels < 1) throw ConfigError("config: channels must be positive");
    if (kernel < 1 || kernel % 2 == 0) throw ConfigError("config: kernel must be odd and positive");
    if (angular_kernel < 1 || angular_kernel % 2 == 0)
      throw ConfigError("config: angular kernel must be odd and positive");
    if (gen_hidden < 1) throw ConfigError("config: generator hidden width must be positive");
    if (use_vasc && gen_hidden >= n_views())
      throw ConfigError("config: generator hidden width must stay below the view count (got " +
                        std::to_string(gen_hidden) + " for " + std::to_string(n_views()) +
                        " views)");
    if (num_blocks < 1) throw ConfigError("config: need at least one block");
    if (attention_hidden < 0) throw ConfigError("config: attention hidden must be >= 0");
    if (use_ape && !use_dpva) throw ConfigError("config: position coding requires the fusion head");
  }

  bool operator==(const ModelConfig&) const = default;
};

}  // namespace lfdeblur
