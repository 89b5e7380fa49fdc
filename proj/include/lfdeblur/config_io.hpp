#pragma once

#include <cstdint>
#include <string>

#include "lfdeblur/model/config.hpp"
#include "lfdeblur/train/config.hpp"

namespace lfdeblur {

// Blur synthesis settings.
struct SynthConfig {
  int dof = 3;             // 3 = translation, 6 = with rotation
  double trans_mag = 1.0;  // endpoint translation bound (normalized units)
  double rot_mag = 0.005;  // endpoint rotation bound (radians)
  int samples = 20;        // poses per exposure
  uint64_t seed = 1;
  double disparity = 1.0;  // reference plane disparity (pixels per unit)
  double baseline = 0.15;  // inter-view spacing

  void validate() const {
    if (dof != 3 && dof != 6) throw ConfigError("synth config: dof must be 3 or 6");
    if (samples < 1) throw ConfigError("synth config: samples must be positive");
    if (trans_mag < 0 || rot_mag < 0)
      throw ConfigError("synth config: magnitudes must be non-negative");
  }
  bool operator==(const SynthConfig&) const = default;
};

struct ToolConfig {
  ModelConfig model;
  TrainConfig train;
  SynthConfig synth;
};

// Text format: one `section.key = value` per line, '#' comments, blank lines
// ignored. Unknown keys are an error.
ToolConfig parse_config_file(const std::string& path);
void apply_config_line(ToolConfig& cfg, const std::string& key, const std::string& value);
std::string serialize_config(const ToolConfig& cfg);

}  // namespace lfdeblur
