#pragma once

#include <string>
#include <vector>

#include "lfdeblur/light_field.hpp"
#include "lfdeblur/model/config.hpp"
#include "lfdeblur/rng.hpp"
#include "lfdeblur/train/augment.hpp"
#include "lfdeblur/train/config.hpp"

namespace lfdeblur {

// One training scene: a degraded field and its ground truth, identical shapes.
struct ScenePair {
  std::string name;
  LightField blurred;
  LightField sharp;
};

// Scans `root` for scene directories containing blur/ and sharp/ view folders.
std::vector<ScenePair> load_dataset(const std::string& root);

// Validates a scene list against the model/training shapes: equal pair
// shapes, matching view grid, patches that fit.
void check_dataset(const std::vector<ScenePair>& scenes, const ModelConfig& mcfg,
                   const TrainConfig& tcfg);

// One sampled batch: (B, U, V, px, py, 3) input/target stacks.
struct Batch {
  Tensor<double> input;
  Tensor<double> target;
};

// Draws batch_size patches from one scene: per element one uniform spatial
// origin plus (when enabled) one augmentation choice, in a fixed draw order
// so the RNG stream replays identically across resumed runs. Rotation is only
// drawn for square patches on square view grids.
Batch sample_batch(const ScenePair& scene, const ModelConfig& mcfg, const TrainConfig& tcfg,
                   DetRng& rng);

}  // namespace lfdeblur
