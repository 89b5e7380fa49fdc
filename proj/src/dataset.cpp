#include "lfdeblur/train/dataset.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>

namespace fs = std::filesystem;

namespace lfdeblur {

std::vector<ScenePair> load_dataset(const std::string& root) {
  if (!fs::is_directory(root)) throw IoError("load_dataset: " + root + " is not a directory");
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(root)) {
    if (!entry.is_directory()) continue;
    if (fs::is_directory(entry.path() / "blur") && fs::is_directory(entry.path() / "sharp"))
      names.push_back(entry.path().filename().string());
  }
  // Directory iteration order is OS-dependent; sort for reproducibility.
  std::sort(names.begin(), names.end());
  if (names.empty())
    throw IoError("load_dataset: no scene directories with blur/ and sharp/ under " + root);
  std::vector<ScenePair> scenes;
  scenes.reserve(names.size());
  for (const std::string& name : names) {
    ScenePair pair;
    pair.name = name;
    pair.blurred = load_light_field((fs::path(root) / name / "blur").string());
    pair.sharp = load_light_field((fs::path(root) / name / "sharp").string());
    if (!pair.blurred.same_shape(pair.sharp))
      throw IoError("load_dataset: blur/sharp shapes disagree in scene " + name);
    scenes.push_back(std::move(pair));
  }
  return scenes;
}

void check_dataset(const std::vector<ScenePair>& scenes, const ModelConfig& mcfg,
                   const TrainConfig& tcfg) {
  if (scenes.empty()) throw TrainError("no training scenes");
  for (const ScenePair& s : scenes) {
    if (s.blurred.U() != mcfg.views_u || s.blurred.V() != mcfg.views_v)
      throw TrainError("scene " + s.name + " has a " + std::to_string(s.blurred.U()) + "x" +
                       std::to_string(s.blurred.V()) + " view grid, model expects " +
                       std::to_string(mcfg.views_u) + "x" + std::to_string(mcfg.views_v));
    if (s.blurred.C() != 3) throw TrainError("scene " + s.name + " is not RGB");
    if (s.blurred.X() < tcfg.patch_x || s.blurred.Y() < tcfg.patch_y)
      throw TrainError("scene " + s.name + " (" + std::to_string(s.blurred.X()) + "x" +
                       std::to_string(s.blurred.Y()) + ") is smaller than the training patch " +
                       std::to_string(tcfg.patch_x) + "x" + std::to_string(tcfg.patch_y));
  }
}

Batch sample_batch(const ScenePair& scene, const ModelConfig& mcfg, const TrainConfig& tcfg,
                   DetRng& rng) {
  const int64_t B = tcfg.batch_size, U = scene.blurred.U(), V = scene.blurred.V();
  const int64_t px = tcfg.patch_x, py = tcfg.patch_y;
  Batch batch;
  batch.input = Tensor<double>({B, U, V, px, py, 3});
  batch.target = Tensor<double>({B, U, V, px, py, 3});
  const bool can_rotate = px == py && U == V;
  const int64_t plane = U * V * px * py * 3;
  for (int64_t b = 0; b < B; ++b) {
    const int64_t x0 = int64_t(rng.below(uint64_t(scene.blurred.X() - px + 1)));
    const int64_t y0 = int64_t(rng.below(uint64_t(scene.blurred.Y() - py + 1)));
    AugmentOp op = AugmentOp::None;
    if (tcfg.augment) {
      const uint64_t n_ops = can_rotate ? 4 : 3;
      op = AugmentOp(rng.below(n_ops));
    }
    LightField in = apply_augment(scene.blurred.crop(x0, y0, px, py), op);
    LightField gt = apply_augment(scene.sharp.crop(x0, y0, px, py), op);
    std::memcpy(batch.input.data() + b * plane, in.data().data(), size_t(plane) * sizeof(double));
    std::memcpy(batch.target.data() + b * plane, gt.data().data(), size_t(plane) * sizeof(double));
  }
  return batch;
}

}  // namespace lfdeblur
