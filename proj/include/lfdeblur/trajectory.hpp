#pragma once

#include <string>
#include <vector>

namespace lfdeblur {

// Rig pose during exposure: translation in normalized units (tx horizontal,
// ty vertical, tz toward the scene), small-angle rotation in radians.
struct CameraPose {
  double tx = 0, ty = 0, tz = 0;
  double rx = 0, ry = 0, rz = 0;

  static CameraPose identity() { return {}; }
  bool is_identity() const {
    return tx == 0 && ty == 0 && tz == 0 && rx == 0 && ry == 0 && rz == 0;
  }
};

struct CameraTrajectory {
  std::vector<CameraPose> poses;  // exposure sampled at poses.size() instants
  int dof = 3;                    // 3 = translation only, 6 = with rotation
  double baseline = 0.15;         // inter-view spacing (normalized units)
};

// Deterministic exposure path: endpoint drawn uniform in the magnitude box
// (rotation zeroed for dof 3), then linearly interpolated from identity.
// dof must be 3 or 6, samples >= 1, magnitudes >= 0.
CameraTrajectory sample_trajectory(uint64_t seed, int dof, double trans_mag, double rot_mag,
                                   int samples);

// Plain-text sidecar: header line (dof, baseline, count), one pose per line.
void save_trajectory(const std::string& path, const CameraTrajectory& traj);
CameraTrajectory load_trajectory(const std::string& path);

}  // namespace lfdeblur
