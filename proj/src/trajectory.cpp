#include "lfdeblur/trajectory.hpp"

#include <cinttypes>
#include <cstdio>
#include <memory>

#include "lfdeblur/error.hpp"
#include "lfdeblur/rng.hpp"

namespace lfdeblur {

CameraTrajectory sample_trajectory(uint64_t seed, int dof, double trans_mag, double rot_mag,
                                   int samples) {
  if (dof != 3 && dof != 6) throw ConfigError("sample_trajectory: dof must be 3 or 6");
  if (samples < 1) throw ConfigError("sample_trajectory: samples must be >= 1");
  if (trans_mag < 0 || rot_mag < 0)
    throw ConfigError("sample_trajectory: magnitudes must be non-negative");

  DetRng rng(mix_seed(seed, 0x74726a));
  CameraPose end;
  end.tx = rng.uniform(-trans_mag, trans_mag);
  end.ty = rng.uniform(-trans_mag, trans_mag);
  end.tz = rng.uniform(-trans_mag, trans_mag) * 0.2;  // depth motion kept gentler
  if (dof == 6) {
    end.rx = rng.uniform(-rot_mag, rot_mag);
    end.ry = rng.uniform(-rot_mag, rot_mag);
    end.rz = rng.uniform(-rot_mag, rot_mag);
  }

  CameraTrajectory traj;
  traj.dof = dof;
  traj.poses.resize(size_t(samples));
  for (int i = 0; i < samples; ++i) {
    // Linear path from identity to the endpoint; a single sample sits at the
    // endpoint so magnitude is not silently lost.
    double t = samples == 1 ? 1.0 : double(i) / double(samples - 1);
    CameraPose& p = traj.poses[size_t(i)];
    p.tx = end.tx * t;
    p.ty = end.ty * t;
    p.tz = end.tz * t;
    p.rx = end.rx * t;
    p.ry = end.ry * t;
    p.rz = end.rz * t;
  }
  return traj;
}

void save_trajectory(const std::string& path, const CameraTrajectory& traj) {
  std::unique_ptr<FILE, int (*)(FILE*)> f(std::fopen(path.c_str(), "w"), std::fclose);
  if (!f) throw IoError("cannot open " + path + " for writing");
  std::fprintf(f.get(), "trajectory dof=%d baseline=%.17g poses=%zu\n", traj.dof, traj.baseline,
               traj.poses.size());
  for (const CameraPose& p : traj.poses)
    std::fprintf(f.get(), "%.17g %.17g %.17g %.17g %.17g %.17g\n", p.tx, p.ty, p.tz, p.rx, p.ry,
                 p.rz);
}

CameraTrajectory load_trajectory(const std::string& path) {
  std::unique_ptr<FILE, int (*)(FILE*)> f(std::fopen(path.c_str(), "r"), std::fclose);
  if (!f) throw IoError("cannot open " + path);
  CameraTrajectory traj;
  size_t count = 0;
  if (std::fscanf(f.get(), "trajectory dof=%d baseline=%lg poses=%zu\n", &traj.dof, &traj.baseline,
                  &count) != 3)
    throw IoError("bad trajectory header in " + path);
  if (traj.dof != 3 && traj.dof != 6) throw IoError("bad dof in " + path);
  traj.poses.resize(count);
  for (size_t i = 0; i < count; ++i) {
    CameraPose& p = traj.poses[i];
    if (std::fscanf(f.get(), "%lg %lg %lg %lg %lg %lg", &p.tx, &p.ty, &p.tz, &p.rx, &p.ry, &p.rz) !=
        6)
      throw IoError("truncated trajectory in " + path);
  }
  return traj;
}

}  // namespace lfdeblur
