#include "lfdeblur/warp.hpp"

#include <Eigen/Dense>

#include <cmath>

#include "lfdeblur/error.hpp"

namespace lfdeblur {

namespace {

// Forward map from centered source coords (h, v, 1) to centered destination
// coords: translation * rotation * scale. h = horizontal (y), v = vertical (x).
Eigen::Matrix3d pose_homography(const CameraPose& pose, double du, double dv, double baseline,
                                double disparity, double f) {
  const double s = 1.0 + pose.tz;
  if (s <= 0.0) throw Error("warp_view: degenerate scale 1 + tz <= 0");
  const double dh = pose.tx * (1.0 + du * baseline) * disparity;
  const double dvp = pose.ty * (1.0 + dv * baseline) * disparity;

  Eigen::Matrix3d S = Eigen::Matrix3d::Identity();
  S(0, 0) = S(1, 1) = s;

  Eigen::Matrix3d R;
  // Small-angle K (I + [w]x) K^-1: roll rz in-plane, yaw ry shifts h by f*ry,
  // pitch rx shifts v by -f*rx.
  R << 1.0, -pose.rz, f * pose.ry,
      pose.rz, 1.0, -f * pose.rx,
      -pose.ry / f, pose.rx / f, 1.0;

  Eigen::Matrix3d T = Eigen::Matrix3d::Identity();
  T(0, 2) = dh;
  T(1, 2) = dvp;
  return T * R * S;
}

}  // namespace

Image warp_view(const Image& img, const CameraPose& pose, double du, double dv, double baseline,
                double disparity) {
  check_image(img, "warp_view");
  const int64_t X = img.dim(0), Y = img.dim(1), C = img.dim(2);
  if (!std::isfinite(disparity)) throw Error("warp_view: disparity must be finite");

  if (pose.is_identity()) return img;

  const double f = double(std::max(X, Y));
  const Eigen::Matrix3d M = pose_homography(pose, du, dv, baseline, disparity, f);
  const Eigen::Matrix3d Minv = M.inverse();

  const double cx = double(X - 1) / 2.0;  // center along rows (vertical)
  const double cy = double(Y - 1) / 2.0;  // center along columns (horizontal)

  Image out({X, Y, C});
  const double* src = img.data();
  double* dst = out.data();
  for (int64_t x = 0; x < X; ++x) {
    for (int64_t y = 0; y < Y; ++y) {
      const Eigen::Vector3d q = Minv * Eigen::Vector3d(double(y) - cy, double(x) - cx, 1.0);
      const double sh = q(0) / q(2) + cy;  // source column
      const double sv = q(1) / q(2) + cx;  // source row

      // Bilinear with replicate boundary.
      double fx = std::floor(sv), fy = std::floor(sh);
      double ax = sv - fx, ay = sh - fy;
      int64_t x0 = int64_t(fx), y0 = int64_t(fy);
      int64_t x1 = x0 + 1, y1 = y0 + 1;
      x0 = std::clamp<int64_t>(x0, 0, X - 1);
      x1 = std::clamp<int64_t>(x1, 0, X - 1);
      y0 = std::clamp<int64_t>(y0, 0, Y - 1);
      y1 = std::clamp<int64_t>(y1, 0, Y - 1);

      const double w00 = (1.0 - ax) * (1.0 - ay), w01 = (1.0 - ax) * ay;
      const double w10 = ax * (1.0 - ay), w11 = ax * ay;
      const double* r0 = src + (x0 * Y) * C;
      const double* r1 = src + (x1 * Y) * C;
      double* o = dst + (x * Y + y) * C;
      for (int64_t c = 0; c < C; ++c)
        o[c] = w00 * r0[y0 * C + c] + w01 * r0[y1 * C + c] + w10 * r1[y0 * C + c] +
               w11 * r1[y1 * C + c];
    }
  }
  return out;
}

LightField synthesize_blur(const LightField& sharp, const CameraTrajectory& traj,
                           double disparity) {
  if (traj.poses.empty()) throw Error("synthesize_blur: trajectory has no poses");
  if (!std::isfinite(disparity)) throw Error("synthesize_blur: disparity must be finite");

  // A motionless exposure must reproduce the input bit for bit; a summed
  // mean of identical copies rounds, so the frozen case bypasses it.
  bool frozen = true;
  for (const CameraPose& pose : traj.poses) frozen = frozen && pose.is_identity();
  if (frozen) {
    Tensor<double> copy = sharp.data();
    for (int64_t i = 0; i < copy.size(); ++i) {
      const double val = copy.data()[i];
      copy.data()[i] = val < 0.0 ? 0.0 : (val > 1.0 ? 1.0 : val);
    }
    return LightField(std::move(copy));
  }

  const int64_t U = sharp.U(), V = sharp.V();
  const double cu = double(U - 1) / 2.0, cv = double(V - 1) / 2.0;
  Tensor<double> out({U, V, sharp.X(), sharp.Y(), sharp.C()});
  const int64_t plane = sharp.X() * sharp.Y() * sharp.C();
  const double inv_t = 1.0 / double(traj.poses.size());

  for (int64_t u = 0; u < U; ++u) {
    for (int64_t v = 0; v < V; ++v) {
      const Image view = sharp.sai(u, v);
      Tensor<double> acc({plane});
      for (const CameraPose& pose : traj.poses) {
        Image w = warp_view(view, pose, double(u) - cu, double(v) - cv, traj.baseline, disparity);
        const double* wp = w.data();
        double* ap = acc.data();
        for (int64_t i = 0; i < plane; ++i) ap[i] += wp[i];
      }
      double* op = out.data() + (u * V + v) * plane;
      const double* ap = acc.data();
      for (int64_t i = 0; i < plane; ++i) {
        double val = ap[i] * inv_t;
        op[i] = val < 0.0 ? 0.0 : (val > 1.0 ? 1.0 : val);
      }
    }
  }
  return LightField(std::move(out));
}

}  // namespace lfdeblur
