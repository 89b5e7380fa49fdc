#pragma once

#include "lfdeblur/image.hpp"
#include "lfdeblur/light_field.hpp"
#include "lfdeblur/trajectory.hpp"

namespace lfdeblur {

// Resample one view under the homography induced by a rig pose.
//
// Model: a fronto-parallel reference plane at a single scene disparity. The
// per-view effect of rig translation scales with the view offset from the
// grid center, so different views blur by different amounts:
//   horizontal shift = tx * (1 + du * baseline) * disparity   (pixels, along y)
//   vertical   shift = ty * (1 + dv * baseline) * disparity   (pixels, along x)
//   isotropic scale about the image center = 1 + tz (error if <= 0)
//   small-angle rotation (rx, ry, rz) via K R K^-1 with f = max(X, Y)
// Sampling is bilinear with replicate boundary handling. An identity pose is
// an exact no-op for every view offset.
Image warp_view(const Image& img, const CameraPose& pose, double du, double dv, double baseline,
                double disparity);

// Average the warped view over every trajectory pose (uniform exposure
// weights), then clamp to [0, 1]. View offsets are taken from the grid
// center: du = u - (U-1)/2, dv = v - (V-1)/2.
LightField synthesize_blur(const LightField& sharp, const CameraTrajectory& traj,
                           double disparity);

}  // namespace lfdeblur
