#pragma once

#include "lfdeblur/light_field.hpp"

namespace lfdeblur {

// Geometry-preserving augmentations: spatial flips pair with the matching
// angular reversal, rotation swaps both index pairs. Applied to blurred and
// sharp fields with the same draw.
enum class AugmentOp {
  None = 0,
  FlipH = 1,   // reverses y and u
  FlipV = 2,   // reverses x and v
  Rotate90 = 3,
};

inline LightField apply_augment(const LightField& lf, AugmentOp op) {
  switch (op) {
    case AugmentOp::None:
      return lf;
    case AugmentOp::FlipH:
      return flip_horizontal(lf);
    case AugmentOp::FlipV:
      return flip_vertical(lf);
    case AugmentOp::Rotate90:
      return rotate90(lf);
  }
  throw Error("apply_augment: unknown op");
}

}  // namespace lfdeblur
