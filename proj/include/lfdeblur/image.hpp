#pragma once

#include "lfdeblur/tensor.hpp"

namespace lfdeblur {

// Images are (X, Y, C) double tensors: x = row (height), y = column (width),
// values nominally in [0, 1] for image data. Feature maps reuse the same type
// without the range convention.
using Image = Tensor<double>;

inline void check_image(const Image& img, const char* what) {
  if (img.rank() != 3)
    throw ShapeError(std::string(what) + ": expected (X,Y,C) image, got " + img.shape_str());
}

// Rec. 601 luma from an RGB image; single-channel input passes through.
Image luminance(const Image& img);

// Integer nearest-neighbor upscale, for writing small slices at a visible size.
Image upscale_nearest(const Image& img, int factor);

}  // namespace lfdeblur
