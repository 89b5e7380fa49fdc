#pragma once

#include <string>

#include "lfdeblur/image.hpp"

namespace lfdeblur {

// 8-bit RGB PNG <-> (X, Y, 3) double image in [0, 1].
// Decoding maps byte b to b / 255; encoding rounds clamp(v, 0, 1) * 255 to
// nearest, so save/load round-trips 1/255-quantized data exactly.
Image read_png(const std::string& path);
void write_png(const std::string& path, const Image& img);

}  // namespace lfdeblur
