#include "lfdeblur/image.hpp"

namespace lfdeblur {

Image luminance(const Image& img) {
  check_image(img, "luminance");
  const int64_t X = img.dim(0), Y = img.dim(1), C = img.dim(2);
  if (C == 1) return img;
  if (C != 3) throw ShapeError("luminance: need 1 or 3 channels, got " + img.shape_str());
  Image out({X, Y, 1});
  const double* p = img.data();
  double* q = out.data();
  for (int64_t i = 0; i < X * Y; ++i)
    q[i] = 0.299 * p[i * 3 + 0] + 0.587 * p[i * 3 + 1] + 0.114 * p[i * 3 + 2];
  return out;
}

Image upscale_nearest(const Image& img, int factor) {
  check_image(img, "upscale_nearest");
  if (factor < 1) throw Error("upscale_nearest: factor must be >= 1");
  if (factor == 1) return img;
  const int64_t X = img.dim(0), Y = img.dim(1), C = img.dim(2);
  Image out({X * factor, Y * factor, C});
  for (int64_t x = 0; x < X * factor; ++x)
    for (int64_t y = 0; y < Y * factor; ++y)
      for (int64_t c = 0; c < C; ++c) out(x, y, c) = img(x / factor, y / factor, c);
  return out;
}

}  // namespace lfdeblur
