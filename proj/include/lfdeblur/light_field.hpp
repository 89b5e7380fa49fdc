#pragma once

#include <string>

#include "lfdeblur/image.hpp"

namespace lfdeblur {

// 4D light field L(u, v, x, y, c) stored as a dense (U, V, X, Y, C) tensor.
//
// Geometry conventions (fixed across the whole toolkit):
//   u  first angular index; views along u show horizontal parallax (along y)
//   v  second angular index; views along v show vertical parallax (along x)
//   x  image row (vertical), PNG height = X
//   y  image column (horizontal), PNG width = Y
// A scene point with disparity d shifts by d pixels in y per unit step in u
// and by d pixels in x per unit step in v. Horizontal spatial flips therefore
// reverse the u order and vertical flips the v order.
class LightField {
 public:
  LightField() = default;

  // Takes ownership; validates rank 5 and finiteness. Values are not forced
  // into [0, 1]: network outputs reuse this container.
  explicit LightField(Tensor<double> data);

  static LightField solid(int64_t U, int64_t V, int64_t X, int64_t Y, int64_t C, double value);

  int64_t U() const { return data_.dim(0); }
  int64_t V() const { return data_.dim(1); }
  int64_t X() const { return data_.dim(2); }
  int64_t Y() const { return data_.dim(3); }
  int64_t C() const { return data_.dim(4); }

  const Tensor<double>& data() const { return data_; }

  double at(int64_t u, int64_t v, int64_t x, int64_t y, int64_t c) const {
    return data_.at(u, v, x, y, c);
  }

  // Sub-aperture image for view (u, v): (X, Y, C) copy.
  Image sai(int64_t u, int64_t v) const;

  // Micro-lens image for spatial position (x, y): (U, V, C) copy.
  Image micro_lens(int64_t x, int64_t y) const;

  // Spatial crop applied to every view.
  LightField crop(int64_t x0, int64_t y0, int64_t w, int64_t h) const;

  bool same_shape(const LightField& o) const { return data_.same_shape(o.data_); }

 private:
  Tensor<double> data_;
};

enum class EpiOrientation {
  // Fix (u, y): stack rows x over views v -> E(v, x).
  Horizontal,
  // Fix (v, x): stack columns y over views u -> E(u, y).
  Vertical,
};

// Epipolar plane image as a 2D-ish (A, S, C) image: first axis the varying
// angular index, second the varying spatial index.
Image epi(const LightField& lf, EpiOrientation orientation, int64_t fixed_angular,
          int64_t fixed_spatial);

// Paired spatial/angular flips that keep epipolar structure valid.
LightField flip_horizontal(const LightField& lf);  // reverses y and u
LightField flip_vertical(const LightField& lf);    // reverses x and v
// 90-degree rotation; requires U == V and X == Y. Maps EPI slope d to -d.
LightField rotate90(const LightField& lf);

// Directory layout: one 8-bit RGB PNG per view named view_{u:02d}_{v:02d}.png;
// all views must decode to identical sizes and the (u, v) grid must be dense.
LightField load_light_field(const std::string& dir);
void save_light_field(const LightField& lf, const std::string& dir);

}  // namespace lfdeblur
