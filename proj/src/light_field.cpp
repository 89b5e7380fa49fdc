#include "lfdeblur/light_field.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <map>
#include <utility>

#include "lfdeblur/png_io.hpp"

namespace fs = std::filesystem;

namespace lfdeblur {

LightField::LightField(Tensor<double> data) : data_(std::move(data)) {
  if (data_.rank() != 5)
    throw ShapeError("LightField: expected (U,V,X,Y,C) tensor, got " + data_.shape_str());
  if (!all_finite(data_)) throw Error("LightField: data contains non-finite values");
}

LightField LightField::solid(int64_t U, int64_t V, int64_t X, int64_t Y, int64_t C, double value) {
  Tensor<double> t({U, V, X, Y, C});
  t.fill(value);
  return LightField(std::move(t));
}

Image LightField::sai(int64_t u, int64_t v) const {
  if (u < 0 || u >= U() || v < 0 || v >= V())
    throw IndexError("sai: view (" + std::to_string(u) + "," + std::to_string(v) +
                     ") outside grid " + std::to_string(U()) + "x" + std::to_string(V()));
  Image out({X(), Y(), C()});
  const int64_t plane = X() * Y() * C();
  std::memcpy(out.data(), data_.data() + (u * V() + v) * plane, size_t(plane) * sizeof(double));
  return out;
}

Image LightField::micro_lens(int64_t x, int64_t y) const {
  if (x < 0 || x >= X() || y < 0 || y >= Y())
    throw IndexError("micro_lens: position (" + std::to_string(x) + "," + std::to_string(y) +
                     ") outside " + std::to_string(X()) + "x" + std::to_string(Y()));
  Image out({U(), V(), C()});
  for (int64_t u = 0; u < U(); ++u)
    for (int64_t v = 0; v < V(); ++v)
      for (int64_t c = 0; c < C(); ++c) out(u, v, c) = data_.at(u, v, x, y, c);
  return out;
}

LightField LightField::crop(int64_t x0, int64_t y0, int64_t w, int64_t h) const {
  // (w, h) = extent along (x, y).
  if (w <= 0 || h <= 0) throw IndexError("crop: extent must be positive");
  if (x0 < 0 || y0 < 0 || x0 + w > X() || y0 + h > Y())
    throw IndexError("crop: window [" + std::to_string(x0) + "," + std::to_string(x0 + w) + ")x[" +
                     std::to_string(y0) + "," + std::to_string(y0 + h) + ") outside " +
                     std::to_string(X()) + "x" + std::to_string(Y()));
  Tensor<double> out({U(), V(), w, h, C()});
  for (int64_t u = 0; u < U(); ++u)
    for (int64_t v = 0; v < V(); ++v)
      for (int64_t x = 0; x < w; ++x) {
        const double* src = data_.data() + (((u * V() + v) * X() + x0 + x) * Y() + y0) * C();
        double* dst = out.data() + (((u * V() + v) * w + x) * h) * C();
        std::memcpy(dst, src, size_t(h * C()) * sizeof(double));
      }
  return LightField(std::move(out));
}

Image epi(const LightField& lf, EpiOrientation orientation, int64_t fixed_angular,
          int64_t fixed_spatial) {
  if (orientation == EpiOrientation::Horizontal) {
    // Fix (u, y); E(v, x).
    const int64_t u = fixed_angular, y = fixed_spatial;
    if (u < 0 || u >= lf.U()) throw IndexError("epi: u out of range");
    if (y < 0 || y >= lf.Y()) throw IndexError("epi: y out of range");
    Image out({lf.V(), lf.X(), lf.C()});
    for (int64_t v = 0; v < lf.V(); ++v)
      for (int64_t x = 0; x < lf.X(); ++x)
        for (int64_t c = 0; c < lf.C(); ++c) out(v, x, c) = lf.at(u, v, x, y, c);
    return out;
  }
  // Fix (v, x); E(u, y).
  const int64_t v = fixed_angular, x = fixed_spatial;
  if (v < 0 || v >= lf.V()) throw IndexError("epi: v out of range");
  if (x < 0 || x >= lf.X()) throw IndexError("epi: x out of range");
  Image out({lf.U(), lf.Y(), lf.C()});
  for (int64_t u = 0; u < lf.U(); ++u)
    for (int64_t y = 0; y < lf.Y(); ++y)
      for (int64_t c = 0; c < lf.C(); ++c) out(u, y, c) = lf.at(u, v, x, y, c);
  return out;
}

LightField flip_horizontal(const LightField& lf) {
  Tensor<double> out(lf.data().shape());
  const int64_t U = lf.U(), V = lf.V(), X = lf.X(), Y = lf.Y(), C = lf.C();
  for (int64_t u = 0; u < U; ++u)
    for (int64_t v = 0; v < V; ++v)
      for (int64_t x = 0; x < X; ++x)
        for (int64_t y = 0; y < Y; ++y)
          for (int64_t c = 0; c < C; ++c)
            out.at(u, v, x, y, c) = lf.at(U - 1 - u, v, x, Y - 1 - y, c);
  return LightField(std::move(out));
}

LightField flip_vertical(const LightField& lf) {
  Tensor<double> out(lf.data().shape());
  const int64_t U = lf.U(), V = lf.V(), X = lf.X(), Y = lf.Y(), C = lf.C();
  for (int64_t u = 0; u < U; ++u)
    for (int64_t v = 0; v < V; ++v)
      for (int64_t x = 0; x < X; ++x)
        for (int64_t y = 0; y < Y; ++y)
          for (int64_t c = 0; c < C; ++c)
            out.at(u, v, x, y, c) = lf.at(u, V - 1 - v, X - 1 - x, y, c);
  return LightField(std::move(out));
}

LightField rotate90(const LightField& lf) {
  if (lf.U() != lf.V() || lf.X() != lf.Y())
    throw ShapeError("rotate90: needs square angular and spatial extents, got " +
                     lf.data().shape_str());
  Tensor<double> out(lf.data().shape());
  const int64_t U = lf.U(), X = lf.X(), C = lf.C();
  for (int64_t u = 0; u < U; ++u)
    for (int64_t v = 0; v < U; ++v)
      for (int64_t x = 0; x < X; ++x)
        for (int64_t y = 0; y < X; ++y)
          for (int64_t c = 0; c < C; ++c)
            out.at(u, v, x, y, c) = lf.at(v, U - 1 - u, y, X - 1 - x, c);
  return LightField(std::move(out));
}

LightField load_light_field(const std::string& dir) {
  if (!fs::is_directory(dir)) throw IoError("load_light_field: " + dir + " is not a directory");
  std::map<std::pair<int, int>, fs::path> views;
  int max_u = -1, max_v = -1;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    int u = 0, v = 0;
    const std::string name = entry.path().filename().string();
    if (std::sscanf(name.c_str(), "view_%d_%d.png", &u, &v) == 2) {
      views[{u, v}] = entry.path();
      max_u = std::max(max_u, u);
      max_v = std::max(max_v, v);
    }
  }
  if (views.empty()) throw IoError("load_light_field: no view_{uu}_{vv}.png files in " + dir);
  const int64_t U = max_u + 1, V = max_v + 1;
  if (int64_t(views.size()) != U * V) {
    char gap[32] = "";
    for (int u = 0; u < U && gap[0] == '\0'; ++u)
      for (int v = 0; v < V; ++v)
        if (!views.count({u, v})) {
          std::snprintf(gap, sizeof(gap), "view_%02d_%02d", u, v);
          break;
        }
    throw IoError("load_light_field: incomplete " + std::to_string(U) + "x" + std::to_string(V) +
                  " view grid in " + dir + ": missing " + gap);
  }

  Tensor<double> data;
  int64_t X = 0, Y = 0, C = 0;
  for (int64_t u = 0; u < U; ++u)
    for (int64_t v = 0; v < V; ++v) {
      Image img = read_png(views[{int(u), int(v)}].string());
      if (u == 0 && v == 0) {
        X = img.dim(0);
        Y = img.dim(1);
        C = img.dim(2);
        data = Tensor<double>({U, V, X, Y, C});
      } else if (img.dim(0) != X || img.dim(1) != Y || img.dim(2) != C) {
        throw IoError("load_light_field: " + views[{int(u), int(v)}].filename().string() + " is " +
                      std::to_string(img.dim(0)) + "x" + std::to_string(img.dim(1)) +
                      " but the grid started at " + std::to_string(X) + "x" + std::to_string(Y));
      }
      std::memcpy(data.data() + (u * V + v) * X * Y * C, img.data(),
                  size_t(X * Y * C) * sizeof(double));
    }
  return LightField(std::move(data));
}

void save_light_field(const LightField& lf, const std::string& dir) {
  fs::create_directories(dir);
  char name[32];
  for (int64_t u = 0; u < lf.U(); ++u)
    for (int64_t v = 0; v < lf.V(); ++v) {
      std::snprintf(name, sizeof(name), "view_%02d_%02d.png", int(u), int(v));
      write_png((fs::path(dir) / name).string(), lf.sai(u, v));
    }
}

}  // namespace lfdeblur
