#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "lfdeblur/light_field.hpp"
#include "lfdeblur/rng.hpp"

namespace lfdeblur::testsup {

// Self-deleting scratch directory under the system temp root.
struct TempDir {
  std::filesystem::path path;

  TempDir() {
    std::string tmpl = (std::filesystem::temp_directory_path() / "lfdeblur_XXXXXX").string();
    std::vector<char> buf(tmpl.begin(), tmpl.end());
    buf.push_back('\0');
    if (!mkdtemp(buf.data())) throw std::runtime_error("mkdtemp failed for " + tmpl);
    path = buf.data();
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }

  std::string sub(const std::string& name) const { return (path / name).string(); }
};

inline LightField random_lf(DetRng& rng, int64_t U, int64_t V, int64_t X, int64_t Y,
                            bool quantized = false) {
  Tensor<double> t({U, V, X, Y, 3});
  double* d = t.data();
  for (int64_t i = 0; i < t.size(); ++i) {
    double v = rng.uniform();
    if (quantized) v = double(int64_t(v * 255.0 + 0.5)) / 255.0;
    d[i] = v;
  }
  return LightField(std::move(t));
}

inline Image random_image(DetRng& rng, int64_t X, int64_t Y, int64_t C = 3) {
  Image img({X, Y, C});
  double* d = img.data();
  for (int64_t i = 0; i < img.size(); ++i) d[i] = rng.uniform();
  return img;
}

// Shifted-copies field with integer disparity d and wrap-around shifts:
// value(u,v,x,y) = base((x - v*d) mod X, (y - u*d) mod Y). Every EPI of it is
// made of exact shifted rows, with no border caveats thanks to the wrap.
inline LightField shifted_copies_lf(DetRng& rng, int64_t U, int64_t V, int64_t X, int64_t Y,
                                    int64_t d) {
  Image base = random_image(rng, X, Y);
  Tensor<double> t({U, V, X, Y, 3});
  auto wrap = [](int64_t i, int64_t n) { return ((i % n) + n) % n; };
  for (int64_t u = 0; u < U; ++u)
    for (int64_t v = 0; v < V; ++v)
      for (int64_t x = 0; x < X; ++x)
        for (int64_t y = 0; y < Y; ++y)
          for (int64_t c = 0; c < 3; ++c)
            t(u, v, x, y, c) = base(wrap(x - v * d, X), wrap(y - u * d, Y), c);
  return LightField(std::move(t));
}

// Max absolute element difference.
template <class T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b) {
  if (!a.same_shape(b)) throw std::runtime_error("max_abs_diff: shape mismatch");
  double m = 0;
  for (int64_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(double(a.data()[i]) - double(b.data()[i])));
  return m;
}

inline bool bit_equal(const Tensor<double>& a, const Tensor<double>& b) {
  if (!a.same_shape(b)) return false;
  return std::memcmp(a.data(), b.data(), size_t(a.size()) * sizeof(double)) == 0;
}

}  // namespace lfdeblur::testsup
