#pragma once

#include <cmath>
#include <cstring>

#include "lfdeblur/gemm.hpp"
#include "lfdeblur/tensor.hpp"

// Differentiable primitives. Every op comes as a forward plus a backward that
// consumes exactly what the forward produced; gradient outputs accumulate so
// multi-path contributions sum naturally. All spatial convs are same-size with
// replicate padding; the angular conv zero-pads past the view grid.

namespace lfdeblur {

// ---- dense: Y(M,N) = X(M,K) W(K,N) + b ----

template <class T>
void dense_forward(const T* x, const T* w, const T* b, T* y, int64_t m, int64_t k, int64_t n) {
  matmul(x, w, y, m, k, n);
  if (b) {
    for (int64_t i = 0; i < m; ++i) {
      T* row = y + i * n;
      for (int64_t j = 0; j < n; ++j) row[j] += b[j];
    }
  }
}

// dx may be null (skip input gradient); dw/db accumulate.
template <class T>
void dense_backward(const T* dy, const T* x, const T* w, T* dx, T* dw, T* db, int64_t m, int64_t k,
                    int64_t n) {
  if (dx) matmul_nt(dy, w, dx, m, n, k, /*accumulate=*/true);
  if (dw) matmul_tn(x, dy, dw, k, m, n, /*accumulate=*/true);
  if (db) {
    for (int64_t i = 0; i < m; ++i) {
      const T* row = dy + i * n;
      for (int64_t j = 0; j < n; ++j) db[j] += row[j];
    }
  }
}

// ---- relu ----

template <class T>
void relu_forward(const T* x, T* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}

// Mask from the forward output; accumulates into dx.
template <class T>
void relu_backward(const T* dy, const T* y, T* dx, int64_t n) {
  for (int64_t i = 0; i < n; ++i)
    if (y[i] > T(0)) dx[i] += dy[i];
}

// In-place variant: zero the gradient wherever the activation was clipped.
template <class T>
void relu_mask_inplace(T* dy, const T* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i)
    if (y[i] <= T(0)) dy[i] = T(0);
}

// ---- im2col over one (X, Y, Cin) plane, replicate padding ----
// col(XY, k*k*Cin): col[x*Y+y, (dx*k+dy)*Cin + ci] = plane(clamp(x+dx-r), clamp(y+dy-r), ci).

template <class T>
void im2col_replicate(const T* plane, T* col, int64_t X, int64_t Y, int64_t cin, int k) {
  const int r = k / 2;
  for (int64_t x = 0; x < X; ++x) {
    for (int64_t y = 0; y < Y; ++y) {
      T* dst = col + (x * Y + y) * (int64_t(k) * k * cin);
      for (int dx = 0; dx < k; ++dx) {
        int64_t sx = x + dx - r;
        sx = sx < 0 ? 0 : (sx >= X ? X - 1 : sx);
        for (int dy = 0; dy < k; ++dy) {
          int64_t sy = y + dy - r;
          sy = sy < 0 ? 0 : (sy >= Y ? Y - 1 : sy);
          std::memcpy(dst, plane + (sx * Y + sy) * cin, size_t(cin) * sizeof(T));
          dst += cin;
        }
      }
    }
  }
}

// Scatter-add transpose of im2col_replicate; border pixels collect the taps
// that clamped onto them, which is exactly the replicate-pad gradient.
template <class T>
void col2im_replicate_add(const T* col, T* dplane, int64_t X, int64_t Y, int64_t cin, int k) {
  const int r = k / 2;
  for (int64_t x = 0; x < X; ++x) {
    for (int64_t y = 0; y < Y; ++y) {
      const T* src = col + (x * Y + y) * (int64_t(k) * k * cin);
      for (int dx = 0; dx < k; ++dx) {
        int64_t sx = x + dx - r;
        sx = sx < 0 ? 0 : (sx >= X ? X - 1 : sx);
        for (int dy = 0; dy < k; ++dy) {
          int64_t sy = y + dy - r;
          sy = sy < 0 ? 0 : (sy >= Y ? Y - 1 : sy);
          T* dst = dplane + (sx * Y + sy) * cin;
          for (int64_t c = 0; c < cin; ++c) dst[c] += src[c];
          src += cin;
        }
      }
    }
  }
}

// ---- spatial conv on one view via im2col + GEMM ----
// Weights live in column layout: wcol((k*k*cin), cout), matching im2col.

template <class T>
void conv_view_forward(const T* plane, const T* wcol, const T* b, T* out, T* col_scratch,
                       int64_t X, int64_t Y, int64_t cin, int64_t cout, int k) {
  im2col_replicate(plane, col_scratch, X, Y, cin, k);
  dense_forward(col_scratch, wcol, b, out, X * Y, int64_t(k) * k * cin, cout);
}

// Recomputes the column matrix rather than caching it.
template <class T>
void conv_view_backward(const T* dout, const T* plane, const T* wcol, T* dplane, T* dwcol, T* db,
                        T* col_scratch, T* dcol_scratch, int64_t X, int64_t Y, int64_t cin,
                        int64_t cout, int k) {
  const int64_t kk = int64_t(k) * k * cin;
  im2col_replicate(plane, col_scratch, X, Y, cin, k);
  if (dwcol) matmul_tn(col_scratch, dout, dwcol, kk, X * Y, cout, /*accumulate=*/true);
  if (db) {
    for (int64_t i = 0; i < X * Y; ++i)
      for (int64_t j = 0; j < cout; ++j) db[j] += dout[i * cout + j];
  }
  if (dplane) {
    matmul_nt(dout, wcol, dcol_scratch, X * Y, cout, kk, /*accumulate=*/false);
    col2im_replicate_add(dcol_scratch, dplane, X, Y, cin, k);
  }
}

// ---- kernel layout bridge ----
// Generated kernels arrive as (cout, cin, k, k) vectors; the conv wants column
// layout. Pure permutation, so the backward is the inverse gather.

template <class T>
void kernel_to_col(const T* kvec, T* wcol, int64_t cin, int64_t cout, int k) {
  for (int64_t co = 0; co < cout; ++co)
    for (int64_t ci = 0; ci < cin; ++ci)
      for (int dx = 0; dx < k; ++dx)
        for (int dy = 0; dy < k; ++dy)
          wcol[((int64_t(dx) * k + dy) * cin + ci) * cout + co] =
              kvec[((co * cin + ci) * k + dx) * k + dy];
}

template <class T>
void col_to_kernel_add(const T* dwcol, T* dkvec, int64_t cin, int64_t cout, int k) {
  for (int64_t co = 0; co < cout; ++co)
    for (int64_t ci = 0; ci < cin; ++ci)
      for (int dx = 0; dx < k; ++dx)
        for (int dy = 0; dy < k; ++dy)
          dkvec[((co * cin + ci) * k + dx) * k + dy] +=
              dwcol[((int64_t(dx) * k + dy) * cin + ci) * cout + co];
}

// ---- spatial mean over one view: pooled(c) = mean_xy plane(x, y, c) ----

template <class T>
void spatial_mean_forward(const T* plane, T* pooled, int64_t xy, int64_t c) {
  for (int64_t j = 0; j < c; ++j) pooled[j] = T(0);
  for (int64_t i = 0; i < xy; ++i)
    for (int64_t j = 0; j < c; ++j) pooled[j] += plane[i * c + j];
  const T inv = T(1) / T(xy);
  for (int64_t j = 0; j < c; ++j) pooled[j] *= inv;
}

template <class T>
void spatial_mean_backward(const T* dpooled, T* dplane, int64_t xy, int64_t c) {
  const T inv = T(1) / T(xy);
  for (int64_t i = 0; i < xy; ++i)
    for (int64_t j = 0; j < c; ++j) dplane[i * c + j] += dpooled[j] * inv;
}

// ---- angular conv over the (u, v) grid, zero padding ----
// x, y: (U*V, XY, C) with view-major planes; w: (ka, ka, cin, cout); per
// spatial position the view grid is convolved like a tiny image.

template <class T>
void angular_conv_forward(const T* x, const T* w, const T* b, T* y, int64_t U, int64_t V,
                          int64_t xy, int64_t cin, int64_t cout, int ka) {
  const int r = ka / 2;
  for (int64_t u = 0; u < U; ++u) {
    for (int64_t v = 0; v < V; ++v) {
      T* out = y + (u * V + v) * xy * cout;
      for (int64_t i = 0; i < xy * cout; ++i) out[i] = T(0);
      if (b) {
        for (int64_t i = 0; i < xy; ++i)
          for (int64_t j = 0; j < cout; ++j) out[i * cout + j] = b[j];
      }
      for (int du = 0; du < ka; ++du) {
        int64_t su = u + du - r;
        if (su < 0 || su >= U) continue;
        for (int dv = 0; dv < ka; ++dv) {
          int64_t sv = v + dv - r;
          if (sv < 0 || sv >= V) continue;
          const T* plane = x + (su * V + sv) * xy * cin;
          const T* tap = w + (int64_t(du) * ka + dv) * cin * cout;
          matmul(plane, tap, out, xy, cin, cout, /*accumulate=*/true);
        }
      }
    }
  }
}

template <class T>
void angular_conv_backward(const T* dy, const T* x, const T* w, T* dx, T* dw, T* db, int64_t U,
                           int64_t V, int64_t xy, int64_t cin, int64_t cout, int ka) {
  const int r = ka / 2;
  for (int64_t u = 0; u < U; ++u) {
    for (int64_t v = 0; v < V; ++v) {
      const T* dout = dy + (u * V + v) * xy * cout;
      if (db) {
        for (int64_t i = 0; i < xy; ++i)
          for (int64_t j = 0; j < cout; ++j) db[j] += dout[i * cout + j];
      }
      for (int du = 0; du < ka; ++du) {
        int64_t su = u + du - r;
        if (su < 0 || su >= U) continue;
        for (int dv = 0; dv < ka; ++dv) {
          int64_t sv = v + dv - r;
          if (sv < 0 || sv >= V) continue;
          const T* plane = x + (su * V + sv) * xy * cin;
          const T* tap = w + (int64_t(du) * ka + dv) * cin * cout;
          if (dx) matmul_nt(dout, tap, dx + (su * V + sv) * xy * cin, xy, cout, cin, true);
          if (dw) matmul_tn(plane, dout, dw + (int64_t(du) * ka + dv) * cin * cout, cin, xy, cout,
                            true);
        }
      }
    }
  }
}

// ---- view/channel reorganization ----
// In: (U*V views, XY, N) with N == U*V. Out[uv][p][n] = In[n][p][uv]: channel
// n of the output stack at view uv is channel uv taken from view n. Applying
// it twice is the identity, and it is its own gradient operator.

template <class T>
void reorganize_views_channels(const T* in, T* out, int64_t n_views, int64_t xy) {
  for (int64_t a = 0; a < n_views; ++a)
    for (int64_t p = 0; p < xy; ++p) {
      T* dst = out + (a * xy + p) * n_views;
      for (int64_t b = 0; b < n_views; ++b) dst[b] = in[(b * xy + p) * n_views + a];
    }
}

// ---- per-pixel weighted fusion ----
// fused(p, c) = sum_blk expanded(p, blk*C + c) * weights(p, blk*C + c):
// each view/channel block of the expanded stack is weighted per pixel and
// summed down to C channels.

template <class T>
void fusion_forward(const T* expanded, const T* weights, T* fused, int64_t xy, int64_t blocks,
                    int64_t c) {
  for (int64_t p = 0; p < xy; ++p) {
    const T* e = expanded + p * blocks * c;
    const T* w = weights + p * blocks * c;
    T* o = fused + p * c;
    for (int64_t j = 0; j < c; ++j) o[j] = T(0);
    for (int64_t b = 0; b < blocks; ++b)
      for (int64_t j = 0; j < c; ++j) o[j] += e[b * c + j] * w[b * c + j];
  }
}

template <class T>
void fusion_backward(const T* dfused, const T* expanded, const T* weights, T* dexpanded,
                     T* dweights, int64_t xy, int64_t blocks, int64_t c) {
  for (int64_t p = 0; p < xy; ++p) {
    const T* df = dfused + p * c;
    const T* e = expanded + p * blocks * c;
    const T* w = weights + p * blocks * c;
    for (int64_t b = 0; b < blocks; ++b)
      for (int64_t j = 0; j < c; ++j) {
        if (dexpanded) dexpanded[p * blocks * c + b * c + j] += df[j] * w[b * c + j];
        if (dweights) dweights[p * blocks * c + b * c + j] += df[j] * e[b * c + j];
      }
  }
}

// ---- mean absolute error ----

template <class T>
T l1_loss(const T* pred, const T* target, int64_t n) {
  double acc = 0;
  for (int64_t i = 0; i < n; ++i) acc += std::abs(double(pred[i] - target[i]));
  return T(acc / double(n));
}

// d/dpred of mean |pred - target|; sign(0) taken as 0. Accumulates.
template <class T>
void l1_loss_backward(const T* pred, const T* target, T* dpred, int64_t n) {
  const T inv = T(1) / T(n);
  for (int64_t i = 0; i < n; ++i) {
    const T d = pred[i] - target[i];
    dpred[i] += d > T(0) ? inv : (d < T(0) ? -inv : T(0));
  }
}

}  // namespace lfdeblur
