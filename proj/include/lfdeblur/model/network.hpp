#pragma once

#include <algorithm>
#include <cstring>
#include <string>
#include <vector>

#include "lfdeblur/model/config.hpp"
#include "lfdeblur/model/ops.hpp"
#include "lfdeblur/rng.hpp"
#include "lfdeblur/tensor.hpp"

// Network assembly. Data flow per forward pass, all views sharing weights:
//
//   input (U,V,X,Y,3)
//   -> stem conv 3x3 + relu                      -> (U,V,X,Y,C)
//   -> num_blocks x [ per-view generated-kernel conv + relu,
//                     angular conv over the view grid + relu,
//                     residual add ]
//   -> fusion head: per-view channel expansion C -> UV*C (relu),
//      depth features C -> UV (relu), view/channel reorganization,
//      optional view-coordinate channels, two-layer MLP -> per-pixel
//      weights, weighted fusion back to C, conv 3x3 -> 3
//   [-> + input when global_residual]
//
// Weight layouts: dense (in, out); spatial convs in im2col column layout
// (k*k*cin, cout); angular conv (ka, ka, cin, cout).

namespace lfdeblur {

template <class T>
struct DenseParams {
  Tensor<T> w, b;
};

template <class T>
struct GeneratorParams {
  DenseParams<T> fc1;   // C -> C_K
  DenseParams<T> fc2;   // C_K -> C_K
  DenseParams<T> kgen;  // C_K -> C*C*k*k
};

template <class T>
struct BlockParams {
  GeneratorParams<T> gen;  // use_vasc
  Tensor<T> static_w;      // !use_vasc: shared (k*k*C, C) kernel, no bias
  Tensor<T> ang_w, ang_b;  // (ka, ka, C, C), (C)
};

template <class T>
struct HeadParams {
  DenseParams<T> expand;  // C -> UV*C
  DenseParams<T> dp;      // C -> UV
  DenseParams<T> att1;    // UV(+2) -> H
  DenseParams<T> att2;    // H -> UV*C
  DenseParams<T> out;     // column layout (3*3*C, 3)
};

template <class T>
struct ModelParams {
  ModelConfig cfg;
  DenseParams<T> stem;  // column layout (3*3*3, C)
  std::vector<BlockParams<T>> blocks;
  HeadParams<T> head;
};

// Enumerates every trainable tensor with a stable name; the order defines
// both checkpoint layout and init draw order.
template <class MP, class Fn>
void for_each_tensor(MP& p, Fn&& fn) {
  const ModelConfig& cfg = p.cfg;
  fn("stem.w", p.stem.w);
  fn("stem.b", p.stem.b);
  for (size_t i = 0; i < p.blocks.size(); ++i) {
    auto& blk = p.blocks[i];
    const std::string pre = "block" + std::to_string(i) + ".";
    if (cfg.use_vasc) {
      fn(pre + "gen.fc1.w", blk.gen.fc1.w);
      fn(pre + "gen.fc1.b", blk.gen.fc1.b);
      fn(pre + "gen.fc2.w", blk.gen.fc2.w);
      fn(pre + "gen.fc2.b", blk.gen.fc2.b);
      fn(pre + "gen.kgen.w", blk.gen.kgen.w);
      fn(pre + "gen.kgen.b", blk.gen.kgen.b);
    } else {
      fn(pre + "static.w", blk.static_w);
    }
    fn(pre + "ang.w", blk.ang_w);
    fn(pre + "ang.b", blk.ang_b);
  }
  if (cfg.use_dpva) {
    fn("head.expand.w", p.head.expand.w);
    fn("head.expand.b", p.head.expand.b);
    fn("head.dp.w", p.head.dp.w);
    fn("head.dp.b", p.head.dp.b);
    fn("head.att1.w", p.head.att1.w);
    fn("head.att1.b", p.head.att1.b);
    fn("head.att2.w", p.head.att2.w);
    fn("head.att2.b", p.head.att2.b);
  }
  fn("head.out.w", p.head.out.w);
  fn("head.out.b", p.head.out.b);
}

// Allocates zeroed parameters of the configured shapes.
template <class T>
ModelParams<T> make_params(const ModelConfig& cfg) {
  cfg.validate();
  const int64_t C = cfg.channels, K = cfg.kernel, CK = cfg.gen_hidden;
  const int64_t N = cfg.n_views(), H = cfg.att_hidden(), KA = cfg.angular_kernel;
  ModelParams<T> p;
  p.cfg = cfg;
  p.stem.w = Tensor<T>({K * K * 3, C});
  p.stem.b = Tensor<T>({C});
  p.blocks.resize(size_t(cfg.num_blocks));
  for (auto& blk : p.blocks) {
    if (cfg.use_vasc) {
      blk.gen.fc1.w = Tensor<T>({C, CK});
      blk.gen.fc1.b = Tensor<T>({CK});
      blk.gen.fc2.w = Tensor<T>({CK, CK});
      blk.gen.fc2.b = Tensor<T>({CK});
      blk.gen.kgen.w = Tensor<T>({CK, C * C * K * K});
      blk.gen.kgen.b = Tensor<T>({C * C * K * K});
    } else {
      blk.static_w = Tensor<T>({K * K * C, C});
    }
    blk.ang_w = Tensor<T>({KA, KA, C, C});
    blk.ang_b = Tensor<T>({C});
  }
  if (cfg.use_dpva) {
    p.head.expand.w = Tensor<T>({C, N * C});
    p.head.expand.b = Tensor<T>({N * C});
    p.head.dp.w = Tensor<T>({C, N});
    p.head.dp.b = Tensor<T>({N});
    const int64_t att_in = cfg.use_ape ? N + 2 : N;
    p.head.att1.w = Tensor<T>({att_in, H});
    p.head.att1.b = Tensor<T>({H});
    p.head.att2.w = Tensor<T>({H, N * C});
    p.head.att2.b = Tensor<T>({N * C});
  }
  p.head.out.w = Tensor<T>({int64_t(3) * 3 * C, 3});
  p.head.out.b = Tensor<T>({3});
  return p;
}

// He-style init. The generator bias carries the base kernel; the generator
// matrix starts small so early dynamic kernels stay near that base. The
// second attention layer starts damped so the fused signal cannot blow up
// before the weights have learned anything.
template <class T>
ModelParams<T> init_params(const ModelConfig& cfg, uint64_t seed) {
  ModelParams<T> p = make_params<T>(cfg);
  const double C = cfg.channels, K = cfg.kernel, CK = cfg.gen_hidden;
  const double N = cfg.n_views(), H = cfg.att_hidden(), KA = cfg.angular_kernel;
  DetRng rng(mix_seed(seed, 0x696e6974));
  auto draw = [&rng](Tensor<T>& t, double stddev) {
    if (stddev == 0.0) {
      t.set_zero();
      return;
    }
    T* d = t.data();
    for (int64_t i = 0; i < t.size(); ++i) d[i] = T(rng.normal(0.0, stddev));
  };
  const double kernel_std = std::sqrt(2.0 / (K * K * C));
  for_each_tensor(p, [&](const std::string& name, Tensor<T>& t) {
    auto ends_with = [&name](const char* s) {
      const std::string suf(s);
      return name.size() >= suf.size() &&
             name.compare(name.size() - suf.size(), suf.size(), suf) == 0;
    };
    double stddev = 0.0;
    if (name == "stem.w")
      stddev = std::sqrt(2.0 / (K * K * 3.0));
    else if (ends_with("gen.fc1.w"))
      stddev = std::sqrt(2.0 / C);
    else if (ends_with("gen.fc2.w"))
      stddev = std::sqrt(2.0 / CK);
    else if (ends_with("gen.kgen.w"))
      stddev = 0.1 * kernel_std / std::sqrt(CK);
    else if (ends_with("gen.kgen.b"))
      stddev = kernel_std;
    else if (ends_with("static.w"))
      stddev = kernel_std;
    else if (ends_with("ang.w"))
      stddev = std::sqrt(2.0 / (KA * KA * C));
    else if (name == "head.expand.w" || name == "head.dp.w")
      stddev = std::sqrt(2.0 / C);
    else if (name == "head.att1.w")
      stddev = std::sqrt(2.0 / double(t.dim(0)));
    else if (name == "head.att2.w")
      stddev = std::sqrt(1.0 / H) / N;
    else if (name == "head.out.w")
      stddev = kernel_std;
    draw(t, stddev);
  });
  return p;
}

template <class T>
int64_t total_params(const ModelParams<T>& p) {
  int64_t n = 0;
  for_each_tensor(p, [&n](const std::string&, const Tensor<T>& t) { n += t.size(); });
  return n;
}

template <class T>
void zero_params(ModelParams<T>& p) {
  for_each_tensor(p, [](const std::string&, Tensor<T>& t) { t.set_zero(); });
}

struct ParamReportRow {
  std::string module;
  int64_t count = 0;
};

struct ParamReport {
  int64_t total = 0;
  std::vector<ParamReportRow> rows;
};

// Closed-form parameter budget per module (cross-checked against tensor
// enumeration in the tests). Generator cost per block is
// C*C_K + C_K*C_K + C_K*(C*C*k*k) plus the three biases.
inline ParamReport count_params(const ModelConfig& cfg) {
  cfg.validate();
  const int64_t C = cfg.channels, K = cfg.kernel, CK = cfg.gen_hidden;
  const int64_t N = cfg.n_views(), H = cfg.att_hidden(), KA = cfg.angular_kernel;
  ParamReport rep;
  auto add = [&rep](const std::string& name, int64_t n) {
    rep.rows.push_back({name, n});
    rep.total += n;
  };
  add("stem", K * K * 3 * C + C);
  const int64_t spatial = cfg.use_vasc
                              ? C * CK + CK + CK * CK + CK + CK * (C * C * K * K) + C * C * K * K
                              : C * C * K * K;
  const int64_t angular = KA * KA * C * C + C;
  for (int i = 0; i < cfg.num_blocks; ++i) add("block" + std::to_string(i), spatial + angular);
  if (cfg.use_dpva) {
    add("head.expand", C * (N * C) + N * C);
    add("head.dp", C * N + N);
    const int64_t att_in = cfg.use_ape ? N + 2 : N;
    add("head.attention", att_in * H + H + H * (N * C) + N * C);
  }
  add("head.out", int64_t(3) * 3 * C * 3 + 3);
  return rep;
}

// Per-view generated kernel, exposed for direct inspection: pooled feature
// through the bottleneck, reshaped to (C_out, C_in, k, k).
template <class T>
Tensor<T> generate_view_kernel(const GeneratorParams<T>& gen, const Tensor<T>& view_features,
                               const ModelConfig& cfg) {
  if (view_features.rank() != 3 || view_features.dim(2) != cfg.channels)
    throw ShapeError("generate_view_kernel: expected (X,Y,C) features, got " +
                     view_features.shape_str());
  const int64_t C = cfg.channels, K = cfg.kernel, CK = cfg.gen_hidden;
  const int64_t xy = view_features.dim(0) * view_features.dim(1);
  Tensor<T> pooled({C}), h1({CK}), h2({CK});
  spatial_mean_forward(view_features.data(), pooled.data(), xy, C);
  dense_forward(pooled.data(), gen.fc1.w.data(), gen.fc1.b.data(), h1.data(), 1, C, CK);
  relu_forward(h1.data(), h1.data(), CK);
  dense_forward(h1.data(), gen.fc2.w.data(), gen.fc2.b.data(), h2.data(), 1, CK, CK);
  relu_forward(h2.data(), h2.data(), CK);
  Tensor<T> kvec({C * C * K * K});
  dense_forward(h2.data(), gen.kgen.w.data(), gen.kgen.b.data(), kvec.data(), 1, CK,
                C * C * K * K);
  kvec.reshape({C, C, K, K});
  return kvec;
}

// ---- caches ----

template <class T>
struct BlockCache {
  Tensor<T> input;           // (UV, XY, C)
  Tensor<T> pooled, h1, h2;  // (UV, C), (UV, CK), (UV, CK)
  Tensor<T> kernels;         // (UV, C*C*k*k)
  Tensor<T> s;               // post-relu spatial conv (UV, XY, C)
  Tensor<T> r;               // post-relu angular conv (UV, XY, C)
};

template <class T>
struct HeadCache {
  Tensor<T> input;      // (UV, XY, C)
  Tensor<T> fdp, fndp;  // (UV, XY, N)
  Tensor<T> fape;       // (UV, XY, N+2) when use_ape
  Tensor<T> h;          // (UV, XY, H)
  Tensor<T> fve, wdp;   // (UV, XY, N*C)
  Tensor<T> fsharp;     // (UV, XY, C)
};

template <class T>
struct ModelWorkspace {
  Tensor<T> x0;       // (UV, XY, 3)
  Tensor<T> f0, cur;  // (UV, XY, C)
  std::vector<BlockCache<T>> blocks;
  HeadCache<T> head;

  // scratch
  Tensor<T> col, dcol;                // (XY, k*k*max(3, C))
  Tensor<T> wcol, dwcol;              // (k*k*C, C)
  Tensor<T> dkvec;                    // (C*C*k*k)
  Tensor<T> da, ds_all, dnext, dcur;  // (UV, XY, C)
  Tensor<T> dplane_c;                 // (XY, C)
  Tensor<T> dvec_ck, dvec_ck2;        // (CK)
  Tensor<T> dvec_c;                   // (C)
  Tensor<T> dfndp, dfdp;              // (UV, XY, N)
  Tensor<T> dfva;                     // (UV, XY, C)
  Tensor<T> dbig, dbig2;              // (XY, N*C)
  Tensor<T> dh;                       // (XY, H)
  Tensor<T> dfape;                    // (XY, N+2 or N)

  int64_t X = -1, Y = -1;
  ModelConfig cfg;
  bool ready = false;

  void ensure(const ModelConfig& c, int64_t x_dim, int64_t y_dim) {
    if (ready && X == x_dim && Y == y_dim && cfg == c) return;
    cfg = c;
    X = x_dim;
    Y = y_dim;
    ready = true;
    const int64_t C = c.channels, K = c.kernel, CK = c.gen_hidden;
    const int64_t N = c.n_views(), H = c.att_hidden();
    const int64_t UV = N, XY = X * Y;
    x0 = Tensor<T>({UV, XY, 3});
    f0 = Tensor<T>({UV, XY, C});
    cur = Tensor<T>({UV, XY, C});
    blocks.assign(size_t(c.num_blocks), BlockCache<T>{});
    for (auto& blk : blocks) {
      blk.input = Tensor<T>({UV, XY, C});
      blk.s = Tensor<T>({UV, XY, C});
      blk.r = Tensor<T>({UV, XY, C});
      if (c.use_vasc) {
        blk.pooled = Tensor<T>({UV, C});
        blk.h1 = Tensor<T>({UV, CK});
        blk.h2 = Tensor<T>({UV, CK});
        blk.kernels = Tensor<T>({UV, C * C * K * K});
      }
    }
    head.input = Tensor<T>({UV, XY, C});
    if (c.use_dpva) {
      head.fdp = Tensor<T>({UV, XY, N});
      head.fndp = Tensor<T>({UV, XY, N});
      if (c.use_ape) head.fape = Tensor<T>({UV, XY, N + 2});
      head.h = Tensor<T>({UV, XY, H});
      head.fve = Tensor<T>({UV, XY, N * C});
      head.wdp = Tensor<T>({UV, XY, N * C});
      head.fsharp = Tensor<T>({UV, XY, C});
    }
    // the im2col scratch is shared by the stem (k x k over 3 channels), the
    // block convs (k x k over C) and the fixed 3x3 output conv over C
    const int64_t max_cin = C > 3 ? C : 3;
    const int64_t col_width = std::max(K * K * max_cin, int64_t(9) * C);
    col = Tensor<T>({XY, col_width});
    dcol = Tensor<T>({XY, col_width});
    if (c.use_vasc) {
      wcol = Tensor<T>({K * K * C, C});
      dwcol = Tensor<T>({K * K * C, C});
      dkvec = Tensor<T>({C * C * K * K});
    }
    da = Tensor<T>({UV, XY, C});
    ds_all = Tensor<T>({UV, XY, C});
    dnext = Tensor<T>({UV, XY, C});
    dcur = Tensor<T>({UV, XY, C});
    dplane_c = Tensor<T>({XY, C});
    dvec_ck = Tensor<T>({CK});
    dvec_ck2 = Tensor<T>({CK});
    dvec_c = Tensor<T>({C});
    dfva = Tensor<T>({UV, XY, C});
    if (c.use_dpva) {
      dfndp = Tensor<T>({UV, XY, N});
      dfdp = Tensor<T>({UV, XY, N});
      dbig = Tensor<T>({XY, N * C});
      dbig2 = Tensor<T>({XY, N * C});
      dh = Tensor<T>({XY, H});
      dfape = Tensor<T>({XY, c.use_ape ? N + 2 : N});
    }
  }
};

namespace detail {

template <class T>
void check_lf_input(const ModelConfig& cfg, const Tensor<T>& input, const char* what) {
  if (input.rank() != 5)
    throw ShapeError(std::string(what) + ": expected (U,V,X,Y,3) input, got " + input.shape_str());
  if (input.dim(0) != cfg.views_u || input.dim(1) != cfg.views_v)
    throw ShapeError(std::string(what) + ": view grid " + std::to_string(input.dim(0)) + "x" +
                     std::to_string(input.dim(1)) + " does not match the configured " +
                     std::to_string(cfg.views_u) + "x" + std::to_string(cfg.views_v));
  if (input.dim(4) != 3)
    throw ShapeError(std::string(what) + ": expected 3 input channels, got " +
                     std::to_string(input.dim(4)));
}

}  // namespace detail

// Training-mode forward: fills the workspace caches needed by backward().
template <class T>
void forward(const ModelParams<T>& p, const Tensor<T>& input, ModelWorkspace<T>& ws,
             Tensor<T>& output) {
  const ModelConfig& cfg = p.cfg;
  detail::check_lf_input(cfg, input, "forward");
  const int64_t X = input.dim(2), Y = input.dim(3);
  ws.ensure(cfg, X, Y);
  const int64_t C = cfg.channels, K = cfg.kernel, CK = cfg.gen_hidden;
  const int64_t N = cfg.n_views(), H = cfg.att_hidden(), XY = X * Y;
  const int64_t NC = N * C;

  std::memcpy(ws.x0.data(), input.data(), size_t(input.size()) * sizeof(T));

  // stem
  for (int64_t uv = 0; uv < N; ++uv) {
    conv_view_forward(ws.x0.data() + uv * XY * 3, p.stem.w.data(), p.stem.b.data(),
                      ws.f0.data() + uv * XY * C, ws.col.data(), X, Y, int64_t(3), C, int(K));
    relu_forward(ws.f0.data() + uv * XY * C, ws.f0.data() + uv * XY * C, XY * C);
  }
  std::memcpy(ws.cur.data(), ws.f0.data(), size_t(ws.f0.size()) * sizeof(T));

  // residual blocks
  for (int b = 0; b < cfg.num_blocks; ++b) {
    BlockCache<T>& cache = ws.blocks[size_t(b)];
    const BlockParams<T>& blk = p.blocks[size_t(b)];
    std::memcpy(cache.input.data(), ws.cur.data(), size_t(ws.cur.size()) * sizeof(T));
    for (int64_t uv = 0; uv < N; ++uv) {
      const T* in_plane = cache.input.data() + uv * XY * C;
      T* s_plane = cache.s.data() + uv * XY * C;
      if (cfg.use_vasc) {
        T* pooled = cache.pooled.data() + uv * C;
        T* h1 = cache.h1.data() + uv * CK;
        T* h2 = cache.h2.data() + uv * CK;
        T* kvec = cache.kernels.data() + uv * C * C * K * K;
        spatial_mean_forward(in_plane, pooled, XY, C);
        dense_forward(pooled, blk.gen.fc1.w.data(), blk.gen.fc1.b.data(), h1, int64_t(1), C, CK);
        relu_forward(h1, h1, CK);
        dense_forward(h1, blk.gen.fc2.w.data(), blk.gen.fc2.b.data(), h2, int64_t(1), CK, CK);
        relu_forward(h2, h2, CK);
        dense_forward(h2, blk.gen.kgen.w.data(), blk.gen.kgen.b.data(), kvec, int64_t(1), CK,
                      C * C * K * K);
        kernel_to_col(kvec, ws.wcol.data(), C, C, int(K));
        conv_view_forward(in_plane, ws.wcol.data(), (const T*)nullptr, s_plane, ws.col.data(), X, Y,
                          C, C, int(K));
      } else {
        conv_view_forward(in_plane, blk.static_w.data(), (const T*)nullptr, s_plane, ws.col.data(),
                          X, Y, C, C, int(K));
      }
      relu_forward(s_plane, s_plane, XY * C);
    }
    angular_conv_forward(cache.s.data(), blk.ang_w.data(), blk.ang_b.data(), cache.r.data(),
                         int64_t(cfg.views_u), int64_t(cfg.views_v), XY, C, C, cfg.angular_kernel);
    relu_forward(cache.r.data(), cache.r.data(), cache.r.size());
    T* cur = ws.cur.data();
    const T* in = cache.input.data();
    const T* r = cache.r.data();
    for (int64_t i = 0; i < ws.cur.size(); ++i) cur[i] = in[i] + r[i];
  }

  output = Tensor<T>({input.dim(0), input.dim(1), X, Y, int64_t(3)});
  std::memcpy(ws.head.input.data(), ws.cur.data(), size_t(ws.cur.size()) * sizeof(T));

  if (cfg.use_dpva) {
    HeadCache<T>& hc = ws.head;
    for (int64_t uv = 0; uv < N; ++uv) {
      dense_forward(hc.input.data() + uv * XY * C, p.head.dp.w.data(), p.head.dp.b.data(),
                    hc.fdp.data() + uv * XY * N, XY, C, N);
      relu_forward(hc.fdp.data() + uv * XY * N, hc.fdp.data() + uv * XY * N, XY * N);
    }
    reorganize_views_channels(hc.fdp.data(), hc.fndp.data(), N, XY);
    for (int64_t uv = 0; uv < N; ++uv) {
      const T* att_in = hc.fndp.data() + uv * XY * N;
      int64_t att_dim = N;
      if (cfg.use_ape) {
        const T uval = T(uv / cfg.views_v), vval = T(uv % cfg.views_v);
        T* ape = hc.fape.data() + uv * XY * (N + 2);
        const T* src = hc.fndp.data() + uv * XY * N;
        for (int64_t pix = 0; pix < XY; ++pix) {
          std::memcpy(ape + pix * (N + 2), src + pix * N, size_t(N) * sizeof(T));
          ape[pix * (N + 2) + N] = uval;
          ape[pix * (N + 2) + N + 1] = vval;
        }
        att_in = ape;
        att_dim = N + 2;
      }
      dense_forward(att_in, p.head.att1.w.data(), p.head.att1.b.data(), hc.h.data() + uv * XY * H,
                    XY, att_dim, H);
      relu_forward(hc.h.data() + uv * XY * H, hc.h.data() + uv * XY * H, XY * H);
      dense_forward(hc.h.data() + uv * XY * H, p.head.att2.w.data(), p.head.att2.b.data(),
                    hc.wdp.data() + uv * XY * NC, XY, H, NC);
      dense_forward(hc.input.data() + uv * XY * C, p.head.expand.w.data(), p.head.expand.b.data(),
                    hc.fve.data() + uv * XY * NC, XY, C, NC);
      relu_forward(hc.fve.data() + uv * XY * NC, hc.fve.data() + uv * XY * NC, XY * NC);
      fusion_forward(hc.fve.data() + uv * XY * NC, hc.wdp.data() + uv * XY * NC,
                     hc.fsharp.data() + uv * XY * C, XY, N, C);
      conv_view_forward(hc.fsharp.data() + uv * XY * C, p.head.out.w.data(), p.head.out.b.data(),
                        output.data() + uv * XY * 3, ws.col.data(), X, Y, C, int64_t(3), 3);
    }
  } else {
    for (int64_t uv = 0; uv < N; ++uv)
      conv_view_forward(ws.head.input.data() + uv * XY * C, p.head.out.w.data(),
                        p.head.out.b.data(), output.data() + uv * XY * 3, ws.col.data(), X, Y, C,
                        int64_t(3), 3);
  }

  if (cfg.global_residual) {
    T* o = output.data();
    const T* in = ws.x0.data();
    for (int64_t i = 0; i < output.size(); ++i) o[i] += in[i];
  }
}

// Backward through the cached forward. Parameter gradients accumulate into
// `grads` (same config, zeroed by the caller); dinput, when given, is
// overwritten with the input gradient.
template <class T>
void backward(const ModelParams<T>& p, ModelWorkspace<T>& ws, const Tensor<T>& doutput,
              ModelParams<T>& grads, Tensor<T>* dinput = nullptr) {
  const ModelConfig& cfg = p.cfg;
  detail::check_lf_input(cfg, doutput, "backward");
  if (!ws.ready || doutput.dim(2) != ws.X || doutput.dim(3) != ws.Y)
    throw ShapeError("backward: no cached forward matching this gradient shape");
  const int64_t X = ws.X, Y = ws.Y;
  const int64_t C = cfg.channels, K = cfg.kernel, CK = cfg.gen_hidden;
  const int64_t N = cfg.n_views(), H = cfg.att_hidden(), XY = X * Y;
  const int64_t NC = N * C;

  ws.dfva.set_zero();

  if (cfg.use_dpva) {
    HeadCache<T>& hc = ws.head;
    ws.dfndp.set_zero();
    for (int64_t uv = 0; uv < N; ++uv) {
      // output conv -> fused features
      ws.dplane_c.set_zero();
      conv_view_backward(doutput.data() + uv * XY * 3, hc.fsharp.data() + uv * XY * C,
                         p.head.out.w.data(), ws.dplane_c.data(), grads.head.out.w.data(),
                         grads.head.out.b.data(), ws.col.data(), ws.dcol.data(), X, Y, C,
                         int64_t(3), 3);
      // fusion -> expanded features and weights
      ws.dbig.set_zero();
      ws.dbig2.set_zero();
      fusion_backward(ws.dplane_c.data(), hc.fve.data() + uv * XY * NC,
                      hc.wdp.data() + uv * XY * NC, ws.dbig.data(), ws.dbig2.data(), XY, N, C);
      // expansion branch
      relu_mask_inplace(ws.dbig.data(), hc.fve.data() + uv * XY * NC, XY * NC);
      dense_backward(ws.dbig.data(), hc.input.data() + uv * XY * C, p.head.expand.w.data(),
                     ws.dfva.data() + uv * XY * C, grads.head.expand.w.data(),
                     grads.head.expand.b.data(), XY, C, NC);
      // attention branch
      ws.dh.set_zero();
      dense_backward(ws.dbig2.data(), hc.h.data() + uv * XY * H, p.head.att2.w.data(),
                     ws.dh.data(), grads.head.att2.w.data(), grads.head.att2.b.data(), XY, H, NC);
      relu_mask_inplace(ws.dh.data(), hc.h.data() + uv * XY * H, XY * H);
      const int64_t att_dim = cfg.use_ape ? N + 2 : N;
      const T* att_in = cfg.use_ape ? hc.fape.data() + uv * XY * (N + 2)
                                    : hc.fndp.data() + uv * XY * N;
      ws.dfape.set_zero();
      dense_backward(ws.dh.data(), att_in, p.head.att1.w.data(), ws.dfape.data(),
                     grads.head.att1.w.data(), grads.head.att1.b.data(), XY, att_dim, H);
      // drop the gradients of the two constant coordinate channels
      T* dst = ws.dfndp.data() + uv * XY * N;
      const T* src = ws.dfape.data();
      for (int64_t pix = 0; pix < XY; ++pix)
        for (int64_t n = 0; n < N; ++n) dst[pix * N + n] += src[pix * att_dim + n];
    }
    // reorganization is a fixed permutation and its own adjoint
    reorganize_views_channels(ws.dfndp.data(), ws.dfdp.data(), N, XY);
    for (int64_t uv = 0; uv < N; ++uv) {
      relu_mask_inplace(ws.dfdp.data() + uv * XY * N, ws.head.fdp.data() + uv * XY * N, XY * N);
      dense_backward(ws.dfdp.data() + uv * XY * N, ws.head.input.data() + uv * XY * C,
                     p.head.dp.w.data(), ws.dfva.data() + uv * XY * C, grads.head.dp.w.data(),
                     grads.head.dp.b.data(), XY, C, N);
    }
  } else {
    for (int64_t uv = 0; uv < N; ++uv)
      conv_view_backward(doutput.data() + uv * XY * 3, ws.head.input.data() + uv * XY * C,
                         p.head.out.w.data(), ws.dfva.data() + uv * XY * C,
                         grads.head.out.w.data(), grads.head.out.b.data(), ws.col.data(),
                         ws.dcol.data(), X, Y, C, int64_t(3), 3);
  }

  std::memcpy(ws.dcur.data(), ws.dfva.data(), size_t(ws.dfva.size()) * sizeof(T));

  for (int b = cfg.num_blocks - 1; b >= 0; --b) {
    BlockCache<T>& cache = ws.blocks[size_t(b)];
    const BlockParams<T>& blk = p.blocks[size_t(b)];
    BlockParams<T>& gblk = grads.blocks[size_t(b)];
    // skip path
    std::memcpy(ws.dnext.data(), ws.dcur.data(), size_t(ws.dcur.size()) * sizeof(T));
    // relu before the residual add
    ws.da.set_zero();
    relu_backward(ws.dcur.data(), cache.r.data(), ws.da.data(), ws.da.size());
    // angular conv
    ws.ds_all.set_zero();
    angular_conv_backward(ws.da.data(), cache.s.data(), blk.ang_w.data(), ws.ds_all.data(),
                          gblk.ang_w.data(), gblk.ang_b.data(), int64_t(cfg.views_u),
                          int64_t(cfg.views_v), XY, C, C, cfg.angular_kernel);
    for (int64_t uv = 0; uv < N; ++uv) {
      T* ds_uv = ws.ds_all.data() + uv * XY * C;
      relu_mask_inplace(ds_uv, cache.s.data() + uv * XY * C, XY * C);
      const T* in_plane = cache.input.data() + uv * XY * C;
      if (cfg.use_vasc) {
        kernel_to_col(cache.kernels.data() + uv * C * C * K * K, ws.wcol.data(), C, C, int(K));
        ws.dwcol.set_zero();
        conv_view_backward(ds_uv, in_plane, ws.wcol.data(), ws.dnext.data() + uv * XY * C,
                           ws.dwcol.data(), (T*)nullptr, ws.col.data(), ws.dcol.data(), X, Y, C, C,
                           int(K));
        ws.dkvec.set_zero();
        col_to_kernel_add(ws.dwcol.data(), ws.dkvec.data(), C, C, int(K));
        // generator chain, single-row denses
        ws.dvec_ck.set_zero();
        dense_backward(ws.dkvec.data(), cache.h2.data() + uv * CK, blk.gen.kgen.w.data(),
                       ws.dvec_ck.data(), gblk.gen.kgen.w.data(), gblk.gen.kgen.b.data(),
                       int64_t(1), CK, C * C * K * K);
        relu_mask_inplace(ws.dvec_ck.data(), cache.h2.data() + uv * CK, CK);
        ws.dvec_ck2.set_zero();
        dense_backward(ws.dvec_ck.data(), cache.h1.data() + uv * CK, blk.gen.fc2.w.data(),
                       ws.dvec_ck2.data(), gblk.gen.fc2.w.data(), gblk.gen.fc2.b.data(),
                       int64_t(1), CK, CK);
        relu_mask_inplace(ws.dvec_ck2.data(), cache.h1.data() + uv * CK, CK);
        ws.dvec_c.set_zero();
        dense_backward(ws.dvec_ck2.data(), cache.pooled.data() + uv * C, blk.gen.fc1.w.data(),
                       ws.dvec_c.data(), gblk.gen.fc1.w.data(), gblk.gen.fc1.b.data(), int64_t(1),
                       C, CK);
        spatial_mean_backward(ws.dvec_c.data(), ws.dnext.data() + uv * XY * C, XY, C);
      } else {
        conv_view_backward(ds_uv, in_plane, blk.static_w.data(), ws.dnext.data() + uv * XY * C,
                           gblk.static_w.data(), (T*)nullptr, ws.col.data(), ws.dcol.data(), X, Y,
                           C, C, int(K));
      }
    }
    std::swap(ws.dcur, ws.dnext);
  }

  // stem
  if (dinput) {
    *dinput = Tensor<T>({int64_t(cfg.views_u), int64_t(cfg.views_v), X, Y, int64_t(3)});
  }
  for (int64_t uv = 0; uv < N; ++uv) {
    T* df0_uv = ws.dcur.data() + uv * XY * C;
    relu_mask_inplace(df0_uv, ws.f0.data() + uv * XY * C, XY * C);
    conv_view_backward(df0_uv, ws.x0.data() + uv * XY * 3, p.stem.w.data(),
                       dinput ? dinput->data() + uv * XY * 3 : (T*)nullptr, grads.stem.w.data(),
                       grads.stem.b.data(), ws.col.data(), ws.dcol.data(), X, Y, int64_t(3), C,
                       int(K));
  }
  if (dinput && cfg.global_residual) {
    T* d = dinput->data();
    const T* g = doutput.data();
    for (int64_t i = 0; i < dinput->size(); ++i) d[i] += g[i];
  }
}

// Inference forward without backward caches: bounded memory via in-place
// block updates and a pixel-chunked fusion head. Matches forward() output.
template <class T>
Tensor<T> forward_nocache(const ModelParams<T>& p, const Tensor<T>& input) {
  const ModelConfig& cfg = p.cfg;
  detail::check_lf_input(cfg, input, "forward");
  const int64_t X = input.dim(2), Y = input.dim(3);
  const int64_t C = cfg.channels, K = cfg.kernel, CK = cfg.gen_hidden;
  const int64_t N = cfg.n_views(), H = cfg.att_hidden(), XY = X * Y;
  const int64_t NC = N * C;
  const int64_t max_cin = C > 3 ? C : 3;

  Tensor<T> cur({N, XY, C}), s({N, XY, C}), r({N, XY, C});
  // shared im2col scratch; the output conv is a fixed 3x3 over C channels
  Tensor<T> col({XY, std::max(K * K * max_cin, int64_t(9) * C)});
  Tensor<T> wcol, kvec_buf, pooled({C}), h1({CK}), h2({CK});
  if (cfg.use_vasc) {
    wcol = Tensor<T>({K * K * C, C});
    kvec_buf = Tensor<T>({C * C * K * K});
  }

  for (int64_t uv = 0; uv < N; ++uv) {
    conv_view_forward(input.data() + uv * XY * 3, p.stem.w.data(), p.stem.b.data(),
                      cur.data() + uv * XY * C, col.data(), X, Y, int64_t(3), C, int(K));
    relu_forward(cur.data() + uv * XY * C, cur.data() + uv * XY * C, XY * C);
  }

  for (int b = 0; b < cfg.num_blocks; ++b) {
    const BlockParams<T>& blk = p.blocks[size_t(b)];
    for (int64_t uv = 0; uv < N; ++uv) {
      const T* in_plane = cur.data() + uv * XY * C;
      T* s_plane = s.data() + uv * XY * C;
      if (cfg.use_vasc) {
        spatial_mean_forward(in_plane, pooled.data(), XY, C);
        dense_forward(pooled.data(), blk.gen.fc1.w.data(), blk.gen.fc1.b.data(), h1.data(),
                      int64_t(1), C, CK);
        relu_forward(h1.data(), h1.data(), CK);
        dense_forward(h1.data(), blk.gen.fc2.w.data(), blk.gen.fc2.b.data(), h2.data(), int64_t(1),
                      CK, CK);
        relu_forward(h2.data(), h2.data(), CK);
        dense_forward(h2.data(), blk.gen.kgen.w.data(), blk.gen.kgen.b.data(), kvec_buf.data(),
                      int64_t(1), CK, C * C * K * K);
        kernel_to_col(kvec_buf.data(), wcol.data(), C, C, int(K));
        conv_view_forward(in_plane, wcol.data(), (const T*)nullptr, s_plane, col.data(), X, Y, C, C,
                          int(K));
      } else {
        conv_view_forward(in_plane, blk.static_w.data(), (const T*)nullptr, s_plane, col.data(), X,
                          Y, C, C, int(K));
      }
      relu_forward(s_plane, s_plane, XY * C);
    }
    angular_conv_forward(s.data(), blk.ang_w.data(), blk.ang_b.data(), r.data(),
                         int64_t(cfg.views_u), int64_t(cfg.views_v), XY, C, C, cfg.angular_kernel);
    relu_forward(r.data(), r.data(), r.size());
    T* c = cur.data();
    const T* rr = r.data();
    for (int64_t i = 0; i < cur.size(); ++i) c[i] += rr[i];
  }

  Tensor<T> output({input.dim(0), input.dim(1), X, Y, int64_t(3)});

  if (cfg.use_dpva) {
    Tensor<T> fdp({N, XY, N}), fndp({N, XY, N});
    for (int64_t uv = 0; uv < N; ++uv) {
      dense_forward(cur.data() + uv * XY * C, p.head.dp.w.data(), p.head.dp.b.data(),
                    fdp.data() + uv * XY * N, XY, C, N);
      relu_forward(fdp.data() + uv * XY * N, fdp.data() + uv * XY * N, XY * N);
    }
    reorganize_views_channels(fdp.data(), fndp.data(), N, XY);
    fdp = Tensor<T>();  // release

    const int64_t chunk = XY < 16384 ? XY : 16384;
    const int64_t att_dim = cfg.use_ape ? N + 2 : N;
    Tensor<T> ape_c({chunk, att_dim}), h_c({chunk, H}), wdp_c({chunk, NC}), fve_c({chunk, NC});
    Tensor<T> fsharp({XY, C});
    for (int64_t uv = 0; uv < N; ++uv) {
      const T uval = T(uv / cfg.views_v), vval = T(uv % cfg.views_v);
      for (int64_t p0 = 0; p0 < XY; p0 += chunk) {
        const int64_t m = (p0 + chunk <= XY) ? chunk : XY - p0;
        const T* att_in = fndp.data() + (uv * XY + p0) * N;
        if (cfg.use_ape) {
          for (int64_t pix = 0; pix < m; ++pix) {
            std::memcpy(ape_c.data() + pix * att_dim, fndp.data() + (uv * XY + p0 + pix) * N,
                        size_t(N) * sizeof(T));
            ape_c.data()[pix * att_dim + N] = uval;
            ape_c.data()[pix * att_dim + N + 1] = vval;
          }
          att_in = ape_c.data();
        }
        dense_forward(att_in, p.head.att1.w.data(), p.head.att1.b.data(), h_c.data(), m, att_dim,
                      H);
        relu_forward(h_c.data(), h_c.data(), m * H);
        dense_forward(h_c.data(), p.head.att2.w.data(), p.head.att2.b.data(), wdp_c.data(), m, H,
                      NC);
        dense_forward(cur.data() + (uv * XY + p0) * C, p.head.expand.w.data(),
                      p.head.expand.b.data(), fve_c.data(), m, C, NC);
        relu_forward(fve_c.data(), fve_c.data(), m * NC);
        fusion_forward(fve_c.data(), wdp_c.data(), fsharp.data() + p0 * C, m, N, C);
      }
      conv_view_forward(fsharp.data(), p.head.out.w.data(), p.head.out.b.data(),
                        output.data() + uv * XY * 3, col.data(), X, Y, C, int64_t(3), 3);
    }
  } else {
    for (int64_t uv = 0; uv < N; ++uv)
      conv_view_forward(cur.data() + uv * XY * C, p.head.out.w.data(), p.head.out.b.data(),
                        output.data() + uv * XY * 3, col.data(), X, Y, C, int64_t(3), 3);
  }

  if (cfg.global_residual) {
    T* o = output.data();
    const T* in = input.data();
    for (int64_t i = 0; i < output.size(); ++i) o[i] += in[i];
  }
  return output;
}

}  // namespace lfdeblur
