#include "lfdeblur/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <sstream>

namespace lfdeblur {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void check_same_shape(const Tensor<double>& a, const Tensor<double>& b, const char* what) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(what) + ": shapes differ, " + a.shape_str() + " vs " +
                     b.shape_str());
}

// 11-tap Gaussian, sigma 1.5, normalized.
struct SsimWindow {
  static constexpr int kSize = 11;
  double k[kSize];
  SsimWindow() {
    double sum = 0;
    for (int i = 0; i < kSize; ++i) {
      const double d = double(i - kSize / 2);
      k[i] = std::exp(-d * d / (2.0 * 1.5 * 1.5));
      sum += k[i];
    }
    for (double& v : k) v /= sum;
  }
};

// Separable valid-mode Gaussian filter of an (X, Y) plane.
void gauss_valid(const std::vector<double>& in, int64_t X, int64_t Y, std::vector<double>& out) {
  static const SsimWindow w;
  const int n = SsimWindow::kSize;
  const int64_t Yv = Y - n + 1, Xv = X - n + 1;
  std::vector<double> tmp(size_t(X * Yv));
  for (int64_t x = 0; x < X; ++x)
    for (int64_t y = 0; y < Yv; ++y) {
      double acc = 0;
      for (int i = 0; i < n; ++i) acc += w.k[i] * in[size_t(x * Y + y + i)];
      tmp[size_t(x * Yv + y)] = acc;
    }
  out.assign(size_t(Xv * Yv), 0.0);
  for (int64_t x = 0; x < Xv; ++x)
    for (int64_t y = 0; y < Yv; ++y) {
      double acc = 0;
      for (int i = 0; i < n; ++i) acc += w.k[i] * tmp[size_t((x + i) * Yv + y)];
      out[size_t(x * Yv + y)] = acc;
    }
}

}  // namespace

double psnr(const Tensor<double>& pred, const Tensor<double>& gt) {
  check_same_shape(pred, gt, "psnr");
  if (pred.size() == 0) throw ShapeError("psnr: empty input");
  double mse = 0;
  const double* p = pred.data();
  const double* g = gt.data();
  for (int64_t i = 0; i < pred.size(); ++i) {
    const double d = p[i] - g[i];
    mse += d * d;
  }
  mse /= double(pred.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double psnr(const LightField& pred, const LightField& gt) { return psnr(pred.data(), gt.data()); }

double ssim_gray(const Image& pred, const Image& gt) {
  check_image(pred, "ssim");
  check_image(gt, "ssim");
  check_same_shape(pred, gt, "ssim");
  if (pred.dim(2) != 1) throw ShapeError("ssim: expected single-channel images");
  const int64_t X = pred.dim(0), Y = pred.dim(1);
  const int n = SsimWindow::kSize;
  if (X < n || Y < n)
    throw ShapeError("ssim: image " + std::to_string(X) + "x" + std::to_string(Y) +
                     " is smaller than the " + std::to_string(n) + "x" + std::to_string(n) +
                     " window");

  const int64_t count = X * Y;
  const size_t cnt = size_t(count);
  std::vector<double> p(cnt), g(cnt), pp(cnt), gg(cnt), pg(cnt);
  for (int64_t i = 0; i < count; ++i) {
    p[size_t(i)] = pred.data()[i];
    g[size_t(i)] = gt.data()[i];
    pp[size_t(i)] = p[size_t(i)] * p[size_t(i)];
    gg[size_t(i)] = g[size_t(i)] * g[size_t(i)];
    pg[size_t(i)] = p[size_t(i)] * g[size_t(i)];
  }
  std::vector<double> mu_p, mu_g, m_pp, m_gg, m_pg;
  gauss_valid(p, X, Y, mu_p);
  gauss_valid(g, X, Y, mu_g);
  gauss_valid(pp, X, Y, m_pp);
  gauss_valid(gg, X, Y, m_gg);
  gauss_valid(pg, X, Y, m_pg);

  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double acc = 0;
  for (size_t i = 0; i < mu_p.size(); ++i) {
    const double mp = mu_p[i], mg = mu_g[i];
    const double vp = m_pp[i] - mp * mp;
    const double vg = m_gg[i] - mg * mg;
    const double cov = m_pg[i] - mp * mg;
    acc += ((2.0 * mp * mg + c1) * (2.0 * cov + c2)) /
           ((mp * mp + mg * mg + c1) * (vp + vg + c2));
  }
  return acc / double(mu_p.size());
}

double ncc(const double* a, const double* b, int64_t n) {
  if (n <= 0) throw ShapeError("ncc: empty input");
  // A constant side has no variance to correlate; test the samples directly,
  // since the centered sum of squares of a constant only rounds to near zero.
  bool const_a = true, const_b = true;
  for (int64_t i = 1; i < n && (const_a || const_b); ++i) {
    const_a = const_a && a[i] == a[0];
    const_b = const_b && b[i] == b[0];
  }
  if (const_a || const_b) return kNan;
  double ma = 0, mb = 0;
  for (int64_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= double(n);
  mb /= double(n);
  double num = 0, da = 0, db = 0;
  for (int64_t i = 0; i < n; ++i) {
    const double xa = a[i] - ma, xb = b[i] - mb;
    num += xa * xb;
    da += xa * xa;
    db += xb * xb;
  }
  if (da == 0.0 || db == 0.0) return kNan;
  return num / std::sqrt(da * db);
}

double ncc(const Tensor<double>& pred, const Tensor<double>& gt) {
  check_same_shape(pred, gt, "ncc");
  return ncc(pred.data(), gt.data(), pred.size());
}

double lmse_gray(const Image& pred, const Image& gt) {
  check_image(pred, "lmse");
  check_image(gt, "lmse");
  check_same_shape(pred, gt, "lmse");
  if (pred.dim(2) != 1) throw ShapeError("lmse: expected single-channel images");
  const int64_t X = pred.dim(0), Y = pred.dim(1);
  constexpr int64_t kWin = 20, kStride = 10;
  if (X < kWin || Y < kWin)
    throw ShapeError("lmse: image " + std::to_string(X) + "x" + std::to_string(Y) +
                     " is smaller than one " + std::to_string(kWin) + "x" + std::to_string(kWin) +
                     " window");
  double num = 0, den = 0;
  for (int64_t x0 = 0; x0 + kWin <= X; x0 += kStride) {
    for (int64_t y0 = 0; y0 + kWin <= Y; y0 += kStride) {
      double pg = 0, ppw = 0, gsum = 0, ggsum = 0;
      for (int64_t x = x0; x < x0 + kWin; ++x)
        for (int64_t y = y0; y < y0 + kWin; ++y) {
          const double pv = pred(x, y, int64_t(0)), gv = gt(x, y, int64_t(0));
          pg += pv * gv;
          ppw += pv * pv;
          gsum += gv;
          ggsum += gv * gv;
        }
      const double alpha = ppw > 0.0 ? pg / ppw : 0.0;
      for (int64_t x = x0; x < x0 + kWin; ++x)
        for (int64_t y = y0; y < y0 + kWin; ++y) {
          const double r = alpha * pred(x, y, int64_t(0)) - gt(x, y, int64_t(0));
          num += r * r;
        }
      const double mean_g = gsum / double(kWin * kWin);
      den += ggsum - double(kWin * kWin) * mean_g * mean_g;
    }
  }
  if (den <= 0.0) return kNan;
  return num / den;
}

ViewMetrics evaluate_pair(const LightField& pred, const LightField& gt) {
  if (!pred.same_shape(gt))
    throw ShapeError("evaluate: shapes differ, " + pred.data().shape_str() + " vs " +
                     gt.data().shape_str());
  ViewMetrics sum;
  const int64_t views = pred.U() * pred.V();
  for (int64_t u = 0; u < pred.U(); ++u)
    for (int64_t v = 0; v < pred.V(); ++v) {
      const Image pv = pred.sai(u, v), gv = gt.sai(u, v);
      sum.psnr += psnr(pv, gv);
      sum.ncc += ncc(pv, gv);
      const Image pl = luminance(pv), gl = luminance(gv);
      sum.ssim += ssim_gray(pl, gl);
      sum.lmse += lmse_gray(pl, gl);
    }
  sum.psnr /= double(views);
  sum.ssim /= double(views);
  sum.ncc /= double(views);
  sum.lmse /= double(views);
  return sum;
}

MetricReport make_report(std::vector<SceneMetrics> scenes) {
  MetricReport rep;
  rep.scenes = std::move(scenes);
  if (rep.scenes.empty()) throw Error("make_report: no scenes");
  for (const SceneMetrics& s : rep.scenes) {
    rep.mean.psnr += s.metrics.psnr;
    rep.mean.ssim += s.metrics.ssim;
    rep.mean.ncc += s.metrics.ncc;
    rep.mean.lmse += s.metrics.lmse;
  }
  const double n = double(rep.scenes.size());
  rep.mean.psnr /= n;
  rep.mean.ssim /= n;
  rep.mean.ncc /= n;
  rep.mean.lmse /= n;
  return rep;
}

std::string report_to_text(const MetricReport& report) {
  std::ostringstream os;
  size_t name_w = 5;
  for (const SceneMetrics& s : report.scenes) name_w = std::max(name_w, s.name.size());
  char line[256];
  std::snprintf(line, sizeof(line), "%-*s %9s %7s %7s %8s\n", int(name_w), "scene", "psnr", "ssim",
                "ncc", "lmse");
  os << line;
  auto row = [&](const std::string& name, const ViewMetrics& m) {
    std::snprintf(line, sizeof(line), "%-*s %9.4f %7.4f %7.4f %8.5f\n", int(name_w), name.c_str(),
                  m.psnr, m.ssim, m.ncc, m.lmse);
    os << line;
  };
  for (const SceneMetrics& s : report.scenes) row(s.name, s.metrics);
  row("MEAN", report.mean);
  return os.str();
}

void save_report(const std::string& path, const MetricReport& report) {
  std::unique_ptr<FILE, int (*)(FILE*)> f(std::fopen(path.c_str(), "w"), std::fclose);
  if (!f) throw IoError("cannot open " + path + " for writing");
  const std::string text = report_to_text(report);
  if (std::fwrite(text.data(), 1, text.size(), f.get()) != text.size())
    throw IoError("short write to " + path);
}

}  // namespace lfdeblur
