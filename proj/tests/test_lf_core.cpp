#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "lfdeblur/error.hpp"
#include "lfdeblur/image.hpp"
#include "lfdeblur/light_field.hpp"
#include "lfdeblur/png_io.hpp"
#include "lfdeblur/rng.hpp"
#include "test_support.hpp"

using namespace lfdeblur;
using namespace lfdeblur::testsup;

TEST_SUITE("lf_core") {

TEST_CASE("tensor indexing is row major with the last axis fastest") {
  Tensor<double> t({2, 3, 4});
  for (int64_t i = 0; i < t.size(); ++i) t.data()[i] = double(i);
  CHECK(t.size() == 24);
  CHECK(t.rank() == 3);
  CHECK(t(0, 0, 0) == 0.0);
  CHECK(t(0, 0, 3) == 3.0);
  CHECK(t(0, 1, 0) == 4.0);
  CHECK(t(1, 0, 0) == 12.0);
  CHECK(t(1, 2, 3) == 23.0);
  t.reshape({6, 4});
  CHECK(t(5, 3) == 23.0);
  CHECK_THROWS_AS(t.reshape({5, 5}), ShapeError);
}

TEST_CASE("rng streams are deterministic and stateless across saves") {
  DetRng a(42), b(42), c(43);
  bool diverged = false;
  for (int i = 0; i < 100; ++i) {
    const uint64_t va = a.next_u64();
    CHECK(va == b.next_u64());
    if (va != c.next_u64()) diverged = true;
  }
  CHECK(diverged);

  for (double lo : {0.0, -3.0})
    for (int i = 0; i < 1000; ++i) {
      const double u = a.uniform(lo, lo + 5.0);
      CHECK(u >= lo);
      CHECK(u < lo + 5.0);
    }
  for (int i = 0; i < 1000; ++i) CHECK(a.below(7) < 7);

  // save/restore must capture the cached Box-Muller draw: save after an odd
  // number of normal() calls, so the cache is hot.
  DetRng g(7);
  (void)g.normal();
  const DetRng::State st = g.save();
  std::vector<double> ahead;
  for (int i = 0; i < 5; ++i) ahead.push_back(g.normal());
  g.restore(st);
  for (int i = 0; i < 5; ++i) CHECK(g.normal() == ahead[size_t(i)]);

  CHECK(mix_seed(1, 0) != mix_seed(1, 1));
  CHECK(mix_seed(1, 0) != mix_seed(2, 0));
  CHECK(mix_seed(5, 9) == mix_seed(5, 9));
}

TEST_CASE("light field construction validates rank and finiteness") {
  CHECK_THROWS_AS(LightField(Tensor<double>({5, 5, 8, 8})), ShapeError);
  Tensor<double> bad({2, 2, 4, 4, 3});
  bad.fill(0.5);
  bad(1, 1, 2, 2, 0) = std::nan("");
  CHECK_THROWS_AS(LightField(std::move(bad)), Error);
  const LightField ok = LightField::solid(2, 3, 4, 5, 3, 0.25);
  CHECK(ok.U() == 2);
  CHECK(ok.V() == 3);
  CHECK(ok.X() == 4);
  CHECK(ok.Y() == 5);
  CHECK(ok.C() == 3);
  CHECK(ok.at(1, 2, 3, 4, 2) == 0.25);
}

TEST_CASE("sub-aperture extraction") {
  const LightField lf = LightField::solid(5, 5, 32, 48, 3, 0.5);
  const Image v = lf.sai(2, 3);
  CHECK(v.dim(0) == 32);
  CHECK(v.dim(1) == 48);
  CHECK(v.dim(2) == 3);
  for (int64_t i = 0; i < v.size(); ++i) CHECK(v.data()[i] == 0.5);

  DetRng rng(11);
  const LightField r = random_lf(rng, 3, 4, 8, 9);
  for (int64_t u = 0; u < 3; ++u)
    for (int64_t vv = 0; vv < 4; ++vv) {
      const Image s = r.sai(u, vv);
      for (int64_t x = 0; x < 8; ++x)
        for (int64_t y = 0; y < 9; ++y)
          for (int64_t c = 0; c < 3; ++c) CHECK(s(x, y, c) == r.at(u, vv, x, y, c));
    }
  CHECK_THROWS_AS(lf.sai(5, 0), IndexError);
  CHECK_THROWS_AS(lf.sai(0, -1), IndexError);
}

TEST_CASE("micro-lens extraction matches sub-aperture views pointwise") {
  const LightField c = LightField::solid(5, 5, 16, 16, 3, 0.25);
  const Image m = c.micro_lens(7, 7);
  CHECK(m.dim(0) == 5);
  CHECK(m.dim(1) == 5);
  CHECK(m.dim(2) == 3);
  for (int64_t i = 0; i < m.size(); ++i) CHECK(m.data()[i] == 0.25);

  DetRng rng(3);
  const LightField r = random_lf(rng, 4, 5, 10, 12);
  for (int trial = 0; trial < 100; ++trial) {
    const int64_t u = int64_t(rng.below(4)), v = int64_t(rng.below(5));
    const int64_t x = int64_t(rng.below(10)), y = int64_t(rng.below(12));
    const Image ml = r.micro_lens(x, y);
    const Image sv = r.sai(u, v);
    for (int64_t ch = 0; ch < 3; ++ch) CHECK(ml(u, v, ch) == sv(x, y, ch));
  }
  CHECK_THROWS_AS(r.micro_lens(10, 0), IndexError);
}

TEST_CASE("epi slices sample the documented coordinates") {
  DetRng rng(21);
  const LightField r = random_lf(rng, 5, 5, 64, 48);

  const Image eh = epi(r, EpiOrientation::Horizontal, 2, 10);
  CHECK(eh.dim(0) == 5);   // varying v
  CHECK(eh.dim(1) == 64);  // varying x
  CHECK(eh.dim(2) == 3);
  for (int64_t v = 0; v < 5; ++v)
    for (int64_t x = 0; x < 64; ++x)
      for (int64_t c = 0; c < 3; ++c) CHECK(eh(v, x, c) == r.at(2, v, x, 10, c));

  const Image ev = epi(r, EpiOrientation::Vertical, 3, 20);
  CHECK(ev.dim(0) == 5);   // varying u
  CHECK(ev.dim(1) == 48);  // varying y
  for (int64_t u = 0; u < 5; ++u)
    for (int64_t y = 0; y < 48; ++y)
      for (int64_t c = 0; c < 3; ++c) CHECK(ev(u, y, c) == r.at(u, 3, 20, y, c));

  const LightField flat = LightField::solid(5, 5, 16, 16, 3, 0.5);
  const Image ef = epi(flat, EpiOrientation::Horizontal, 0, 0);
  for (int64_t i = 0; i < ef.size(); ++i) CHECK(ef.data()[i] == 0.5);

  CHECK_THROWS_AS(epi(r, EpiOrientation::Horizontal, 5, 0), IndexError);
  CHECK_THROWS_AS(epi(r, EpiOrientation::Vertical, 0, 64), IndexError);
}

TEST_CASE("epi rows of a shifted-copies field are exact integer-slope shifts") {
  DetRng rng(5);
  const int64_t d = 2;
  const LightField lf = shifted_copies_lf(rng, 5, 5, 16, 16, d);
  auto wrap = [](int64_t i, int64_t n) { return ((i % n) + n) % n; };

  // horizontal epi: row v is row 0 shifted by v*d in x
  const Image eh = epi(lf, EpiOrientation::Horizontal, 1, 6);
  for (int64_t v = 0; v < 5; ++v)
    for (int64_t x = 0; x < 16; ++x)
      for (int64_t c = 0; c < 3; ++c) CHECK(eh(v, x, c) == eh(0, wrap(x - v * d, 16), c));

  // vertical epi: row u is row 0 shifted by u*d in y
  const Image ev = epi(lf, EpiOrientation::Vertical, 2, 9);
  for (int64_t u = 0; u < 5; ++u)
    for (int64_t y = 0; y < 16; ++y)
      for (int64_t c = 0; c < 3; ++c) CHECK(ev(u, y, c) == ev(0, wrap(y - u * d, 16), c));
}

TEST_CASE("crop keeps views and cuts the spatial window") {
  DetRng rng(9);
  const LightField r = random_lf(rng, 5, 5, 200, 200);
  const LightField c = r.crop(10, 20, 64, 64);
  CHECK(c.U() == 5);
  CHECK(c.V() == 5);
  CHECK(c.X() == 64);
  CHECK(c.Y() == 64);
  CHECK(c.C() == 3);
  for (int trial = 0; trial < 200; ++trial) {
    const int64_t u = int64_t(rng.below(5)), v = int64_t(rng.below(5));
    const int64_t x = int64_t(rng.below(64)), y = int64_t(rng.below(64));
    CHECK(c.at(u, v, x, y, 0) == r.at(u, v, 10 + x, 20 + y, 0));
  }
  const LightField full = r.crop(0, 0, 200, 200);
  CHECK(bit_equal(full.data(), r.data()));
  CHECK_THROWS_AS(r.crop(150, 0, 64, 64), IndexError);
  CHECK_THROWS_AS(r.crop(0, -1, 64, 64), IndexError);
  CHECK_THROWS_AS(r.crop(0, 0, 0, 64), IndexError);
}

TEST_CASE("flips pair a spatial reversal with the matching angular reversal") {
  DetRng rng(13);
  const LightField r = random_lf(rng, 3, 4, 6, 7);

  const LightField h = flip_horizontal(r);
  for (int64_t u = 0; u < 3; ++u)
    for (int64_t v = 0; v < 4; ++v)
      for (int64_t x = 0; x < 6; ++x)
        for (int64_t y = 0; y < 7; ++y)
          CHECK(h.at(u, v, x, y, 1) == r.at(2 - u, v, x, 6 - y, 1));

  const LightField vf = flip_vertical(r);
  for (int64_t u = 0; u < 3; ++u)
    for (int64_t v = 0; v < 4; ++v)
      for (int64_t x = 0; x < 6; ++x)
        for (int64_t y = 0; y < 7; ++y)
          CHECK(vf.at(u, v, x, y, 2) == r.at(u, 3 - v, 5 - x, y, 2));

  CHECK(bit_equal(flip_horizontal(h).data(), r.data()));
  CHECK(bit_equal(flip_vertical(vf).data(), r.data()));
}

TEST_CASE("rotate90 definition, periodicity, and squareness requirement") {
  DetRng rng(17);
  const LightField r = random_lf(rng, 4, 4, 8, 8);
  const LightField q = rotate90(r);
  for (int64_t u = 0; u < 4; ++u)
    for (int64_t v = 0; v < 4; ++v)
      for (int64_t x = 0; x < 8; ++x)
        for (int64_t y = 0; y < 8; ++y)
          for (int64_t c = 0; c < 3; ++c)
            CHECK(q.at(u, v, x, y, c) == r.at(v, 3 - u, y, 7 - x, c));

  const LightField q4 = rotate90(rotate90(rotate90(q)));
  CHECK(bit_equal(q4.data(), r.data()));

  const LightField rect = random_lf(rng, 3, 3, 8, 10);
  CHECK_THROWS_AS(rotate90(rect), ShapeError);
  const LightField rectang = random_lf(rng, 3, 4, 8, 8);
  CHECK_THROWS_AS(rotate90(rectang), ShapeError);
}

TEST_CASE("slicers and transforms leave the source untouched") {
  DetRng rng(29);
  const LightField r = random_lf(rng, 3, 3, 8, 8);
  Tensor<double> before = r.data();
  (void)r.sai(1, 2);
  (void)r.micro_lens(3, 4);
  (void)epi(r, EpiOrientation::Horizontal, 0, 0);
  (void)r.crop(1, 1, 4, 4);
  (void)flip_horizontal(r);
  (void)rotate90(r);
  CHECK(bit_equal(before, r.data()));
}

TEST_CASE("png round trip is quantization-exact") {
  TempDir td;
  DetRng rng(31);

  const Image img = random_image(rng, 20, 30);
  const std::string path = td.sub("img.png");
  write_png(path, img);
  const Image back = read_png(path);
  CHECK(back.dim(0) == 20);
  CHECK(back.dim(1) == 30);
  CHECK(back.dim(2) == 3);
  CHECK(max_abs_diff(img, back) <= 0.5 / 255.0 + 1e-12);

  // values already on the 8-bit grid survive exactly
  Image q = img;
  for (int64_t i = 0; i < q.size(); ++i)
    q.data()[i] = double(int64_t(q.data()[i] * 255.0 + 0.5)) / 255.0;
  write_png(path, q);
  CHECK(bit_equal(q, read_png(path)));

  CHECK_THROWS_AS(read_png(td.sub("absent.png")), IoError);
}

TEST_CASE("light field directory io round trips and validates the grid") {
  TempDir td;
  DetRng rng(37);
  const LightField lf = random_lf(rng, 3, 4, 10, 12, /*quantized=*/true);
  const std::string dir = td.sub("scene");
  save_light_field(lf, dir);
  CHECK(std::filesystem::exists(dir + "/view_00_00.png"));
  CHECK(std::filesystem::exists(dir + "/view_02_03.png"));
  const LightField back = load_light_field(dir);
  CHECK(back.U() == 3);
  CHECK(back.V() == 4);
  CHECK(bit_equal(back.data(), lf.data()));

  SUBCASE("a missing view is reported by name") {
    std::filesystem::remove(dir + "/view_02_03.png");
    try {
      load_light_field(dir);
      FAIL("expected IoError");
    } catch (const IoError& e) {
      CHECK(std::string(e.what()).find("view_02_03") != std::string::npos);
    }
  }

  SUBCASE("a size mismatch is reported with both sizes") {
    write_png(dir + "/view_01_02.png", random_image(rng, 9, 12));
    try {
      load_light_field(dir);
      FAIL("expected IoError");
    } catch (const IoError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("10x12") != std::string::npos);
      CHECK(msg.find("9x12") != std::string::npos);
    }
  }

  SUBCASE("an empty directory is rejected") {
    const std::string empty = td.sub("empty");
    std::filesystem::create_directories(empty);
    CHECK_THROWS_AS(load_light_field(empty), IoError);
  }
}

TEST_CASE("luminance and nearest upscale") {
  Image img({2, 2, 3});
  img.fill(0.0);
  img(0, 0, 0) = 1.0;  // pure red
  img(0, 1, 1) = 1.0;  // pure green
  img(1, 0, 2) = 1.0;  // pure blue
  const Image lum = luminance(img);
  CHECK(lum.dim(2) == 1);
  CHECK(lum(0, 0, 0) == doctest::Approx(0.299).epsilon(1e-12));
  CHECK(lum(0, 1, 0) == doctest::Approx(0.587).epsilon(1e-12));
  CHECK(lum(1, 0, 0) == doctest::Approx(0.114).epsilon(1e-12));

  const Image up = upscale_nearest(img, 3);
  CHECK(up.dim(0) == 6);
  CHECK(up.dim(1) == 6);
  for (int64_t x = 0; x < 6; ++x)
    for (int64_t y = 0; y < 6; ++y)
      for (int64_t c = 0; c < 3; ++c) CHECK(up(x, y, c) == img(x / 3, y / 3, c));
}

}  // TEST_SUITE
