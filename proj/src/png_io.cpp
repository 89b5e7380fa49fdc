#include "lfdeblur/png_io.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <csetjmp>
#include <memory>
#include <vector>

#include "lfdeblur/error.hpp"

namespace lfdeblur {

namespace {

struct FileCloser {
  void operator()(FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<FILE, FileCloser>;

void png_error_to_exception(png_structp png, png_const_charp msg) {
  // Jump back to the setjmp point; the message is recovered there.
  auto* slot = static_cast<std::string*>(png_get_error_ptr(png));
  if (slot) *slot = msg ? msg : "unknown libpng error";
  png_longjmp(png, 1);
}

void png_warning_ignore(png_structp, png_const_charp) {}

}  // namespace

Image read_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw IoError("cannot open " + path + " for reading");

  std::string errmsg;
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, &errmsg, png_error_to_exception, png_warning_ignore);
  if (!png) throw IoError("libpng init failed for " + path);
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng init failed for " + path);
  }

  std::vector<png_bytep> row_ptrs;
  std::vector<unsigned char> bytes;
  png_uint_32 width = 0, height = 0;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("failed to decode " + path + ": " + errmsg);
  }

  png_init_io(png, fp.get());
  png_read_info(png, info);
  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  int bit_depth = png_get_bit_depth(png, info);
  int color_type = png_get_color_type(png, info);

  // Normalize every input to 8-bit RGB.
  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type == PNG_COLOR_TYPE_GRAY || color_type == PNG_COLOR_TYPE_GRAY_ALPHA)
    png_set_gray_to_rgb(png);
  if (color_type & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS))
    png_set_strip_alpha(png);
  png_read_update_info(png, info);

  size_t rowbytes = png_get_rowbytes(png, info);
  bytes.assign(rowbytes * height, 0);
  row_ptrs.resize(height);
  for (png_uint_32 r = 0; r < height; ++r) row_ptrs[r] = bytes.data() + r * rowbytes;
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  if (rowbytes < size_t(width) * 3) throw IoError("unexpected row layout decoding " + path);

  Image img({int64_t(height), int64_t(width), 3});
  double* out = img.data();
  for (png_uint_32 x = 0; x < height; ++x) {
    const unsigned char* row = bytes.data() + x * rowbytes;
    for (png_uint_32 y = 0; y < width; ++y)
      for (int c = 0; c < 3; ++c) out[(int64_t(x) * width + y) * 3 + c] = row[y * 3 + c] / 255.0;
  }
  return img;
}

void write_png(const std::string& path, const Image& img) {
  check_image(img, "write_png");
  if (img.dim(2) != 3 && img.dim(2) != 1)
    throw ShapeError("write_png: need 1 or 3 channels, got " + img.shape_str());
  const int64_t X = img.dim(0), Y = img.dim(1), C = img.dim(2);

  std::vector<unsigned char> bytes(size_t(X) * size_t(Y) * 3);
  const double* p = img.data();
  for (int64_t i = 0; i < X * Y; ++i) {
    for (int64_t c = 0; c < 3; ++c) {
      double v = p[i * C + (C == 3 ? c : 0)];
      v = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
      bytes[size_t(i * 3 + c)] = (unsigned char)std::lround(v * 255.0);
    }
  }

  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw IoError("cannot open " + path + " for writing");

  std::string errmsg;
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, &errmsg, png_error_to_exception, png_warning_ignore);
  if (!png) throw IoError("libpng init failed for " + path);
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng init failed for " + path);
  }

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed to encode " + path + ": " + errmsg);
  }

  png_init_io(png, fp.get());
  png_set_IHDR(png, info, png_uint_32(Y), png_uint_32(X), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> row_ptrs(static_cast<size_t>(X));
  for (int64_t x = 0; x < X; ++x) row_ptrs[size_t(x)] = bytes.data() + size_t(x) * size_t(Y) * 3;
  png_write_image(png, row_ptrs.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace lfdeblur
