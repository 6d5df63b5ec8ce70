#include "nor/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "nor/common.hpp"

namespace nor {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

ImageU8 read_png(const std::string& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  NOR_REQUIRE(fp != nullptr, "cannot open image ", path);

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  NOR_REQUIRE(png != nullptr, "png_create_read_struct failed for ", path);
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    fail(cat("png_create_info_struct failed for ", path));
  }
  // libpng reports errors via longjmp into this frame.
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(cat("corrupt PNG ", path));
  }

  png_init_io(png, fp.get());
  png_read_info(png, info);

  png_set_palette_to_rgb(png);
  png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  png_set_gray_to_rgb(png);
  png_read_update_info(png, info);

  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  NOR_REQUIRE(png_get_channels(png, info) == 3, "PNG ", path, " did not normalize to RGB");

  ImageU8 img;
  img.width = w;
  img.height = h;
  img.rgb.resize(static_cast<std::size_t>(3) * w * h);
  std::vector<png_bytep> rows(static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y)
    rows[static_cast<std::size_t>(y)] = img.rgb.data() + static_cast<std::size_t>(y) * w * 3;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_png(const ImageU8& img, const std::string& path) {
  NOR_REQUIRE(img.width > 0 && img.height > 0 &&
                  img.rgb.size() == static_cast<std::size_t>(3) * img.width * img.height,
              "malformed image buffer for ", path);
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  NOR_REQUIRE(fp != nullptr, "cannot create image ", path);

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  NOR_REQUIRE(png != nullptr, "png_create_write_struct failed for ", path);
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    fail(cat("png_create_info_struct failed for ", path));
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(cat("PNG write failed for ", path));
  }

  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width),
               static_cast<png_uint_32>(img.height), 8, PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_const_bytep> rows(static_cast<std::size_t>(img.height));
  for (int y = 0; y < img.height; ++y)
    rows[static_cast<std::size_t>(y)] =
        img.rgb.data() + static_cast<std::size_t>(y) * img.width * 3;
  png_write_rows(png, const_cast<png_bytepp>(rows.data()),
                 static_cast<png_uint_32>(img.height));
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

ImageU8 bilinear_resize(const ImageU8& img, int out_w, int out_h) {
  NOR_REQUIRE(out_w > 0 && out_h > 0, "resize to non-positive size");
  if (img.width == out_w && img.height == out_h) return img;
  ImageU8 out;
  out.width = out_w;
  out.height = out_h;
  out.rgb.resize(static_cast<std::size_t>(3) * out_w * out_h);
  // Half-pixel-centered sampling, edge clamped.
  const double sx = static_cast<double>(img.width) / out_w;
  const double sy = static_cast<double>(img.height) / out_h;
  for (int y = 0; y < out_h; ++y) {
    double fy = (y + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(img.height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < out_w; ++x) {
      double fx = (x + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(img.width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = (1.0 - wx) * img.at(y0, x0, c) + wx * img.at(y0, x1, c);
        const double bot = (1.0 - wx) * img.at(y1, x0, c) + wx * img.at(y1, x1, c);
        const double v = (1.0 - wy) * top + wy * bot;
        out.at(y, x, c) = static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 255.0)));
      }
    }
  }
  return out;
}

Tensor load_image_tensor(const std::string& path, int size) {
  ImageU8 img = bilinear_resize(read_png(path), size, size);
  std::vector<double> data(static_cast<std::size_t>(3) * size * size);
  const std::size_t plane = static_cast<std::size_t>(size) * size;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x)
      for (int c = 0; c < 3; ++c)
        data[c * plane + static_cast<std::size_t>(y) * size + x] = img.at(y, x, c) / 255.0;
  return Tensor::from({3, size, size}, std::move(data));
}

}  // namespace nor
