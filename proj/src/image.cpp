#include "digitour/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>

#include "digitour/error.hpp"

namespace digitour {

RasterImage::RasterImage(int width, int height, Rgb fill_color)
    : width_(width), height_(height) {
  if (width < 0 || height < 0) throw InvalidImage("negative image size");
  pixels_.resize(static_cast<std::size_t>(width) * height * 3);
  fill(fill_color);
}

void RasterImage::fill(Rgb c) {
  for (std::size_t i = 0; i < pixels_.size(); i += 3) {
    pixels_[i] = c.r;
    pixels_[i + 1] = c.g;
    pixels_[i + 2] = c.b;
  }
}

RasterImage crop(const RasterImage& image, int x0, int y0, int x1, int y1) {
  x0 = std::clamp(x0, 0, image.width());
  x1 = std::clamp(x1, 0, image.width());
  y0 = std::clamp(y0, 0, image.height());
  y1 = std::clamp(y1, 0, image.height());
  RasterImage out(std::max(0, x1 - x0), std::max(0, y1 - y0));
  for (int y = y0; y < y1; ++y) {
    std::copy_n(image.row(y) + x0 * 3, (x1 - x0) * 3, out.row(y - y0));
  }
  return out;
}

RasterImage rotate_180(const RasterImage& image) {
  RasterImage out(image.width(), image.height());
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      out.set(image.width() - 1 - x, image.height() - 1 - y, image.at(x, y));
    }
  }
  return out;
}

std::pair<int, int> png_dimensions(const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw IoError("cannot read PNG " + path.string() + ": " + png.message);
  }
  const std::pair<int, int> size{static_cast<int>(png.width), static_cast<int>(png.height)};
  png_image_free(&png);
  return size;
}

RasterImage read_png(const std::filesystem::path& path) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw IoError("cannot read PNG " + path.string() + ": " + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  RasterImage image(static_cast<int>(png.width), static_cast<int>(png.height));
  if (!png_image_finish_read(&png, nullptr, image.pixels().data(), 0,
                             nullptr)) {
    png_image_free(&png);
    throw IoError("cannot decode PNG " + path.string() + ": " + png.message);
  }
  return image;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

}  // namespace

void write_png(const RasterImage& image, const std::filesystem::path& path) {
  if (image.empty()) throw InvalidImage("cannot write an empty image");
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError("cannot open " + path.string() + " for writing");

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw IoError("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed writing " + path.string());
  }
  png_init_io(png, file.get());
  // Level 3 keeps dataset generation fast; output is still deterministic.
  png_set_compression_level(png, 3);
  png_set_IHDR(png, info, image.width(), image.height(), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < image.height(); ++y) {
    png_write_row(png, const_cast<png_bytep>(image.row(y)));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

double psnr(const RasterImage& a, const RasterImage& b, int row_begin,
            int row_end) {
  if (a.width() != b.width() || a.height() != b.height()) {
    throw InvalidImage("psnr: image sizes differ");
  }
  row_begin = std::clamp(row_begin, 0, a.height());
  row_end = std::clamp(row_end, row_begin, a.height());
  double sse = 0.0;
  std::size_t n = 0;
  for (int y = row_begin; y < row_end; ++y) {
    const std::uint8_t* pa = a.row(y);
    const std::uint8_t* pb = b.row(y);
    for (int i = 0; i < a.width() * 3; ++i) {
      const double d = static_cast<double>(pa[i]) - pb[i];
      sse += d * d;
    }
    n += static_cast<std::size_t>(a.width()) * 3;
  }
  if (n == 0) throw InvalidImage("psnr: empty row range");
  const double mse = sse / static_cast<double>(n);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

}  // namespace digitour
