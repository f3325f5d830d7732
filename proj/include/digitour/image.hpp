#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

namespace digitour {

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// 8-bit RGB raster, row-major, no padding between rows.
class RasterImage {
 public:
  RasterImage() = default;
  RasterImage(int width, int height, Rgb fill = {});

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return width_ == 0 || height_ == 0; }

  Rgb at(int x, int y) const {
    const std::uint8_t* p = &pixels_[offset(x, y)];
    return {p[0], p[1], p[2]};
  }
  void set(int x, int y, Rgb c) {
    std::uint8_t* p = &pixels_[offset(x, y)];
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
  }

  std::uint8_t* row(int y) { return pixels_.data() + offset(0, y); }
  const std::uint8_t* row(int y) const { return pixels_.data() + offset(0, y); }

  std::span<std::uint8_t> pixels() { return pixels_; }
  std::span<const std::uint8_t> pixels() const { return pixels_; }

  void fill(Rgb c);

  friend bool operator==(const RasterImage&, const RasterImage&) = default;

 private:
  std::size_t offset(int x, int y) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
            static_cast<std::size_t>(x)) *
           3;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

// Axis-aligned sub-image copy; the rectangle is clamped to the image.
RasterImage crop(const RasterImage& image, int x0, int y0, int x1, int y1);

RasterImage rotate_180(const RasterImage& image);

// Throws IoError on failure. Alpha is dropped on read; gray is expanded.
RasterImage read_png(const std::filesystem::path& path);
// Width and height from the header, without decoding pixels.
std::pair<int, int> png_dimensions(const std::filesystem::path& path);
void write_png(const RasterImage& image, const std::filesystem::path& path);

// Peak signal-to-noise ratio in dB over the rows [row_begin, row_end).
// Returns +inf for identical inputs.
double psnr(const RasterImage& a, const RasterImage& b, int row_begin,
            int row_end);

}  // namespace digitour
