#pragma once

#include <array>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "digitour/image.hpp"

namespace digitour {

// h in degrees [0, 360), s and v in [0, 1].
struct HsvColor {
  double h = 0.0;
  double s = 0.0;
  double v = 0.0;
};

struct PaletteEntry {
  int digit;
  std::string_view name;
  HsvColor color;
  std::uint32_t reference_rgb_hex;  // 0xRRGGBB as printed next to the swatch
};

using TagPalette = std::array<PaletteEntry, 10>;

// The fixed digit -> color table; entry i is digit i.
const TagPalette& palette();

// Hexcone conversion, rounded half-up to 8 bits.
Rgb hsv_to_rgb(const HsvColor& c);
HsvColor rgb_to_hsv(Rgb c);
HsvColor rgb_to_hsv(double r, double g, double b);  // channels in [0, 1]

Rgb hex_to_rgb(std::uint32_t hex);

constexpr int kMinTagNumber = 1;
constexpr int kMaxTagNumber = 20;
constexpr int kMinTagSide = 64;

// Half-open pixel rectangle [x0, x1) x [y0, y1).
struct PixelRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool contains(double x, double y) const {
    return x >= x0 && x < x1 && y >= y0 && y < y1;
  }
  friend bool operator==(const PixelRect&, const PixelRect&) = default;
};

struct TagArt {
  int number = 0;
  RasterImage raster;
  int leading_digit = 0;
  int trailing_digit = 0;
  PixelRect leading_region;
  PixelRect trailing_region;
  double circle_center_x = 0.0;
  double circle_center_y = 0.0;
  double circle_radius = 0.0;
};

// Bi-colored tag: the top half carries the leading digit's color and the
// black locator disk, the bottom half the trailing digit's color. Numbers
// below 10 are zero-padded (leading digit 0). Throws InvalidTagNumber, or
// InvalidImage when side_px < kMinTagSide.
TagArt render_tag(int number, int side_px);

// Writes tag_<NN>.png per number into out_dir (created if missing) and
// returns the written paths in input order. Throws IoError.
std::vector<std::filesystem::path> write_tag_sheet(std::span<const int> numbers,
                                                   const std::filesystem::path& out_dir,
                                                   int side_px = 256);

}  // namespace digitour
