#include "digitour/color_scheme.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "digitour/error.hpp"

namespace digitour {

const TagPalette& palette() {
  static const TagPalette kPalette = {{
      {0, "green", {112.0, 0.59, 0.76}, 0x5fc24f},
      {1, "red", {3.0, 0.84, 0.84}, 0xd62b22},
      {2, "violet", {266.0, 0.73, 0.85}, 0x7f3bd9},
      {3, "brown", {25.0, 0.82, 0.58}, 0x944d1b},
      {4, "pink", {316.0, 0.59, 0.87}, 0xde5bbb},
      {5, "grey", {0.0, 0.0, 0.64}, 0xa3a3a3},
      {6, "yellow", {43.0, 0.72, 0.89}, 0xe3b540},
      {7, "light blue", {194.0, 0.62, 0.87}, 0x54bede},
      {8, "dark blue", {224.0, 0.97, 0.93}, 0x0744ed},
      {9, "orange", {25.0, 0.79, 0.94}, 0xf08132},
  }};
  return kPalette;
}

namespace {

std::uint8_t to_byte(double unit) {
  const double scaled = std::floor(std::clamp(unit, 0.0, 1.0) * 255.0 + 0.5);
  return static_cast<std::uint8_t>(scaled);
}

}  // namespace

Rgb hsv_to_rgb(const HsvColor& c) {
  const double h = std::fmod(std::fmod(c.h, 360.0) + 360.0, 360.0) / 60.0;
  const double chroma = c.v * c.s;
  const double x = chroma * (1.0 - std::abs(std::fmod(h, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(h)) {
    case 0: r = chroma; g = x; break;
    case 1: r = x; g = chroma; break;
    case 2: g = chroma; b = x; break;
    case 3: g = x; b = chroma; break;
    case 4: r = x; b = chroma; break;
    default: r = chroma; b = x; break;
  }
  const double m = c.v - chroma;
  return {to_byte(r + m), to_byte(g + m), to_byte(b + m)};
}

HsvColor rgb_to_hsv(double r, double g, double b) {
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  HsvColor out;
  out.v = mx;
  out.s = mx > 0.0 ? delta / mx : 0.0;
  if (delta <= 0.0) return out;
  double h;
  if (mx == r) {
    h = std::fmod((g - b) / delta, 6.0);
  } else if (mx == g) {
    h = (b - r) / delta + 2.0;
  } else {
    h = (r - g) / delta + 4.0;
  }
  h *= 60.0;
  if (h < 0.0) h += 360.0;
  if (h >= 360.0) h -= 360.0;
  out.h = h;
  return out;
}

HsvColor rgb_to_hsv(Rgb c) {
  return rgb_to_hsv(c.r / 255.0, c.g / 255.0, c.b / 255.0);
}

Rgb hex_to_rgb(std::uint32_t hex) {
  return {static_cast<std::uint8_t>((hex >> 16) & 0xff),
          static_cast<std::uint8_t>((hex >> 8) & 0xff),
          static_cast<std::uint8_t>(hex & 0xff)};
}

namespace {

// Seven-segment masks, bit order a b c d e f g.
constexpr std::array<std::uint8_t, 10> kSegments = {
    0b1111110, 0b0110000, 0b1101101, 0b1111001, 0b0110011,
    0b1011011, 0b1011111, 0b1110000, 0b1111111, 0b1111011};

struct Box {
  double x0, y0, x1, y1;
};

void fill_box(RasterImage& img, const Box& b, Rgb color) {
  const int xs = std::max(0, static_cast<int>(std::floor(b.x0)));
  const int xe = std::min(img.width(), static_cast<int>(std::ceil(b.x1)));
  const int ys = std::max(0, static_cast<int>(std::floor(b.y0)));
  const int ye = std::min(img.height(), static_cast<int>(std::ceil(b.y1)));
  for (int y = ys; y < ye; ++y) {
    const double cy = y + 0.5;
    if (cy < b.y0 || cy >= b.y1) continue;
    for (int x = xs; x < xe; ++x) {
      const double cx = x + 0.5;
      if (cx >= b.x0 && cx < b.x1) img.set(x, y, color);
    }
  }
}

void draw_numeral(RasterImage& img, int digit, double center_x, double center_y,
                  double height, double width, double stroke) {
  const double x0 = center_x - width / 2, x1 = center_x + width / 2;
  const double y0 = center_y - height / 2, y1 = center_y + height / 2;
  const double mid = center_y;
  const std::array<Box, 7> segs = {{
      {x0, y0, x1, y0 + stroke},                          // a
      {x1 - stroke, y0, x1, mid + stroke / 2},            // b
      {x1 - stroke, mid - stroke / 2, x1, y1},            // c
      {x0, y1 - stroke, x1, y1},                          // d
      {x0, mid - stroke / 2, x0 + stroke, y1},            // e
      {x0, y0, x0 + stroke, mid + stroke / 2},            // f
      {x0, mid - stroke / 2, x1, mid + stroke / 2},       // g
  }};
  const Rgb black{0, 0, 0};
  for (int s = 0; s < 7; ++s) {
    if (kSegments[digit] & (1 << (6 - s))) fill_box(img, segs[s], black);
  }
}

}  // namespace

TagArt render_tag(int number, int side_px) {
  if (number < kMinTagNumber || number > kMaxTagNumber) {
    throw InvalidTagNumber(number);
  }
  if (side_px < kMinTagSide) {
    throw InvalidImage("tag side must be at least 64 px");
  }
  const double side = side_px;
  const int half = side_px / 2;

  TagArt art;
  art.number = number;
  art.leading_digit = number / 10;
  art.trailing_digit = number % 10;
  art.leading_region = {0, 0, side_px, half};
  art.trailing_region = {0, half, side_px, side_px};
  art.raster = RasterImage(side_px, side_px);

  const Rgb lead = hsv_to_rgb(palette()[art.leading_digit].color);
  const Rgb trail = hsv_to_rgb(palette()[art.trailing_digit].color);
  for (int y = 0; y < side_px; ++y) {
    const Rgb c = y < half ? lead : trail;
    for (int x = 0; x < side_px; ++x) art.raster.set(x, y, c);
  }

  // Disk: diameter 25% of the side, centred horizontally, at 30% of the
  // leading half's height.
  art.circle_radius = 0.125 * side;
  art.circle_center_x = side / 2.0;
  art.circle_center_y = 0.3 * half;
  const double r2 = art.circle_radius * art.circle_radius;
  for (int y = 0; y < half; ++y) {
    for (int x = 0; x < side_px; ++x) {
      const double dx = x + 0.5 - art.circle_center_x;
      const double dy = y + 0.5 - art.circle_center_y;
      if (dx * dx + dy * dy <= r2) art.raster.set(x, y, {0, 0, 0});
    }
  }

  // Numerals: stroke side/24. The leading numeral sits in the band below the
  // disk so the two dark shapes never touch.
  const double stroke = side / 24.0;
  const double glyph_h = 0.15 * side;
  const double glyph_w = 0.10 * side;
  draw_numeral(art.raster, art.leading_digit, side / 2.0, 0.39 * side, glyph_h,
               glyph_w, stroke);
  draw_numeral(art.raster, art.trailing_digit, side / 2.0,
               (half + side) / 2.0, glyph_h, glyph_w, stroke);
  return art;
}

std::vector<std::filesystem::path> write_tag_sheet(std::span<const int> numbers,
                                                   const std::filesystem::path& out_dir,
                                                   int side_px) {
  std::vector<std::filesystem::path> written;
  if (numbers.empty()) return written;
  // Validate everything before touching the filesystem.
  for (int n : numbers) {
    if (n < kMinTagNumber || n > kMaxTagNumber) throw InvalidTagNumber(n);
  }
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  for (int n : numbers) {
    char name[32];
    std::snprintf(name, sizeof name, "tag_%02d.png", n);
    const auto path = out_dir / name;
    write_png(render_tag(n, side_px).raster, path);
    written.push_back(path);
  }
  return written;
}

}  // namespace digitour
