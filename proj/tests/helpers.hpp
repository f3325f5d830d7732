#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "digitour/color_scheme.hpp"
#include "digitour/detector.hpp"
#include "digitour/image.hpp"
#include "digitour/projection.hpp"

namespace testing {

inline const digitour::Rgb kTeal{56, 150, 118};

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& name) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("digitour_" + name + "_" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

// Paste tag `number` as an axis-aligned square of `side` px at (x0, y0).
inline void paste_tag(digitour::RasterImage& img, int number, int x0, int y0, int side) {
  const auto art = digitour::render_tag(number, std::max(side, digitour::kMinTagSide));
  const double scale = static_cast<double>(art.raster.width()) / side;
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      const auto c = digitour::sample_clamped(art.raster, (x + 0.5) * scale, (y + 0.5) * scale);
      img.set(x0 + x, y0 + y,
              {static_cast<std::uint8_t>(c[0] + 0.5), static_cast<std::uint8_t>(c[1] + 0.5),
               static_cast<std::uint8_t>(c[2] + 0.5)});
    }
  }
}

// Tag `number` with its two fill colors replaced; black marks are kept.
inline digitour::RasterImage recolored_tag(int number, int side, const digitour::HsvColor& lead,
                                           const digitour::HsvColor& trail) {
  auto art = digitour::render_tag(number, side);
  const digitour::Rgb lead_rgb = digitour::hsv_to_rgb(lead);
  const digitour::Rgb trail_rgb = digitour::hsv_to_rgb(trail);
  for (int y = 0; y < side; ++y)
    for (int x = 0; x < side; ++x) {
      if (art.raster.at(x, y) == digitour::Rgb{0, 0, 0}) continue;
      art.raster.set(x, y, y < side / 2 ? lead_rgb : trail_rgb);
    }
  return art.raster;
}

// Palette color shifted in hue (degrees) and value, clamped to valid HSV.
inline digitour::HsvColor shifted(int digit, double dh, double dv) {
  digitour::HsvColor c = digitour::palette()[digit].color;
  c.h = std::fmod(c.h + dh + 360.0, 360.0);
  c.v = std::clamp(c.v + dv, 0.0, 1.0);
  return c;
}

// Face of `size` px with `tag` pasted at (x0, y0) and a matching detection.
struct TagScene {
  digitour::CubeFace face;
  digitour::Detection detection;
};

inline TagScene tag_scene(const digitour::RasterImage& tag, int size, int x0, int y0) {
  TagScene s;
  s.face = {digitour::FaceId::bottom, digitour::RasterImage(size, size, kTeal)};
  for (int y = 0; y < tag.height(); ++y)
    for (int x = 0; x < tag.width(); ++x) s.face.image.set(x0 + x, y0 + y, tag.at(x, y));
  s.detection.image = "prop/pano";
  s.detection.face = digitour::FaceId::bottom;
  s.detection.bbox = {static_cast<double>(x0), static_cast<double>(y0),
                      static_cast<double>(x0 + tag.width()),
                      static_cast<double>(y0 + tag.height())};
  s.detection.confidence = 1.0;
  return s;
}

// Undirected adjacency used for the floor-plan graph test: eight rooms,
// 1-2-3-4 along a corridor with 5..8 behind it, closing two cycles.
inline const std::vector<std::pair<int, int>> kFloorPlanEdges = {
    {1, 2}, {2, 3}, {3, 4}, {2, 5}, {3, 6}, {5, 6}, {6, 7}, {4, 8}, {7, 8}};

}  // namespace testing
