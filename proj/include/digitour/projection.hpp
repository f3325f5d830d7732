#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>

#include "digitour/image.hpp"

namespace digitour {

enum class FaceId { front, back, left, right, top, bottom };

inline constexpr std::array<FaceId, 6> kAllFaces = {
    FaceId::front, FaceId::back, FaceId::left,
    FaceId::right, FaceId::top,  FaceId::bottom};

std::string_view face_name(FaceId id);
std::optional<FaceId> parse_face(std::string_view name);

// Unit vector; frame is +X right, +Y up, +Z forward.
struct Direction {
  double x = 0.0;
  double y = 0.0;
  double z = 1.0;
};

Direction normalized(double x, double y, double z);

// Continuous equirectangular pixel position; px wraps, py clamps to [0, H].
struct EquirectPoint {
  double px = 0.0;
  double py = 0.0;
};

struct FaceUv {
  FaceId face = FaceId::front;
  double u = 0.5;  // rightward in the face raster
  double v = 0.5;  // downward in the face raster
};

struct CubeFace {
  FaceId id = FaceId::front;
  RasterImage image;
};

class CubeFaceSet {
 public:
  CubeFaceSet() = default;
  // Throws InvalidImage unless all faces are square and equally sized.
  explicit CubeFaceSet(std::array<RasterImage, 6> images);

  int face_size() const { return face_size_; }
  const RasterImage& face(FaceId id) const {
    return images_[static_cast<int>(id)];
  }
  CubeFace cube_face(FaceId id) const { return {id, face(id)}; }

 private:
  std::array<RasterImage, 6> images_;
  int face_size_ = 0;
};

// Face parametrization: front=(2u-1, 1-2v, 1), back=(1-2u, 1-2v, -1),
// left=(-1, 1-2v, 2u-1), right=(1, 1-2v, 1-2u), top=(2u-1, 1, 2v-1),
// bottom=(2u-1, -1, 1-2v). Walking down the front face continues onto the
// bottom face (and up onto the top face) without a flip.
Direction face_uv_to_direction(FaceId face, double u, double v);

// Face is the axis of largest |component|; ties resolve x, then y, then z.
FaceUv direction_to_face_uv(const Direction& d);

// Projects d onto the plane of a specific face. Returns nullopt when d points
// away from that face (non-positive component along the face axis). The
// returned u, v are unbounded.
std::optional<FaceUv> direction_to_plane_uv(const Direction& d, FaceId face);

// Plate carree: lon = atan2(x, z), lat = asin(y).
EquirectPoint direction_to_equirect(const Direction& d, int width, int height);
Direction equirect_to_direction(double px, double py, int width, int height);

// Throws InvalidImage on an empty input or face_size < 1.
CubeFaceSet equirect_to_cubemap(const RasterImage& equirect, int face_size);
RasterImage cubemap_to_equirect(const CubeFaceSet& faces, int width, int height);

// x_px, y_px index face pixels; the sample is taken at the pixel centre.
EquirectPoint face_point_to_equirect(FaceId face, double x_px, double y_px,
                                     int face_size, int width, int height);

// Bilinear sampling at continuous coordinates where pixel (i, j) has its
// centre at (i + 0.5, j + 0.5). Equirect sampling wraps horizontally and
// clamps vertically; plain sampling clamps both axes.
std::array<double, 3> sample_equirect(const RasterImage& img, double px, double py);
std::array<double, 3> sample_clamped(const RasterImage& img, double x, double y);

// Horizontal extent of a set of equirect points, choosing the narrowest
// interval on the longitude circle. wrapped is set when that interval
// crosses px = 0, in which case x_min > x_max.
struct EquirectExtent {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;
  bool wrapped = false;

  double center_x(int width) const;
  double center_y() const { return 0.5 * (y_min + y_max); }
};

EquirectExtent equirect_extent(std::span<const EquirectPoint> points, int width);

}  // namespace digitour
