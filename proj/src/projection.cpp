#include "digitour/projection.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numbers>
#include <vector>

#include "digitour/error.hpp"
#include "digitour/parallel.hpp"

namespace digitour {

namespace {

constexpr double kPi = std::numbers::pi;

std::uint8_t round_channel(double v) {
  return static_cast<std::uint8_t>(std::floor(std::clamp(v, 0.0, 255.0) + 0.5));
}

void warn_aspect(int width, int height) {
  if (width != 2 * height) {
    std::cerr << "warning: equirectangular size " << width << "x" << height
              << " is not 2:1\n";
  }
}

}  // namespace

std::string_view face_name(FaceId id) {
  switch (id) {
    case FaceId::front: return "front";
    case FaceId::back: return "back";
    case FaceId::left: return "left";
    case FaceId::right: return "right";
    case FaceId::top: return "top";
    case FaceId::bottom: return "bottom";
  }
  return "front";
}

std::optional<FaceId> parse_face(std::string_view name) {
  for (FaceId id : kAllFaces) {
    if (face_name(id) == name) return id;
  }
  return std::nullopt;
}

Direction normalized(double x, double y, double z) {
  const double n = std::sqrt(x * x + y * y + z * z);
  return {x / n, y / n, z / n};
}

CubeFaceSet::CubeFaceSet(std::array<RasterImage, 6> images)
    : images_(std::move(images)) {
  face_size_ = images_[0].width();
  for (const auto& img : images_) {
    if (img.width() != img.height() || img.width() != face_size_ ||
        face_size_ < 1) {
      throw InvalidImage("cube faces must be square and of uniform size");
    }
  }
}

Direction face_uv_to_direction(FaceId face, double u, double v) {
  const double a = 2.0 * u - 1.0;
  const double b = 1.0 - 2.0 * v;
  switch (face) {
    case FaceId::front: return normalized(a, b, 1.0);
    case FaceId::back: return normalized(-a, b, -1.0);
    case FaceId::left: return normalized(-1.0, b, a);
    case FaceId::right: return normalized(1.0, b, -a);
    case FaceId::top: return normalized(a, 1.0, -b);
    case FaceId::bottom: return normalized(a, -1.0, b);
  }
  return {};
}

std::optional<FaceUv> direction_to_plane_uv(const Direction& d, FaceId face) {
  switch (face) {
    case FaceId::front:
      if (d.z <= 0) return std::nullopt;
      return FaceUv{face, 0.5 * (d.x / d.z + 1.0), 0.5 * (1.0 - d.y / d.z)};
    case FaceId::back:
      if (d.z >= 0) return std::nullopt;
      return FaceUv{face, 0.5 * (1.0 + d.x / d.z), 0.5 * (1.0 + d.y / d.z)};
    case FaceId::left:
      if (d.x >= 0) return std::nullopt;
      return FaceUv{face, 0.5 * (1.0 - d.z / d.x), 0.5 * (1.0 + d.y / d.x)};
    case FaceId::right:
      if (d.x <= 0) return std::nullopt;
      return FaceUv{face, 0.5 * (1.0 - d.z / d.x), 0.5 * (1.0 - d.y / d.x)};
    case FaceId::top:
      if (d.y <= 0) return std::nullopt;
      return FaceUv{face, 0.5 * (d.x / d.y + 1.0), 0.5 * (d.z / d.y + 1.0)};
    case FaceId::bottom:
      if (d.y >= 0) return std::nullopt;
      return FaceUv{face, 0.5 * (1.0 - d.x / d.y), 0.5 * (1.0 + d.z / d.y)};
  }
  return std::nullopt;
}

FaceUv direction_to_face_uv(const Direction& d) {
  const double ax = std::abs(d.x), ay = std::abs(d.y), az = std::abs(d.z);
  FaceId face;
  if (ax >= ay && ax >= az) {
    face = d.x > 0 ? FaceId::right : FaceId::left;
  } else if (ay >= az) {
    face = d.y > 0 ? FaceId::top : FaceId::bottom;
  } else {
    face = d.z > 0 ? FaceId::front : FaceId::back;
  }
  FaceUv uv = *direction_to_plane_uv(d, face);
  uv.u = std::clamp(uv.u, 0.0, 1.0);
  uv.v = std::clamp(uv.v, 0.0, 1.0);
  return uv;
}

EquirectPoint direction_to_equirect(const Direction& d, int width, int height) {
  const double lon = std::atan2(d.x, d.z);
  const double lat = std::asin(std::clamp(d.y, -1.0, 1.0));
  double px = (lon / (2.0 * kPi) + 0.5) * width;
  if (px >= width) px -= width;
  if (px < 0) px += width;
  const double py = (0.5 - lat / kPi) * height;
  return {px, py};
}

Direction equirect_to_direction(double px, double py, int width, int height) {
  const double lon = (px / width - 0.5) * 2.0 * kPi;
  const double lat = (0.5 - py / height) * kPi;
  const double c = std::cos(lat);
  return {c * std::sin(lon), std::sin(lat), c * std::cos(lon)};
}

std::array<double, 3> sample_equirect(const RasterImage& img, double px,
                                      double py) {
  const int w = img.width(), h = img.height();
  const double x = px - 0.5;
  const double y = std::clamp(py - 0.5, 0.0, static_cast<double>(h - 1));
  const double xf = std::floor(x);
  const double fx = x - xf;
  int x0 = static_cast<int>(xf) % w;
  if (x0 < 0) x0 += w;
  const int x1 = x0 + 1 == w ? 0 : x0 + 1;
  const int y0 = static_cast<int>(y);
  const int y1 = std::min(y0 + 1, h - 1);
  const double fy = y - y0;
  const std::uint8_t* r0 = img.row(y0);
  const std::uint8_t* r1 = img.row(y1);
  std::array<double, 3> out;
  for (int c = 0; c < 3; ++c) {
    const double p00 = r0[x0 * 3 + c], p10 = r0[x1 * 3 + c];
    const double p01 = r1[x0 * 3 + c], p11 = r1[x1 * 3 + c];
    const double top = p00 + (p10 - p00) * fx;
    const double bottom = p01 + (p11 - p01) * fx;
    out[c] = top + (bottom - top) * fy;
  }
  return out;
}

std::array<double, 3> sample_clamped(const RasterImage& img, double x_in,
                                     double y_in) {
  const int w = img.width(), h = img.height();
  const double x = std::clamp(x_in - 0.5, 0.0, static_cast<double>(w - 1));
  const double y = std::clamp(y_in - 0.5, 0.0, static_cast<double>(h - 1));
  const int x0 = static_cast<int>(x), y0 = static_cast<int>(y);
  const int x1 = std::min(x0 + 1, w - 1), y1 = std::min(y0 + 1, h - 1);
  const double fx = x - x0, fy = y - y0;
  const std::uint8_t* r0 = img.row(y0);
  const std::uint8_t* r1 = img.row(y1);
  std::array<double, 3> out;
  for (int c = 0; c < 3; ++c) {
    const double p00 = r0[x0 * 3 + c], p10 = r0[x1 * 3 + c];
    const double p01 = r1[x0 * 3 + c], p11 = r1[x1 * 3 + c];
    const double top = p00 + (p10 - p00) * fx;
    const double bottom = p01 + (p11 - p01) * fx;
    out[c] = top + (bottom - top) * fy;
  }
  return out;
}

CubeFaceSet equirect_to_cubemap(const RasterImage& equirect, int face_size) {
  if (equirect.empty()) throw InvalidImage("equirectangular image is empty");
  if (face_size < 1) throw InvalidImage("face size must be positive");
  warn_aspect(equirect.width(), equirect.height());
  std::array<RasterImage, 6> images;
  for (auto& img : images) img = RasterImage(face_size, face_size);
  const int w = equirect.width(), h = equirect.height();
  parallel_for(0, 6 * face_size, [&](int task) {
    const int f = task / face_size;
    const int j = task % face_size;
    const FaceId id = kAllFaces[f];
    std::uint8_t* row = images[f].row(j);
    const double v = (j + 0.5) / face_size;
    for (int i = 0; i < face_size; ++i) {
      const double u = (i + 0.5) / face_size;
      const EquirectPoint p =
          direction_to_equirect(face_uv_to_direction(id, u, v), w, h);
      const auto s = sample_equirect(equirect, p.px, p.py);
      row[i * 3] = round_channel(s[0]);
      row[i * 3 + 1] = round_channel(s[1]);
      row[i * 3 + 2] = round_channel(s[2]);
    }
  });
  return CubeFaceSet(std::move(images));
}

RasterImage cubemap_to_equirect(const CubeFaceSet& faces, int width, int height) {
  if (width < 1 || height < 1) throw InvalidImage("output size must be positive");
  warn_aspect(width, height);
  RasterImage out(width, height);
  const int n = faces.face_size();
  parallel_for(0, height, [&](int y) {
    std::uint8_t* row = out.row(y);
    for (int x = 0; x < width; ++x) {
      const Direction d = equirect_to_direction(x + 0.5, y + 0.5, width, height);
      const FaceUv uv = direction_to_face_uv(d);
      const auto s = sample_clamped(faces.face(uv.face), uv.u * n, uv.v * n);
      row[x * 3] = round_channel(s[0]);
      row[x * 3 + 1] = round_channel(s[1]);
      row[x * 3 + 2] = round_channel(s[2]);
    }
  });
  return out;
}

EquirectPoint face_point_to_equirect(FaceId face, double x_px, double y_px,
                                     int face_size, int width, int height) {
  const double u = (x_px + 0.5) / face_size;
  const double v = (y_px + 0.5) / face_size;
  return direction_to_equirect(face_uv_to_direction(face, u, v), width, height);
}

double EquirectExtent::center_x(int width) const {
  if (!wrapped) return 0.5 * (x_min + x_max);
  double c = 0.5 * (x_min + x_max + width);
  if (c >= width) c -= width;
  return c;
}

EquirectExtent equirect_extent(std::span<const EquirectPoint> points, int width) {
  EquirectExtent e;
  if (points.empty()) return e;
  std::vector<double> xs;
  xs.reserve(points.size());
  e.y_min = points[0].py;
  e.y_max = points[0].py;
  for (const auto& p : points) {
    xs.push_back(p.px);
    e.y_min = std::min(e.y_min, p.py);
    e.y_max = std::max(e.y_max, p.py);
  }
  std::sort(xs.begin(), xs.end());
  // The box is the complement of the widest empty arc on the circle.
  double best_gap = xs.front() + width - xs.back();
  std::size_t best = xs.size() - 1;  // gap after xs[best]
  for (std::size_t i = 0; i + 1 < xs.size(); ++i) {
    const double gap = xs[i + 1] - xs[i];
    if (gap > best_gap) {
      best_gap = gap;
      best = i;
    }
  }
  if (best == xs.size() - 1) {
    e.x_min = xs.front();
    e.x_max = xs.back();
  } else {
    e.x_min = xs[best + 1];
    e.x_max = xs[best];
    e.wrapped = true;
  }
  return e;
}

}  // namespace digitour
