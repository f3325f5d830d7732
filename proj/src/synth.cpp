#include "digitour/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>
#include <set>

#include "digitour/color_scheme.hpp"
#include "digitour/error.hpp"
#include "digitour/hash.hpp"
#include "digitour/parallel.hpp"

namespace digitour {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = kPi / 180.0;
constexpr int kTagRasterSide = 256;
constexpr int kBoundaryPoints = 64;
constexpr int kMinLabelPoints = 8;
constexpr double kMinLabelArea = 16.0 * 16.0;

double cross(const FloorPoint& o, const FloorPoint& a, const FloorPoint& b) {
  return (a.x - o.x) * (b.z - o.z) - (a.z - o.z) * (b.x - o.x);
}

// Linear function of a floor point: cx * x + cz * z + c0.
struct Lin {
  double cx = 0.0, cz = 0.0, c0 = 0.0;
  double operator()(const FloorPoint& p) const { return cx * p.x + cz * p.z + c0; }
  Lin operator+(const Lin& o) const { return {cx + o.cx, cz + o.cz, c0 + o.c0}; }
  Lin operator-(const Lin& o) const { return {cx - o.cx, cz - o.cz, c0 - o.c0}; }
};

// The floor region seen through `face` is where the face's axis dominates
// both other components of the (unnormalized) ray (x, -h, z).
std::array<Lin, 4> face_constraints(FaceId face, double h) {
  const Lin dx{1, 0, 0}, dy{0, 0, -h}, dz{0, 1, 0};
  const Lin zero{};
  Lin main, o1, o2;
  switch (face) {
    case FaceId::front: main = dz; o1 = dx; o2 = dy; break;
    case FaceId::back: main = zero - dz; o1 = dx; o2 = dy; break;
    case FaceId::right: main = dx; o1 = dy; o2 = dz; break;
    case FaceId::left: main = zero - dx; o1 = dy; o2 = dz; break;
    case FaceId::top: main = dy; o1 = dx; o2 = dz; break;
    case FaceId::bottom: main = zero - dy; o1 = dx; o2 = dz; break;
  }
  return {main - o1, main + o1, main - o2, main + o2};
}

std::vector<FloorPoint> clip_half_plane(const std::vector<FloorPoint>& poly, const Lin& f) {
  std::vector<FloorPoint> out;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const FloorPoint& a = poly[i];
    const FloorPoint& b = poly[(i + 1) % n];
    const double fa = f(a), fb = f(b);
    if (fa >= 0) out.push_back(a);
    if ((fa >= 0) != (fb >= 0)) {
      const double t = fa / (fa - fb);
      out.push_back({a.x + t * (b.x - a.x), a.z + t * (b.z - a.z)});
    }
  }
  return out;
}

double polygon_area(const std::vector<std::pair<double, double>>& pts) {
  double s = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto& a = pts[i];
    const auto& b = pts[(i + 1) % pts.size()];
    s += a.first * b.second - b.first * a.second;
  }
  return std::abs(s) / 2.0;
}

bool footprints_overlap(const std::array<FloorPoint, 4>& a,
                        const std::array<FloorPoint, 4>& b) {
  auto separated_on = [](const std::array<FloorPoint, 4>& edges_of,
                         const std::array<FloorPoint, 4>& p,
                         const std::array<FloorPoint, 4>& q) {
    for (int i = 0; i < 4; ++i) {
      const FloorPoint& e0 = edges_of[i];
      const FloorPoint& e1 = edges_of[(i + 1) % 4];
      const double nx = -(e1.z - e0.z), nz = e1.x - e0.x;
      double pmin = 1e300, pmax = -1e300, qmin = 1e300, qmax = -1e300;
      for (const auto& v : p) {
        const double d = v.x * nx + v.z * nz;
        pmin = std::min(pmin, d);
        pmax = std::max(pmax, d);
      }
      for (const auto& v : q) {
        const double d = v.x * nx + v.z * nz;
        qmin = std::min(qmin, d);
        qmax = std::max(qmax, d);
      }
      if (pmax <= qmin || qmax <= pmin) return true;
    }
    return false;
  };
  return !separated_on(a, a, b) && !separated_on(b, a, b);
}

bool contains_origin(const std::array<FloorPoint, 4>& c) {
  const FloorPoint o{0.0, 0.0};
  bool pos = false, neg = false;
  for (int i = 0; i < 4; ++i) {
    const double s = cross(c[i], c[(i + 1) % 4], o);
    pos |= s > 0;
    neg |= s < 0;
  }
  return !(pos && neg);
}

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::floor(std::clamp(v, 0.0, 255.0) + 0.5));
}

BBox extent_box(const EquirectExtent& e) { return {e.x_min, e.y_min, e.x_max, e.y_max}; }

}  // namespace

std::array<FloorPoint, 4> tag_corners(const TagPlacement& tag) {
  const double c = std::cos(tag.rotation_deg * kDeg);
  const double s = std::sin(tag.rotation_deg * kDeg);
  const std::array<std::pair<double, double>, 4> local = {
      {{-0.5, -0.5}, {0.5, -0.5}, {0.5, 0.5}, {-0.5, 0.5}}};
  std::array<FloorPoint, 4> out;
  for (int i = 0; i < 4; ++i) {
    const double lx = local[i].first * tag.side_m;
    const double lz = local[i].second * tag.side_m;
    out[i] = {tag.floor_x_m + c * lx - s * lz, tag.floor_z_m + s * lx + c * lz};
  }
  return out;
}

std::vector<FloorPoint> tag_boundary(const TagPlacement& tag, int count) {
  const auto c = tag_corners(tag);
  std::vector<FloorPoint> pts;
  pts.reserve(count);
  for (int k = 0; k < count; ++k) {
    const double t = 4.0 * k / count;
    const int side = std::min(3, static_cast<int>(t));
    const double f = t - side;
    const FloorPoint& a = c[side];
    const FloorPoint& b = c[(side + 1) % 4];
    pts.push_back({a.x + f * (b.x - a.x), a.z + f * (b.z - a.z)});
  }
  return pts;
}

Direction floor_direction(const FloorPoint& p, double camera_height_m) {
  return normalized(p.x, -camera_height_m, p.z);
}

void validate_scene(const SceneSpec& spec) {
  if (!(spec.camera_height_m > 0)) throw InvalidScene("camera height must be positive");
  if (spec.width < 2 || spec.height < 1) throw InvalidScene("image size must be positive");
  if (spec.face_size < 1) throw InvalidScene("face size must be positive");
  if (spec.noise.gaussian_sigma < 0) throw InvalidScene("gaussian sigma must be >= 0");
  if (spec.noise.blur_sigma < 0) throw InvalidScene("blur sigma must be >= 0");
  if (std::abs(spec.noise.brightness_delta) > 0.3) {
    throw InvalidScene("brightness delta must lie in [-0.3, 0.3]");
  }
  std::vector<std::array<FloorPoint, 4>> corners;
  for (const auto& t : spec.tags) {
    if (t.number < kMinTagNumber || t.number > kMaxTagNumber) throw InvalidTagNumber(t.number);
    if (!(t.side_m > 0)) throw InvalidScene("tag side must be positive");
    if (t.floor_x_m == 0.0 && t.floor_z_m == 0.0) {
      throw InvalidScene("tag placed directly under the camera");
    }
    corners.push_back(tag_corners(t));
    if (contains_origin(corners.back())) {
      throw InvalidScene("tag footprint covers the camera nadir");
    }
  }
  for (std::size_t i = 0; i < spec.tags.size(); ++i) {
    for (std::size_t j = i + 1; j < spec.tags.size(); ++j) {
      const double d = std::hypot(spec.tags[i].floor_x_m - spec.tags[j].floor_x_m,
                                  spec.tags[i].floor_z_m - spec.tags[j].floor_z_m);
      if (footprints_overlap(corners[i], corners[j])) {
        throw InvalidScene("tag footprints overlap");
      }
      if (d < kMinTagSpacingMeters) {
        throw InvalidScene("tags closer than 0.3 m");
      }
    }
  }
}

std::vector<GroundTruthLabel> scene_labels(const SceneSpec& spec) {
  const double h = spec.camera_height_m;
  const int n = spec.face_size;
  std::vector<GroundTruthLabel> labels;
  for (const auto& tag : spec.tags) {
    const auto boundary = tag_boundary(tag, kBoundaryPoints);
    std::array<int, 6> counts{};
    std::vector<EquirectPoint> eq;
    for (const auto& p : boundary) {
      const Direction d = floor_direction(p, h);
      ++counts[static_cast<int>(direction_to_face_uv(d).face)];
      eq.push_back(direction_to_equirect(d, spec.width, spec.height));
    }
    const EquirectExtent extent = equirect_extent(eq, spec.width);

    const auto corners = tag_corners(tag);
    for (FaceId face : kAllFaces) {
      std::vector<FloorPoint> poly(corners.begin(), corners.end());
      for (const Lin& f : face_constraints(face, h)) {
        poly = clip_half_plane(poly, f);
        if (poly.empty()) break;
      }
      if (poly.size() < 3) continue;
      // Floor plane to face plane is a homography: straight edges stay
      // straight, so the projected clipped polygon is exact.
      std::vector<std::pair<double, double>> px;
      for (const auto& p : poly) {
        const auto uv = direction_to_plane_uv(floor_direction(p, h), face);
        if (!uv) continue;
        px.emplace_back(std::clamp(uv->u, 0.0, 1.0) * n, std::clamp(uv->v, 0.0, 1.0) * n);
      }
      if (px.size() < 3) continue;
      const double area = polygon_area(px);
      if (counts[static_cast<int>(face)] < kMinLabelPoints && area < kMinLabelArea) continue;
      BBox box{px[0].first, px[0].second, px[0].first, px[0].second};
      for (const auto& [x, y] : px) {
        box.x_min = std::min(box.x_min, x);
        box.y_min = std::min(box.y_min, y);
        box.x_max = std::max(box.x_max, x);
        box.y_max = std::max(box.y_max, y);
      }
      if (!(box.width() > 0 && box.height() > 0)) continue;
      labels.push_back({spec.image_id, face, tag.number, box, extent_box(extent),
                        extent.wrapped, area});
    }
  }
  return labels;
}

namespace {

struct PreparedTag {
  TagPlacement tag;
  RasterImage raster;
  double cos_t = 1.0, sin_t = 0.0;
  double reach = 0.0;
};

std::vector<float> gaussian_kernel(double sigma) {
  const int r = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<float> k(2 * r + 1);
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    const double v = std::exp(-0.5 * i * i / (sigma * sigma));
    k[i + r] = static_cast<float>(v);
    sum += v;
  }
  for (auto& v : k) v = static_cast<float>(v / sum);
  return k;
}

// Smooth value noise in [-1, 1] on a coarse lattice, wrapping horizontally.
class ValueNoise {
 public:
  ValueNoise(int width, int height, int cell, std::uint64_t seed)
      : cell_(std::max(1, cell)),
        cols_((width + cell_ - 1) / cell_),
        rows_((height + cell_ - 1) / cell_ + 1),
        values_(static_cast<std::size_t>(cols_) * rows_) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (auto& v : values_) v = u(rng);
  }

  double at(double x, double y) const {
    const double gx = x / cell_, gy = std::min(y / cell_, rows_ - 1.0);
    const int x0 = static_cast<int>(gx) % cols_;
    const int x1 = (x0 + 1) % cols_;
    const int y0 = std::min(static_cast<int>(gy), rows_ - 1);
    const int y1 = std::min(y0 + 1, rows_ - 1);
    const double fx = gx - std::floor(gx), fy = gy - y0;
    auto v = [&](int cx, int cy) { return values_[static_cast<std::size_t>(cy) * cols_ + cx]; };
    const double top = v(x0, y0) + (v(x1, y0) - v(x0, y0)) * fx;
    const double bot = v(x0, y1) + (v(x1, y1) - v(x0, y1)) * fx;
    return top + (bot - top) * fy;
  }

 private:
  int cell_, cols_, rows_;
  std::vector<double> values_;
};

}  // namespace

RenderedScene render_scene(const SceneSpec& spec) {
  validate_scene(spec);
  const int w = spec.width, hgt = spec.height;
  const double cam_h = spec.camera_height_m;

  RasterImage file_bg;
  if (spec.background.kind == BackgroundKind::file) {
    file_bg = read_png(spec.background.file);
  }
  std::optional<ValueNoise> value_noise;
  if (spec.background.kind == BackgroundKind::noise) {
    value_noise.emplace(w, hgt, spec.background.noise_cell_px, derive_seed(spec.seed, 11));
  }

  std::vector<PreparedTag> tags;
  for (const auto& t : spec.tags) {
    PreparedTag p;
    p.tag = t;
    p.raster = render_tag(t.number, kTagRasterSide).raster;
    p.cos_t = std::cos(t.rotation_deg * kDeg);
    p.sin_t = std::sin(t.rotation_deg * kDeg);
    p.reach = t.side_m * 0.7072;
    tags.push_back(std::move(p));
  }

  std::vector<double> col_sin(w), col_cos(w);
  for (int x = 0; x < w; ++x) {
    const double lon = ((x + 0.5) / w - 0.5) * 2.0 * kPi;
    col_sin[x] = std::sin(lon);
    col_cos[x] = std::cos(lon);
  }

  const float gain = static_cast<float>(1.0 + spec.noise.brightness_delta);
  std::vector<float> buf(static_cast<std::size_t>(w) * hgt * 3);

  parallel_for(0, hgt, [&](int y) {
    const double lat = (0.5 - (y + 0.5) / hgt) * kPi;
    const double lat_deg = lat / kDeg;
    const double sl = std::sin(lat), cl = std::cos(lat);
    float* row = buf.data() + static_cast<std::size_t>(y) * w * 3;
    const double gt = (y + 0.5) / hgt;
    for (int x = 0; x < w; ++x) {
      std::array<double, 3> c{};
      const Background& bg = spec.background;
      switch (bg.kind) {
        case BackgroundKind::solid:
          c = {double(bg.color.r), double(bg.color.g), double(bg.color.b)};
          break;
        case BackgroundKind::gradient:
          c = {bg.color.r + (bg.color_bottom.r - bg.color.r) * gt,
               bg.color.g + (bg.color_bottom.g - bg.color.g) * gt,
               bg.color.b + (bg.color_bottom.b - bg.color.b) * gt};
          break;
        case BackgroundKind::noise: {
          const double m = 1.0 + bg.noise_amplitude * value_noise->at(x + 0.5, y + 0.5);
          c = {bg.color.r * m, bg.color.g * m, bg.color.b * m};
          break;
        }
        case BackgroundKind::file:
          c = sample_equirect(file_bg, (x + 0.5) * file_bg.width() / w,
                              (y + 0.5) * file_bg.height() / hgt);
          break;
      }

      if (!spec.distractors.empty()) {
        const double lon_deg = ((x + 0.5) / w - 0.5) * 360.0;
        for (const auto& r : spec.distractors) {
          double dl = std::remainder(lon_deg - r.lon_deg, 360.0);
          if (std::abs(dl) <= r.width_deg / 2 && std::abs(lat_deg - r.lat_deg) <= r.height_deg / 2) {
            c = {double(r.color.r), double(r.color.g), double(r.color.b)};
          }
        }
      }

      if (sl < 0.0 && !tags.empty()) {
        const double dx = cl * col_sin[x], dz = cl * col_cos[x];
        const double t = cam_h / -sl;
        const double fx = t * dx, fz = t * dz;
        for (const auto& p : tags) {
          const double ox = fx - p.tag.floor_x_m, oz = fz - p.tag.floor_z_m;
          if (std::abs(ox) > p.reach || std::abs(oz) > p.reach) continue;
          const double lx = (p.cos_t * ox + p.sin_t * oz) / p.tag.side_m;
          const double lz = (-p.sin_t * ox + p.cos_t * oz) / p.tag.side_m;
          if (std::abs(lx) > 0.5 || std::abs(lz) > 0.5) continue;
          c = sample_clamped(p.raster, (lx + 0.5) * kTagRasterSide, (0.5 - lz) * kTagRasterSide);
        }
      }
      row[x * 3] = static_cast<float>(c[0]) * gain;
      row[x * 3 + 1] = static_cast<float>(c[1]) * gain;
      row[x * 3 + 2] = static_cast<float>(c[2]) * gain;
    }
  });

  RenderedScene out;
  out.equirect = RasterImage(w, hgt);
  const std::size_t stride = static_cast<std::size_t>(w) * 3;

  std::vector<float> kernel;
  int radius = 0;
  if (spec.noise.blur_sigma > 0) {
    kernel = gaussian_kernel(spec.noise.blur_sigma);
    radius = static_cast<int>(kernel.size() / 2);
    // Horizontal pass in place, wrapping around the seam.
    parallel_for(0, hgt, [&](int y) {
      float* row = buf.data() + y * stride;
      std::vector<float> src(row, row + stride);
      for (int x = 0; x < w; ++x) {
        float acc[3] = {0, 0, 0};
        for (int k = -radius; k <= radius; ++k) {
          int xx = (x + k) % w;
          if (xx < 0) xx += w;
          const float kv = kernel[k + radius];
          acc[0] += kv * src[xx * 3];
          acc[1] += kv * src[xx * 3 + 1];
          acc[2] += kv * src[xx * 3 + 2];
        }
        row[x * 3] = acc[0];
        row[x * 3 + 1] = acc[1];
        row[x * 3 + 2] = acc[2];
      }
    });
  }

  // Vertical pass (clamped at the poles), noise, quantization.
  const double sigma255 = spec.noise.gaussian_sigma * 255.0;
  parallel_for(0, hgt, [&](int y) {
    std::uint8_t* dst = out.equirect.row(y);
    std::mt19937_64 rng(derive_seed(spec.seed, 7, static_cast<std::uint64_t>(y)));
    std::normal_distribution<double> normal(0.0, sigma255 > 0 ? sigma255 : 1.0);
    std::vector<float> acc(stride, 0.0f);
    if (radius == 0) {
      std::copy_n(buf.data() + y * stride, stride, acc.data());
    } else {
      for (int k = -radius; k <= radius; ++k) {
        const int yy = std::clamp(y + k, 0, hgt - 1);
        const float kv = kernel[k + radius];
        const float* src = buf.data() + yy * stride;
        for (std::size_t i = 0; i < stride; ++i) acc[i] += kv * src[i];
      }
    }
    for (std::size_t i = 0; i < stride; ++i) {
      double v = acc[i];
      if (sigma255 > 0) v += normal(rng);
      dst[i] = to_byte(v);
    }
  });

  out.labels = scene_labels(spec);
  return out;
}

// ---------------------------------------------------------------------------
// Dataset generation

namespace {

Range parse_range(const nlohmann::json& j, const char* key, bool symmetric) {
  if (j.is_number()) {
    const double v = j.get<double>();
    return symmetric ? Range{-std::abs(v), std::abs(v)} : Range{v, v};
  }
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return {j[0].get<double>(), j[1].get<double>()};
  }
  throw InvalidConfig(std::string(key) + " must be a number or [min, max]");
}

nlohmann::ordered_json range_json(const Range& r) { return {r.min, r.max}; }

void check_config(const DatasetConfig& c) {
  auto require = [](bool ok, const char* msg) {
    if (!ok) throw InvalidConfig(msg);
  };
  require(c.n_properties >= 1, "n_properties must be >= 1");
  require(c.panos_min >= 1 && c.panos_min <= c.panos_max, "invalid panos_per_property");
  require(c.panos_max <= kMaxTagNumber, "at most 20 panoramas per property");
  require(c.tags_per_pano >= 0, "tags_per_pano must be >= 0");
  require(c.width >= 2 && c.height >= 1, "invalid image size");
  require(c.face_size >= 64, "face_size must be >= 64");
  require(c.camera_height_m > 0, "camera_height_m must be positive");
  require(c.tag_side_m > 0, "tag_side_m must be positive");
  require(c.tag_distance_m.min > 0 && c.tag_distance_m.min <= c.tag_distance_m.max,
          "invalid tag_distance_m");
  require(c.tag_spacing_m >= kMinTagSpacingMeters, "tag_spacing_m must be >= 0.3");
  require(c.gaussian_sigma.min >= 0 && c.gaussian_sigma.min <= c.gaussian_sigma.max,
          "invalid gaussian_sigma");
  require(c.blur_sigma.min >= 0 && c.blur_sigma.min <= c.blur_sigma.max, "invalid blur_sigma");
  require(c.brightness_delta.min >= -0.3 && c.brightness_delta.max <= 0.3 &&
              c.brightness_delta.min <= c.brightness_delta.max,
          "brightness_delta must lie in [-0.3, 0.3]");
  require(c.distractors_per_pano >= 0, "distractors_per_pano must be >= 0");
}

double draw(std::mt19937_64& rng, const Range& r) {
  if (r.max <= r.min) return r.min;
  return std::uniform_real_distribution<double>(r.min, r.max)(rng);
}

Rgb hsv_rgb(double h, double s, double v) { return hsv_to_rgb({h, s, v}); }

// Single-tag check: the whole tag on one face, clear of the face edges.
bool placement_ok(const DatasetConfig& c, const TagPlacement& t) {
  SceneSpec probe;
  probe.camera_height_m = c.camera_height_m;
  probe.width = c.width;
  probe.height = c.height;
  probe.face_size = c.face_size;
  probe.tags = {t};
  const auto corners = tag_corners(t);
  if (contains_origin(corners)) return false;
  const auto labels = scene_labels(probe);
  if (labels.size() != 1) return false;
  for (const auto& p : tag_boundary(t, kBoundaryPoints)) {
    if (direction_to_face_uv(floor_direction(p, c.camera_height_m)).face != labels[0].face) {
      return false;
    }
  }
  const BBox& b = labels[0].bbox;
  const double m = c.face_margin_px;
  return b.x_min >= m && b.y_min >= m && b.x_max <= c.face_size - m &&
         b.y_max <= c.face_size - m;
}

}  // namespace

DatasetConfig dataset_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidConfig("config must be a JSON object");
  DatasetConfig c;
  static const std::set<std::string> kKeys = {
      "n_properties", "panos_per_property", "tags_per_pano", "width", "height",
      "face_size", "camera_height_m", "tag_side_m", "tag_distance_m", "tag_spacing_m",
      "face_margin_px", "noise", "distractors", "distractors_per_pano",
      "random_anchors", "write_faces", "seed"};
  for (const auto& [k, v] : j.items()) {
    if (!kKeys.count(k)) throw InvalidConfig("unknown config key: " + k);
  }
  try {
    if (j.contains("n_properties")) c.n_properties = j["n_properties"].get<int>();
    if (j.contains("panos_per_property")) {
      const auto& p = j["panos_per_property"];
      if (p.is_number_integer()) {
        c.panos_min = c.panos_max = p.get<int>();
      } else if (p.is_array() && p.size() == 2) {
        c.panos_min = p[0].get<int>();
        c.panos_max = p[1].get<int>();
      } else {
        throw InvalidConfig("panos_per_property must be an integer or [min, max]");
      }
    }
    if (j.contains("tags_per_pano")) c.tags_per_pano = j["tags_per_pano"].get<int>();
    if (j.contains("width")) c.width = j["width"].get<int>();
    if (j.contains("height")) c.height = j["height"].get<int>();
    if (j.contains("face_size")) c.face_size = j["face_size"].get<int>();
    if (j.contains("camera_height_m")) c.camera_height_m = j["camera_height_m"].get<double>();
    if (j.contains("tag_side_m")) c.tag_side_m = j["tag_side_m"].get<double>();
    if (j.contains("tag_distance_m")) {
      c.tag_distance_m = parse_range(j["tag_distance_m"], "tag_distance_m", false);
    }
    if (j.contains("tag_spacing_m")) c.tag_spacing_m = j["tag_spacing_m"].get<double>();
    if (j.contains("face_margin_px")) c.face_margin_px = j["face_margin_px"].get<double>();
    if (j.contains("noise")) {
      const auto& n = j["noise"];
      if (!n.is_object()) throw InvalidConfig("noise must be an object");
      for (const auto& [k, v] : n.items()) {
        if (k == "gaussian_sigma") {
          c.gaussian_sigma = parse_range(v, "gaussian_sigma", false);
        } else if (k == "brightness_delta") {
          c.brightness_delta = parse_range(v, "brightness_delta", true);
        } else if (k == "blur_sigma") {
          c.blur_sigma = parse_range(v, "blur_sigma", false);
        } else {
          throw InvalidConfig("unknown noise key: " + k);
        }
      }
    }
    if (j.contains("distractors")) c.distractors = j["distractors"].get<bool>();
    if (j.contains("distractors_per_pano")) {
      c.distractors_per_pano = j["distractors_per_pano"].get<int>();
    }
    if (j.contains("random_anchors")) c.random_anchors = j["random_anchors"].get<bool>();
    if (j.contains("write_faces")) c.write_faces = j["write_faces"].get<bool>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidConfig(std::string("bad config value: ") + e.what());
  }
  check_config(c);
  return c;
}

nlohmann::ordered_json dataset_config_to_json(const DatasetConfig& c) {
  nlohmann::ordered_json j;
  j["n_properties"] = c.n_properties;
  j["panos_per_property"] = {c.panos_min, c.panos_max};
  j["tags_per_pano"] = c.tags_per_pano;
  j["width"] = c.width;
  j["height"] = c.height;
  j["face_size"] = c.face_size;
  j["camera_height_m"] = c.camera_height_m;
  j["tag_side_m"] = c.tag_side_m;
  j["tag_distance_m"] = range_json(c.tag_distance_m);
  j["tag_spacing_m"] = c.tag_spacing_m;
  j["face_margin_px"] = c.face_margin_px;
  j["noise"] = {{"gaussian_sigma", range_json(c.gaussian_sigma)},
                {"brightness_delta", range_json(c.brightness_delta)},
                {"blur_sigma", range_json(c.blur_sigma)}};
  j["distractors"] = c.distractors;
  j["distractors_per_pano"] = c.distractors_per_pano;
  j["random_anchors"] = c.random_anchors;
  j["write_faces"] = c.write_faces;
  j["seed"] = c.seed;
  return j;
}

std::string config_hash(const DatasetConfig& c) {
  return hex64(fnv1a64(dataset_config_to_json(c).dump()));
}

std::string property_id(int property) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "prop%02d", property + 1);
  return buf;
}

std::string panorama_id(int pano) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "pano%02d", pano + 1);
  return buf;
}

PropertyManifest SynthProperty::manifest() const {
  PropertyManifest m;
  m.property_id = id;
  for (const auto& p : panoramas) m.panoramas.push_back(p.record);
  return m;
}

std::vector<std::pair<int, int>> ring_with_chords(int n, int min_degree, std::uint64_t seed) {
  std::set<std::pair<int, int>> edges;
  auto add = [&](int a, int b) { edges.insert({std::min(a, b), std::max(a, b)}); };
  if (n == 2) add(0, 1);
  if (n >= 3) {
    for (int i = 0; i < n; ++i) add(i, (i + 1) % n);
  }
  const int target = std::min(min_degree, n - 1);
  std::mt19937_64 rng(seed);
  auto degree = [&](int v) {
    int d = 0;
    for (const auto& [a, b] : edges) d += (a == v) + (b == v);
    return d;
  };
  auto adjacent = [&](int a, int b) { return edges.count({std::min(a, b), std::max(a, b)}) > 0; };
  for (;;) {
    std::vector<int> short_nodes;
    for (int v = 0; v < n; ++v) {
      if (degree(v) < target) short_nodes.push_back(v);
    }
    if (short_nodes.empty()) break;
    const int u = short_nodes[std::uniform_int_distribution<std::size_t>(
        0, short_nodes.size() - 1)(rng)];
    std::vector<int> preferred, fallback;
    for (int v = 0; v < n; ++v) {
      if (v == u || adjacent(u, v)) continue;
      (degree(v) < target ? preferred : fallback).push_back(v);
    }
    const auto& pool = preferred.empty() ? fallback : preferred;
    if (pool.empty()) break;  // u is already adjacent to everything
    add(u, pool[std::uniform_int_distribution<std::size_t>(0, pool.size() - 1)(rng)]);
  }
  return {edges.begin(), edges.end()};
}

std::vector<SynthPanorama> plan_property(const DatasetConfig& config, int property,
                                         std::vector<std::pair<int, int>>* edges_out) {
  check_config(config);
  std::mt19937_64 prng(derive_seed(config.seed, static_cast<std::uint64_t>(property), 1));
  const int n = config.panos_min +
                std::uniform_int_distribution<int>(0, config.panos_max - config.panos_min)(prng);
  std::vector<int> anchors(kMaxTagNumber);
  for (int i = 0; i < kMaxTagNumber; ++i) anchors[i] = i + 1;
  if (config.random_anchors) std::shuffle(anchors.begin(), anchors.end(), prng);
  anchors.resize(n);

  const auto edges = ring_with_chords(
      n, config.tags_per_pano, derive_seed(config.seed, static_cast<std::uint64_t>(property), 2));
  if (edges_out) *edges_out = edges;
  std::vector<std::vector<int>> neighbours(n);
  for (const auto& [a, b] : edges) {
    neighbours[a].push_back(b);
    neighbours[b].push_back(a);
  }

  const std::string prop = property_id(property);
  std::vector<SynthPanorama> out;
  for (int i = 0; i < n; ++i) {
    std::mt19937_64 rng(derive_seed(config.seed, static_cast<std::uint64_t>(property), 3,
                                    static_cast<std::uint64_t>(i)));
    SynthPanorama p;
    p.record.id = panorama_id(i);
    p.record.file = p.record.id + ".png";
    p.record.width = config.width;
    p.record.height = config.height;
    p.record.capture_index = i + 1;
    p.record.anchor_tag = anchors[i];

    SceneSpec& s = p.scene;
    s.image_id = prop + "/" + p.record.id;
    s.camera_height_m = config.camera_height_m;
    s.width = config.width;
    s.height = config.height;
    s.face_size = config.face_size;
    s.seed = derive_seed(config.seed, static_cast<std::uint64_t>(property), 4,
                         static_cast<std::uint64_t>(i));

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    // Walls and floor in a saturated teal band well clear of every palette
    // hue, so sensor noise cannot push background pixels into the mask.
    const double hue = 146.0 + 14.0 * unit(rng);
    s.background.kind = BackgroundKind::gradient;
    s.background.color = hsv_rgb(hue, 0.62 + 0.1 * unit(rng), 0.6 + 0.12 * unit(rng));
    s.background.color_bottom = hsv_rgb(hue, 0.62 + 0.1 * unit(rng), 0.52 + 0.1 * unit(rng));

    s.noise.gaussian_sigma = draw(rng, config.gaussian_sigma);
    s.noise.brightness_delta = draw(rng, config.brightness_delta);
    s.noise.blur_sigma = draw(rng, config.blur_sigma);

    for (int nb : neighbours[i]) {
      bool placed = false;
      for (int attempt = 0; attempt < 2000 && !placed; ++attempt) {
        const double r = draw(rng, config.tag_distance_m);
        const double az = unit(rng) * 2.0 * kPi;
        TagPlacement t;
        t.number = anchors[nb];
        t.floor_x_m = r * std::sin(az);
        t.floor_z_m = r * std::cos(az);
        t.rotation_deg = unit(rng) * 360.0;
        t.side_m = config.tag_side_m;
        bool clear = true;
        for (const auto& o : s.tags) {
          if (std::hypot(o.floor_x_m - t.floor_x_m, o.floor_z_m - t.floor_z_m) <
              config.tag_spacing_m) {
            clear = false;
            break;
          }
        }
        if (clear && placement_ok(config, t)) {
          s.tags.push_back(t);
          placed = true;
        }
      }
      if (!placed) {
        throw InvalidConfig("could not place tag " + std::to_string(anchors[nb]) + " in " +
                            s.image_id + "; widen tag_distance_m or reduce tags");
      }
    }

    if (config.distractors) {
      const int count =
          std::uniform_int_distribution<int>(0, config.distractors_per_pano)(rng);
      for (int k = 0; k < count; ++k) {
        WallRect r;
        r.lon_deg = -180.0 + 360.0 * unit(rng);
        r.lat_deg = -20.0 + 50.0 * unit(rng);
        r.width_deg = 2.0 + 6.0 * unit(rng);
        r.height_deg = 2.0 + 6.0 * unit(rng);
        r.color = hsv_to_rgb(palette()[std::uniform_int_distribution<int>(0, 9)(rng)].color);
        s.distractors.push_back(r);
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

SynthProperty generate_property(const DatasetConfig& config, int property) {
  SynthProperty prop;
  prop.id = property_id(property);
  std::vector<std::pair<int, int>> edges;
  prop.panoramas = plan_property(config, property, &edges);
  for (auto& p : prop.panoramas) p.rendered = render_scene(p.scene);
  for (const auto& [a, b] : edges) {
    prop.edges.emplace_back(prop.panoramas[a].record.id, prop.panoramas[b].record.id);
  }
  return prop;
}

nlohmann::ordered_json labels_to_json(const std::vector<GroundTruthLabel>& labels) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& l : labels) {
    nlohmann::ordered_json j;
    j["face"] = face_name(l.face);
    j["tag_number"] = l.tag_number;
    j["bbox"] = {l.bbox.x_min, l.bbox.y_min, l.bbox.x_max, l.bbox.y_max};
    j["equirect_bbox"] = {l.equirect_bbox.x_min, l.equirect_bbox.y_min,
                          l.equirect_bbox.x_max, l.equirect_bbox.y_max};
    j["wrapped"] = l.wrapped;
    j["visible_area_px"] = l.visible_area_px;
    arr.push_back(j);
  }
  return arr;
}

std::vector<GroundTruthLabel> labels_from_json(const nlohmann::json& j,
                                               const std::string& image) {
  if (!j.is_array()) throw ParseError("labels must be an array", 0);
  std::vector<GroundTruthLabel> out;
  try {
    for (const auto& e : j) {
      GroundTruthLabel l;
      l.image = image;
      const auto face = parse_face(e.at("face").get<std::string>());
      if (!face) throw ParseError("unknown face in labels", 0);
      l.face = *face;
      l.tag_number = e.at("tag_number").get<int>();
      if (l.tag_number < kMinTagNumber || l.tag_number > kMaxTagNumber) {
        throw InvalidTagNumber(l.tag_number);
      }
      const auto& b = e.at("bbox");
      l.bbox = {b.at(0).get<double>(), b.at(1).get<double>(), b.at(2).get<double>(),
                b.at(3).get<double>()};
      if (e.contains("equirect_bbox")) {
        const auto& q = e["equirect_bbox"];
        l.equirect_bbox = {q.at(0).get<double>(), q.at(1).get<double>(),
                           q.at(2).get<double>(), q.at(3).get<double>()};
      }
      l.wrapped = e.value("wrapped", false);
      l.visible_area_px = e.value("visible_area_px", 0.0);
      out.push_back(l);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed label: ") + e.what(), 0);
  }
  return out;
}

std::string yolo_labels(const std::vector<GroundTruthLabel>& labels, FaceId face,
                        int face_size) {
  std::string out;
  char line[128];
  const double n = face_size;
  for (const auto& l : labels) {
    if (l.face != face) continue;
    std::snprintf(line, sizeof line, "%d %.6f %.6f %.6f %.6f\n", l.tag_number - 1,
                  l.bbox.center_x() / n, l.bbox.center_y() / n, l.bbox.width() / n,
                  l.bbox.height() / n);
    out += line;
  }
  return out;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path.string());
  f << text;
  if (!f) throw IoError("write failed: " + path.string());
}

void make_dirs(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

}  // namespace

nlohmann::ordered_json generate_dataset(const DatasetConfig& config,
                                        const std::filesystem::path& out_dir) {
  check_config(config);
  make_dirs(out_dir);
  nlohmann::ordered_json gt;
  gt["version"] = 1;
  gt["config_hash"] = config_hash(config);
  gt["config"] = dataset_config_to_json(config);
  gt["width"] = config.width;
  gt["height"] = config.height;
  gt["face_size"] = config.face_size;
  gt["properties"] = nlohmann::ordered_json::array();

  for (int p = 0; p < config.n_properties; ++p) {
    const SynthProperty prop = generate_property(config, p);
    const auto dir = out_dir / prop.id;
    make_dirs(dir);
    if (config.write_faces) {
      make_dirs(dir / "faces");
      make_dirs(dir / "labels");
    }
    nlohmann::ordered_json pj;
    pj["id"] = prop.id;
    pj["manifest"] = prop.id + "/manifest.json";
    pj["panoramas"] = nlohmann::ordered_json::array();
    for (const auto& pano : prop.panoramas) {
      write_png(pano.rendered.equirect, dir / pano.record.file);
      if (config.write_faces) {
        const CubeFaceSet faces = equirect_to_cubemap(pano.rendered.equirect, config.face_size);
        for (FaceId f : kAllFaces) {
          const std::string stem = pano.record.id + "_" + std::string(face_name(f));
          write_png(faces.face(f), dir / "faces" / (stem + ".png"));
          write_text(dir / "labels" / (stem + ".txt"),
                     yolo_labels(pano.rendered.labels, f, config.face_size));
        }
      }
      nlohmann::ordered_json e;
      e["id"] = pano.record.id;
      e["file"] = prop.id + "/" + pano.record.file;
      e["anchor_tag"] = pano.record.anchor_tag;
      e["capture_index"] = pano.record.capture_index;
      e["labels"] = labels_to_json(pano.rendered.labels);
      pj["panoramas"].push_back(e);
    }
    nlohmann::ordered_json edges = nlohmann::ordered_json::array();
    for (const auto& [a, b] : prop.edges) edges.push_back({a, b});
    pj["edges"] = edges;
    gt["properties"].push_back(pj);
    write_text(dir / "manifest.json", manifest_to_json(prop.manifest()).dump(2) + "\n");
  }
  write_text(out_dir / "gt.json", gt.dump(2) + "\n");
  return gt;
}

}  // namespace digitour
