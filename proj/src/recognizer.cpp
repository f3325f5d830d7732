#include "digitour/recognizer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "digitour/error.hpp"

namespace digitour {

std::string_view failure_name(ReadingFailure f) {
  switch (f) {
    case ReadingFailure::too_small: return "too_small";
    case ReadingFailure::no_circle: return "no_circle";
    case ReadingFailure::no_color: return "no_color";
    case ReadingFailure::invalid_number: return "invalid_number";
  }
  return "invalid_number";
}

std::optional<ReadingFailure> parse_failure(std::string_view name) {
  for (auto f : {ReadingFailure::too_small, ReadingFailure::no_circle,
                 ReadingFailure::no_color, ReadingFailure::invalid_number}) {
    if (failure_name(f) == name) return f;
  }
  return std::nullopt;
}

double palette_distance(const HsvColor& measured, const HsvColor& reference) {
  double dh = std::abs(measured.h - reference.h);
  dh = std::min(dh, 360.0 - dh) / 180.0;
  const double wh = 2.0 * std::min({measured.s, reference.s, 1.0});
  const double ds = measured.s - reference.s;
  const double dv = measured.v - reference.v;
  return std::sqrt(wh * dh * wh * dh + ds * ds + dv * dv);
}

std::pair<int, double> nearest_palette_digit(const HsvColor& measured) {
  int best = 0;
  double best_d = palette_distance(measured, palette()[0].color);
  for (int i = 1; i < 10; ++i) {
    const double d = palette_distance(measured, palette()[i].color);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return {best, best_d};
}

namespace {

struct Pixel {
  HsvColor hsv;
  double r, g, b;  // [0, 1]
};

struct DarkBlob {
  long area = 0;
  double perimeter = 0.0;
  double cx = 0.0, cy = 0.0;  // centroid, crop pixel centres
};

constexpr std::array<int, 8> kDx = {1, 1, 0, -1, -1, -1, 0, 1};
constexpr std::array<int, 8> kDy = {0, 1, 1, 1, 0, -1, -1, -1};

// Moore-neighbour trace of the outer contour; diagonal steps count sqrt(2).
double contour_length(const std::vector<int>& label, int w, int h, int id,
                      int sx, int sy) {
  auto inside = [&](int x, int y) {
    return x >= 0 && y >= 0 && x < w && y < h && label[y * w + x] == id;
  };
  int x = sx, y = sy;
  int start = 5;  // (sx, sy) is top-most then left-most: NW is background
  int first_dir = -1;
  double length = 0.0;
  for (long guard = 0; guard < 4L * w * h + 8; ++guard) {
    int d = -1;
    for (int k = 0; k < 8; ++k) {
      const int cand = (start + k) % 8;
      if (inside(x + kDx[cand], y + kDy[cand])) {
        d = cand;
        break;
      }
    }
    if (d < 0) return 0.0;  // isolated pixel
    if (x == sx && y == sy) {
      if (first_dir < 0) {
        first_dir = d;
      } else if (d == first_dir) {
        break;
      }
    }
    length += (d % 2 == 0) ? 1.0 : std::numbers::sqrt2;
    x += kDx[d];
    y += kDy[d];
    start = (d % 2 == 0) ? (d + 6) % 8 : (d + 5) % 8;
  }
  return length;
}

std::vector<DarkBlob> dark_blobs(const std::vector<Pixel>& px, int w, int h,
                                 double dark_value) {
  std::vector<int> label(px.size(), -1);
  std::vector<DarkBlob> blobs;
  std::vector<std::pair<int, int>> starts;
  std::vector<int> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int i = y * w + x;
      if (label[i] >= 0 || px[i].hsv.v >= dark_value) continue;
      const int id = static_cast<int>(blobs.size());
      DarkBlob blob;
      label[i] = id;
      stack.push_back(i);
      while (!stack.empty()) {
        const int cur = stack.back();
        stack.pop_back();
        const int cx = cur % w, cy = cur / w;
        ++blob.area;
        blob.cx += cx + 0.5;
        blob.cy += cy + 0.5;
        for (int k = 0; k < 8; ++k) {
          const int nx = cx + kDx[k], ny = cy + kDy[k];
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const int n = ny * w + nx;
          if (label[n] < 0 && px[n].hsv.v < dark_value) {
            label[n] = id;
            stack.push_back(n);
          }
        }
      }
      blob.cx /= static_cast<double>(blob.area);
      blob.cy /= static_cast<double>(blob.area);
      blobs.push_back(blob);
      starts.emplace_back(x, y);
    }
  }
  for (std::size_t id = 0; id < blobs.size(); ++id) {
    blobs[id].perimeter = contour_length(label, w, h, static_cast<int>(id),
                                         starts[id].first, starts[id].second);
  }
  return blobs;
}

struct HalfStats {
  std::vector<double> r, g, b;

  long n() const { return static_cast<long>(r.size()); }
  void add(const Pixel& p) {
    r.push_back(p.r);
    g.push_back(p.g);
    b.push_back(p.b);
  }
  // Per-channel median: blurred glyph edges and the odd pixel of the other
  // half do not drag it the way a mean does.
  std::array<double, 3> typical() const {
    if (r.empty()) return {0, 0, 0};
    auto median = [](std::vector<double> v) {
      const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
      std::nth_element(v.begin(), mid, v.end());
      return *mid;
    };
    return {median(r), median(g), median(b)};
  }
};

}  // namespace

TagReading classify_tag(const CubeFace& face, const Detection& det,
                        const RecognizerParams& params) {
  TagReading reading;
  reading.detection = det;
  const RasterImage& img = face.image;

  const int x0 = std::clamp(static_cast<int>(std::floor(det.bbox.x_min)), 0, img.width());
  const int y0 = std::clamp(static_cast<int>(std::floor(det.bbox.y_min)), 0, img.height());
  const int x1 = std::clamp(static_cast<int>(std::ceil(det.bbox.x_max)), 0, img.width());
  const int y1 = std::clamp(static_cast<int>(std::ceil(det.bbox.y_max)), 0, img.height());
  const int w = x1 - x0, h = y1 - y0;
  if (w <= 0 || h <= 0 || static_cast<double>(w) * h < params.min_crop_area) {
    reading.failure = ReadingFailure::too_small;
    return reading;
  }

  std::vector<Pixel> px(static_cast<std::size_t>(w) * h);
  std::vector<std::uint8_t> chroma(px.size()), pal(px.size());
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* row = img.row(y0 + y);
    for (int x = 0; x < w; ++x) {
      const std::uint8_t* p = row + (x0 + x) * 3;
      Pixel& q = px[y * w + x];
      q.r = p[0] / 255.0;
      q.g = p[1] / 255.0;
      q.b = p[2] / 255.0;
      q.hsv = rgb_to_hsv(q.r, q.g, q.b);
      const bool highlight =
          q.hsv.s <= params.white_max_saturation && q.hsv.v >= params.white_min_value;
      chroma[y * w + x] = q.hsv.v >= params.dark_value && !highlight;
      pal[y * w + x] = chroma[y * w + x] && is_palette_color(q.hsv, params.palette);
    }
  }

  // Locator disk: the largest sufficiently round dark blob.
  const DarkBlob* circle = nullptr;
  const auto blobs = dark_blobs(px, w, h, params.dark_value);
  for (const DarkBlob& b : blobs) {
    if (b.area < params.min_circle_pixels || b.perimeter <= 0.0) continue;
    const double circ =
        4.0 * std::numbers::pi * static_cast<double>(b.area) / (b.perimeter * b.perimeter);
    if (circ < params.min_circularity) continue;
    if (!circle || b.area > circle->area) circle = &b;
  }

  if (!circle) {
    reading.failure = ReadingFailure::no_circle;
    return reading;
  }

  // Which pixels feed the half colors: palette pixels when there are enough
  // of them, otherwise every chroma pixel.
  auto collect = [&](auto&& in_half) {
    HalfStats all, palette_only;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const int i = y * w + x;
        if (!chroma[i] || !in_half(x, y)) continue;
        all.add(px[i]);
        if (pal[i]) palette_only.add(px[i]);
      }
    }
    if (palette_only.n() > 0 &&
        palette_only.n() >= params.palette_pixel_share * static_cast<double>(all.n())) {
      return palette_only;
    }
    return all;
  };

  HalfStats lead_stats, trail_stats;
  const double ox = circle->cx - w / 2.0, oy = circle->cy - h / 2.0;
  const double offset = std::hypot(ox, oy);
  if (offset >= params.min_circle_offset * std::min(w, h)) {
    // The disk sits on the tag's axis, so the color boundary is the line
    // through the centre perpendicular to the centre-to-disk direction.
    const double ux = ox / offset, uy = oy / offset;
    auto along = [&](int x, int y) { return (x + 0.5 - w / 2.0) * ux + (y + 0.5 - h / 2.0) * uy; };
    double reach = 0.0;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (chroma[y * w + x]) reach = std::max(reach, std::abs(along(x, y)));
      }
    }
    const double band = params.split_margin * reach;
    lead_stats = collect([&](int x, int y) { return along(x, y) > band; });
    trail_stats = collect([&](int x, int y) { return along(x, y) < -band; });
  } else {
    // Axis-aligned search: 0 splits top/bottom, 1 splits left/right; keep the
    // split whose halves differ most.
    struct Split {
      HalfStats first, second;
      double distance = -1.0;
    };
    std::array<Split, 2> splits;
    for (int ax = 0; ax < 2; ++ax) {
      const double mid = (ax == 0 ? h : w) / 2.0;
      const double band = params.split_margin * mid;
      auto coord = [ax](int x, int y) { return (ax == 0 ? y : x) + 0.5; };
      Split& sp = splits[ax];
      sp.first = collect([&](int x, int y) { return coord(x, y) < mid - band; });
      sp.second = collect([&](int x, int y) { return coord(x, y) >= mid + band; });
      if (sp.first.n() == 0 || sp.second.n() == 0) continue;
      const auto a = sp.first.typical(), b = sp.second.typical();
      sp.distance = std::hypot(a[0] - b[0], a[1] - b[1], a[2] - b[2]);
    }
    const int ax = splits[1].distance > splits[0].distance ? 1 : 0;
    const bool leading_first = (ax == 0 ? circle->cy : circle->cx) < (ax == 0 ? h : w) / 2.0;
    lead_stats = leading_first ? splits[ax].first : splits[ax].second;
    trail_stats = leading_first ? splits[ax].second : splits[ax].first;
  }
  if (lead_stats.n() == 0 || trail_stats.n() == 0) {
    reading.failure = ReadingFailure::no_color;
    return reading;
  }

  auto diagnose = [](const HalfStats& s) {
    HalfDiagnostics d;
    const auto m = s.typical();
    d.mean = rgb_to_hsv(m[0], m[1], m[2]);
    d.pixels = s.n();
    std::tie(d.nearest_digit, d.distance) = nearest_palette_digit(d.mean);
    return d;
  };
  HalfDiagnostics lead = diagnose(lead_stats);
  HalfDiagnostics trail = diagnose(trail_stats);

  // An imported class label only breaks near-ties.
  if (det.class_prior) {
    constexpr double kTieTolerance = 1e-3;
    const int pl = *det.class_prior / 10, pt = *det.class_prior % 10;
    const double dl = palette_distance(lead.mean, palette()[pl].color);
    const double dt = palette_distance(trail.mean, palette()[pt].color);
    if (dl - lead.distance <= kTieTolerance && dt - trail.distance <= kTieTolerance) {
      lead.nearest_digit = pl;
      lead.distance = dl;
      trail.nearest_digit = pt;
      trail.distance = dt;
    }
  }

  reading.leading = lead;
  reading.trailing = trail;
  reading.leading_digit = lead.nearest_digit;
  reading.trailing_digit = trail.nearest_digit;
  const int number = 10 * lead.nearest_digit + trail.nearest_digit;
  if (number < kMinTagNumber || number > kMaxTagNumber) {
    reading.failure = ReadingFailure::invalid_number;
    return reading;
  }
  reading.number = number;
  const double worst = std::max(lead.distance, trail.distance);
  reading.confidence =
      (1.0 - std::clamp(worst / params.d_max, 0.0, 1.0)) * det.confidence;
  return reading;
}

std::vector<TagReading> classify_batch(const FaceLookup& lookup,
                                       std::span<const Detection> detections,
                                       const RecognizerParams& params) {
  std::vector<TagReading> out;
  out.reserve(detections.size());
  for (const Detection& det : detections) {
    const RasterImage* img = lookup(det.image, det.face);
    if (!img) {
      TagReading r;
      r.detection = det;
      r.failure = ReadingFailure::too_small;
      out.push_back(std::move(r));
      continue;
    }
    out.push_back(classify_tag(CubeFace{det.face, *img}, det, params));
  }
  return out;
}

std::vector<TagReading> classify_batch(const CubeFaceSet& faces,
                                       std::span<const Detection> detections,
                                       const RecognizerParams& params) {
  return classify_batch(
      [&faces](std::string_view, FaceId id) { return &faces.face(id); }, detections,
      params);
}

nlohmann::ordered_json readings_to_json(std::span<const TagReading> readings) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const TagReading& r : readings) {
    nlohmann::ordered_json j;
    const auto& d = r.detection;
    j["image"] = d.image;
    j["face"] = face_name(d.face);
    j["bbox"] = {d.bbox.x_min, d.bbox.y_min, d.bbox.x_max, d.bbox.y_max};
    j["det_confidence"] = d.confidence;
    j["number"] = r.number ? nlohmann::ordered_json(*r.number) : nullptr;
    j["leading"] = r.leading_digit ? nlohmann::ordered_json(*r.leading_digit) : nullptr;
    j["trailing"] =
        r.trailing_digit ? nlohmann::ordered_json(*r.trailing_digit) : nullptr;
    j["confidence"] = r.confidence;
    j["failure_reason"] =
        r.failure ? nlohmann::ordered_json(failure_name(*r.failure)) : nullptr;
    j["source"] = source_name(d.source);
    arr.push_back(std::move(j));
  }
  return arr;
}

std::vector<TagReading> readings_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ParseError("readings: expected a JSON array", 0);
  std::vector<TagReading> out;
  int index = 0;
  auto opt_int = [](const nlohmann::json& item, const char* key) -> std::optional<int> {
    if (!item.contains(key) || item[key].is_null()) return std::nullopt;
    return item[key].get<int>();
  };
  for (const auto& item : j) {
    ++index;
    try {
      TagReading r;
      Detection& d = r.detection;
      d.image = item.at("image").get<std::string>();
      const auto face = parse_face(item.at("face").get<std::string>());
      if (!face) throw ParseError("unknown face", index);
      d.face = *face;
      const auto& b = item.at("bbox");
      if (!b.is_array() || b.size() != 4) throw ParseError("bbox needs 4 numbers", index);
      d.bbox = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                b[3].get<double>()};
      d.confidence = item.at("det_confidence").get<double>();
      d.source = item.value("source", std::string("rule")) == "imported"
                     ? DetectionSource::imported
                     : DetectionSource::rule;
      r.number = opt_int(item, "number");
      r.leading_digit = opt_int(item, "leading");
      r.trailing_digit = opt_int(item, "trailing");
      r.confidence = item.at("confidence").get<double>();
      if (item.contains("failure_reason") && !item["failure_reason"].is_null()) {
        r.failure = parse_failure(item["failure_reason"].get<std::string>());
        if (!r.failure) throw ParseError("unknown failure_reason", index);
      }
      if (r.number && (*r.number < kMinTagNumber || *r.number > kMaxTagNumber)) {
        throw ParseError("number outside 1..20", index);
      }
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("reading entry: ") + e.what(), index);
    }
  }
  return out;
}

}  // namespace digitour
