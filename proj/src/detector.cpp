#include "digitour/detector.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "digitour/error.hpp"

namespace digitour {

std::string_view source_name(DetectionSource s) {
  return s == DetectionSource::rule ? "rule" : "imported";
}

bool is_palette_color(const HsvColor& c, const DetectorParams& params) {
  if (c.s <= params.grey_max_saturation) {
    return std::abs(c.v - params.grey_value) <= params.grey_value_tolerance;
  }
  if (c.s < params.min_saturation || c.v < params.min_value) return false;
  for (const auto& entry : palette()) {
    if (entry.color.s < params.min_saturation) continue;
    double dh = std::abs(c.h - entry.color.h);
    dh = std::min(dh, 360.0 - dh);
    if (dh <= params.hue_tolerance_deg) return true;
  }
  return false;
}

std::vector<std::uint8_t> palette_mask(const RasterImage& image,
                                       const DetectorParams& params) {
  std::vector<std::uint8_t> mask(
      static_cast<std::size_t>(image.width()) * image.height(), 0);
  for (int y = 0; y < image.height(); ++y) {
    const std::uint8_t* row = image.row(y);
    std::uint8_t* out = &mask[static_cast<std::size_t>(y) * image.width()];
    for (int x = 0; x < image.width(); ++x) {
      const HsvColor c = rgb_to_hsv({row[3 * x], row[3 * x + 1], row[3 * x + 2]});
      out[x] = is_palette_color(c, params) ? 1 : 0;
    }
  }
  return mask;
}

namespace {

using Mask = std::vector<std::uint8_t>;

// 3x3 structuring element; out-of-bounds neighbours are ignored.
Mask morph(const Mask& in, int w, int h, bool dilate) {
  Mask tmp(in.size()), out(in.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      std::uint8_t v = in[i];
      if (x > 0) v = dilate ? std::max(v, in[i - 1]) : std::min(v, in[i - 1]);
      if (x + 1 < w) v = dilate ? std::max(v, in[i + 1]) : std::min(v, in[i + 1]);
      tmp[i] = v;
    }
  }
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      std::uint8_t v = tmp[i];
      if (y > 0) v = dilate ? std::max(v, tmp[i - w]) : std::min(v, tmp[i - w]);
      if (y + 1 < h) v = dilate ? std::max(v, tmp[i + w]) : std::min(v, tmp[i + w]);
      out[i] = v;
    }
  }
  return out;
}

struct Component {
  int x0, y0, x1, y1;  // inclusive pixel bounds
  long pixels;
};

std::vector<Component> connected_components(const Mask& mask, int w, int h) {
  std::vector<Component> comps;
  std::vector<std::uint8_t> seen(mask.size(), 0);
  std::vector<int> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int start = y * w + x;
      if (!mask[start] || seen[start]) continue;
      Component c{x, y, x, y, 0};
      seen[start] = 1;
      stack.push_back(start);
      while (!stack.empty()) {
        const int idx = stack.back();
        stack.pop_back();
        const int cx = idx % w, cy = idx / w;
        ++c.pixels;
        c.x0 = std::min(c.x0, cx);
        c.x1 = std::max(c.x1, cx);
        c.y0 = std::min(c.y0, cy);
        c.y1 = std::max(c.y1, cy);
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = cx + dx, ny = cy + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
            const int n = ny * w + nx;
            if (mask[n] && !seen[n]) {
              seen[n] = 1;
              stack.push_back(n);
            }
          }
        }
      }
      comps.push_back(c);
    }
  }
  return comps;
}

bool boxes_touch(const BBox& a, const BBox& b, double margin) {
  return a.x_min - margin <= b.x_max + margin && b.x_min - margin <= a.x_max + margin &&
         a.y_min - margin <= b.y_max + margin && b.y_min - margin <= a.y_max + margin;
}

std::vector<BBox> merge_touching(std::vector<BBox> boxes, double margin) {
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < boxes.size() && !changed; ++i) {
      for (std::size_t j = i + 1; j < boxes.size(); ++j) {
        if (boxes_touch(boxes[i], boxes[j], margin)) {
          boxes[i].x_min = std::min(boxes[i].x_min, boxes[j].x_min);
          boxes[i].y_min = std::min(boxes[i].y_min, boxes[j].y_min);
          boxes[i].x_max = std::max(boxes[i].x_max, boxes[j].x_max);
          boxes[i].y_max = std::max(boxes[i].y_max, boxes[j].y_max);
          boxes.erase(boxes.begin() + static_cast<std::ptrdiff_t>(j));
          changed = true;
          break;
        }
      }
    }
  }
  return boxes;
}

// Box mean over (2r+1)^2 pixels, edges clamped.
RasterImage box_smooth(const RasterImage& in, int r) {
  const int w = in.width(), h = in.height();
  std::vector<int> tmp(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* row = in.row(y);
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        int sum = 0;
        for (int d = -r; d <= r; ++d) sum += row[3 * std::clamp(x + d, 0, w - 1) + c];
        tmp[(static_cast<std::size_t>(y) * w + x) * 3 + c] = sum;
      }
    }
  }
  const int n = (2 * r + 1) * (2 * r + 1);
  RasterImage out(w, h);
  for (int y = 0; y < h; ++y) {
    std::uint8_t* row = out.row(y);
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) {
        int sum = 0;
        for (int d = -r; d <= r; ++d) {
          sum += tmp[(static_cast<std::size_t>(std::clamp(y + d, 0, h - 1)) * w + x) * 3 + c];
        }
        row[3 * x + c] = static_cast<std::uint8_t>((sum + n / 2) / n);
      }
    }
  }
  return out;
}

}  // namespace

std::vector<Detection> detect_tags(const CubeFace& face, const DetectorParams& params,
                                   std::string_view image_key) {
  const RasterImage& img = face.image;
  const int w = img.width(), h = img.height();
  std::vector<Detection> out;
  if (img.empty()) return out;

  // Colors are judged on a smoothed copy so sensor noise does not speckle the
  // mask; dark marks are thin and use the original pixels.
  const RasterImage smoothed =
      params.smooth_radius > 0 ? box_smooth(img, params.smooth_radius) : RasterImage();
  const RasterImage& color_src = params.smooth_radius > 0 ? smoothed : img;
  Mask raw(static_cast<std::size_t>(w) * h), dark(raw.size());
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* row = img.row(y);
    const std::uint8_t* crow = color_src.row(y);
    for (int x = 0; x < w; ++x) {
      const HsvColor c = rgb_to_hsv({crow[3 * x], crow[3 * x + 1], crow[3 * x + 2]});
      const std::size_t i = static_cast<std::size_t>(y) * w + x;
      raw[i] = is_palette_color(c, params) ? 1 : 0;
      const std::uint8_t mx = std::max({row[3 * x], row[3 * x + 1], row[3 * x + 2]});
      dark[i] = mx / 255.0 < params.dark_value ? 1 : 0;
    }
  }

  // Close, then open.
  Mask cleaned = morph(morph(raw, w, h, true), w, h, false);
  cleaned = morph(morph(cleaned, w, h, false), w, h, true);

  const double min_area = params.min_area(w);
  std::vector<BBox> boxes;
  for (const Component& c : connected_components(cleaned, w, h)) {
    const BBox b{static_cast<double>(c.x0), static_cast<double>(c.y0),
                 static_cast<double>(c.x1 + 1), static_cast<double>(c.y1 + 1)};
    // Specks cannot contribute a tag half; drop them before fusing.
    if (b.area() < min_area / 16.0) continue;
    boxes.push_back(b);
  }
  boxes = merge_touching(std::move(boxes), params.merge_margin_px);

  for (const BBox& b : boxes) {
    if (b.area() < min_area) continue;
    const double aspect = b.width() / b.height();
    if (aspect < params.min_aspect || aspect > params.max_aspect) continue;

    long in_mask = 0, in_dark = 0;
    for (int y = static_cast<int>(b.y_min); y < static_cast<int>(b.y_max); ++y) {
      for (int x = static_cast<int>(b.x_min); x < static_cast<int>(b.x_max); ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        in_mask += raw[i];
        in_dark += dark[i];
      }
    }
    // A tag carries its locator disk; palette-colored clutter usually has
    // nothing dark inside. Measured against the colored footprint so that
    // rotated tags (loose boxes) are not penalised.
    const double area = b.area();
    const double footprint = static_cast<double>(in_mask + in_dark);
    if (params.min_dark_fraction > 0.0 &&
        (footprint <= 0.0 || in_dark / footprint < params.min_dark_fraction)) {
      continue;
    }
    Detection d;
    d.image = std::string(image_key);
    d.face = face.id;
    d.bbox = b.clamped(w, h);
    d.confidence = std::clamp(in_mask / area, 0.0, 1.0);
    d.source = DetectionSource::rule;
    out.push_back(std::move(d));
  }

  std::sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.bbox.y_min != b.bbox.y_min) return a.bbox.y_min < b.bbox.y_min;
    return a.bbox.x_min < b.bbox.x_min;
  });
  return out;
}

namespace {

double parse_number(std::string_view token, int line, const char* what) {
  double value = 0.0;
  const auto* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, value);
  if (ec != std::errc() || ptr != end || !std::isfinite(value)) {
    throw ParseError(std::string("invalid ") + what + " '" + std::string(token) + "'",
                     line);
  }
  return value;
}

}  // namespace

std::vector<Detection> parse_yolo_detections(std::string_view text, int face_size,
                                             std::string_view image_key,
                                             FaceId face) {
  std::vector<Detection> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::vector<std::string> tok;
    for (std::string t; fields >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    if (tok.size() != 5 && tok.size() != 6) {
      throw ParseError("expected 5 or 6 fields, got " + std::to_string(tok.size()),
                       line_no);
    }
    const double cls = parse_number(tok[0], line_no, "class");
    if (cls < 0 || cls != std::floor(cls)) {
      throw ParseError("class must be a non-negative integer", line_no);
    }
    std::array<double, 4> v{};
    const char* names[] = {"cx", "cy", "w", "h"};
    for (int k = 0; k < 4; ++k) {
      v[k] = parse_number(tok[k + 1], line_no, names[k]);
      if (v[k] < 0.0 || v[k] > 1.0) {
        throw ParseError(std::string(names[k]) + " outside [0, 1]", line_no);
      }
    }
    double conf = 1.0;
    if (tok.size() == 6) {
      conf = parse_number(tok[5], line_no, "confidence");
      if (conf < 0.0 || conf > 1.0) {
        throw ParseError("confidence outside [0, 1]", line_no);
      }
    }
    if (v[2] <= 0.0 || v[3] <= 0.0) {
      throw ParseError("box width and height must be positive", line_no);
    }
    const double n = face_size;
    Detection d;
    d.image = std::string(image_key);
    d.face = face;
    d.bbox = BBox{(v[0] - v[2] / 2) * n, (v[1] - v[3] / 2) * n,
                  (v[0] + v[2] / 2) * n, (v[1] + v[3] / 2) * n}
                 .clamped(n, n);
    d.confidence = conf;
    d.source = DetectionSource::imported;
    const int tag = static_cast<int>(cls) + 1;
    if (tag >= kMinTagNumber && tag <= kMaxTagNumber) d.class_prior = tag;
    out.push_back(std::move(d));
  }
  return out;
}

namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::vector<Detection> import_yolo_file(const std::filesystem::path& path,
                                        int face_size, std::string_view image_key,
                                        FaceId face) {
  return parse_yolo_detections(read_text(path), face_size, image_key, face);
}

std::optional<std::pair<std::string, FaceId>> split_face_stem(std::string_view stem) {
  const auto pos = stem.rfind('_');
  if (pos == std::string_view::npos) return std::nullopt;
  const auto face = parse_face(stem.substr(pos + 1));
  if (!face) return std::nullopt;
  return std::make_pair(std::string(stem.substr(0, pos)), *face);
}

std::vector<Detection> import_detections(const std::filesystem::path& path,
                                         ImportFormat format, int face_size) {
  if (format == ImportFormat::json) {
    const std::string text = read_text(path);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(e.what(), 0);
    }
    return detections_from_json(j);
  }
  const auto parts = split_face_stem(path.stem().string());
  if (!parts) {
    throw ParseError("YOLO file name must be <image>_<face>.txt: " + path.string(), 0);
  }
  return import_yolo_file(path, face_size, parts->first, parts->second);
}

nlohmann::ordered_json detections_to_json(std::span<const Detection> dets) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const Detection& d : dets) {
    nlohmann::ordered_json j;
    j["image"] = d.image;
    j["face"] = face_name(d.face);
    j["bbox"] = {d.bbox.x_min, d.bbox.y_min, d.bbox.x_max, d.bbox.y_max};
    j["confidence"] = d.confidence;
    j["source"] = source_name(d.source);
    if (d.class_prior) j["class_prior"] = *d.class_prior;
    arr.push_back(std::move(j));
  }
  return arr;
}

std::vector<Detection> detections_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ParseError("detections: expected a JSON array", 0);
  std::vector<Detection> out;
  int index = 0;
  for (const auto& item : j) {
    ++index;
    try {
      Detection d;
      d.image = item.at("image").get<std::string>();
      const auto face = parse_face(item.at("face").get<std::string>());
      if (!face) throw ParseError("unknown face", index);
      d.face = *face;
      const auto& b = item.at("bbox");
      if (!b.is_array() || b.size() != 4) throw ParseError("bbox needs 4 numbers", index);
      d.bbox = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                b[3].get<double>()};
      d.confidence = item.at("confidence").get<double>();
      if (d.confidence < 0.0 || d.confidence > 1.0) {
        throw ParseError("confidence outside [0, 1]", index);
      }
      const std::string src = item.value("source", std::string("imported"));
      d.source = src == "rule" ? DetectionSource::rule : DetectionSource::imported;
      if (item.contains("class_prior") && !item["class_prior"].is_null()) {
        d.class_prior = item["class_prior"].get<int>();
      }
      out.push_back(std::move(d));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("detection entry: ") + e.what(), index);
    }
  }
  return out;
}

}  // namespace digitour
