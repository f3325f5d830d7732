#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "digitour/bbox.hpp"
#include "digitour/color_scheme.hpp"
#include "digitour/projection.hpp"

namespace digitour {

enum class DetectionSource { rule, imported };

std::string_view source_name(DetectionSource s);

struct Detection {
  std::string image;  // panorama key, e.g. "prop01/pano03"
  FaceId face = FaceId::front;
  BBox bbox;
  double confidence = 0.0;
  DetectionSource source = DetectionSource::rule;
  // Tag number implied by an imported class label; only a tie-break hint for
  // the recognizer.
  std::optional<int> class_prior;
};

struct DetectorParams {
  double hue_tolerance_deg = 14.0;
  double min_saturation = 0.2;       // hue rule applies at or above this
  double min_value = 0.3;            // palette pixels are never this dark
  double grey_max_saturation = 0.15;
  double grey_value = 0.64;
  double grey_value_tolerance = 0.18;
  double min_area_at_1024 = 24.0 * 24.0;  // scaled by (face_size / 1024)^2
  double min_aspect = 0.33;
  double max_aspect = 3.0;
  double merge_margin_px = 2.0;
  int smooth_radius = 1;  // box mean applied before the color test; 0 disables
  // Tag verification: share of box pixels darker than dark_value (the
  // locator disk and numerals). 0 disables the check.
  double min_dark_fraction = 0.02;  // dark pixels / (palette + dark pixels) in the box
  double dark_value = 0.25;

  double min_area(int face_size) const {
    const double s = face_size / 1024.0;
    return min_area_at_1024 * s * s;
  }
};

// Per-pixel union mask of the ten palette colors (1 = palette pixel).
std::vector<std::uint8_t> palette_mask(const RasterImage& image,
                                       const DetectorParams& params);
bool is_palette_color(const HsvColor& c, const DetectorParams& params);

// Sorted by confidence descending, ties by (y_min, x_min). Boxes are clamped
// to the face bounds.
std::vector<Detection> detect_tags(const CubeFace& face,
                                   const DetectorParams& params = {},
                                   std::string_view image_key = {});

enum class ImportFormat { yolo_txt, json };

// YOLO lines "<class> <cx> <cy> <w> <h> [conf]" in normalized coordinates,
// denormalized against face_size. Throws ParseError (with line number) on a
// malformed line or an out-of-range value, IoError when unreadable.
std::vector<Detection> parse_yolo_detections(std::string_view text, int face_size,
                                             std::string_view image_key,
                                             FaceId face);
std::vector<Detection> import_yolo_file(const std::filesystem::path& path,
                                        int face_size, std::string_view image_key,
                                        FaceId face);

// For yolo_txt the file stem must be "<image>_<face>"; for json the file
// follows the detections.json schema.
std::vector<Detection> import_detections(const std::filesystem::path& path,
                                         ImportFormat format, int face_size);

// detections.json: [{image, face, bbox:[x_min,y_min,x_max,y_max], confidence,
// source}], plus "class_prior" when present.
nlohmann::ordered_json detections_to_json(std::span<const Detection> dets);
std::vector<Detection> detections_from_json(const nlohmann::json& j);

// Splits "<image>_<face>" into its parts; nullopt when the suffix is not a
// face name.
std::optional<std::pair<std::string, FaceId>> split_face_stem(std::string_view stem);

}  // namespace digitour
