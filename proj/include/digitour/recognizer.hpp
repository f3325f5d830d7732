#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "digitour/color_scheme.hpp"
#include "digitour/detector.hpp"
#include "digitour/projection.hpp"

namespace digitour {

enum class ReadingFailure { too_small, no_circle, no_color, invalid_number };

std::string_view failure_name(ReadingFailure f);
std::optional<ReadingFailure> parse_failure(std::string_view name);

struct HalfDiagnostics {
  HsvColor mean;  // representative color of the half (per-channel median RGB)
  int nearest_digit = -1;
  double distance = 0.0;  // to the nearest palette entry
  long pixels = 0;        // pixels that contributed to the mean
};

struct TagReading {
  Detection detection;
  std::optional<int> number;
  std::optional<int> leading_digit;
  std::optional<int> trailing_digit;
  double confidence = 0.0;
  std::optional<ReadingFailure> failure;
  std::optional<HalfDiagnostics> leading;
  std::optional<HalfDiagnostics> trailing;

  bool ok() const { return number.has_value(); }
};

struct RecognizerParams {
  double dark_value = 0.25;         // locator disk and numerals are below this
  double white_max_saturation = 0.15;
  double white_min_value = 0.85;    // highlights excluded from color means
  double min_circularity = 0.5;     // 4*pi*A / P^2
  double min_circle_pixels = 4.0;
  double d_max = 0.6;               // palette distance at which confidence hits 0
  double min_crop_area = 16.0 * 16.0;
  // Fraction of each half (measured from the split line) left out of the
  // color mean, so slightly rotated tags do not blend the two halves.
  double split_margin = 0.1;
  double min_circle_offset = 0.15;  // of the shorter crop side; closer falls back to axis search
  // Restrict color means to palette-mask pixels when at least this share of
  // the chroma pixels in a half qualifies.
  double palette_pixel_share = 0.25;
  DetectorParams palette;
};

// Distance used for nearest-palette matching:
// d^2 = (w_h * dh)^2 + ds^2 + dv^2 with dh the circular hue difference / 180
// and w_h = 2 * min(s_measured, s_palette, 1).
double palette_distance(const HsvColor& measured, const HsvColor& reference);

// Returns the nearest digit and its distance.
std::pair<int, double> nearest_palette_digit(const HsvColor& measured);

// Never throws for reading problems; failures are reported in the result.
TagReading classify_tag(const CubeFace& face, const Detection& det,
                        const RecognizerParams& params = {});

using FaceLookup =
    std::function<const RasterImage*(std::string_view image, FaceId face)>;

// Element-wise classify_tag preserving input order. Detections whose face
// cannot be resolved come back as too_small failures.
std::vector<TagReading> classify_batch(const FaceLookup& lookup,
                                       std::span<const Detection> detections,
                                       const RecognizerParams& params = {});
std::vector<TagReading> classify_batch(const CubeFaceSet& faces,
                                       std::span<const Detection> detections,
                                       const RecognizerParams& params = {});

// readings.json: [{image, face, bbox, det_confidence, number|null, leading,
// trailing, confidence, failure_reason|null}]
nlohmann::ordered_json readings_to_json(std::span<const TagReading> readings);
std::vector<TagReading> readings_from_json(const nlohmann::json& j);

}  // namespace digitour
