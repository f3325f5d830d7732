#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "digitour/bbox.hpp"
#include "digitour/recognizer.hpp"

namespace digitour {

struct PanoramaRecord {
  std::string id;
  std::string file;
  int width = 0;
  int height = 0;
  int capture_index = 1;
  int anchor_tag = 1;

  friend bool operator==(const PanoramaRecord&, const PanoramaRecord&) = default;
};

struct Hotspot {
  std::string panorama_id;
  int tag_number = 0;
  BBox equirect_bbox;  // x_min > x_max when wrapped
  bool wrapped = false;
  double yaw_deg = 0.0;    // [-180, 180)
  double pitch_deg = 0.0;  // [-90, 90]
  std::optional<std::string> target_panorama_id;
  double confidence = 0.0;

  friend bool operator==(const Hotspot&, const Hotspot&) = default;
};

struct TourGraph {
  std::string property_id;
  std::vector<PanoramaRecord> panoramas;
  std::vector<Hotspot> hotspots;
  std::vector<std::string> warnings;
  std::string config_hash;  // optional provenance, empty when unset

  friend bool operator==(const TourGraph&, const TourGraph&) = default;
};

struct BackProjection {
  BBox equirect_bbox;
  bool wrapped = false;
  double yaw_deg = 0.0;
  double pitch_deg = 0.0;
};

// Maps the detection box (4 corners + 4 edge midpoints) into the panorama. A box
// containing the nadir or zenith spans all longitudes and gets pitch -90 / +90.
BackProjection backproject_reading(const TagReading& reading, int face_size,
                                   int width, int height);

// Readings keyed by panorama id. Throws InvalidProperty when panoramas is
// empty, ids repeat, or anchor tags repeat.
TourGraph build_tour(const std::string& property_id,
                     std::span<const PanoramaRecord> panoramas,
                     const std::map<std::string, std::vector<TagReading>>& readings,
                     int face_size);

// Undirected edges {a, b} (a < b) over panoramas realised by hotspots with a
// target.
std::vector<std::pair<std::string, std::string>> undirected_edges(const TourGraph& g);
int connected_component_count(const TourGraph& g);

nlohmann::ordered_json tour_to_json(const TourGraph& g);
TourGraph tour_from_json(const nlohmann::json& j);

// Writes the tour JSON (2-space indent, trailing newline). Throws IoError.
std::filesystem::path export_tour(const TourGraph& g, const std::filesystem::path& out);

// Property manifest: {"property_id", "panoramas":[{"id","file","capture_index",
// "anchor_tag","width","height"}]}. Missing capture_index defaults to list
// order, missing anchor_tag to capture_index.
struct PropertyManifest {
  std::string property_id;
  std::vector<PanoramaRecord> panoramas;
};

PropertyManifest manifest_from_json(const nlohmann::json& j);
nlohmann::ordered_json manifest_to_json(const PropertyManifest& m);

}  // namespace digitour
