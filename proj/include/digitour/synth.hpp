#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "digitour/bbox.hpp"
#include "digitour/image.hpp"
#include "digitour/projection.hpp"
#include "digitour/tour_builder.hpp"

namespace digitour {

constexpr double kTagSideMeters = 0.1524;  // 6 inches
constexpr double kMinTagSpacingMeters = 0.3;

enum class BackgroundKind { solid, gradient, noise, file };

struct Background {
  BackgroundKind kind = BackgroundKind::gradient;
  Rgb color{150, 160, 140};         // solid colour, gradient top, noise base
  Rgb color_bottom{110, 105, 95};   // gradient bottom
  double noise_amplitude = 0.1;     // relative brightness swing for `noise`
  int noise_cell_px = 64;
  std::filesystem::path file;       // equirectangular PNG for `file`
};

struct NoiseSpec {
  double gaussian_sigma = 0.0;    // in [0, 1] intensity units
  double brightness_delta = 0.0;  // rgb *= 1 + delta, delta in [-0.3, 0.3]
  double blur_sigma = 0.0;        // pixels
};

// Square tag lying flat on the floor. Floor frame: x right, z forward,
// camera at the origin.
struct TagPlacement {
  int number = 1;
  double floor_x_m = 0.0;
  double floor_z_m = 1.0;
  double rotation_deg = 0.0;
  double side_m = kTagSideMeters;
};

// Colored rectangle painted on the walls, axis-aligned in lon/lat.
struct WallRect {
  double lon_deg = 0.0;
  double lat_deg = 0.0;
  double width_deg = 4.0;
  double height_deg = 4.0;
  Rgb color;
};

struct SceneSpec {
  std::string image_id = "scene";
  double camera_height_m = 1.5;
  int width = 4096;
  int height = 2048;
  int face_size = 1024;  // cube face size the labels refer to
  Background background;
  std::vector<TagPlacement> tags;
  std::vector<WallRect> distractors;
  NoiseSpec noise;
  std::uint64_t seed = 0;
};

struct GroundTruthLabel {
  std::string image;
  FaceId face = FaceId::front;
  int tag_number = 0;
  BBox bbox;           // face pixels
  BBox equirect_bbox;  // x_min > x_max when wrapped
  bool wrapped = false;
  double visible_area_px = 0.0;
};

struct RenderedScene {
  RasterImage equirect;
  std::vector<GroundTruthLabel> labels;
};

struct FloorPoint {
  double x = 0.0;
  double z = 0.0;
};

// Corners in order (-,-), (+,-), (+,+), (-,+) of the tag's local frame.
std::array<FloorPoint, 4> tag_corners(const TagPlacement& tag);
// 64 points evenly spaced along the perimeter, starting at corner 0.
std::vector<FloorPoint> tag_boundary(const TagPlacement& tag, int count = 64);

Direction floor_direction(const FloorPoint& p, double camera_height_m);

// Throws InvalidScene (or InvalidTagNumber) if the spec breaks an invariant.
void validate_scene(const SceneSpec& spec);

std::vector<GroundTruthLabel> scene_labels(const SceneSpec& spec);

RenderedScene render_scene(const SceneSpec& spec);

// Dataset generation.

struct Range {
  double min = 0.0;
  double max = 0.0;
};

struct DatasetConfig {
  int n_properties = 10;
  int panos_min = 7;
  int panos_max = 7;
  int tags_per_pano = 3;  // minimum neighbours per panorama
  int width = 4096;
  int height = 2048;
  int face_size = 1024;
  double camera_height_m = 1.5;
  double tag_side_m = kTagSideMeters;
  Range tag_distance_m{0.8, 1.8};
  double tag_spacing_m = 0.45;
  double face_margin_px = 6.0;  // keep tags this far from face edges
  Range gaussian_sigma{0.0, 0.0};
  Range brightness_delta{0.0, 0.0};
  Range blur_sigma{0.0, 0.0};
  bool distractors = false;
  int distractors_per_pano = 6;
  bool random_anchors = false;  // anchors drawn from 1..20 instead of 1..n
  bool write_faces = true;
  std::uint64_t seed = 1;
};

DatasetConfig dataset_config_from_json(const nlohmann::json& j);
nlohmann::ordered_json dataset_config_to_json(const DatasetConfig& c);
std::string config_hash(const DatasetConfig& c);

struct SynthPanorama {
  PanoramaRecord record;
  SceneSpec scene;
  RenderedScene rendered;
};

struct SynthProperty {
  std::string id;
  std::vector<SynthPanorama> panoramas;
  std::vector<std::pair<std::string, std::string>> edges;  // sorted pano ids

  PropertyManifest manifest() const;
};

// Ring plus random chords until every node has degree >= min_degree (capped
// at n - 1). Edges are (i, j) with i < j, sorted.
std::vector<std::pair<int, int>> ring_with_chords(int n, int min_degree,
                                                  std::uint64_t seed);

// Scene specs only (cheap). Property index is 0-based.
std::vector<SynthPanorama> plan_property(const DatasetConfig& config, int property,
                                         std::vector<std::pair<int, int>>* edges = nullptr);

SynthProperty generate_property(const DatasetConfig& config, int property);

std::string property_id(int property);
std::string panorama_id(int pano);

// Writes the dataset layout under out_dir and returns the gt.json document.
nlohmann::ordered_json generate_dataset(const DatasetConfig& config,
                                        const std::filesystem::path& out_dir);

nlohmann::ordered_json labels_to_json(const std::vector<GroundTruthLabel>& labels);
std::vector<GroundTruthLabel> labels_from_json(const nlohmann::json& j,
                                               const std::string& image);

// YOLO text for one face: "class cx cy w h" per label, class = tag - 1.
std::string yolo_labels(const std::vector<GroundTruthLabel>& labels, FaceId face,
                        int face_size);

}  // namespace digitour
