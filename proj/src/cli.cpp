#include "digitour/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>

#include "digitour/color_scheme.hpp"
#include "digitour/error.hpp"
#include "digitour/hash.hpp"
#include "digitour/metrics.hpp"
#include "digitour/parallel.hpp"
#include "digitour/projection.hpp"
#include "digitour/synth.hpp"
#include "digitour/tour_builder.hpp"

namespace digitour {

namespace fs = std::filesystem;

namespace {

struct DetectorField {
  const char* name;
  double DetectorParams::*member;
};

constexpr DetectorField kDetectorFields[] = {
    {"hue_tolerance_deg", &DetectorParams::hue_tolerance_deg},
    {"min_saturation", &DetectorParams::min_saturation},
    {"min_value", &DetectorParams::min_value},
    {"grey_max_saturation", &DetectorParams::grey_max_saturation},
    {"grey_value", &DetectorParams::grey_value},
    {"grey_value_tolerance", &DetectorParams::grey_value_tolerance},
    {"min_area_at_1024", &DetectorParams::min_area_at_1024},
    {"min_aspect", &DetectorParams::min_aspect},
    {"max_aspect", &DetectorParams::max_aspect},
    {"merge_margin_px", &DetectorParams::merge_margin_px},
    {"min_dark_fraction", &DetectorParams::min_dark_fraction},
    {"dark_value", &DetectorParams::dark_value},
};

struct RecognizerField {
  const char* name;
  double RecognizerParams::*member;
};

constexpr RecognizerField kRecognizerFields[] = {
    {"dark_value", &RecognizerParams::dark_value},
    {"white_max_saturation", &RecognizerParams::white_max_saturation},
    {"white_min_value", &RecognizerParams::white_min_value},
    {"min_circularity", &RecognizerParams::min_circularity},
    {"min_circle_pixels", &RecognizerParams::min_circle_pixels},
    {"d_max", &RecognizerParams::d_max},
    {"min_crop_area", &RecognizerParams::min_crop_area},
    {"split_margin", &RecognizerParams::split_margin},
    {"min_circle_offset", &RecognizerParams::min_circle_offset},
    {"palette_pixel_share", &RecognizerParams::palette_pixel_share},
};

template <typename Params, typename Field, std::size_t N>
void read_fields(const nlohmann::json& j, const char* section, Params& p,
                 const Field (&fields)[N]) {
  if (!j.is_object()) throw InvalidConfig(std::string(section) + " must be an object");
  for (const auto& [key, value] : j.items()) {
    const auto it = std::find_if(std::begin(fields), std::end(fields),
                                 [&](const Field& f) { return key == f.name; });
    if (it == std::end(fields)) {
      throw InvalidConfig("unknown " + std::string(section) + " key: " + key);
    }
    if (!value.is_number()) throw InvalidConfig(std::string(section) + "." + key + " must be a number");
    p.*(it->member) = value.template get<double>();
  }
}

void require_range(double v, double lo, double hi, const std::string& name) {
  if (!(v >= lo && v <= hi)) {
    std::ostringstream os;
    os << name << " = " << v << " outside [" << lo << ", " << hi << "]";
    throw InvalidConfig(os.str());
  }
}

}  // namespace

void validate_pipeline_config(const PipelineConfig& c) {
  if (c.face_size < 16) throw InvalidConfig("face_size must be >= 16");
  if (!(c.iou > 0.0 && c.iou <= 1.0)) throw InvalidConfig("iou must lie in (0, 1]");
  const DetectorParams& d = c.detector;
  require_range(d.hue_tolerance_deg, 0.0, 180.0, "detector.hue_tolerance_deg");
  for (double DetectorParams::*m :
       {&DetectorParams::min_saturation, &DetectorParams::min_value,
        &DetectorParams::grey_max_saturation, &DetectorParams::grey_value,
        &DetectorParams::grey_value_tolerance, &DetectorParams::min_dark_fraction,
        &DetectorParams::dark_value}) {
    require_range(d.*m, 0.0, 1.0, "detector unit-interval parameter");
  }
  require_range(d.min_area_at_1024, 0.0, 1024.0 * 1024.0, "detector.min_area_at_1024");
  require_range(d.min_aspect, 1e-6, d.max_aspect, "detector.min_aspect");
  require_range(d.merge_margin_px, 0.0, 1e6, "detector.merge_margin_px");
  require_range(d.smooth_radius, 0, 8, "detector.smooth_radius");
  const RecognizerParams& r = c.recognizer;
  for (double RecognizerParams::*m :
       {&RecognizerParams::dark_value, &RecognizerParams::white_max_saturation,
        &RecognizerParams::white_min_value, &RecognizerParams::min_circularity,
        &RecognizerParams::palette_pixel_share}) {
    require_range(r.*m, 0.0, 1.0, "recognizer unit-interval parameter");
  }
  require_range(r.split_margin, 0.0, 0.9, "recognizer.split_margin");
  require_range(r.min_circle_offset, 0.0, 0.5, "recognizer.min_circle_offset");
  require_range(r.min_circle_pixels, 0.0, 1e9, "recognizer.min_circle_pixels");
  require_range(r.d_max, 1e-9, 1e9, "recognizer.d_max");
  require_range(r.min_crop_area, 0.0, 1e12, "recognizer.min_crop_area");
}

PipelineConfig pipeline_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw InvalidConfig("pipeline config must be a JSON object");
  PipelineConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "face_size") {
      if (!value.is_number_integer()) throw InvalidConfig("face_size must be an integer");
      c.face_size = value.get<int>();
    } else if (key == "iou") {
      if (!value.is_number()) throw InvalidConfig("iou must be a number");
      c.iou = value.get<double>();
    } else if (key == "detector") {
      nlohmann::json rest = value;
      if (rest.is_object() && rest.contains("smooth_radius")) {
        if (!rest["smooth_radius"].is_number_integer()) {
          throw InvalidConfig("detector.smooth_radius must be an integer");
        }
        c.detector.smooth_radius = rest["smooth_radius"].get<int>();
        rest.erase("smooth_radius");
      }
      read_fields(rest, "detector", c.detector, kDetectorFields);
    } else if (key == "recognizer") {
      read_fields(value, "recognizer", c.recognizer, kRecognizerFields);
    } else {
      throw InvalidConfig("unknown pipeline config key: " + key);
    }
  }
  // The recognizer restricts its color statistics with the detector's
  // palette rule.
  c.recognizer.palette = c.detector;
  validate_pipeline_config(c);
  return c;
}

nlohmann::ordered_json pipeline_config_to_json(const PipelineConfig& c) {
  nlohmann::ordered_json j;
  j["face_size"] = c.face_size;
  j["iou"] = c.iou;
  nlohmann::ordered_json d, r;
  for (const auto& f : kDetectorFields) d[f.name] = c.detector.*(f.member);
  d["smooth_radius"] = c.detector.smooth_radius;
  for (const auto& f : kRecognizerFields) r[f.name] = c.recognizer.*(f.member);
  j["detector"] = d;
  j["recognizer"] = r;
  return j;
}

std::string pipeline_config_hash(const PipelineConfig& c) {
  return hex64(fnv1a64(pipeline_config_to_json(c).dump()));
}

namespace {

nlohmann::json read_json_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  try {
    return nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

void write_json_file(const fs::path& path, const nlohmann::ordered_json& j) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create " + path.parent_path().string());
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  f << j.dump(2) << '\n';
  if (!f) throw IoError("failed writing " + path.string());
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

void require_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir.string());
}

std::string face_file(const std::string& pano, FaceId f) {
  return pano + "_" + std::string(face_name(f)) + ".png";
}

// Strip "<property>/" (or any directory part) from an image key.
std::string pano_of(const std::string& image_key) {
  const auto slash = image_key.rfind('/');
  return slash == std::string::npos ? image_key : image_key.substr(slash + 1);
}

std::string image_key(const std::string& property, const std::string& pano) {
  return property.empty() ? pano : property + "/" + pano;
}

struct FaceFile {
  std::string pano;
  FaceId face;
  fs::path path;
};

std::vector<FaceFile> list_faces(const fs::path& dir) {
  require_dir(dir);
  std::vector<FaceFile> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != ".png") continue;
    const auto parts = split_face_stem(entry.path().stem().string());
    if (!parts) continue;
    out.push_back({parts->first, parts->second, entry.path()});
  }
  std::sort(out.begin(), out.end(), [](const FaceFile& a, const FaceFile& b) {
    if (a.pano != b.pano) return a.pano < b.pano;
    return static_cast<int>(a.face) < static_cast<int>(b.face);
  });
  return out;
}

CubeFaceSet load_faces(const fs::path& dir, const std::string& pano) {
  std::array<RasterImage, 6> images;
  for (FaceId f : kAllFaces) images[static_cast<int>(f)] = read_png(dir / face_file(pano, f));
  return CubeFaceSet(std::move(images));
}

void write_faces(const CubeFaceSet& faces, const fs::path& dir, const std::string& pano) {
  make_dirs(dir);
  for (FaceId f : kAllFaces) write_png(faces.face(f), dir / face_file(pano, f));
}

std::vector<Detection> detect_all_faces(const CubeFaceSet& faces, const std::string& key,
                                        const DetectorParams& params) {
  std::array<std::vector<Detection>, 6> per_face;
  parallel_for(0, 6, [&](int f) {
    per_face[f] = detect_tags(faces.cube_face(kAllFaces[f]), params, key);
  });
  std::vector<Detection> out;
  for (auto& v : per_face) out.insert(out.end(), v.begin(), v.end());
  return out;
}

PipelineConfig load_config(const std::string& path, int face_size_flag, double iou_flag) {
  PipelineConfig c;
  if (!path.empty()) c = pipeline_config_from_json(read_json_file(path));
  if (face_size_flag > 0) c.face_size = face_size_flag;
  if (iou_flag > 0) c.iou = iou_flag;
  c.recognizer.palette = c.detector;
  validate_pipeline_config(c);
  return c;
}

// Panorama dimensions: from the manifest, else from the PNG header next to it.
void fill_dimensions(PropertyManifest& m, const fs::path& base) {
  for (auto& p : m.panoramas) {
    if (p.width > 0 && p.height > 0) continue;
    std::tie(p.width, p.height) = png_dimensions(base / p.file);
  }
}

TourGraph tour_from_readings(const PropertyManifest& m, const std::vector<TagReading>& readings,
                             const PipelineConfig& cfg) {
  std::map<std::string, std::vector<TagReading>> by_pano;
  const std::string prefix = m.property_id + "/";
  for (const auto& r : readings) {
    std::string key = r.detection.image;
    if (key.rfind(prefix, 0) == 0) {
      key = key.substr(prefix.size());
    } else if (key.find('/') != std::string::npos) {
      throw InvalidProperty("reading for " + key + " does not belong to property " +
                            m.property_id);
    }
    by_pano[key].push_back(r);
  }
  TourGraph g = build_tour(m.property_id, m.panoramas, by_pano, cfg.face_size);
  g.config_hash = pipeline_config_hash(cfg);
  return g;
}

void report_warnings(const TourGraph& g) {
  for (const auto& w : g.warnings) std::cerr << "warning: " << w << '\n';
}

std::vector<int> parse_numbers(const std::string& spec) {
  std::vector<int> out;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const auto dash = item.find('-');
    try {
      if (dash == std::string::npos) {
        out.push_back(std::stoi(item));
      } else {
        const int a = std::stoi(item.substr(0, dash)), b = std::stoi(item.substr(dash + 1));
        if (b < a) throw InvalidConfig("bad range " + item);
        for (int n = a; n <= b; ++n) out.push_back(n);
      }
    } catch (const std::logic_error&) {
      throw InvalidConfig("bad tag list entry '" + item + "'");
    }
  }
  return out;
}

struct GtData {
  std::vector<LabeledBox> boxes;
  std::map<std::string, std::string> property_of;
  std::string config_hash;
};

GtData load_gt(const nlohmann::json& gt) {
  GtData out;
  try {
    out.config_hash = gt.value("config_hash", std::string());
    for (const auto& prop : gt.at("properties")) {
      const std::string pid = prop.at("id").get<std::string>();
      for (const auto& pano : prop.at("panoramas")) {
        const std::string key = pid + "/" + pano.at("id").get<std::string>();
        out.property_of[key] = pid;
        for (const auto& l : labels_from_json(pano.at("labels"), key)) {
          out.boxes.push_back({l.image, l.face, l.bbox, l.tag_number});
        }
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("gt: ") + e.what(), 0);
  }
  return out;
}

}  // namespace

int run_subcommand(const std::vector<std::string>& args) {
  CLI::App app{"Numbered fiducial tags to virtual tours: tag generation, projection, "
               "detection, recognition, tour assembly, synthetic data and evaluation."};
  app.name(args.empty() ? "digitour" : fs::path(args[0]).filename().string());
  app.require_subcommand(1);

  std::string config_path;
  int face_size = 0;

  // gen-tags
  auto* gen = app.add_subcommand("gen-tags", "Render tag PNGs (tag_NN.png)");
  std::string numbers = "1-20";
  int side = 256;
  std::string gen_out;
  gen->add_option("--numbers", numbers, "Tag numbers, e.g. 1-20 or 1,5,7")->capture_default_str();
  gen->add_option("--side", side, "Tag side in pixels (>= 64)")->capture_default_str();
  gen->add_option("--out", gen_out, "Output directory")->required();

  // to-cubemap
  auto* tocube = app.add_subcommand("to-cubemap", "Project an equirectangular PNG to six faces");
  std::string pano_path, cube_out;
  tocube->add_option("pano", pano_path, "Equirectangular PNG")->required();
  tocube->add_option("--face-size", face_size, "Face size in pixels (default 1024)");
  tocube->add_option("--out", cube_out, "Output directory for <stem>_<face>.png")->required();
  tocube->add_option("--config", config_path, "Pipeline config JSON");

  // to-equirect
  auto* toeq = app.add_subcommand("to-equirect", "Reassemble six faces into a panorama");
  std::string eq_faces, eq_stem, eq_out;
  int eq_w = 0, eq_h = 0;
  toeq->add_option("--faces", eq_faces, "Directory with <stem>_<face>.png")->required();
  toeq->add_option("--stem", eq_stem, "Panorama stem")->required();
  toeq->add_option("--width", eq_w, "Output width (default 4 x face size)");
  toeq->add_option("--height", eq_h, "Output height (default width / 2)");
  toeq->add_option("--out", eq_out, "Output PNG")->required();

  // detect
  auto* det = app.add_subcommand("detect", "Detect tags on cube faces");
  std::string det_faces, det_property, det_out, det_yolo, det_json;
  det->add_option("--faces", det_faces, "Directory with <pano>_<face>.png");
  det->add_option("--property", det_property, "Property id prefixed to image keys");
  det->add_option("--out", det_out, "detections.json")->required();
  det->add_option("--import-yolo", det_yolo, "Import YOLO txt files (<pano>_<face>.txt) from a directory");
  det->add_option("--import-json", det_json, "Import a detections.json file");
  det->add_option("--face-size", face_size, "Face size for YOLO import (default 1024)");
  det->add_option("--config", config_path, "Pipeline config JSON");

  // recognize
  auto* rec = app.add_subcommand("recognize", "Read tag numbers from detections");
  std::string rec_faces, rec_dets, rec_out;
  rec->add_option("--faces", rec_faces, "Directory with <pano>_<face>.png")->required();
  rec->add_option("--detections", rec_dets, "detections.json")->required();
  rec->add_option("--out", rec_out, "readings.json")->required();
  rec->add_option("--config", config_path, "Pipeline config JSON");

  // build-tour
  auto* tour = app.add_subcommand("build-tour", "Assemble tour.json from readings");
  std::string tour_manifest, tour_readings, tour_out;
  tour->add_option("--manifest", tour_manifest, "Property manifest JSON")->required();
  tour->add_option("--readings", tour_readings, "readings.json")->required();
  tour->add_option("--face-size", face_size, "Face size the readings refer to (default 1024)");
  tour->add_option("--out", tour_out, "tour.json")->required();
  tour->add_option("--config", config_path, "Pipeline config JSON");

  // synth
  auto* syn = app.add_subcommand("synth", "Generate a synthetic dataset with ground truth");
  std::string syn_config, syn_out;
  std::optional<std::uint64_t> syn_seed;
  std::optional<int> syn_props, syn_panos;
  syn->add_option("--config", syn_config, "Dataset config JSON");
  syn->add_option("--out", syn_out, "Dataset directory")->required();
  syn->add_option("--seed", syn_seed, "Override the config seed");
  syn->add_option("--properties", syn_props, "Override n_properties");
  syn->add_option("--panos", syn_panos, "Override panos_per_property");

  // eval
  auto* ev = app.add_subcommand("eval", "Score readings against ground truth");
  std::string ev_gt, ev_out = "report.json";
  std::vector<std::string> ev_pred;
  double ev_iou = 0.5;
  bool ev_coco = false, ev_per_prop = false;
  ev->add_option("--gt", ev_gt, "gt.json from synth")->required();
  ev->add_option("--pred", ev_pred, "readings.json (repeatable)")->required();
  ev->add_option("--iou", ev_iou, "IoU threshold")->capture_default_str();
  ev->add_flag("--coco-range", ev_coco, "Also report the mean over IoU 0.50:0.95");
  ev->add_flag("--per-property", ev_per_prop, "Include per-property results");
  ev->add_option("--out", ev_out, "Report path")->capture_default_str();

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "to-cubemap, detect, recognize and build-tour for one property");
  std::string pipe_in, pipe_manifest, pipe_out;
  pipe->add_option("--in", pipe_in, "Property directory with panoramas")->required();
  pipe->add_option("--manifest", pipe_manifest, "Property manifest JSON")->required();
  pipe->add_option("--out", pipe_out, "Output directory")->required();
  pipe->add_option("--face-size", face_size, "Face size (default 1024)");
  pipe->add_option("--config", config_path, "Pipeline config JSON");

  std::vector<std::string> rev(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
  std::reverse(rev.begin(), rev.end());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    std::cout << (app.get_subcommands().empty() ? app.help() : app.get_subcommands()[0]->help());
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    std::cout << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    const auto subs = app.get_subcommands();
    std::cerr << (subs.empty() ? app.help() : subs[0]->help());
    return kExitValidation;
  }

  try {
    if (gen->parsed()) {
      if (side < kMinTagSide) throw InvalidConfig("--side must be >= 64");
      const auto list = parse_numbers(numbers);
      const auto written = write_tag_sheet(list, gen_out, side);
      std::cerr << "wrote " << written.size() << " tags to " << gen_out << '\n';
    } else if (tocube->parsed()) {
      const PipelineConfig cfg = load_config(config_path, face_size, 0);
      const RasterImage eq = read_png(pano_path);
      const CubeFaceSet faces = equirect_to_cubemap(eq, cfg.face_size);
      write_faces(faces, cube_out, fs::path(pano_path).stem().string());
    } else if (toeq->parsed()) {
      const CubeFaceSet faces = load_faces(eq_faces, eq_stem);
      const int w = eq_w > 0 ? eq_w : 4 * faces.face_size();
      const int h = eq_h > 0 ? eq_h : w / 2;
      write_png(cubemap_to_equirect(faces, w, h), eq_out);
    } else if (det->parsed()) {
      const PipelineConfig cfg = load_config(config_path, face_size, 0);
      std::vector<Detection> dets;
      if (!det_json.empty()) {
        dets = import_detections(det_json, ImportFormat::json, cfg.face_size);
      } else if (!det_yolo.empty()) {
        require_dir(det_yolo);
        std::vector<fs::path> files;
        for (const auto& e : fs::directory_iterator(det_yolo)) {
          if (e.is_regular_file() && e.path().extension() == ".txt") files.push_back(e.path());
        }
        std::sort(files.begin(), files.end());
        for (const auto& f : files) {
          for (auto d : import_detections(f, ImportFormat::yolo_txt, cfg.face_size)) {
            d.image = image_key(det_property, d.image);
            dets.push_back(std::move(d));
          }
        }
      } else {
        if (det_faces.empty()) throw InvalidConfig("detect needs --faces or an import option");
        const auto files = list_faces(det_faces);
        std::vector<std::vector<Detection>> per_file(files.size());
        parallel_for(0, static_cast<int>(files.size()), [&](int i) {
          const RasterImage img = read_png(files[i].path);
          per_file[i] = detect_tags(CubeFace{files[i].face, img}, cfg.detector,
                                    image_key(det_property, files[i].pano));
        });
        for (auto& v : per_file) dets.insert(dets.end(), v.begin(), v.end());
      }
      write_json_file(det_out, detections_to_json(dets));
      std::cerr << dets.size() << " detections\n";
    } else if (rec->parsed()) {
      const PipelineConfig cfg = load_config(config_path, 0, 0);
      require_dir(rec_faces);
      const auto dets = detections_from_json(read_json_file(rec_dets));
      std::map<std::string, std::unique_ptr<RasterImage>> cache;
      const FaceLookup lookup = [&](std::string_view image, FaceId f) -> const RasterImage* {
        const fs::path path = fs::path(rec_faces) / face_file(pano_of(std::string(image)), f);
        auto& slot = cache[path.string()];
        if (!slot) {
          if (!fs::exists(path)) throw IoError("missing face image " + path.string());
          slot = std::make_unique<RasterImage>(read_png(path));
        }
        return slot.get();
      };
      const auto readings = classify_batch(lookup, dets, cfg.recognizer);
      write_json_file(rec_out, readings_to_json(readings));
      const auto ok = std::count_if(readings.begin(), readings.end(),
                                    [](const TagReading& r) { return r.ok(); });
      std::cerr << ok << " of " << readings.size() << " readings resolved\n";
    } else if (tour->parsed()) {
      const PipelineConfig cfg = load_config(config_path, face_size, 0);
      PropertyManifest m = manifest_from_json(read_json_file(tour_manifest));
      fill_dimensions(m, fs::path(tour_manifest).parent_path());
      const auto readings = readings_from_json(read_json_file(tour_readings));
      const TourGraph g = tour_from_readings(m, readings, cfg);
      export_tour(g, tour_out);
      report_warnings(g);
    } else if (syn->parsed()) {
      DatasetConfig c;
      nlohmann::json j = syn_config.empty() ? nlohmann::json::object() : read_json_file(syn_config);
      if (syn_seed) j["seed"] = *syn_seed;
      if (syn_props) j["n_properties"] = *syn_props;
      if (syn_panos) j["panos_per_property"] = *syn_panos;
      c = dataset_config_from_json(j);
      const auto gt = generate_dataset(c, syn_out);
      std::cerr << "wrote " << gt["properties"].size() << " properties to " << syn_out
                << " (config " << gt["config_hash"].get<std::string>() << ")\n";
    } else if (ev->parsed()) {
      if (!(ev_iou > 0.0 && ev_iou <= 1.0)) throw InvalidConfig("--iou must lie in (0, 1]");
      const GtData gt = load_gt(read_json_file(ev_gt));
      std::vector<TagReading> readings;
      for (const auto& p : ev_pred) {
        auto r = readings_from_json(read_json_file(p));
        readings.insert(readings.end(), r.begin(), r.end());
      }
      EvalOptions opt;
      opt.iou = ev_iou;
      opt.coco_range = ev_coco;
      opt.per_property = ev_per_prop;
      nlohmann::ordered_json report = evaluation_report(readings, gt.boxes, gt.property_of, opt);
      nlohmann::ordered_json settings = {
          {"iou", ev_iou}, {"coco_range", ev_coco}, {"per_property", ev_per_prop}};
      report["metadata"]["config_hash"] = hex64(fnv1a64(settings.dump()));
      report["metadata"]["dataset_config_hash"] = gt.config_hash;
      write_json_file(ev_out, report);
      const auto& e2e = report["end_to_end"];
      std::cerr << "P " << e2e["P"].get<double>() << "  R " << e2e["R"].get<double>()
                << "  f1 " << e2e["f1"].get<double>() << "  mAP " << e2e["mAP"].get<double>()
                << "  property accuracy " << report["property_accuracy"].get<double>() << '\n';
    } else if (pipe->parsed()) {
      const PipelineConfig cfg = load_config(config_path, face_size, 0);
      require_dir(pipe_in);
      PropertyManifest m = manifest_from_json(read_json_file(pipe_manifest));
      const fs::path out = pipe_out;
      make_dirs(out);
      std::vector<Detection> all_dets;
      std::vector<TagReading> all_readings;
      for (auto& p : m.panoramas) {
        const RasterImage eq = read_png(fs::path(pipe_in) / p.file);
        if (p.width <= 0 || p.height <= 0) {
          p.width = eq.width();
          p.height = eq.height();
        }
        const CubeFaceSet faces = equirect_to_cubemap(eq, cfg.face_size);
        write_faces(faces, out / "faces", p.id);
        const auto dets = detect_all_faces(faces, image_key(m.property_id, p.id), cfg.detector);
        const auto readings = classify_batch(faces, dets, cfg.recognizer);
        all_dets.insert(all_dets.end(), dets.begin(), dets.end());
        all_readings.insert(all_readings.end(), readings.begin(), readings.end());
      }
      write_json_file(out / "detections.json", detections_to_json(all_dets));
      write_json_file(out / "readings.json", readings_to_json(all_readings));
      const TourGraph g = tour_from_readings(m, all_readings, cfg);
      export_tour(g, out / "tour.json");
      report_warnings(g);
      std::cerr << g.panoramas.size() << " panoramas, " << g.hotspots.size() << " hotspots, "
                << undirected_edges(g).size() << " edges\n";
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  return kExitOk;
}

}  // namespace digitour
