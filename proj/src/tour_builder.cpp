#include "digitour/tour_builder.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>

#include "digitour/error.hpp"
#include "digitour/projection.hpp"

namespace digitour {

BackProjection backproject_reading(const TagReading& reading, int face_size,
                                   int width, int height) {
  const BBox& b = reading.detection.bbox;
  const double xs[3] = {b.x_min, b.center_x(), b.x_max};
  const double ys[3] = {b.y_min, b.center_y(), b.y_max};
  std::vector<EquirectPoint> pts;
  for (int iy = 0; iy < 3; ++iy) {
    for (int ix = 0; ix < 3; ++ix) {
      if (ix == 1 && iy == 1) continue;
      // Box coordinates are pixel edges; face_point_to_equirect takes pixel
      // indices and samples at their centres.
      pts.push_back(face_point_to_equirect(reading.detection.face, xs[ix] - 0.5,
                                           ys[iy] - 0.5, face_size, width, height));
    }
  }
  const EquirectExtent e = equirect_extent(pts, width);
  BackProjection out;
  // A box around the nadir or zenith spans every longitude; its extent
  // centre says nothing, so point straight down (or up).
  const double c = face_size / 2.0;
  const bool polar = reading.detection.face == FaceId::bottom || reading.detection.face == FaceId::top;
  if (polar && b.x_min <= c && c <= b.x_max && b.y_min <= c && c <= b.y_max) {
    const bool down = reading.detection.face == FaceId::bottom;
    out.equirect_bbox = {0.0, down ? e.y_min : 0.0, static_cast<double>(width),
                         down ? static_cast<double>(height) : e.y_max};
    out.yaw_deg = 0.0;
    out.pitch_deg = down ? -90.0 : 90.0;
    return out;
  }
  out.equirect_bbox = {e.x_min, e.y_min, e.x_max, e.y_max};
  out.wrapped = e.wrapped;
  out.yaw_deg = (e.center_x(width) / width - 0.5) * 360.0;
  if (out.yaw_deg >= 180.0) out.yaw_deg -= 360.0;
  out.pitch_deg = (0.5 - e.center_y() / height) * 180.0;
  return out;
}

namespace {

std::string fmt_warning(const std::string& kind, int tag, const std::string& pano) {
  return kind + "(" + std::to_string(tag) + "): panorama " + pano;
}

}  // namespace

TourGraph build_tour(const std::string& property_id,
                     std::span<const PanoramaRecord> panoramas,
                     const std::map<std::string, std::vector<TagReading>>& readings,
                     int face_size) {
  if (panoramas.empty()) throw InvalidProperty("property has no panoramas");
  std::map<int, std::string> by_anchor;
  std::set<std::string> ids;
  for (const auto& p : panoramas) {
    if (!ids.insert(p.id).second) throw InvalidProperty("duplicate panorama id " + p.id);
    if (!by_anchor.emplace(p.anchor_tag, p.id).second) {
      throw InvalidProperty("duplicate anchor_tag " + std::to_string(p.anchor_tag));
    }
  }
  for (const auto& [pano_id, list] : readings) {
    if (!ids.count(pano_id)) {
      throw InvalidProperty("readings reference unknown panorama " + pano_id);
    }
  }

  TourGraph g;
  g.property_id = property_id;
  g.panoramas.assign(panoramas.begin(), panoramas.end());

  for (const auto& pano : panoramas) {
    const auto it = readings.find(pano.id);
    if (it == readings.end()) continue;
    // Best reading per tag number; ties keep the earlier reading.
    std::map<int, const TagReading*> best;
    for (const TagReading& r : it->second) {
      if (!r.ok()) continue;
      const int k = *r.number;
      auto [slot, inserted] = best.emplace(k, &r);
      if (!inserted) {
        g.warnings.push_back(fmt_warning("duplicate_tag", k, pano.id));
        if (r.confidence > slot->second->confidence) slot->second = &r;
      }
    }
    for (const auto& [k, r] : best) {
      if (k == pano.anchor_tag) {
        g.warnings.push_back(fmt_warning("self_anchor", k, pano.id));
        continue;
      }
      const BackProjection bp = backproject_reading(*r, face_size, pano.width, pano.height);
      Hotspot h;
      h.panorama_id = pano.id;
      h.tag_number = k;
      h.equirect_bbox = bp.equirect_bbox;
      h.wrapped = bp.wrapped;
      h.yaw_deg = bp.yaw_deg;
      h.pitch_deg = bp.pitch_deg;
      h.confidence = r->confidence;
      const auto target = by_anchor.find(k);
      if (target != by_anchor.end()) {
        h.target_panorama_id = target->second;
      } else {
        g.warnings.push_back(fmt_warning("dangling_tag", k, pano.id));
      }
      g.hotspots.push_back(std::move(h));
    }
  }

  const int components = connected_component_count(g);
  if (components > 1) {
    g.warnings.push_back("disconnected: " + std::to_string(components) + " components");
  }
  return g;
}

std::vector<std::pair<std::string, std::string>> undirected_edges(const TourGraph& g) {
  std::set<std::pair<std::string, std::string>> edges;
  for (const auto& h : g.hotspots) {
    if (!h.target_panorama_id || *h.target_panorama_id == h.panorama_id) continue;
    edges.insert(std::minmax(h.panorama_id, *h.target_panorama_id));
  }
  return {edges.begin(), edges.end()};
}

int connected_component_count(const TourGraph& g) {
  std::map<std::string, int> index;
  for (const auto& p : g.panoramas) index.emplace(p.id, static_cast<int>(index.size()));
  std::vector<int> parent(index.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& [a, b] : undirected_edges(g)) {
    const auto ia = index.find(a), ib = index.find(b);
    if (ia == index.end() || ib == index.end()) continue;
    parent[find(ia->second)] = find(ib->second);
  }
  int count = 0;
  for (int i = 0; i < static_cast<int>(parent.size()); ++i) count += find(i) == i;
  return count;
}

nlohmann::ordered_json tour_to_json(const TourGraph& g) {
  nlohmann::ordered_json j;
  j["version"] = 1;
  j["property_id"] = g.property_id;
  if (!g.config_hash.empty()) j["config_hash"] = g.config_hash;
  j["panoramas"] = nlohmann::ordered_json::array();
  for (const auto& p : g.panoramas) {
    nlohmann::ordered_json pj;
    pj["id"] = p.id;
    pj["file"] = p.file;
    pj["width"] = p.width;
    pj["height"] = p.height;
    pj["anchor_tag"] = p.anchor_tag;
    pj["capture_index"] = p.capture_index;
    j["panoramas"].push_back(std::move(pj));
  }
  j["hotspots"] = nlohmann::ordered_json::array();
  for (const auto& h : g.hotspots) {
    nlohmann::ordered_json hj;
    hj["panorama_id"] = h.panorama_id;
    hj["tag_number"] = h.tag_number;
    hj["bbox"] = {h.equirect_bbox.x_min, h.equirect_bbox.y_min, h.equirect_bbox.x_max,
                  h.equirect_bbox.y_max};
    hj["wrapped"] = h.wrapped;
    hj["yaw_deg"] = h.yaw_deg;
    hj["pitch_deg"] = h.pitch_deg;
    hj["target_panorama_id"] =
        h.target_panorama_id ? nlohmann::ordered_json(*h.target_panorama_id) : nullptr;
    hj["confidence"] = h.confidence;
    j["hotspots"].push_back(std::move(hj));
  }
  j["warnings"] = g.warnings;
  return j;
}

TourGraph tour_from_json(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != 1) throw ParseError("unsupported tour version", 0);
    TourGraph g;
    g.property_id = j.at("property_id").get<std::string>();
    g.config_hash = j.value("config_hash", std::string());
    int index = 0;
    for (const auto& pj : j.at("panoramas")) {
      PanoramaRecord p;
      p.id = pj.at("id").get<std::string>();
      p.file = pj.at("file").get<std::string>();
      p.width = pj.at("width").get<int>();
      p.height = pj.at("height").get<int>();
      p.anchor_tag = pj.at("anchor_tag").get<int>();
      p.capture_index = pj.value("capture_index", index + 1);
      g.panoramas.push_back(std::move(p));
      ++index;
    }
    for (const auto& hj : j.at("hotspots")) {
      Hotspot h;
      h.panorama_id = hj.at("panorama_id").get<std::string>();
      h.tag_number = hj.at("tag_number").get<int>();
      const auto& b = hj.at("bbox");
      if (!b.is_array() || b.size() != 4) throw ParseError("hotspot bbox needs 4 numbers", 0);
      h.equirect_bbox = {b[0].get<double>(), b[1].get<double>(), b[2].get<double>(),
                         b[3].get<double>()};
      h.wrapped = hj.at("wrapped").get<bool>();
      h.yaw_deg = hj.at("yaw_deg").get<double>();
      h.pitch_deg = hj.at("pitch_deg").get<double>();
      if (!hj.at("target_panorama_id").is_null()) {
        h.target_panorama_id = hj["target_panorama_id"].get<std::string>();
      }
      h.confidence = hj.at("confidence").get<double>();
      g.hotspots.push_back(std::move(h));
    }
    g.warnings = j.at("warnings").get<std::vector<std::string>>();
    std::set<std::string> ids;
    for (const auto& p : g.panoramas) ids.insert(p.id);
    for (const auto& h : g.hotspots) {
      if (!ids.count(h.panorama_id) ||
          (h.target_panorama_id && !ids.count(*h.target_panorama_id))) {
        throw ParseError("hotspot references unknown panorama", 0);
      }
    }
    return g;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("tour: ") + e.what(), 0);
  }
}

std::filesystem::path export_tour(const TourGraph& g, const std::filesystem::path& out) {
  if (out.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(out.parent_path(), ec);
    if (ec) throw IoError("cannot create " + out.parent_path().string());
  }
  std::ofstream f(out, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + out.string());
  f << tour_to_json(g).dump(2) << '\n';
  if (!f) throw IoError("failed writing " + out.string());
  return out;
}

PropertyManifest manifest_from_json(const nlohmann::json& j) {
  try {
    PropertyManifest m;
    m.property_id = j.at("property_id").get<std::string>();
    int index = 0;
    for (const auto& pj : j.at("panoramas")) {
      ++index;
      PanoramaRecord p;
      p.id = pj.at("id").get<std::string>();
      p.file = pj.value("file", p.id + ".png");
      p.capture_index = pj.value("capture_index", index);
      p.anchor_tag = pj.value("anchor_tag", p.capture_index);
      p.width = pj.value("width", 0);
      p.height = pj.value("height", 0);
      if (p.capture_index < 1) throw ParseError("capture_index must be >= 1", index);
      if (p.anchor_tag < kMinTagNumber || p.anchor_tag > kMaxTagNumber) {
        throw ParseError("anchor_tag outside 1..20", index);
      }
      m.panoramas.push_back(std::move(p));
    }
    std::stable_sort(m.panoramas.begin(), m.panoramas.end(),
                     [](const PanoramaRecord& a, const PanoramaRecord& b) {
                       return a.capture_index < b.capture_index;
                     });
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("manifest: ") + e.what(), 0);
  }
}

nlohmann::ordered_json manifest_to_json(const PropertyManifest& m) {
  nlohmann::ordered_json j;
  j["property_id"] = m.property_id;
  j["panoramas"] = nlohmann::ordered_json::array();
  for (const auto& p : m.panoramas) {
    nlohmann::ordered_json pj;
    pj["id"] = p.id;
    pj["file"] = p.file;
    pj["capture_index"] = p.capture_index;
    pj["anchor_tag"] = p.anchor_tag;
    pj["width"] = p.width;
    pj["height"] = p.height;
    j["panoramas"].push_back(std::move(pj));
  }
  return j;
}

}  // namespace digitour
