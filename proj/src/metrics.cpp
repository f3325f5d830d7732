#include "digitour/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <set>

#include "digitour/error.hpp"

namespace digitour {

double iou(const BBox& a, const BBox& b) {
  const double iw = std::min(a.x_max, b.x_max) - std::max(a.x_min, b.x_min);
  const double ih = std::min(a.y_max, b.y_max) - std::max(a.y_min, b.y_min);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

namespace {

std::vector<int> confidence_order(std::span<const double> confidences) {
  std::vector<int> order(confidences.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return confidences[a] > confidences[b];
  });
  return order;
}

double safe_div(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace

double f1_score(double precision, double recall) {
  return precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
}

MatchResult match_detections(std::span<const BBox> detections,
                             std::span<const double> confidences,
                             std::span<const BBox> ground_truth, double iou_threshold) {
  MatchResult result;
  std::vector<bool> taken(ground_truth.size(), false);
  for (int d : confidence_order(confidences)) {
    int best = -1;
    double best_iou = 0.0;
    for (int g = 0; g < static_cast<int>(ground_truth.size()); ++g) {
      if (taken[g]) continue;
      const double v = iou(detections[d], ground_truth[g]);
      if (v >= iou_threshold && (best < 0 || v > best_iou)) {
        best = g;
        best_iou = v;
      }
    }
    if (best >= 0) {
      taken[best] = true;
      result.pairs.push_back({d, best, best_iou});
    } else {
      result.unmatched_detections.push_back(d);
    }
  }
  std::sort(result.unmatched_detections.begin(), result.unmatched_detections.end());
  for (int g = 0; g < static_cast<int>(ground_truth.size()); ++g) {
    if (!taken[g]) result.unmatched_gt.push_back(g);
  }
  return result;
}

double average_precision(std::span<const ScoredBox> detections,
                         std::span<const GroundTruthBox> ground_truth, int class_id,
                         double iou_threshold) {
  const bool any_class = class_id < 0;
  std::map<std::string, std::vector<BBox>> gt_by_image;
  long positives = 0;
  for (const auto& g : ground_truth) {
    if (!any_class && g.class_id != class_id) continue;
    gt_by_image[g.image].push_back(g.box);
    ++positives;
  }
  if (positives == 0) return 0.0;

  std::vector<const ScoredBox*> dets;
  for (const auto& d : detections) {
    if (any_class || d.class_id == class_id) dets.push_back(&d);
  }
  std::stable_sort(dets.begin(), dets.end(), [](const ScoredBox* a, const ScoredBox* b) {
    return a->confidence > b->confidence;
  });

  std::map<std::string, std::vector<bool>> used;
  for (const auto& [img, boxes] : gt_by_image) used[img].assign(boxes.size(), false);

  std::vector<double> precision, recall;
  long tp = 0, fp = 0;
  for (const ScoredBox* d : dets) {
    bool hit = false;
    const auto it = gt_by_image.find(d->image);
    if (it != gt_by_image.end()) {
      auto& flags = used[d->image];
      int best = -1;
      double best_iou = 0.0;
      for (int g = 0; g < static_cast<int>(it->second.size()); ++g) {
        if (flags[g]) continue;
        const double v = iou(d->box, it->second[g]);
        if (v >= iou_threshold && (best < 0 || v > best_iou)) {
          best = g;
          best_iou = v;
        }
      }
      if (best >= 0) {
        flags[best] = true;
        hit = true;
      }
    }
    hit ? ++tp : ++fp;
    precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(positives));
  }

  // Precision envelope, integrated where recall changes.
  std::vector<double> mrec{0.0}, mpre{0.0};
  mrec.insert(mrec.end(), recall.begin(), recall.end());
  mpre.insert(mpre.end(), precision.begin(), precision.end());
  mrec.push_back(1.0);
  mpre.push_back(0.0);
  for (std::size_t i = mpre.size() - 1; i > 0; --i) {
    mpre[i - 1] = std::max(mpre[i - 1], mpre[i]);
  }
  double ap = 0.0;
  for (std::size_t i = 1; i < mrec.size(); ++i) {
    if (mrec[i] != mrec[i - 1]) ap += (mrec[i] - mrec[i - 1]) * mpre[i];
  }
  return ap;
}

double map_at(std::span<const ScoredBox> detections,
              std::span<const GroundTruthBox> ground_truth, double iou_threshold,
              Weighting weighting) {
  std::map<int, long> support;
  for (const auto& g : ground_truth) ++support[g.class_id];
  if (support.empty()) return 0.0;
  double sum = 0.0, weight = 0.0;
  for (const auto& [cls, n] : support) {
    const double ap = average_precision(detections, ground_truth, cls, iou_threshold);
    const double w = weighting == Weighting::weighted ? static_cast<double>(n) : 1.0;
    sum += w * ap;
    weight += w;
  }
  return sum / weight;
}

ClassificationMetrics classification_metrics(
    const std::vector<std::vector<long>>& confusion) {
  const std::size_t k = confusion.size();
  if (k == 0) throw EmptyInput("confusion matrix is empty");
  for (const auto& row : confusion) {
    if (row.size() != k) throw InvalidConfig("confusion matrix must be square");
    for (long v : row) {
      if (v < 0) throw InvalidConfig("confusion matrix entries must be non-negative");
    }
  }
  ClassificationMetrics m;
  m.precision.assign(k, 0.0);
  m.recall.assign(k, 0.0);
  m.f1.assign(k, 0.0);
  m.support.assign(k, 0);
  long total = 0, trace = 0;
  for (std::size_t i = 0; i < k; ++i) {
    long col = 0;
    for (std::size_t r = 0; r < k; ++r) col += confusion[r][i];
    const long row = std::accumulate(confusion[i].begin(), confusion[i].end(), 0L);
    const long tp = confusion[i][i];
    m.support[i] = row;
    m.precision[i] = safe_div(static_cast<double>(tp), static_cast<double>(col));
    m.recall[i] = safe_div(static_cast<double>(tp), static_cast<double>(row));
    m.f1[i] = f1_score(m.precision[i], m.recall[i]);
    total += row;
    trace += tp;
  }
  if (total == 0) throw EmptyInput("confusion matrix has no samples");
  const double accuracy = static_cast<double>(trace) / static_cast<double>(total);
  m.macro.accuracy = accuracy;
  m.weighted.accuracy = accuracy;
  int populated = 0;
  for (std::size_t i = 0; i < k; ++i) {
    if (m.support[i] == 0) continue;
    ++populated;
    const double w = static_cast<double>(m.support[i]) / static_cast<double>(total);
    m.macro.precision += m.precision[i];
    m.macro.recall += m.recall[i];
    m.macro.f1 += m.f1[i];
    m.weighted.precision += w * m.precision[i];
    m.weighted.recall += w * m.recall[i];
    m.weighted.f1 += w * m.f1[i];
  }
  m.macro.precision /= populated;
  m.macro.recall /= populated;
  m.macro.f1 /= populated;
  return m;
}

namespace {

std::string group_key(const std::string& image, FaceId face) {
  return image + "#" + std::string(face_name(face));
}

struct Grouped {
  std::vector<int> readings;
  std::vector<int> gts;
};

std::map<std::string, Grouped> group(std::span<const TagReading> readings,
                                     std::span<const LabeledBox> gts) {
  std::map<std::string, Grouped> groups;
  for (int i = 0; i < static_cast<int>(readings.size()); ++i) {
    const auto& d = readings[i].detection;
    groups[group_key(d.image, d.face)].readings.push_back(i);
  }
  for (int i = 0; i < static_cast<int>(gts.size()); ++i) {
    groups[group_key(gts[i].image, gts[i].face)].gts.push_back(i);
  }
  return groups;
}

}  // namespace

EndToEnd end_to_end_eval(std::span<const TagReading> readings,
                         std::span<const LabeledBox> ground_truth, double iou_threshold) {
  EndToEnd e;
  e.confusion.assign(kMaxTagNumber, std::vector<long>(kMaxTagNumber, 0));
  std::array<long, kMaxTagNumber + 1> tp_c{}, fp_c{}, fn_c{}, support{};

  for (const auto& [key, grp] : group(readings, ground_truth)) {
    std::vector<BBox> det_boxes, gt_boxes;
    std::vector<double> conf;
    for (int r : grp.readings) {
      det_boxes.push_back(readings[r].detection.bbox);
      conf.push_back(readings[r].detection.confidence);
    }
    for (int g : grp.gts) {
      gt_boxes.push_back(ground_truth[g].box);
      ++support[ground_truth[g].tag_number];
    }
    const MatchResult m = match_detections(det_boxes, conf, gt_boxes, iou_threshold);
    for (const MatchPair& p : m.pairs) {
      const TagReading& r = readings[grp.readings[p.detection]];
      const int truth = ground_truth[grp.gts[p.ground_truth]].tag_number;
      if (r.ok() && *r.number == truth) {
        ++e.tp;
        ++tp_c[truth];
      } else {
        ++e.fp;
        ++e.fp_paper_literal;
        ++fn_c[truth];
        if (r.ok()) ++fp_c[*r.number];
      }
      if (r.ok()) ++e.confusion[truth - 1][*r.number - 1];
    }
    for (int d : m.unmatched_detections) {
      ++e.fp;
      const TagReading& r = readings[grp.readings[d]];
      if (r.ok()) ++fp_c[*r.number];
    }
    for (int g : m.unmatched_gt) {
      ++e.fn;
      ++fn_c[ground_truth[grp.gts[g]].tag_number];
    }
  }

  e.precision = safe_div(static_cast<double>(e.tp), static_cast<double>(e.tp + e.fp));
  e.recall = safe_div(static_cast<double>(e.tp), static_cast<double>(e.tp + e.fn));
  e.f1 = f1_score(e.precision, e.recall);
  e.precision_paper_literal =
      safe_div(static_cast<double>(e.tp), static_cast<double>(e.tp + e.fp_paper_literal));
  e.f1_paper_literal = f1_score(e.precision_paper_literal, e.recall);

  long total_support = 0;
  for (int c = 1; c <= kMaxTagNumber; ++c) total_support += support[c];
  if (total_support > 0) {
    for (int c = 1; c <= kMaxTagNumber; ++c) {
      if (support[c] == 0) continue;
      const double w = static_cast<double>(support[c]) / static_cast<double>(total_support);
      const double p = safe_div(static_cast<double>(tp_c[c]),
                                static_cast<double>(tp_c[c] + fp_c[c]));
      const double r = safe_div(static_cast<double>(tp_c[c]),
                                static_cast<double>(tp_c[c] + fn_c[c]));
      e.weighted.precision += w * p;
      e.weighted.recall += w * r;
      e.weighted.f1 += w * f1_score(p, r);
    }
    e.weighted.accuracy = e.weighted.recall;
  }

  std::vector<ScoredBox> scored;
  for (const auto& r : readings) {
    if (!r.ok()) continue;
    scored.push_back({group_key(r.detection.image, r.detection.face), r.detection.bbox,
                      r.confidence, *r.number});
  }
  std::vector<GroundTruthBox> gts;
  for (const auto& g : ground_truth) {
    gts.push_back({group_key(g.image, g.face), g.box, g.tag_number});
  }
  e.map = map_at(scored, gts, iou_threshold, Weighting::weighted);
  e.map_macro = map_at(scored, gts, iou_threshold, Weighting::macro);
  return e;
}

double property_accuracy(std::span<const EndToEnd> per_property) {
  if (per_property.empty()) return 0.0;
  long clean = 0;
  for (const auto& e : per_property) clean += (e.fp == 0 && e.fn == 0);
  return static_cast<double>(clean) / static_cast<double>(per_property.size());
}

DetectionSummary detection_summary(std::span<const TagReading> readings,
                                   std::span<const LabeledBox> ground_truth,
                                   double iou_threshold) {
  DetectionSummary s;
  for (const auto& [key, grp] : group(readings, ground_truth)) {
    std::vector<BBox> det_boxes, gt_boxes;
    std::vector<double> conf;
    for (int r : grp.readings) {
      det_boxes.push_back(readings[r].detection.bbox);
      conf.push_back(readings[r].detection.confidence);
    }
    for (int g : grp.gts) gt_boxes.push_back(ground_truth[g].box);
    const MatchResult m = match_detections(det_boxes, conf, gt_boxes, iou_threshold);
    s.tp += static_cast<long>(m.pairs.size());
    s.fp += static_cast<long>(m.unmatched_detections.size());
    s.fn += static_cast<long>(m.unmatched_gt.size());
  }
  s.precision = safe_div(static_cast<double>(s.tp), static_cast<double>(s.tp + s.fp));
  s.recall = safe_div(static_cast<double>(s.tp), static_cast<double>(s.tp + s.fn));
  s.f1 = f1_score(s.precision, s.recall);

  std::vector<ScoredBox> scored;
  for (const auto& r : readings) {
    scored.push_back({group_key(r.detection.image, r.detection.face), r.detection.bbox,
                      r.detection.confidence, 0});
  }
  std::vector<GroundTruthBox> gts;
  for (const auto& g : ground_truth) {
    gts.push_back({group_key(g.image, g.face), g.box, 0});
  }
  s.ap = average_precision(scored, gts, -1, iou_threshold);
  return s;
}

namespace {

std::string thr_key(double t) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.2f", t);
  return buf;
}

nlohmann::ordered_json rate_json(const RateBlock& r) {
  return {{"A", r.accuracy}, {"P", r.precision}, {"R", r.recall}, {"f1", r.f1}};
}

nlohmann::ordered_json end_to_end_json(const EndToEnd& e) {
  nlohmann::ordered_json j;
  j["TP"] = e.tp;
  j["FP"] = e.fp;
  j["FN"] = e.fn;
  j["P"] = e.precision;
  j["R"] = e.recall;
  j["f1"] = e.f1;
  j["mAP"] = e.map;
  j["mAP_macro"] = e.map_macro;
  j["weighted"] = {{"P", e.weighted.precision},
                   {"R", e.weighted.recall},
                   {"f1", e.weighted.f1}};
  j["fp_paper_literal"] = e.fp_paper_literal;
  j["P_paper_literal"] = e.precision_paper_literal;
  j["f1_paper_literal"] = e.f1_paper_literal;
  return j;
}

std::vector<ScoredBox> class_scored(std::span<const TagReading> readings) {
  std::vector<ScoredBox> out;
  for (const auto& r : readings) {
    if (!r.ok()) continue;
    out.push_back({group_key(r.detection.image, r.detection.face), r.detection.bbox,
                   r.confidence, *r.number});
  }
  return out;
}

std::vector<GroundTruthBox> class_gts(std::span<const LabeledBox> gts) {
  std::vector<GroundTruthBox> out;
  for (const auto& g : gts) out.push_back({group_key(g.image, g.face), g.box, g.tag_number});
  return out;
}

}  // namespace

nlohmann::ordered_json evaluation_report(
    std::span<const TagReading> readings, std::span<const LabeledBox> ground_truth,
    const std::map<std::string, std::string>& property_of, const EvalOptions& options) {
  std::set<double> thresholds = {0.5, 0.95, options.iou};
  std::vector<double> coco;
  if (options.coco_range) {
    for (int i = 0; i < 10; ++i) {
      coco.push_back(0.5 + 0.05 * i);
      thresholds.insert(coco.back());
    }
  }

  nlohmann::ordered_json report;
  nlohmann::ordered_json meta;
  meta["interpolation"] = "all-point";
  meta["iou_threshold"] = options.iou;
  meta["map_threshold_semantics"] = "single IoU threshold per key";
  meta["ap_class_assignment"] = "read-class";
  meta["end_to_end_fp"] = "misreads + failed reads + unmatched detections";
  meta["readings"] = readings.size();
  meta["ground_truth"] = ground_truth.size();
  report["metadata"] = meta;

  const auto scored = class_scored(readings);
  const auto gts = class_gts(ground_truth);

  const DetectionSummary det = detection_summary(readings, ground_truth, options.iou);
  nlohmann::ordered_json dj;
  dj["TP"] = det.tp;
  dj["FP"] = det.fp;
  dj["FN"] = det.fn;
  dj["P"] = det.precision;
  dj["R"] = det.recall;
  dj["f1"] = det.f1;
  nlohmann::ordered_json ap_at;
  for (double t : thresholds) {
    ap_at[thr_key(t)] = detection_summary(readings, ground_truth, t).ap;
  }
  dj["ap_at"] = ap_at;
  report["detection"] = dj;

  nlohmann::ordered_json map_j, map_macro_j;
  for (double t : thresholds) {
    map_j[thr_key(t)] = map_at(scored, gts, t, Weighting::weighted);
    map_macro_j[thr_key(t)] = map_at(scored, gts, t, Weighting::macro);
  }
  report["mAP_at"] = map_j;
  report["mAP_at_macro"] = map_macro_j;
  if (options.coco_range) {
    double sum = 0.0, det_sum = 0.0;
    for (double t : coco) {
      sum += map_at(scored, gts, t, Weighting::weighted);
      det_sum += detection_summary(readings, ground_truth, t).ap;
    }
    report["coco_mAP_0.50_0.95"] = sum / static_cast<double>(coco.size());
    report["coco_detection_ap_0.50_0.95"] = det_sum / static_cast<double>(coco.size());
  }

  const EndToEnd e2e = end_to_end_eval(readings, ground_truth, options.iou);

  std::map<int, long> support;
  for (const auto& g : ground_truth) ++support[g.tag_number];
  nlohmann::ordered_json per_class = nlohmann::ordered_json::array();
  ClassificationMetrics cls_metrics;
  bool have_cls = false;
  try {
    cls_metrics = classification_metrics(e2e.confusion);
    have_cls = true;
  } catch (const EmptyInput&) {
  }
  for (int c = kMinTagNumber; c <= kMaxTagNumber; ++c) {
    if (!support.count(c)) continue;
    nlohmann::ordered_json pc;
    pc["class"] = c;
    pc["support"] = support[c];
    pc["AP"] = average_precision(scored, gts, c, options.iou);
    if (have_cls) {
      pc["P"] = cls_metrics.precision[c - 1];
      pc["R"] = cls_metrics.recall[c - 1];
      pc["f1"] = cls_metrics.f1[c - 1];
    }
    per_class.push_back(pc);
  }
  report["per_class"] = per_class;

  if (have_cls) {
    nlohmann::ordered_json cj;
    cj["macro"] = rate_json(cls_metrics.macro);
    cj["weighted"] = rate_json(cls_metrics.weighted);
    cj["confusion"] = e2e.confusion;
    report["classification"] = cj;
  } else {
    report["classification"] = nullptr;
  }

  report["end_to_end"] = end_to_end_json(e2e);

  // Per-property breakdown.
  std::map<std::string, std::vector<TagReading>> r_by_prop;
  std::map<std::string, std::vector<LabeledBox>> g_by_prop;
  auto prop = [&](const std::string& image) {
    const auto it = property_of.find(image);
    return it != property_of.end() ? it->second : std::string("unknown");
  };
  for (const auto& g : ground_truth) g_by_prop[prop(g.image)].push_back(g);
  for (const auto& r : readings) r_by_prop[prop(r.detection.image)].push_back(r);
  std::set<std::string> props;
  for (const auto& [p, v] : g_by_prop) props.insert(p);
  for (const auto& [p, v] : r_by_prop) props.insert(p);
  std::vector<EndToEnd> results;
  nlohmann::ordered_json per_prop = nlohmann::ordered_json::array();
  for (const auto& p : props) {
    results.push_back(end_to_end_eval(r_by_prop[p], g_by_prop[p], options.iou));
    if (options.per_property) {
      nlohmann::ordered_json pj;
      pj["property_id"] = p;
      pj["end_to_end"] = end_to_end_json(results.back());
      pj["perfect"] = results.back().fp == 0 && results.back().fn == 0;
      per_prop.push_back(pj);
    }
  }
  report["property_accuracy"] = property_accuracy(results);
  report["properties"] = props.size();
  if (options.per_property) report["per_property"] = per_prop;
  return report;
}

}  // namespace digitour
