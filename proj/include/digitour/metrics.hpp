#pragma once

#include <array>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "digitour/bbox.hpp"
#include "digitour/recognizer.hpp"

namespace digitour {

double iou(const BBox& a, const BBox& b);

struct MatchPair {
  int detection = 0;
  int ground_truth = 0;
  double iou = 0.0;

  friend bool operator==(const MatchPair&, const MatchPair&) = default;
};

struct MatchResult {
  std::vector<MatchPair> pairs;  // in detection processing order
  std::vector<int> unmatched_detections;
  std::vector<int> unmatched_gt;
};

// Greedy in confidence order (stable for ties): each detection takes the
// unmatched ground truth with maximum IoU >= iou_threshold; IoU ties go to the
// lower ground-truth index.
MatchResult match_detections(std::span<const BBox> detections,
                             std::span<const double> confidences,
                             std::span<const BBox> ground_truth, double iou_threshold);

// Evaluation records. `image` groups boxes; `face` is folded into it by
// callers ("prop/pano#bottom"). class_id 0 means "no class".
struct ScoredBox {
  std::string image;
  BBox box;
  double confidence = 0.0;
  int class_id = 0;
};

struct GroundTruthBox {
  std::string image;
  BBox box;
  int class_id = 0;
};

// All-point interpolated AP for one class (class_id < 0 ignores classes).
// Returns 0 when the class has no ground truth.
double average_precision(std::span<const ScoredBox> detections,
                         std::span<const GroundTruthBox> ground_truth, int class_id,
                         double iou_threshold);

enum class Weighting { macro, weighted };

// Mean (or support-weighted mean) of per-class AP over classes with ground
// truth. Returns 0 when there is no ground truth at all.
double map_at(std::span<const ScoredBox> detections,
              std::span<const GroundTruthBox> ground_truth, double iou_threshold,
              Weighting weighting);

struct RateBlock {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct ClassificationMetrics {
  RateBlock macro;
  RateBlock weighted;
  std::vector<double> precision;  // per class
  std::vector<double> recall;
  std::vector<double> f1;
  std::vector<long> support;
};

// Square matrix, rows = true class, columns = predicted class. Throws
// EmptyInput for an empty or all-zero matrix, InvalidConfig if not square.
ClassificationMetrics classification_metrics(const std::vector<std::vector<long>>& confusion);

double f1_score(double precision, double recall);

struct EndToEnd {
  long tp = 0;
  long fp = 0;  // wrong reads, failed reads and unmatched detections
  long fn = 0;
  long fp_paper_literal = 0;  // wrong or failed reads on matched detections only
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  double precision_paper_literal = 0.0;
  double f1_paper_literal = 0.0;
  double map = 0.0;        // class-aware, support-weighted
  double map_macro = 0.0;
  RateBlock weighted;      // per-class P/R/f1 averaged with gt support
  std::vector<std::vector<long>> confusion;  // 20x20 over matched valid reads
};

// Ground truth for end-to-end evaluation; `image` must equal the reading's
// image key and `face` its face.
struct LabeledBox {
  std::string image;
  FaceId face = FaceId::front;
  BBox box;
  int tag_number = 0;
};

EndToEnd end_to_end_eval(std::span<const TagReading> readings,
                         std::span<const LabeledBox> ground_truth,
                         double iou_threshold = 0.5);

// Fraction of properties with FP == FN == 0 (and therefore only correct TPs).
double property_accuracy(std::span<const EndToEnd> per_property);

struct DetectionSummary {
  long tp = 0, fp = 0, fn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  double ap = 0.0;
};

// Class-agnostic detection quality of the boxes behind the readings.
DetectionSummary detection_summary(std::span<const TagReading> readings,
                                   std::span<const LabeledBox> ground_truth,
                                   double iou_threshold);

struct EvalOptions {
  double iou = 0.5;
  bool coco_range = false;
  bool per_property = false;
};

// Full report. property_of maps an image key to its property id.
nlohmann::ordered_json evaluation_report(
    std::span<const TagReading> readings, std::span<const LabeledBox> ground_truth,
    const std::map<std::string, std::string>& property_of, const EvalOptions& options);

}  // namespace digitour
