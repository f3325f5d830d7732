#pragma once

// Slow reference implementations used to cross-check the metrics module.
// Boxes are restricted to integer corners so IoU can be counted pixel by
// pixel.

#include <algorithm>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "digitour/bbox.hpp"
#include "digitour/metrics.hpp"

namespace oracle {

inline double iou_by_counting(const digitour::BBox& a, const digitour::BBox& b) {
  const int x0 = static_cast<int>(std::min(a.x_min, b.x_min));
  const int x1 = static_cast<int>(std::max(a.x_max, b.x_max));
  const int y0 = static_cast<int>(std::min(a.y_min, b.y_min));
  const int y1 = static_cast<int>(std::max(a.y_max, b.y_max));
  long inter = 0, uni = 0;
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) {
      const double cx = x + 0.5, cy = y + 0.5;
      const bool in_a = cx > a.x_min && cx < a.x_max && cy > a.y_min && cy < a.y_max;
      const bool in_b = cx > b.x_min && cx < b.x_max && cy > b.y_min && cy < b.y_max;
      inter += in_a && in_b;
      uni += in_a || in_b;
    }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

struct Pair {
  int det, gt;
};

// Greedy rule spelled out: visit detections by descending confidence
// (earlier index first on ties); each takes the free ground truth with the
// highest IoU at or above the threshold, lowest index on ties.
inline std::vector<Pair> greedy_pairs(const std::vector<digitour::BBox>& dets,
                                      const std::vector<double>& conf,
                                      const std::vector<digitour::BBox>& gts, double thr) {
  std::vector<bool> visited(dets.size(), false), taken(gts.size(), false);
  std::vector<Pair> out;
  for (std::size_t step = 0; step < dets.size(); ++step) {
    int pick = -1;
    for (std::size_t i = 0; i < dets.size(); ++i) {
      if (visited[i]) continue;
      if (pick < 0 || conf[i] > conf[pick]) pick = static_cast<int>(i);
    }
    visited[pick] = true;
    int best = -1;
    double best_v = -1.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g]) continue;
      const double v = iou_by_counting(dets[pick], gts[g]);
      if (v >= thr && v > best_v) {
        best = static_cast<int>(g);
        best_v = v;
      }
    }
    if (best >= 0) {
      taken[best] = true;
      out.push_back({pick, best});
    }
  }
  return out;
}

// AP as the mean over recall levels k/G of the best precision reached at any
// cutoff with recall >= k/G. Each cutoff re-runs matching from scratch on the
// detections scoring at least that much (confidences must be distinct).
inline double average_precision(const std::vector<digitour::ScoredBox>& dets,
                                 const std::vector<digitour::GroundTruthBox>& gts, int cls,
                                 double thr) {
  std::vector<digitour::ScoredBox> d;
  std::vector<digitour::GroundTruthBox> g;
  for (const auto& x : dets)
    if (cls < 0 || x.class_id == cls) d.push_back(x);
  for (const auto& x : gts)
    if (cls < 0 || x.class_id == cls) g.push_back(x);
  const int total = static_cast<int>(g.size());
  if (total == 0) return 0.0;
  std::set<std::string> images;
  for (const auto& x : d) images.insert(x.image);
  for (const auto& x : g) images.insert(x.image);

  std::vector<std::pair<double, double>> pr;  // (recall, precision) per cutoff
  for (const auto& cut : d) {
    int tp = 0, kept = 0;
    for (const auto& img : images) {
      std::vector<digitour::BBox> db, gb;
      std::vector<double> dc;
      for (const auto& x : d)
        if (x.image == img && x.confidence >= cut.confidence) {
          db.push_back(x.box);
          dc.push_back(x.confidence);
        }
      for (const auto& x : g)
        if (x.image == img) gb.push_back(x.box);
      kept += static_cast<int>(db.size());
      tp += static_cast<int>(greedy_pairs(db, dc, gb, thr).size());
    }
    pr.emplace_back(static_cast<double>(tp) / total, static_cast<double>(tp) / kept);
  }
  double sum = 0.0;
  for (int k = 1; k <= total; ++k) {
    double best = 0.0;
    for (const auto& [r, p] : pr)
      if (r >= static_cast<double>(k) / total - 1e-15) best = std::max(best, p);
    sum += best;
  }
  return sum / total;
}

struct Rates {
  std::vector<double> p, r, f1;
  std::vector<long> support;
  double macro_p = 0, macro_r = 0, macro_f1 = 0;
  double weighted_p = 0, weighted_r = 0, weighted_f1 = 0;
  double accuracy = 0;
};

// Expands the matrix into individual (true, predicted) samples and counts.
inline Rates confusion_rates(const std::vector<std::vector<long>>& m) {
  const int k = static_cast<int>(m.size());
  std::vector<std::pair<int, int>> samples;
  for (int t = 0; t < k; ++t)
    for (int p = 0; p < k; ++p)
      for (long n = 0; n < m[t][p]; ++n) samples.emplace_back(t, p);
  Rates out;
  int populated = 0;
  long correct = 0;
  for (const auto& [t, p] : samples) correct += t == p;
  out.accuracy = static_cast<double>(correct) / static_cast<double>(samples.size());
  for (int c = 0; c < k; ++c) {
    long tp = 0, fp = 0, fn = 0;
    for (const auto& [t, p] : samples) {
      if (t == c && p == c) ++tp;
      else if (p == c) ++fp;
      else if (t == c) ++fn;
    }
    const double prec = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / (tp + fp);
    const double rec = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / (tp + fn);
    const double f = prec + rec == 0 ? 0.0 : 2 * prec * rec / (prec + rec);
    out.p.push_back(prec);
    out.r.push_back(rec);
    out.f1.push_back(f);
    out.support.push_back(tp + fn);
    if (tp + fn > 0) {
      ++populated;
      out.macro_p += prec;
      out.macro_r += rec;
      out.macro_f1 += f;
      const double share = static_cast<double>(tp + fn) / static_cast<double>(samples.size());
      out.weighted_p += share * prec;
      out.weighted_r += share * rec;
      out.weighted_f1 += share * f;
    }
  }
  out.macro_p /= populated;
  out.macro_r /= populated;
  out.macro_f1 /= populated;
  return out;
}

inline digitour::BBox random_box(std::mt19937_64& rng, int extent = 30) {
  std::uniform_int_distribution<int> pos(0, extent), size(1, extent / 2);
  const int x = pos(rng), y = pos(rng);
  return {static_cast<double>(x), static_cast<double>(y), static_cast<double>(x + size(rng)),
          static_cast<double>(y + size(rng))};
}

// Largest absolute difference between the library and the references on one
// random instance with at most five boxes of each kind.
inline double instance_error(std::mt19937_64& rng) {
  using namespace digitour;
  std::uniform_int_distribution<int> count(0, 5), cls(1, 3), img(0, 1);
  std::uniform_real_distribution<double> thr_d(0.1, 0.7);
  double worst = 0.0;
  auto diff = [&](double a, double b) { worst = std::max(worst, std::abs(a - b)); };

  const int nd = count(rng), ng = count(rng);
  std::vector<BBox> db, gb;
  std::vector<double> conf;
  std::set<double> used;
  for (int i = 0; i < nd; ++i) {
    db.push_back(random_box(rng));
    double c;
    do c = std::uniform_real_distribution<double>(0.05, 1.0)(rng);
    while (!used.insert(c).second);
    conf.push_back(c);
  }
  for (int i = 0; i < ng; ++i) gb.push_back(random_box(rng));

  for (const auto& a : db)
    for (const auto& b : gb) diff(iou(a, b), iou_by_counting(a, b));

  const double thr = thr_d(rng);
  const auto lib = match_detections(db, conf, gb, thr);
  const auto ref = greedy_pairs(db, conf, gb, thr);
  if (lib.pairs.size() != ref.size()) return 1.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    if (lib.pairs[i].detection != ref[i].det || lib.pairs[i].ground_truth != ref[i].gt) return 1.0;
  }
  if (lib.unmatched_detections.size() + ref.size() != db.size()) return 1.0;
  if (lib.unmatched_gt.size() + ref.size() != gb.size()) return 1.0;

  std::vector<ScoredBox> sd;
  std::vector<GroundTruthBox> sg;
  for (int i = 0; i < nd; ++i) sd.push_back({"i" + std::to_string(img(rng)), db[i], conf[i], cls(rng)});
  for (int i = 0; i < ng; ++i) sg.push_back({"i" + std::to_string(img(rng)), gb[i], cls(rng)});
  diff(digitour::average_precision(sd, sg, -1, thr), oracle::average_precision(sd, sg, -1, thr));
  for (int c = 1; c <= 3; ++c) {
    diff(digitour::average_precision(sd, sg, c, thr), oracle::average_precision(sd, sg, c, thr));
  }

  std::uniform_int_distribution<long> cell(0, 4);
  std::vector<std::vector<long>> m(3, std::vector<long>(3));
  long total = 0;
  for (auto& row : m)
    for (auto& v : row) total += v = cell(rng);
  if (total == 0) m[0][0] = 1;
  const auto got = classification_metrics(m);
  const auto want = confusion_rates(m);
  for (int c = 0; c < 3; ++c) {
    diff(got.precision[c], want.p[c]);
    diff(got.recall[c], want.r[c]);
    diff(got.f1[c], want.f1[c]);
    if (got.support[c] != want.support[c]) return 1.0;
  }
  diff(got.macro.precision, want.macro_p);
  diff(got.macro.recall, want.macro_r);
  diff(got.macro.f1, want.macro_f1);
  diff(got.weighted.precision, want.weighted_p);
  diff(got.weighted.recall, want.weighted_r);
  diff(got.weighted.f1, want.weighted_f1);
  diff(got.macro.accuracy, want.accuracy);
  return worst;
}

}  // namespace oracle
