#include "roadlift/eval.hpp"

#include <algorithm>
#include <map>

#include "roadlift/error.hpp"

namespace roadlift {

namespace {

constexpr ObjectClass kClasses[] = {ObjectClass::Car, ObjectClass::Truck};

// Index of the right-open bin containing `range`, or -1.
int binIndex(const std::vector<double>& edges, double range) {
  if (edges.size() < 2 || range < edges.front() || range >= edges.back()) return -1;
  const auto it = std::upper_bound(edges.begin(), edges.end(), range);
  return static_cast<int>(it - edges.begin()) - 1;
}

std::vector<RangeBin> emptyBins(const std::vector<double>& edges) {
  std::vector<RangeBin> bins;
  for (std::size_t i = 0; i + 1 < edges.size(); ++i) bins.push_back({edges[i], edges[i + 1], std::nullopt, 0, {}});
  return bins;
}

}  // namespace

void MatchConfig::validate() const {
  if (!(iou_threshold > 0 && iou_threshold <= 1)) throw InvalidArgument("IoU threshold must lie in (0, 1]");
  if (recall_positions < 1) throw InvalidArgument("recall positions must be at least 1");
  if (range_bins.size() < 2) throw InvalidArgument("range bins need at least two edges");
  for (std::size_t i = 1; i < range_bins.size(); ++i)
    if (!(range_bins[i] > range_bins[i - 1])) throw InvalidArgument("range bin edges must increase strictly");
}

std::optional<double> interpolatedAp(std::vector<RankedFlag> ranked, int num_ground_truth, int recall_positions) {
  if (num_ground_truth <= 0) return std::nullopt;
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const RankedFlag& a, const RankedFlag& b) { return a.confidence > b.confidence; });
  // best[k] = max precision among ranks whose recall reaches k / R
  std::vector<double> best(recall_positions + 1, 0.0);
  long tp = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (ranked[i].true_positive) ++tp;
    const double precision = static_cast<double>(tp) / static_cast<double>(i + 1);
    // largest k with tp * R >= k * num_gt, in exact integer arithmetic
    const long k = tp * recall_positions / num_ground_truth;
    if (k >= 1) best[k] = std::max(best[k], precision);
  }
  for (int k = recall_positions - 1; k >= 1; --k) best[k] = std::max(best[k], best[k + 1]);
  // equal precisions accumulate as count * value so repeated levels sum exactly
  double sum = 0;
  for (int k = 1; k <= recall_positions;) {
    int run = k;
    while (run + 1 <= recall_positions && best[run + 1] == best[k]) ++run;
    sum += static_cast<double>(run - k + 1) * best[k];
    k = run + 1;
  }
  return sum / recall_positions;
}

double matchIou(const Box3D& a, const Box3D& b, const MatchConfig& cfg) {
  return cfg.metric_space == MetricSpace::BEV ? iouBev(a, b, cfg.footprint) : iou3d(a, b);
}

std::vector<RangeBin> rangeBinnedIou(const std::vector<IouPair>& pairs, const std::vector<double>& edges) {
  std::vector<RangeBin> bins = emptyBins(edges);
  std::vector<double> sums(bins.size(), 0.0);
  for (const auto& p : pairs) {
    const int b = binIndex(edges, (p.ground_truth.center - p.camera_center).norm());
    if (b < 0) continue;
    sums[b] += iou3d(p.ground_truth, p.prediction);
    ++bins[b].pairs;
  }
  for (std::size_t i = 0; i < bins.size(); ++i)
    if (bins[i].pairs > 0) bins[i].mean_iou = sums[i] / bins[i].pairs;
  return bins;
}

EvalReport evaluate(const std::vector<ScoredBox>& detections, const std::vector<LabeledFrame>& ground_truth,
                    const MatchConfig& cfg) {
  cfg.validate();
  EvalReport report;
  report.bins = emptyBins(cfg.range_bins);

  std::map<int, const LabeledFrame*> frames;
  for (const auto& f : ground_truth) frames[f.frame] = &f;
  std::map<int, std::vector<int>> dets_by_frame;
  for (std::size_t i = 0; i < detections.size(); ++i) {
    if (!(detections[i].confidence >= 0 && detections[i].confidence <= 1))
      throw InvalidArgument("detection confidence must lie in [0, 1]");
    dets_by_frame[detections[i].frame].push_back(static_cast<int>(i));
  }
  for (const auto& [frame, _] : dets_by_frame)
    if (!frames.count(frame)) throw InvalidArgument("detections reference unknown frame " + std::to_string(frame));

  std::vector<bool> is_tp(detections.size(), false);
  auto countAt = [&](double range) -> MatchCounts& {
    const int b = binIndex(cfg.range_bins, range);
    return b < 0 ? report.outside_bins : report.bins[b].counts;
  };

  std::vector<IouPair> pairs;
  for (const auto& [frame_id, frame] : frames) {
    const Vec3d cam = frame->camera.center();
    const auto& objects = frame->objects;
    const std::vector<int>& dets = dets_by_frame[frame_id];
    for (ObjectClass cls : kClasses) {
      std::vector<int> gts;
      for (std::size_t g = 0; g < objects.size(); ++g)
        if (objects[g].object_class == cls) gts.push_back(static_cast<int>(g));
      std::vector<int> order;
      for (int d : dets)
        if (detections[d].object_class == cls) order.push_back(d);
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return detections[a].confidence > detections[b].confidence;
      });
      std::vector<bool> taken(gts.size(), false);
      for (int d : order) {
        int best = -1;
        double best_iou = cfg.iou_threshold;
        for (std::size_t j = 0; j < gts.size(); ++j) {
          if (taken[j]) continue;
          const double iou = matchIou(detections[d].box, objects[gts[j]].box, cfg);
          if (iou >= best_iou && (best < 0 || iou > best_iou)) {
            best = static_cast<int>(j);
            best_iou = iou;
          }
        }
        if (best >= 0) {
          taken[best] = true;
          is_tp[d] = true;
          ++countAt((objects[gts[best]].box.center - cam).norm()).tp;
        } else {
          ++countAt((detections[d].box.center - cam).norm()).fp;
        }
      }
      for (std::size_t j = 0; j < gts.size(); ++j)
        if (!taken[j]) ++countAt((objects[gts[j]].box.center - cam).norm()).fn;
    }

    std::map<int, int> by_id;
    for (std::size_t g = 0; g < objects.size(); ++g) by_id[objects[g].object_id] = static_cast<int>(g);
    for (int d : dets) {
      const auto it = by_id.find(detections[d].object_id);
      if (it != by_id.end()) pairs.push_back({objects[it->second].box, detections[d].box, cam});
    }
  }

  const std::vector<RangeBin> iou_bins = rangeBinnedIou(pairs, cfg.range_bins);
  for (std::size_t i = 0; i < iou_bins.size(); ++i) {
    report.bins[i].mean_iou = iou_bins[i].mean_iou;
    report.bins[i].pairs = iou_bins[i].pairs;
  }
  for (const auto& b : report.bins) report.totals += b.counts;
  report.totals += report.outside_bins;

  int pooled_gt = 0;
  double ap_sum = 0;
  int ap_classes = 0;
  for (ObjectClass cls : kClasses) {
    ClassAp entry;
    entry.object_class = cls;
    std::vector<RankedFlag> ranked;
    for (std::size_t d = 0; d < detections.size(); ++d) {
      if (detections[d].object_class != cls || !frames.count(detections[d].frame)) continue;
      ranked.push_back({detections[d].confidence, static_cast<bool>(is_tp[d])});
      entry.true_positives += is_tp[d] ? 1 : 0;
    }
    for (const auto& f : ground_truth)
      for (const auto& o : f.objects) entry.ground_truth += o.object_class == cls ? 1 : 0;
    entry.detections = static_cast<int>(ranked.size());
    entry.ap = interpolatedAp(ranked, entry.ground_truth, cfg.recall_positions);
    if (entry.ap) {
      ap_sum += *entry.ap;
      ++ap_classes;
    }
    pooled_gt += entry.ground_truth;
    report.per_class.push_back(entry);
  }
  if (ap_classes > 0) report.mean_ap = ap_sum / ap_classes;
  // pooled ranking keeps input order on equal confidence
  std::vector<RankedFlag> pooled_ordered;
  for (std::size_t d = 0; d < detections.size(); ++d)
    if (frames.count(detections[d].frame)) pooled_ordered.push_back({detections[d].confidence, static_cast<bool>(is_tp[d])});
  report.pooled_ap = interpolatedAp(pooled_ordered, pooled_gt, cfg.recall_positions);
  return report;
}

}  // namespace roadlift
