#pragma once

#include <optional>
#include <vector>

#include "roadlift/descriptor.hpp"
#include "roadlift/geometry.hpp"
#include "roadlift/iou.hpp"

namespace roadlift {

enum class MetricSpace { BEV, ThreeD };

struct MatchConfig {
  double iou_threshold = 0.5;
  int recall_positions = 40;
  MetricSpace metric_space = MetricSpace::BEV;
  BevFootprint footprint = BevFootprint::CornerHull;
  std::vector<double> range_bins = {0, 20, 40, 60, 80, 100, 120, 140, 160};  // edges, m

  // Throws InvalidArgument.
  void validate() const;
};

// A lifted box ready for scoring.
struct ScoredBox {
  int frame = 0;
  int object_id = -1;
  ObjectClass object_class = ObjectClass::Car;
  Box3D box;
  double confidence = 1;
};

struct ClassAp {
  ObjectClass object_class = ObjectClass::Car;
  std::optional<double> ap;  // absent when the class has no ground truth
  int ground_truth = 0;
  int detections = 0;
  int true_positives = 0;
};

struct MatchCounts {
  int tp = 0;
  int fp = 0;
  int fn = 0;
  MatchCounts& operator+=(const MatchCounts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool operator==(const MatchCounts&) const = default;
};

// Right-open interval [lo, hi).
struct RangeBin {
  double lo = 0;
  double hi = 0;
  std::optional<double> mean_iou;  // 3D IoU of pairs with GT range in the bin
  int pairs = 0;
  MatchCounts counts;  // TP/FN by GT range, FP by detection range
};

struct EvalReport {
  std::vector<ClassAp> per_class;  // Car, Truck
  std::optional<double> mean_ap;   // average over classes with ground truth
  std::optional<double> pooled_ap;  // all vehicles ranked together
  std::vector<RangeBin> bins;
  MatchCounts outside_bins;  // ranges outside the configured edges
  MatchCounts totals;
};

// Interpolated AP from detections already flagged TP/FP. Ranking is by descending
// confidence, ties by input order. Returns nullopt when num_ground_truth is zero.
struct RankedFlag {
  double confidence = 0;
  bool true_positive = false;
};
std::optional<double> interpolatedAp(std::vector<RankedFlag> ranked, int num_ground_truth, int recall_positions);

double matchIou(const Box3D& a, const Box3D& b, const MatchConfig& cfg);

// Per frame and class, detections in descending confidence take the unmatched ground
// truth of highest IoU >= threshold, ties to the lowest ground-truth index. Range-binned
// IoU pairs a detection with the ground truth of the same frame and object id.
EvalReport evaluate(const std::vector<ScoredBox>& detections, const std::vector<LabeledFrame>& ground_truth,
                    const MatchConfig& cfg = {});

struct IouPair {
  Box3D ground_truth;
  Box3D prediction;
  Vec3d camera_center = Vec3d::Zero();
};

// Mean 3D IoU per right-open range bin; range is camera center to GT centroid.
std::vector<RangeBin> rangeBinnedIou(const std::vector<IouPair>& pairs, const std::vector<double>& edges);

}  // namespace roadlift
