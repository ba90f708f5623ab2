#include "roadlift/pipeline.hpp"

namespace roadlift {

std::vector<LiftRecord> liftDetections(const std::vector<Detection>& detections, const Camera& camera,
                                       const TinMap& map) {
  std::vector<LiftRecord> out;
  out.reserve(detections.size());
  for (const auto& d : detections) {
    LiftRecord rec;
    rec.detection = d;
    try {
      rec.result = lift(d, camera, map);
    } catch (const Error& e) {
      rec.error = e.what();
    }
    out.push_back(std::move(rec));
  }
  return out;
}

std::vector<ScoredBox> scoredBoxes(const std::vector<LiftRecord>& records) {
  std::vector<ScoredBox> out;
  for (const auto& r : records) {
    if (!r.result) continue;
    const Detection& d = r.detection;
    out.push_back({d.frame, d.object_id, d.object_class, r.result->box, d.confidence});
  }
  return out;
}

}  // namespace roadlift
