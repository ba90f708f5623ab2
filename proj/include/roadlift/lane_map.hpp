#pragma once

#include <vector>

#include <Eigen/Core>

#include "roadlift/descriptor.hpp"
#include "roadlift/geometry.hpp"

namespace roadlift {

struct Lane {
  int id = 0;
  std::vector<Vec3d> points;  // on the road surface, consecutive points > 1e-6 m apart
};

class LaneMap {
 public:
  LaneMap() = default;
  explicit LaneMap(std::vector<Lane> lanes);

  const std::vector<Lane>& lanes() const { return lanes_; }
  bool empty() const { return lanes_.empty(); }

 private:
  std::vector<Lane> lanes_;
};

using ImagePolyline = std::vector<Vec2d>;

inline constexpr double kLaneSubdivision = 0.5;  // meters between projected samples
inline constexpr double kNearClip = 0.1;         // camera-frame depth

// Subdivides every segment to <= 0.5 m, clips at camera depth 0.1 m and projects.
// A lane that leaves and re-enters the visible half-space yields several polylines.
std::vector<ImagePolyline> projectLanes(const LaneMap& lanes, const Camera& camera);

// Row-major out_size x out_size lane mask in [0, 1], drawn in the same snippet
// coordinates as the image crop.
using Channel = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Channel rasterizeChannel(const std::vector<ImagePolyline>& polylines, const Box2D& crop,
                         int out_size = kSnippetSize);

}  // namespace roadlift
