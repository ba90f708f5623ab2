#pragma once

#include <array>
#include <optional>

#include "roadlift/descriptor.hpp"
#include "roadlift/geometry.hpp"
#include "roadlift/tin_map.hpp"

namespace roadlift {

struct LiftFlags {
  std::array<bool, 4> ray_hit{};  // bottom keypoints 0..3
  bool fallback = false;
  bool closure_from_other_triple = false;  // three hits other than 0, 1, 2
  bool dims_completion = false;            // descriptor dims + heading completed the base
  bool plane_extension = false;            // missing rays met the local surface plane
};

struct LiftResult {
  Box3D box;
  std::array<Vec3d, 4> base_points;  // canonical order 0..3
  Vec3d surface_normal = Vec3d::UnitZ();
  // Distance between the completed fourth corner and its own ray hit; absent when
  // that ray misses or was used to build the base.
  std::optional<double> closure_residual;
  // Geometric minus descriptor (width, length, height); full layout only.
  std::optional<Vec3d> dim_deltas;
  LiftFlags flags;
};

// Rays through bottom keypoints 0, 1, 2 meet the map at P0, P1, P2; P3 = P0 + P2 - P1.
// The base is extruded by the decoded height along the surface normal queried at
// the base centroid. Throws RayMiss for the first missing keypoint ray and
// DegenerateBase when the base area is below 1e-4 m^2 or the height is not positive.
LiftResult liftPrimary(const Detection& detection, const Camera& camera, const TinMap& map);

// Completes the base from whatever bottom rays hit. Throws AllRaysMiss when none do.
LiftResult fallbackLift(const Detection& detection, const Camera& camera, const TinMap& map);

// Primary path, falling back on ray misses.
LiftResult lift(const Detection& detection, const Camera& camera, const TinMap& map);

// Box from a base parallelogram, an up normal and a height. `base` in canonical order.
Box3D boxFromBase(const std::array<Vec3d, 4>& base, const Vec3d& normal, double height);

}  // namespace roadlift
