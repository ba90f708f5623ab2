#pragma once

// Synthetic road scenes with exact ground truth: a parametric road surface sampled
// into a TIN, lane centerlines, vehicles placed on the lanes and conformed to the
// surface, and KITTI-style labels.

#include <cstdint>
#include <numbers>
#include <string>
#include <vector>

#include "roadlift/descriptor.hpp"
#include "roadlift/geometry.hpp"
#include "roadlift/lane_map.hpp"
#include "roadlift/net.hpp"
#include "roadlift/tin_map.hpp"

namespace roadlift {

enum class ProfileKind { Flat, Grade, Crest, Sag, Banked };
std::string toString(ProfileKind kind);
ProfileKind parseProfileKind(const std::string& name);

// Height field over a plan-view rectangle; the road runs along +X.
//   Grade:  z = s * x
//   Crest:  z = -c * (x - apex_x)^2 / 2
//   Sag:    z = +c * (x - apex_x)^2 / 2
//   Banked: z = cs * y
struct RoadProfile {
  ProfileKind kind = ProfileKind::Flat;
  double parameter = 0;  // s, c (1/m, positive) or cs
  double apex_x = 100;
  double x_min = 20;
  double x_max = 220;
  double y_min = -20;
  double y_max = 20;
  double sample_spacing = 4;

  static RoadProfile flat() { return {}; }
  static RoadProfile grade(double s) { return {ProfileKind::Grade, s}; }
  static RoadProfile crest(double c) { return {ProfileKind::Crest, c}; }
  static RoadProfile sag(double c) { return {ProfileKind::Sag, c}; }
  static RoadProfile banked(double cs) { return {ProfileKind::Banked, cs}; }

  double elevation(double x, double y) const;
  Vec3d normal(double x, double y) const;  // unit, upward

  // Throws InvalidArgument: |s| <= 0.15, |cs| <= 0.10, c > 0, spacing > 0, extent non-empty.
  void validate() const;
};

// Grid samples of the profile. Interior samples are jittered in plan view by up to a
// quarter spacing so the triangulation is irregular; boundary samples stay on the
// rectangle so the TIN covers it exactly.
std::vector<Vec3d> sampleProfile(const RoadProfile& profile, std::uint64_t seed);

struct Interval {
  double lo = 0;
  double hi = 0;
};

// Uniform dimension ranges, m.
struct DimensionPrior {
  Interval length;
  Interval width;
  Interval height;
};

inline constexpr DimensionPrior kCarPrior{{3.8, 5.2}, {1.6, 2.0}, {1.4, 1.8}};
inline constexpr DimensionPrior kTruckPrior{{6.0, 10.0}, {2.2, 2.6}, {2.5, 3.8}};

struct CameraPose {
  double lateral = 0;  // camera Y, m
  double yaw = 0;      // rad
  bool held_out = false;
};

// Five generation poses and two held-out poses.
std::vector<CameraPose> defaultPoses();

struct SceneSpec {
  RoadProfile profile;
  CameraPose pose;
  double camera_height = 11;
  double camera_pitch_down = 6 * std::numbers::pi / 180;
  double horizontal_fov = 21 * std::numbers::pi / 180;
  int image_width = 3840;
  int image_height = 2160;

  int lane_count = 4;
  double lane_pitch = 3.5;
  int vehicle_count = 10;
  double range_min = 40;  // camera center to centroid, m
  double range_max = 160;
  double truck_fraction = 0.2;
  double lateral_jitter = 0.3;                           // m
  double heading_jitter = 3 * std::numbers::pi / 180;    // rad
  double min_gap = 0.5;                                  // plan-view clearance, m
  DimensionPrior car = kCarPrior;
  DimensionPrior truck = kTruckPrior;

  int frame = 0;
  std::uint64_t seed = 0;

  Camera camera() const;
  void validate() const;
};

struct Scene {
  SceneSpec spec;
  TinMap map;
  LaneMap lanes;
  LabeledFrame frame;
};

// Throws InfeasibleSpec when the vehicles cannot be placed within 100 * count
// attempts. A candidate is rejected when it overlaps a placed vehicle, leaves the
// map, projects fully outside the image, or has a bottom corner hidden by terrain.
Scene generateScene(const SceneSpec& spec);

struct BenchmarkSpec {
  std::uint64_t seed = 7;
  RoadProfile profile;
  std::vector<CameraPose> poses = defaultPoses();
  int scenes_per_pose = 10;
  int vehicles_per_scene = 10;
  double heading_jitter = 3 * std::numbers::pi / 180;
};

// Scenes in pose order; frame ids are consecutive from 0.
std::vector<Scene> benchmark(const BenchmarkSpec& spec);

// Tight box of the nine projected keypoints clipped to the image, and the fraction of
// the unclipped box area outside the image. Throws BehindCamera.
std::pair<Box2D, double> projectedBox(const Box3D& box, const Camera& camera);

// Four-channel descriptor input for one crop: procedural texture keyed to the object
// id in channels 0..2, the lane mask in channel 3 (zeros when `lanes` is empty).
FeatureMap snippetTensor(const Box2D& crop, int object_id, const std::vector<ImagePolyline>& lanes);

}  // namespace roadlift
