#include "roadlift/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "roadlift/error.hpp"
#include "roadlift/random.hpp"

namespace roadlift {

namespace {

constexpr double kDeg = std::numbers::pi / 180;
constexpr double kCoverageMargin = 1.0;   // m between a footprint and the map edge
constexpr double kHiddenTolerance = 0.1;  // m along the ray before a corner
constexpr double kMinBoxSide = 2.0;       // px

const char* const kCarModels[] = {"sedan", "hatchback", "suv", "coupe", "wagon", "van"};
const char* const kTruckModels[] = {"box_truck", "tractor", "flatbed", "tanker", "bus"};

// Plan-view rectangle corners (bottom face, canonical order).
std::array<Vec2d, 4> footprint(const Box3D& box, double grow) {
  const auto c = boxCorners(box);
  const Vec2d center(box.center.x(), box.center.y());
  std::array<Vec2d, 4> out;
  for (int i = 0; i < 4; ++i) {
    const Vec2d p(c[i].x(), c[i].y());
    const Vec2d d = p - center;
    out[i] = p + d.normalized() * grow;
  }
  return out;
}

// Separating axis test for two convex quadrilaterals.
bool overlaps(const std::array<Vec2d, 4>& a, const std::array<Vec2d, 4>& b) {
  for (const auto* poly : {&a, &b}) {
    for (int i = 0; i < 4; ++i) {
      const Vec2d e = (*poly)[(i + 1) % 4] - (*poly)[i];
      const Vec2d axis(-e.y(), e.x());
      double amin = 1e300, amax = -1e300, bmin = 1e300, bmax = -1e300;
      for (const auto& p : a) {
        amin = std::min(amin, axis.dot(p));
        amax = std::max(amax, axis.dot(p));
      }
      for (const auto& p : b) {
        bmin = std::min(bmin, axis.dot(p));
        bmax = std::max(bmax, axis.dot(p));
      }
      if (amax < bmin || bmax < amin) return false;
    }
  }
  return true;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Uniform in [0, 1) from a 64-bit hash.
double unitHash(std::uint64_t h) { return static_cast<double>(splitmix64(h) >> 11) * 0x1.0p-53; }

}  // namespace

std::string toString(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::Flat: return "flat";
    case ProfileKind::Grade: return "grade";
    case ProfileKind::Crest: return "crest";
    case ProfileKind::Sag: return "sag";
    case ProfileKind::Banked: return "banked";
  }
  return "flat";
}

ProfileKind parseProfileKind(const std::string& name) {
  for (ProfileKind k : {ProfileKind::Flat, ProfileKind::Grade, ProfileKind::Crest, ProfileKind::Sag,
                        ProfileKind::Banked})
    if (toString(k) == name) return k;
  throw InvalidArgument("unknown road profile '" + name + "'");
}

double RoadProfile::elevation(double x, double y) const {
  switch (kind) {
    case ProfileKind::Flat: return 0;
    case ProfileKind::Grade: return parameter * x;
    case ProfileKind::Crest: return -parameter * (x - apex_x) * (x - apex_x) / 2;
    case ProfileKind::Sag: return parameter * (x - apex_x) * (x - apex_x) / 2;
    case ProfileKind::Banked: return parameter * y;
  }
  return 0;
}

Vec3d RoadProfile::normal(double x, double /*y*/) const {
  double dzdx = 0, dzdy = 0;
  switch (kind) {
    case ProfileKind::Flat: break;
    case ProfileKind::Grade: dzdx = parameter; break;
    case ProfileKind::Crest: dzdx = -parameter * (x - apex_x); break;
    case ProfileKind::Sag: dzdx = parameter * (x - apex_x); break;
    case ProfileKind::Banked: dzdy = parameter; break;
  }
  return Vec3d(-dzdx, -dzdy, 1).normalized();
}

void RoadProfile::validate() const {
  if (!(sample_spacing > 0)) throw InvalidArgument("sample spacing must be positive");
  if (!(x_max > x_min && y_max > y_min)) throw InvalidArgument("road extent is empty");
  if (kind == ProfileKind::Grade && !(std::abs(parameter) <= 0.15))
    throw InvalidArgument("grade must satisfy |s| <= 0.15");
  if (kind == ProfileKind::Banked && !(std::abs(parameter) <= 0.10))
    throw InvalidArgument("cross slope must satisfy |cs| <= 0.10");
  if ((kind == ProfileKind::Crest || kind == ProfileKind::Sag) && !(parameter > 0))
    throw InvalidArgument("vertical curvature must be positive");
}

std::vector<Vec3d> sampleProfile(const RoadProfile& profile, std::uint64_t seed) {
  profile.validate();
  const int nx = static_cast<int>(std::ceil((profile.x_max - profile.x_min) / profile.sample_spacing - 1e-9));
  const int ny = static_cast<int>(std::ceil((profile.y_max - profile.y_min) / profile.sample_spacing - 1e-9));
  const double sx = (profile.x_max - profile.x_min) / nx, sy = (profile.y_max - profile.y_min) / ny;
  std::mt19937_64 rng(mixSeed({seed, 0x54494EULL}));
  std::vector<Vec3d> pts;
  pts.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      double x = profile.x_min + i * sx, y = profile.y_min + j * sy;
      const double jx = uniform(rng, -0.25, 0.25), jy = uniform(rng, -0.25, 0.25);
      if (i > 0 && i < nx) x += jx * sx;
      if (j > 0 && j < ny) y += jy * sy;
      pts.emplace_back(x, y, profile.elevation(x, y));
    }
  }
  return pts;
}

std::vector<CameraPose> defaultPoses() {
  return {
      {-8, 4 * kDeg, false}, {-4, 2 * kDeg, false}, {0, 0, false}, {4, -2 * kDeg, false}, {8, -4 * kDeg, false},
      {-6, 1 * kDeg, true},  {6, -1 * kDeg, true},
  };
}

Camera SceneSpec::camera() const {
  const Vec3d position(0, pose.lateral, profile.elevation(0, pose.lateral) + camera_height);
  return Camera::lookingFrom(position, pose.yaw, camera_pitch_down, horizontal_fov, image_width, image_height);
}

void SceneSpec::validate() const {
  profile.validate();
  if (lane_count < 1 || !(lane_pitch > 0)) throw InvalidArgument("need at least one lane with positive pitch");
  if (vehicle_count < 0) throw InvalidArgument("vehicle count must be non-negative");
  if (!(range_max > range_min && range_min > 0)) throw InvalidArgument("range span is empty");
  if (!(truck_fraction >= 0 && truck_fraction <= 1)) throw InvalidArgument("truck fraction must lie in [0, 1]");
  if (!(lateral_jitter >= 0 && lateral_jitter <= 0.3)) throw InvalidArgument("lateral jitter must lie in [0, 0.3] m");
  if (!(heading_jitter >= 0 && heading_jitter <= 3 * kDeg + 1e-12))
    throw InvalidArgument("heading jitter must lie in [0, 3] degrees");
  if (!(camera_height > 0) || !(horizontal_fov > 0 && horizontal_fov < std::numbers::pi))
    throw InvalidArgument("invalid camera pose");
  if (image_width <= 0 || image_height <= 0) throw InvalidArgument("image size must be positive");
}

std::pair<Box2D, double> projectedBox(const Box3D& box, const Camera& camera) {
  const auto pts = boxCorners(box);
  Box2D raw{1e300, 1e300, -1e300, -1e300};
  for (const auto& p : pts) {
    const Vec2d uv = project(camera, p);
    raw.u_min = std::min(raw.u_min, uv.x());
    raw.v_min = std::min(raw.v_min, uv.y());
    raw.u_max = std::max(raw.u_max, uv.x());
    raw.v_max = std::max(raw.v_max, uv.y());
  }
  Box2D clipped{std::max(raw.u_min, 0.0), std::max(raw.v_min, 0.0),
                std::min(raw.u_max, static_cast<double>(camera.image_width)),
                std::min(raw.v_max, static_cast<double>(camera.image_height))};
  if (!clipped.valid()) return {clipped, 1.0};
  const double raw_area = raw.width() * raw.height();
  const double truncation = raw_area > 0 ? 1 - clipped.width() * clipped.height() / raw_area : 0;
  return {clipped, std::clamp(truncation, 0.0, 1.0)};
}

Scene generateScene(const SceneSpec& spec) {
  spec.validate();
  const RoadProfile& profile = spec.profile;
  TinMap map = TinMap::build(sampleProfile(profile, spec.seed));
  const Camera camera = spec.camera();
  const Vec3d cam_center = camera.center();

  // lanes along X; right-hand traffic, so lanes at negative Y head +X
  std::vector<Lane> lanes;
  std::vector<double> lane_y, lane_yaw;
  for (int i = 0; i < spec.lane_count; ++i) {
    const double y = (i - (spec.lane_count - 1) / 2.0) * spec.lane_pitch;
    lane_y.push_back(y);
    lane_yaw.push_back(y < 0 ? 0.0 : std::numbers::pi);
    Lane lane;
    lane.id = i;
    const int steps = static_cast<int>(std::ceil((profile.x_max - profile.x_min) / 5.0));
    for (int k = 0; k <= steps; ++k) {
      const double x = profile.x_min + (profile.x_max - profile.x_min) * k / steps;
      lane.points.push_back(map.query(x, y).point);
    }
    if (lane_yaw.back() != 0) std::reverse(lane.points.begin(), lane.points.end());
    lanes.push_back(std::move(lane));
  }

  LabeledFrame frame;
  frame.frame = spec.frame;
  frame.camera = camera;
  std::vector<std::array<Vec2d, 4>> placed;
  std::mt19937_64 rng(mixSeed({spec.seed, static_cast<std::uint64_t>(spec.frame), 0x564548ULL}));
  const int max_attempts = 100 * spec.vehicle_count;
  int attempts = 0;
  while (static_cast<int>(frame.objects.size()) < spec.vehicle_count) {
    if (attempts++ >= max_attempts)
      throw InfeasibleSpec("placed " + std::to_string(frame.objects.size()) + " of " +
                           std::to_string(spec.vehicle_count) + " vehicles in " + std::to_string(max_attempts) +
                           " attempts");
    // fixed draw order keeps scenes reproducible whatever gets rejected
    const int lane = std::uniform_int_distribution<int>(0, spec.lane_count - 1)(rng);
    const double distance = uniform(rng, spec.range_min, spec.range_max);
    const double lateral = uniform(rng, -spec.lateral_jitter, spec.lateral_jitter);
    const double heading = uniform(rng, -spec.heading_jitter, spec.heading_jitter);
    const bool truck = uniform(rng, 0, 1) < spec.truck_fraction;
    const DimensionPrior& prior = truck ? spec.truck : spec.car;
    Size3 size;
    size.length = uniform(rng, prior.length.lo, prior.length.hi);
    size.width = uniform(rng, prior.width.lo, prior.width.hi);
    size.height = uniform(rng, prior.height.lo, prior.height.hi);
    const double model_draw = uniform(rng, 0, 1);

    // centroid plan position on the lane; the base center sits below it along the normal
    const Vec2d target(cam_center.x() + distance, lane_y[lane] + lateral);
    Vec2d base_xy = target;
    Vec3d n = profile.normal(base_xy.x(), base_xy.y());
    for (int it = 0; it < 8; ++it) {
      base_xy = target - (size.height / 2) * Vec2d(n.x(), n.y());
      n = profile.normal(base_xy.x(), base_xy.y());
    }
    const Vec3d base(base_xy.x(), base_xy.y(), profile.elevation(base_xy.x(), base_xy.y()));
    const double yaw = lane_yaw[lane] + heading;
    const Vec3d horizontal(std::cos(yaw), std::sin(yaw), 0);
    const Vec3d f = (horizontal - horizontal.dot(n) * n).normalized();
    Mat3d r;
    r.col(0) = f;
    r.col(1) = n.cross(f);
    r.col(2) = n;

    Box3D box;
    box.size = size;
    box.center = base + (size.height / 2) * n;
    box.rotation = matrixToEuler(r).angles;

    const auto corners = boxCorners(box);
    bool ok = true;
    for (int i = 0; i < 4 && ok; ++i) {
      ok = corners[i].x() >= profile.x_min + kCoverageMargin && corners[i].x() <= profile.x_max - kCoverageMargin &&
           corners[i].y() >= profile.y_min + kCoverageMargin && corners[i].y() <= profile.y_max - kCoverageMargin;
    }
    if (!ok) continue;
    // forward distance is sampled along x; the range kept is the 3D centroid distance
    const double range = (box.center - cam_center).norm();
    if (range < spec.range_min || range >= spec.range_max) continue;
    const auto fp = footprint(box, spec.min_gap / 2);
    if (std::any_of(placed.begin(), placed.end(), [&](const auto& q) { return overlaps(fp, q); })) continue;
    for (const auto& c : corners) ok = ok && camera.toCamera(c).z() > 1.0;
    if (!ok) continue;
    const auto [box2d, truncation] = projectedBox(box, camera);
    if (!box2d.valid() || box2d.width() < kMinBoxSide || box2d.height() < kMinBoxSide) continue;
    for (int i = 0; i < 4 && ok; ++i) {
      const RayD ray = RayD::through(cam_center, corners[i]);
      const auto hit = map.intersect(ray);
      ok = hit && hit->t >= (corners[i] - cam_center).norm() - kHiddenTolerance;
    }
    if (!ok) continue;

    LabeledObject obj;
    obj.object_id = static_cast<int>(frame.objects.size());
    obj.object_class = truck ? ObjectClass::Truck : ObjectClass::Car;
    if (truck) {
      obj.model_name = kTruckModels[static_cast<int>(model_draw * std::size(kTruckModels))];
    } else {
      obj.model_name = kCarModels[static_cast<int>(model_draw * std::size(kCarModels))];
    }
    obj.box = box;
    obj.box2d = box2d;
    obj.truncation = truncation;
    obj.occlusion = 0;
    obj.alpha = computeObservationAngle(box, camera);
    frame.objects.push_back(std::move(obj));
    placed.push_back(footprint(box, spec.min_gap / 2));
  }
  return Scene{spec, std::move(map), LaneMap(std::move(lanes)), std::move(frame)};
}

std::vector<Scene> benchmark(const BenchmarkSpec& spec) {
  std::vector<Scene> scenes;
  int frame = 0;
  for (const CameraPose& pose : spec.poses) {
    for (int s = 0; s < spec.scenes_per_pose; ++s, ++frame) {
      SceneSpec scene;
      scene.profile = spec.profile;
      scene.pose = pose;
      scene.vehicle_count = spec.vehicles_per_scene;
      scene.heading_jitter = spec.heading_jitter;
      scene.frame = frame;
      scene.seed = mixSeed({spec.seed, static_cast<std::uint64_t>(frame)});
      scenes.push_back(generateScene(scene));
    }
  }
  return scenes;
}

FeatureMap snippetTensor(const Box2D& crop, int object_id, const std::vector<ImagePolyline>& lanes) {
  const SnippetSpec snip = SnippetSpec::forBox(crop);
  FeatureMap out(4, snip.out_size, snip.out_size);
  const std::uint64_t key = mixSeed({0x534E4950ULL, static_cast<std::uint64_t>(object_id)});
  const double hue[3] = {unitHash(key), unitHash(key + 1), unitHash(key + 2)};
  for (int row = 0; row < snip.out_size; ++row) {
    for (int col = 0; col < snip.out_size; ++col) {
      if (!snip.isContent(col, row)) continue;
      const Vec2d p = snip.invert(Vec2d(col + 0.5, row + 0.5));
      const double gu = (p.x() - crop.u_min) / crop.width();
      const double gv = (p.y() - crop.v_min) / crop.height();
      for (int c = 0; c < 3; ++c) {
        const std::uint64_t h = key ^ (static_cast<std::uint64_t>(row) << 32 | static_cast<std::uint64_t>(col) << 2 | c);
        const double v = 0.35 * hue[c] + 0.25 * gu + 0.25 * gv + 0.15 * unitHash(h);
        out.at(c, row, col) = static_cast<float>(v);
      }
    }
  }
  if (!lanes.empty()) {
    const Channel mask = rasterizeChannel(lanes, crop, snip.out_size);
    for (int row = 0; row < snip.out_size; ++row)
      for (int col = 0; col < snip.out_size; ++col) out.at(3, row, col) = mask(row, col);
  }
  return out;
}

}  // namespace roadlift
