#include "roadlift/lifting.hpp"

#include <cmath>
#include <vector>

namespace roadlift {

namespace {

constexpr double kMinBaseArea = 1e-4;

Vec3d projectOntoPlane(const Vec3d& v, const Vec3d& n) { return v - v.dot(n) * n; }

Vec3d surfaceNormalAt(const TinMap& map, const Vec3d& point, const Vec3d& fallback) {
  if (auto s = map.tryQuery(point.x(), point.y())) return s->normal;
  return fallback;
}

Vec3d baseNormal(const std::array<Vec3d, 4>& p) {
  Vec3d n = (p[1] - p[0]).cross(p[3] - p[0]);
  if (n.z() < 0) n = -n;
  return n.normalized();
}

struct Hits {
  std::array<std::optional<SurfaceSample>, 4> sample;
  int count = 0;
};

Hits castBottomRays(const DecodedDescriptor& decoded, const Camera& camera, const TinMap& map) {
  Hits hits;
  for (int i = 0; i < 4; ++i) {
    hits.sample[i] = map.intersect(pixelRay(camera, decoded.keypoints[i]));
    if (hits.sample[i]) ++hits.count;
  }
  return hits;
}

LiftResult finish(const std::array<Vec3d, 4>& base, const Vec3d& normal, const DecodedDescriptor& decoded,
                  LiftFlags flags) {
  LiftResult result;
  result.base_points = base;
  result.surface_normal = normal;
  result.box = boxFromBase(base, normal, decoded.height);
  result.flags = flags;
  if (decoded.size) {
    const Size3& d = *decoded.size;
    result.dim_deltas = Vec3d(result.box.size.width - d.width, result.box.size.length - d.length,
                              result.box.size.height - d.height);
  }
  return result;
}

// Object X axis in world coordinates from the observation angle, constrained to the
// plane orthogonal to `normal`.
Vec3d headingFromAlpha(double alpha, const Vec2d& centroid_pixel, const Camera& camera, const Vec3d& normal) {
  const Vec3d ray_cam((centroid_pixel.x() - camera.cx) / camera.fx, (centroid_pixel.y() - camera.cy) / camera.fy, 1);
  const double phi = alpha + std::atan2(ray_cam.z(), ray_cam.x());
  const Vec3d n_cam = camera.rotation * normal;
  Vec3d axis_cam(std::cos(phi), 0, std::sin(phi));
  if (std::abs(n_cam.y()) > 1e-9) axis_cam.y() = -(axis_cam.x() * n_cam.x() + axis_cam.z() * n_cam.z()) / n_cam.y();
  return projectOntoPlane(camera.toWorldDirection(axis_cam), normal).normalized();
}

}  // namespace

Box3D boxFromBase(const std::array<Vec3d, 4>& p, const Vec3d& normal, double height) {
  const double area = (p[1] - p[0]).cross(p[3] - p[0]).norm();
  if (!(area >= kMinBaseArea)) throw DegenerateBase("lifted base area " + std::to_string(area) + " m^2 is too small");
  if (!(height > 0)) throw DegenerateBase("lifted height must be positive");
  const Vec3d n = normal.normalized();
  const Vec3d forward_raw = (p[0] + p[1]) / 2 - (p[3] + p[2]) / 2;
  const Vec3d forward = projectOntoPlane(forward_raw, n);
  if (forward.norm() < 1e-9) throw DegenerateBase("lifted base has no forward direction");
  const Vec3d f = forward.normalized();
  const Vec3d left = n.cross(f);
  Mat3d r;
  r.col(0) = f;
  r.col(1) = left;
  r.col(2) = n;

  Box3D box;
  const Vec3d base_center = (p[0] + p[1] + p[2] + p[3]) / 4;
  box.center = base_center + (height / 2) * n;
  box.size.length = ((p[3] - p[0]).norm() + (p[2] - p[1]).norm()) / 2;
  box.size.width = ((p[1] - p[0]).norm() + (p[2] - p[3]).norm()) / 2;
  box.size.height = height;
  box.rotation = matrixToEuler(r).angles;
  return box;
}

LiftResult liftPrimary(const Detection& detection, const Camera& camera, const TinMap& map) {
  const DecodedDescriptor decoded = decode(detection.descriptor, detection.box2d);
  std::array<Vec3d, 4> base;
  LiftFlags flags;
  for (int i = 0; i < 3; ++i) {
    auto hit = map.intersect(pixelRay(camera, decoded.keypoints[i]));
    if (!hit) throw RayMiss(i);
    base[i] = hit->point;
    flags.ray_hit[i] = true;
  }
  base[3] = base[0] + base[2] - base[1];
  const Vec3d centroid = (base[0] + base[1] + base[2] + base[3]) / 4;
  const Vec3d normal = surfaceNormalAt(map, centroid, baseNormal(base));
  LiftResult result = finish(base, normal, decoded, flags);
  if (auto hit3 = map.intersect(pixelRay(camera, decoded.keypoints[3]))) {
    result.flags.ray_hit[3] = true;
    result.closure_residual = (hit3->point - base[3]).norm();
  }
  return result;
}

LiftResult fallbackLift(const Detection& detection, const Camera& camera, const TinMap& map) {
  const DecodedDescriptor decoded = decode(detection.descriptor, detection.box2d);
  const Hits hits = castBottomRays(decoded, camera, map);
  if (hits.count == 0) throw AllRaysMiss("no bottom keypoint ray meets the road surface");

  LiftFlags flags;
  for (int i = 0; i < 4; ++i) flags.ray_hit[i] = hits.sample[i].has_value();
  if (flags.ray_hit[0] && flags.ray_hit[1] && flags.ray_hit[2]) return liftPrimary(detection, camera, map);
  flags.fallback = true;

  std::array<Vec3d, 4> base;
  if (hits.count == 3) {
    int missing = 0;
    while (flags.ray_hit[missing]) ++missing;
    for (int i = 0; i < 4; ++i) {
      if (i != missing) base[i] = hits.sample[i]->point;
    }
    base[missing] = base[(missing + 1) % 4] + base[(missing + 3) % 4] - base[(missing + 2) % 4];
    flags.closure_from_other_triple = true;
    const Vec3d centroid = (base[0] + base[1] + base[2] + base[3]) / 4;
    return finish(base, surfaceNormalAt(map, centroid, baseNormal(base)), decoded, flags);
  }

  std::vector<int> hit_ids;
  Vec3d mean = Vec3d::Zero();
  for (int i = 0; i < 4; ++i) {
    if (flags.ray_hit[i]) {
      hit_ids.push_back(i);
      mean += hits.sample[i]->point;
    }
  }
  mean /= static_cast<double>(hit_ids.size());
  const Vec3d normal = surfaceNormalAt(map, mean, hits.sample[hit_ids.front()]->normal);

  if (decoded.size && decoded.alpha) {
    Vec3d f;
    const bool pair = hit_ids.size() == 2;
    const int a = pair ? hit_ids[0] : -1, b = pair ? hit_ids[1] : -1;
    auto pt = [&](int i) { return hits.sample[i]->point; };
    if (pair && ((a == 0 && b == 3) || (a == 1 && b == 2))) {
      f = projectOntoPlane(pt(a) - pt(b), normal).normalized();
    } else if (pair && ((a == 0 && b == 1) || (a == 2 && b == 3))) {
      const int l = a == 0 ? 0 : 3, r = a == 0 ? 1 : 2;
      const Vec3d left = projectOntoPlane(pt(l) - pt(r), normal).normalized();
      f = left.cross(normal);
    } else {
      f = headingFromAlpha(*decoded.alpha, decoded.keypoints[kCentroid], camera, normal);
    }
    const Vec3d left = normal.cross(f);
    const Size3& size = *decoded.size;
    auto offset = [&](int i) {
      const Vec3d s = cornerSigns<double>(i);
      return Vec3d(s.x() * size.length / 2 * f + s.y() * size.width / 2 * left);
    };
    Vec3d center = Vec3d::Zero();
    for (int i : hit_ids) center += pt(i) - offset(i);
    center /= static_cast<double>(hit_ids.size());
    for (int i = 0; i < 4; ++i) base[i] = center + offset(i);
    flags.dims_completion = true;
    return finish(base, normal, decoded, flags);
  }

  // No dims or heading in the descriptor: meet the missing rays with the local
  // surface plane at the hits.
  const Vec3d anchor = hits.sample[hit_ids.front()]->point;
  for (int i = 0; i < 4; ++i) {
    if (flags.ray_hit[i]) {
      base[i] = hits.sample[i]->point;
      continue;
    }
    const RayD ray = pixelRay(camera, decoded.keypoints[i]);
    const double denom = ray.direction.dot(normal);
    if (std::abs(denom) < 1e-12) throw AllRaysMiss("bottom keypoint ray parallel to the road plane");
    const double t = (anchor - ray.origin).dot(normal) / denom;
    if (t <= 0) throw AllRaysMiss("bottom keypoint ray points away from the road plane");
    base[i] = ray.at(t);
  }
  flags.plane_extension = true;
  return finish(base, normal, decoded, flags);
}

LiftResult lift(const Detection& detection, const Camera& camera, const TinMap& map) {
  try {
    return liftPrimary(detection, camera, map);
  } catch (const RayMiss&) {
    return fallbackLift(detection, camera, map);
  }
}

}  // namespace roadlift
