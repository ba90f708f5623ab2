#include "roadlift/lane_map.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace roadlift {

namespace {

// Liang-Barsky clip of segment a-b against the crop rectangle.
bool clipSegment(Vec2d& a, Vec2d& b, const Box2D& r) {
  const Vec2d d = b - a;
  double t0 = 0.0, t1 = 1.0;
  const double p[4] = {-d.x(), d.x(), -d.y(), d.y()};
  const double q[4] = {a.x() - r.u_min, r.u_max - a.x(), a.y() - r.v_min, r.v_max - a.y()};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return false;
      continue;
    }
    const double t = q[i] / p[i];
    if (p[i] < 0.0)
      t0 = std::max(t0, t);
    else
      t1 = std::min(t1, t);
    if (t0 > t1) return false;
  }
  const Vec2d start = a + t0 * d;
  b = a + t1 * d;
  a = start;
  return true;
}

double distanceToSegment(const Vec2d& p, const Vec2d& a, const Vec2d& b) {
  const Vec2d ab = b - a;
  const double len2 = ab.squaredNorm();
  const double t = len2 > 0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (a + t * ab - p).norm();
}

}  // namespace

LaneMap::LaneMap(std::vector<Lane> lanes) : lanes_(std::move(lanes)) {
  for (const auto& lane : lanes_) {
    if (lane.points.size() < 2)
      throw InvalidArgument("lane " + std::to_string(lane.id) + " has fewer than 2 points");
    for (std::size_t i = 1; i < lane.points.size(); ++i) {
      if ((lane.points[i] - lane.points[i - 1]).norm() <= 1e-6)
        throw InvalidArgument("lane " + std::to_string(lane.id) + " has repeated points");
    }
  }
}

std::vector<ImagePolyline> projectLanes(const LaneMap& lanes, const Camera& camera) {
  std::vector<ImagePolyline> out;
  for (const auto& lane : lanes.lanes()) {
    // dense world samples, then clip in camera coordinates
    std::vector<Vec3d> samples{lane.points.front()};
    for (std::size_t i = 1; i < lane.points.size(); ++i) {
      const Vec3d& a = lane.points[i - 1];
      const Vec3d& b = lane.points[i];
      const int pieces = std::max(1, static_cast<int>(std::ceil((b - a).norm() / kLaneSubdivision)));
      for (int k = 1; k <= pieces; ++k) samples.push_back(a + (b - a) * (double(k) / pieces));
    }
    ImagePolyline current;
    auto flush = [&] {
      if (current.size() >= 2) out.push_back(std::move(current));
      current.clear();
    };
    Vec3d prev = camera.toCamera(samples.front());
    if (prev.z() >= kNearClip) current.push_back(projectCameraPoint(camera, prev));
    for (std::size_t i = 1; i < samples.size(); ++i) {
      const Vec3d cur = camera.toCamera(samples[i]);
      const bool prev_in = prev.z() >= kNearClip, cur_in = cur.z() >= kNearClip;
      if (prev_in != cur_in) {
        const double t = (kNearClip - prev.z()) / (cur.z() - prev.z());
        Vec3d cut = prev + t * (cur - prev);
        cut.z() = kNearClip;
        current.push_back(projectCameraPoint(camera, cut));
        if (!cur_in) flush();
      }
      if (cur_in) current.push_back(projectCameraPoint(camera, cur));
      prev = cur;
    }
    flush();
  }
  return out;
}

Channel rasterizeChannel(const std::vector<ImagePolyline>& polylines, const Box2D& crop, int out_size) {
  const SnippetSpec spec = SnippetSpec::forBox(crop, out_size);
  Channel channel = Channel::Zero(out_size, out_size);
  for (const auto& line : polylines) {
    for (std::size_t i = 1; i < line.size(); ++i) {
      Vec2d a = line[i - 1], b = line[i];
      if (std::tie(b.x(), b.y()) < std::tie(a.x(), a.y())) std::swap(a, b);
      if (!clipSegment(a, b, crop)) continue;
      const Vec2d sa = spec.apply(a), sb = spec.apply(b);
      // pixel (col, row) has its center at (col + 0.5, row + 0.5)
      const int c0 = std::max(0, static_cast<int>(std::floor(std::min(sa.x(), sb.x()) - 1.5)));
      const int c1 = std::min(out_size - 1, static_cast<int>(std::ceil(std::max(sa.x(), sb.x()) + 0.5)));
      const int r0 = std::max(0, static_cast<int>(std::floor(std::min(sa.y(), sb.y()) - 1.5)));
      const int r1 = std::min(out_size - 1, static_cast<int>(std::ceil(std::max(sa.y(), sb.y()) + 0.5)));
      for (int row = r0; row <= r1; ++row) {
        for (int col = c0; col <= c1; ++col) {
          if (!spec.isContent(col, row)) continue;
          const double d = distanceToSegment(Vec2d(col + 0.5, row + 0.5), sa, sb);
          const float coverage = static_cast<float>(std::max(0.0, 1.0 - d));
          channel(row, col) = std::max(channel(row, col), coverage);
        }
      }
    }
  }
  return channel;
}

}  // namespace roadlift
