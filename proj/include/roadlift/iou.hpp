#pragma once

// Overlap metrics for arbitrarily rotated boxes: exact 3D IoU by half-space
// intersection, and bird's-eye-view IoU by convex polygon clipping.

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "roadlift/geometry.hpp"

namespace roadlift {

template <typename Scalar>
struct HalfSpace {
  Vec3<Scalar> normal;  // unit, pointing out of the solid
  Scalar offset;        // solid is normal . x <= offset
};

template <typename Scalar>
std::array<HalfSpace<Scalar>, 6> boxHalfSpaces(const Box3<Scalar>& box) {
  const Mat3<Scalar> r = box.rotationMatrix();
  const Vec3<Scalar> half(box.size.length / 2, box.size.width / 2, box.size.height / 2);
  std::array<HalfSpace<Scalar>, 6> planes;
  for (int k = 0; k < 3; ++k) {
    const Vec3<Scalar> n = r.col(k);
    const Scalar c = n.dot(box.center);
    planes[2 * k] = {n, c + half[k]};
    planes[2 * k + 1] = {-n, -c + half[k]};
  }
  return planes;
}

// Volume of the bounded polytope {x : n_i . x <= d_i}. Vertices come from every
// plane triple and are kept when they satisfy all constraints; the volume is the
// sum of face-area pyramids against the vertex centroid.
template <typename Scalar>
Scalar polytopeVolume(std::vector<HalfSpace<Scalar>> planes) {
  Scalar scale = 1;
  for (const auto& p : planes) scale = std::max(scale, std::abs(p.offset));
  const Scalar tol = Scalar(1e-9) * scale;

  // coincident planes would count their shared face twice
  std::vector<HalfSpace<Scalar>> unique;
  for (const auto& p : planes) {
    const bool dup = std::any_of(unique.begin(), unique.end(), [&](const HalfSpace<Scalar>& q) {
      return (p.normal - q.normal).norm() < Scalar(1e-9) && std::abs(p.offset - q.offset) <= tol;
    });
    if (!dup) unique.push_back(p);
  }
  planes = std::move(unique);

  const std::size_t n = planes.size();
  std::vector<Vec3<Scalar>> verts;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const Vec3<Scalar> nij = planes[i].normal.cross(planes[j].normal);
      for (std::size_t k = j + 1; k < n; ++k) {
        const Scalar det = planes[k].normal.dot(nij);
        if (std::abs(det) < Scalar(1e-12)) continue;
        const Vec3<Scalar> x = (planes[i].offset * planes[j].normal.cross(planes[k].normal) +
                                planes[j].offset * planes[k].normal.cross(planes[i].normal) +
                                planes[k].offset * nij) /
                               det;
        bool inside = true;
        for (const auto& p : planes) {
          if (p.normal.dot(x) > p.offset + tol) {
            inside = false;
            break;
          }
        }
        if (inside) verts.push_back(x);
      }
    }
  }
  if (verts.size() < 4) return 0;

  Vec3<Scalar> ref = Vec3<Scalar>::Zero();
  for (const auto& v : verts) ref += v;
  ref /= Scalar(verts.size());

  Scalar volume = 0;
  for (const auto& p : planes) {
    std::vector<Vec3<Scalar>> face;
    for (const auto& v : verts) {
      if (std::abs(p.normal.dot(v) - p.offset) > tol) continue;
      const bool dup = std::any_of(face.begin(), face.end(), [&](const Vec3<Scalar>& f) {
        return (f - v).norm() <= tol;
      });
      if (!dup) face.push_back(v);
    }
    if (face.size() < 3) continue;
    Vec3<Scalar> fc = Vec3<Scalar>::Zero();
    for (const auto& v : face) fc += v;
    fc /= Scalar(face.size());
    const Vec3<Scalar> u = (face[0] - fc).normalized();
    const Vec3<Scalar> w = p.normal.cross(u);
    std::vector<std::pair<Scalar, Vec2<Scalar>>> ring;
    for (const auto& v : face) {
      const Vec2<Scalar> q((v - fc).dot(u), (v - fc).dot(w));
      ring.emplace_back(std::atan2(q.y(), q.x()), q);
    }
    std::sort(ring.begin(), ring.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    Scalar area2 = 0;
    for (std::size_t i = 0; i < ring.size(); ++i) {
      const auto& a = ring[i].second;
      const auto& b = ring[(i + 1) % ring.size()].second;
      area2 += a.x() * b.y() - a.y() * b.x();
    }
    const Scalar height = p.offset - p.normal.dot(ref);
    volume += std::abs(area2) / 2 * height / 3;
  }
  return volume;
}

template <typename Scalar>
Scalar intersectionVolume(const Box3<Scalar>& a, const Box3<Scalar>& b) {
  std::vector<HalfSpace<Scalar>> planes;
  for (const auto& p : boxHalfSpaces(a)) planes.push_back(p);
  for (const auto& p : boxHalfSpaces(b)) planes.push_back(p);
  return polytopeVolume(std::move(planes));
}

template <typename Scalar>
Scalar iou3d(const Box3<Scalar>& a, const Box3<Scalar>& b) {
  const Scalar inter = intersectionVolume(a, b);
  const Scalar uni = a.volume() + b.volume() - inter;
  if (!(uni > 0)) return 0;
  return std::clamp(inter / uni, Scalar(0), Scalar(1));
}

template <typename Scalar>
using Polygon = std::vector<Vec2<Scalar>>;

template <typename Scalar>
Scalar cross2(const Vec2<Scalar>& o, const Vec2<Scalar>& a, const Vec2<Scalar>& b) {
  return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
}

// Andrew's monotone chain; counter-clockwise, collinear points dropped.
template <typename Scalar>
Polygon<Scalar> convexHull(Polygon<Scalar> pts) {
  std::sort(pts.begin(), pts.end(), [](const Vec2<Scalar>& a, const Vec2<Scalar>& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  if (pts.size() < 3) return pts;
  Polygon<Scalar> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross2(hull[k - 2], hull[k - 1], pts[i - 1]) <= 0) --k;
    hull[k++] = pts[i - 1];
  }
  hull.resize(k - 1);
  return hull;
}

template <typename Scalar>
Scalar polygonArea(const Polygon<Scalar>& poly) {
  Scalar a = 0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto& p = poly[i];
    const auto& q = poly[(i + 1) % poly.size()];
    a += p.x() * q.y() - p.y() * q.x();
  }
  return a / 2;
}

// Sutherland-Hodgman: clips `subject` by the convex counter-clockwise `clip`.
template <typename Scalar>
Polygon<Scalar> clipConvex(const Polygon<Scalar>& subject, const Polygon<Scalar>& clip) {
  Polygon<Scalar> out = subject;
  for (std::size_t e = 0; e < clip.size() && !out.empty(); ++e) {
    const Vec2<Scalar>& a = clip[e];
    const Vec2<Scalar>& b = clip[(e + 1) % clip.size()];
    Polygon<Scalar> in = std::move(out);
    out.clear();
    for (std::size_t i = 0; i < in.size(); ++i) {
      const Vec2<Scalar>& p = in[i];
      const Vec2<Scalar>& q = in[(i + 1) % in.size()];
      const Scalar sp = cross2(a, b, p), sq = cross2(a, b, q);
      if (sp >= 0) out.push_back(p);
      if ((sp >= 0) != (sq >= 0)) out.push_back(p + (q - p) * (sp / (sp - sq)));
    }
  }
  return out;
}

enum class BevFootprint { CornerHull, YawOnly };

template <typename Scalar>
Polygon<Scalar> bevFootprint(const Box3<Scalar>& box, BevFootprint mode = BevFootprint::CornerHull) {
  Polygon<Scalar> pts;
  if (mode == BevFootprint::YawOnly) {
    const Scalar c = std::cos(box.rotation.yaw), s = std::sin(box.rotation.yaw);
    for (int i = 0; i < 4; ++i) {
      const Vec3<Scalar> sg = cornerSigns<Scalar>(i);
      const Scalar x = sg.x() * box.size.length / 2, y = sg.y() * box.size.width / 2;
      pts.emplace_back(box.center.x() + c * x - s * y, box.center.y() + s * x + c * y);
    }
  } else {
    const auto corners = boxCorners(box);
    for (int i = 0; i < 8; ++i) pts.emplace_back(corners[i].x(), corners[i].y());
  }
  return convexHull(std::move(pts));
}

template <typename Scalar>
Scalar iouBev(const Box3<Scalar>& a, const Box3<Scalar>& b, BevFootprint mode = BevFootprint::CornerHull) {
  const Polygon<Scalar> pa = bevFootprint(a, mode), pb = bevFootprint(b, mode);
  const Scalar area_a = polygonArea(pa), area_b = polygonArea(pb);
  const Scalar inter = std::max(Scalar(0), polygonArea(clipConvex(pa, pb)));
  const Scalar uni = area_a + area_b - inter;
  if (!(uni > 0)) return 0;
  return std::clamp(inter / uni, Scalar(0), Scalar(1));
}

}  // namespace roadlift
