#include "roadlift/tin_map.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_map>

#include "roadlift/random.hpp"

namespace roadlift {

namespace {

using Real = long double;

constexpr double kRayEpsilon = 1e-6;
constexpr double kBaryTolerance = 1e-12;

Real orient(const Vec2d& a, const Vec2d& b, const Vec2d& c) {
  return (Real(b.x()) - a.x()) * (Real(c.y()) - a.y()) - (Real(b.y()) - a.y()) * (Real(c.x()) - a.x());
}

// > 0 when d lies strictly inside the circumcircle of the counter-clockwise a, b, c.
Real inCircle(const Vec2d& a, const Vec2d& b, const Vec2d& c, const Vec2d& d) {
  const Real adx = Real(a.x()) - d.x(), ady = Real(a.y()) - d.y();
  const Real bdx = Real(b.x()) - d.x(), bdy = Real(b.y()) - d.y();
  const Real cdx = Real(c.x()) - d.x(), cdy = Real(c.y()) - d.y();
  return (adx * adx + ady * ady) * (bdx * cdy - cdx * bdy) +
         (bdx * bdx + bdy * bdy) * (cdx * ady - adx * cdy) +
         (cdx * cdx + cdy * cdy) * (adx * bdy - bdx * ady);
}

// Incremental Bowyer-Watson with an explicit vertex at infinity. Ghost triangles
// (those containing the infinite vertex) close the hull, so the result always
// covers the convex hull exactly.
class Delaunay {
 public:
  explicit Delaunay(std::span<const Vec2d> pts) : pts_(pts), inf_(static_cast<int>(pts.size())) {}

  std::vector<Eigen::Vector3i> run() {
    const int n = static_cast<int>(pts_.size());
    if (n < 3) throw DegenerateInput("triangulation needs at least 3 points");

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      if (pts_[a].x() != pts_[b].x()) return pts_[a].x() < pts_[b].x();
      if (pts_[a].y() != pts_[b].y()) return pts_[a].y() < pts_[b].y();
      return a < b;
    });
    for (int i = 1; i < n; ++i) {
      if (pts_[order[i]] == pts_[order[i - 1]])
        throw DegenerateInput("duplicate plan-view point at index " + std::to_string(order[i]));
    }

    // Seed triangle: first two points plus the first point not collinear with them.
    const int a = order[0], b = order[1];
    int c = -1, c_pos = -1;
    for (int i = 2; i < n; ++i) {
      if (orient(pts_[a], pts_[b], pts_[order[i]]) != 0) {
        c = order[i];
        c_pos = i;
        break;
      }
    }
    if (c < 0) throw DegenerateInput("all points are collinear in plan view");
    if (orient(pts_[a], pts_[b], pts_[c]) > 0)
      seed(a, b, c);
    else
      seed(a, c, b);

    for (int i = 2; i < n; ++i) {
      if (i != c_pos) insert(order[i]);
    }

    std::vector<Eigen::Vector3i> out;
    for (const auto& t : tris_) {
      if (!t.alive || isGhost(t)) continue;
      out.emplace_back(t.v[0], t.v[1], t.v[2]);
    }
    return out;
  }

 private:
  struct Tri {
    std::array<int, 3> v;
    std::array<int, 3> n{-1, -1, -1};  // n[i] is across the edge opposite v[i]
    bool alive = true;
  };

  bool isGhost(const Tri& t) const { return t.v[0] == inf_ || t.v[1] == inf_ || t.v[2] == inf_; }

  int addTri(int a, int b, int c) {
    tris_.push_back(Tri{{a, b, c}});
    return static_cast<int>(tris_.size()) - 1;
  }

  void seed(int a, int b, int c) {
    const int t0 = addTri(a, b, c);
    const int g0 = addTri(b, a, inf_);  // opposite c
    const int g1 = addTri(c, b, inf_);  // opposite a
    const int g2 = addTri(a, c, inf_);  // opposite b
    tris_[t0].n = {g1, g2, g0};
    // ghost (x, y, inf): n[2] = real triangle, n[0] across (y, inf), n[1] across (inf, x)
    tris_[g0].n = {g2, g1, t0};
    tris_[g1].n = {g0, g2, t0};
    tris_[g2].n = {g1, g0, t0};
    last_ = t0;
  }

  // Whether p violates triangle t (lies inside its circumcircle, or for ghosts, in
  // the open half-plane beyond its hull edge or strictly inside that edge).
  bool conflicts(int t, const Vec2d& p) const {
    const Tri& tri = tris_[t];
    for (int k = 0; k < 3; ++k) {
      if (tri.v[k] != inf_) continue;
      const Vec2d& e0 = pts_[tri.v[(k + 1) % 3]];
      const Vec2d& e1 = pts_[tri.v[(k + 2) % 3]];
      const Real o = orient(e0, e1, p);
      if (o > 0) return true;
      if (o < 0) return false;
      const Real along = (Real(p.x()) - e0.x()) * (Real(e1.x()) - e0.x()) +
                         (Real(p.y()) - e0.y()) * (Real(e1.y()) - e0.y());
      const Real len2 = (Real(e1.x()) - e0.x()) * (Real(e1.x()) - e0.x()) +
                        (Real(e1.y()) - e0.y()) * (Real(e1.y()) - e0.y());
      return along > 0 && along < len2;
    }
    return inCircle(pts_[tri.v[0]], pts_[tri.v[1]], pts_[tri.v[2]], p) > 0;
  }

  int locate(const Vec2d& p) const {
    int t = last_;
    const std::size_t limit = tris_.size() + 16;
    for (std::size_t step = 0; step < limit; ++step) {
      const Tri& tri = tris_[t];
      if (isGhost(tri)) return t;
      bool moved = false;
      for (int i = 0; i < 3; ++i) {
        if (orient(pts_[tri.v[(i + 1) % 3]], pts_[tri.v[(i + 2) % 3]], p) < 0) {
          t = tri.n[i];
          moved = true;
          break;
        }
      }
      if (!moved) return t;
    }
    for (int i = 0; i < static_cast<int>(tris_.size()); ++i) {
      if (tris_[i].alive && conflicts(i, p)) return i;
    }
    throw DegenerateInput("point location failed during triangulation");
  }

  void insert(int pi) {
    const Vec2d& p = pts_[pi];
    const int start = locate(p);

    std::vector<char>& bad = mark_;
    if (bad.size() < tris_.size()) bad.resize(tris_.size() + tris_.size() / 2 + 16, 0);
    std::vector<int> cavity{start};
    bad[start] = 1;
    for (std::size_t k = 0; k < cavity.size(); ++k) {
      for (int nb : tris_[cavity[k]].n) {
        if (nb >= 0 && !bad[nb] && conflicts(nb, p)) {
          bad[nb] = 1;
          cavity.push_back(nb);
        }
      }
    }

    struct Edge {
      int a, b, outer, owner;
    };
    std::vector<Edge> boundary;
    for (int guard = 0;; ++guard) {
      boundary.clear();
      int offender = -1;
      for (int t : cavity) {
        if (!bad[t]) continue;
        const Tri& tri = tris_[t];
        for (int i = 0; i < 3; ++i) {
          const int nb = tri.n[i];
          if (nb >= 0 && bad[nb]) continue;
          const int ea = tri.v[(i + 1) % 3], eb = tri.v[(i + 2) % 3];
          if (ea != inf_ && eb != inf_ && orient(pts_[ea], pts_[eb], p) <= 0 && offender < 0)
            offender = t;
          boundary.push_back({ea, eb, nb, t});
        }
      }
      if (offender < 0) break;
      if (offender == start || guard > 64)
        throw DegenerateInput("triangulation cavity is not star-shaped (numerical degeneracy)");
      bad[offender] = 0;
    }

    std::unordered_map<int, int> starts, ends;
    std::vector<int> created;
    created.reserve(boundary.size());
    for (const Edge& e : boundary) {
      const int t = addTri(e.a, e.b, pi);
      tris_[t].n[2] = e.outer;
      if (e.outer >= 0) {
        for (int& m : tris_[e.outer].n) {
          if (m == e.owner) m = t;
        }
      }
      starts[e.a] = t;
      ends[e.b] = t;
      created.push_back(t);
    }
    for (int t : created) {
      Tri& tri = tris_[t];
      tri.n[0] = starts.at(tri.v[1]);  // across (b, p)
      tri.n[1] = ends.at(tri.v[0]);    // across (p, a)
      if (!isGhost(tri)) last_ = t;
    }
    for (int t : cavity) {
      if (bad[t]) tris_[t].alive = false;
      bad[t] = 0;
    }
  }

  std::span<const Vec2d> pts_;
  int inf_;
  std::vector<Tri> tris_;
  std::vector<char> mark_;
  int last_ = 0;
};

Eigen::AlignedBox3d triangleBox(const std::vector<Vec3d>& v, const Eigen::Vector3i& t) {
  Eigen::AlignedBox3d box(v[t[0]]);
  box.extend(v[t[1]]);
  box.extend(v[t[2]]);
  const double pad = 1e-9 * (1.0 + box.sizes().maxCoeff() + box.center().cwiseAbs().maxCoeff());
  box.min().array() -= pad;
  box.max().array() += pad;
  return box;
}

bool rayHitsBox(const RayD& ray, const Eigen::AlignedBox3d& box, double t_max, double& t_near) {
  double lo = 0.0, hi = t_max;
  for (int axis = 0; axis < 3; ++axis) {
    const double o = ray.origin[axis], d = ray.direction[axis];
    if (std::abs(d) < 1e-300) {
      if (o < box.min()[axis] || o > box.max()[axis]) return false;
      continue;
    }
    double t0 = (box.min()[axis] - o) / d;
    double t1 = (box.max()[axis] - o) / d;
    if (t0 > t1) std::swap(t0, t1);
    lo = std::max(lo, t0);
    hi = std::min(hi, t1);
    if (lo > hi) return false;
  }
  t_near = lo;
  return true;
}

}  // namespace

double positionalGaussian(double x, double y, std::uint64_t seed) {
  const auto qx = static_cast<std::uint64_t>(std::llround(x * 1000.0));
  const auto qy = static_cast<std::uint64_t>(std::llround(y * 1000.0));
  std::uint64_t h = splitmix64(seed ^ 0xA24BAED4963EE407ULL);
  h = splitmix64(h ^ qx);
  h = splitmix64(h ^ (qy * 0x9FB21C651E98DF25ULL));
  const std::uint64_t h2 = splitmix64(h);
  const double u1 = (static_cast<double>(h >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(h2 >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::vector<Eigen::Vector3i> delaunayTriangulate(std::span<const Vec2d> points) {
  return Delaunay(points).run();
}

TinMap TinMap::build(std::span<const Vec3d> points) {
  std::vector<Vec2d> plan;
  plan.reserve(points.size());
  for (const auto& p : points) plan.emplace_back(p.x(), p.y());
  auto triangles = delaunayTriangulate(plan);
  return TinMap(std::vector<Vec3d>(points.begin(), points.end()), std::move(triangles));
}

TinMap::TinMap(std::vector<Vec3d> vertices, std::vector<Eigen::Vector3i> triangles)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
  const int nv = static_cast<int>(vertices_.size());
  for (std::size_t i = 0; i < triangles_.size(); ++i) {
    auto& t = triangles_[i];
    if ((t.array() < 0).any() || (t.array() >= nv).any())
      throw DegenerateInput("triangle " + std::to_string(i) + " references a missing vertex");
    const double twice = (vertices_[t[1]] - vertices_[t[0]])
                             .head<2>()
                             .homogeneous()
                             .cross((vertices_[t[2]] - vertices_[t[0]]).head<2>().homogeneous())
                             .z();
    if (std::abs(twice) / 2 <= 1e-9)
      throw DegenerateInput("triangle " + std::to_string(i) + " is degenerate in plan view");
    if (twice < 0) std::swap(t[1], t[2]);
  }
  if (triangles_.empty()) throw DegenerateInput("map has no triangles");
  finalize();
}

void TinMap::finalize() {
  normals_.resize(triangles_.size());
  for (std::size_t i = 0; i < triangles_.size(); ++i) {
    const auto& t = triangles_[i];
    normals_[i] = (vertices_[t[1]] - vertices_[t[0]]).cross(vertices_[t[2]] - vertices_[t[0]]).normalized();
  }
  order_.resize(triangles_.size());
  std::iota(order_.begin(), order_.end(), 0);
  nodes_.clear();
  nodes_.reserve(2 * triangles_.size());
  buildNode(0, static_cast<int>(triangles_.size()));
}

int TinMap::buildNode(int first, int count) {
  const int index = static_cast<int>(nodes_.size());
  nodes_.push_back({});
  Eigen::AlignedBox3d box;
  Eigen::AlignedBox3d centroids;
  for (int i = first; i < first + count; ++i) {
    const auto& t = triangles_[order_[i]];
    box.extend(triangleBox(vertices_, t));
    centroids.extend(Vec3d((vertices_[t[0]] + vertices_[t[1]] + vertices_[t[2]]) / 3.0));
  }
  nodes_[index].box = box;
  if (count <= 4) {
    nodes_[index].first = first;
    nodes_[index].count = count;
    return index;
  }
  int axis = 0;
  centroids.sizes().maxCoeff(&axis);
  const int half = count / 2;
  auto key = [&](int tri) {
    const auto& t = triangles_[tri];
    return vertices_[t[0]][axis] + vertices_[t[1]][axis] + vertices_[t[2]][axis];
  };
  std::nth_element(order_.begin() + first, order_.begin() + first + half, order_.begin() + first + count,
                   [&](int a, int b) {
                     const double ka = key(a), kb = key(b);
                     return ka != kb ? ka < kb : a < b;
                   });
  const int left = buildNode(first, half);
  const int right = buildNode(first + half, count - half);
  nodes_[index].left = left;
  nodes_[index].right = right;
  return index;
}

double TinMap::planArea(int triangle) const {
  const auto& t = triangles_[triangle];
  const Vec2d a = vertices_[t[0]].head<2>(), b = vertices_[t[1]].head<2>(), c = vertices_[t[2]].head<2>();
  return 0.5 * ((b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x()));
}

Eigen::AlignedBox3d TinMap::bounds() const {
  Eigen::AlignedBox3d box;
  for (const auto& v : vertices_) box.extend(v);
  return box;
}

bool TinMap::containsPlan(int tri, double x, double y) const {
  const auto& t = triangles_[tri];
  const Vec2d p(x, y);
  const double area2 = 2.0 * planArea(tri);
  for (int i = 0; i < 3; ++i) {
    const Vec2d a = vertices_[t[(i + 1) % 3]].head<2>();
    const Vec2d b = vertices_[t[(i + 2) % 3]].head<2>();
    const double w = ((b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x())) / area2;
    if (w < -kBaryTolerance) return false;
  }
  return true;
}

std::vector<int> TinMap::trianglesContaining(double x, double y) const {
  std::vector<int> found;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const Node& node = nodes_[stack.back()];
    stack.pop_back();
    if (x < node.box.min().x() || x > node.box.max().x() || y < node.box.min().y() ||
        y > node.box.max().y())
      continue;
    if (node.left < 0) {
      for (int i = node.first; i < node.first + node.count; ++i) {
        if (containsPlan(order_[i], x, y)) found.push_back(order_[i]);
      }
    } else {
      stack.push_back(node.left);
      stack.push_back(node.right);
    }
  }
  std::sort(found.begin(), found.end());
  return found;
}

std::vector<int> TinMap::trianglesContainingBruteForce(double x, double y) const {
  std::vector<int> found;
  for (int i = 0; i < static_cast<int>(triangles_.size()); ++i) {
    if (containsPlan(i, x, y)) found.push_back(i);
  }
  return found;
}

SurfaceSample TinMap::sampleOnTriangle(int tri, double x, double y) const {
  const auto& t = triangles_[tri];
  const Vec3d& a = vertices_[t[0]];
  const Vec3d& n = normals_[tri];
  // plane through a with normal n, solved for z
  const double z = a.z() - (n.x() * (x - a.x()) + n.y() * (y - a.y())) / n.z();
  return {Vec3d(x, y, z), n, tri, 0.0};
}

double TinMap::elevationOffset(double x, double y) const {
  if (const auto* e = std::get_if<ElevationOnlyNoise>(&noise_); e && e->sigma > 0)
    return e->sigma * positionalGaussian(x, y, e->seed);
  return 0.0;
}

std::optional<SurfaceSample> TinMap::tryQuery(double x, double y) const {
  const auto found = trianglesContaining(x, y);
  if (found.empty()) return std::nullopt;
  SurfaceSample s = sampleOnTriangle(found.front(), x, y);
  s.point.z() += elevationOffset(x, y);
  return s;
}

SurfaceSample TinMap::query(double x, double y) const {
  if (auto s = tryQuery(x, y)) return *s;
  throw OutOfCoverage("point (" + std::to_string(x) + ", " + std::to_string(y) +
                      ") is outside the triangulated region");
}

std::optional<double> TinMap::hitTriangle(int tri, const RayD& ray) const {
  const auto& t = triangles_[tri];
  const Vec3d& v0 = vertices_[t[0]];
  const Vec3d e1 = vertices_[t[1]] - v0;
  const Vec3d e2 = vertices_[t[2]] - v0;
  const Vec3d pvec = ray.direction.cross(e2);
  const double det = e1.dot(pvec);
  if (std::abs(det) < 1e-14 * e1.norm() * e2.norm()) return std::nullopt;
  const double inv = 1.0 / det;
  const Vec3d tvec = ray.origin - v0;
  const double u = tvec.dot(pvec) * inv;
  if (u < -kBaryTolerance || u > 1.0 + kBaryTolerance) return std::nullopt;
  const Vec3d qvec = tvec.cross(e1);
  const double v = ray.direction.dot(qvec) * inv;
  if (v < -kBaryTolerance || u + v > 1.0 + kBaryTolerance) return std::nullopt;
  const double dist = e2.dot(qvec) * inv;
  if (!(dist > kRayEpsilon)) return std::nullopt;
  return dist;
}

std::optional<SurfaceSample> TinMap::intersectNominal(const RayD& ray, bool brute) const {
  double best_t = std::numeric_limits<double>::infinity();
  int best_id = -1;
  auto consider = [&](int tri) {
    if (auto t = hitTriangle(tri, ray)) {
      if (*t < best_t || (*t == best_t && tri < best_id)) {
        best_t = *t;
        best_id = tri;
      }
    }
  };
  if (brute) {
    for (int i = 0; i < static_cast<int>(triangles_.size()); ++i) consider(i);
  } else {
    std::vector<int> stack{0};
    while (!stack.empty()) {
      const Node& node = nodes_[stack.back()];
      stack.pop_back();
      double t_near = 0;
      if (!rayHitsBox(ray, node.box, best_t, t_near)) continue;
      if (node.left < 0) {
        for (int i = node.first; i < node.first + node.count; ++i) consider(order_[i]);
      } else {
        stack.push_back(node.left);
        stack.push_back(node.right);
      }
    }
  }
  if (best_id < 0) return std::nullopt;
  return SurfaceSample{ray.at(best_t), normals_[best_id], best_id, best_t};
}

// Under elevation-only noise the ray meets the surface displaced by the offset
// drawn at the nominal hit, so the reported hit stays on the ray.
std::optional<SurfaceSample> TinMap::intersect(const RayD& ray) const {
  auto hit = intersectNominal(ray, false);
  if (!hit) return hit;
  const double offset = elevationOffset(hit->point.x(), hit->point.y());
  if (offset == 0.0) return hit;
  RayD shifted = ray;
  shifted.origin.z() -= offset;
  auto moved = intersectNominal(shifted, false);
  if (!moved) return moved;
  moved->point = ray.at(moved->t);
  return moved;
}

std::optional<SurfaceSample> TinMap::intersectBruteForce(const RayD& ray) const {
  auto hit = intersectNominal(ray, true);
  if (!hit) return hit;
  const double offset = elevationOffset(hit->point.x(), hit->point.y());
  if (offset == 0.0) return hit;
  RayD shifted = ray;
  shifted.origin.z() -= offset;
  auto moved = intersectNominal(shifted, true);
  if (!moved) return moved;
  moved->point = ray.at(moved->t);
  return moved;
}

TinMap TinMap::withNoise(const NoiseMode& mode) const {
  TinMap out = *this;
  out.noise_ = mode;
  if (const auto* v = std::get_if<VertexPerturbedNoise>(&mode); v && v->sigma > 0) {
    for (std::size_t i = 0; i < out.vertices_.size(); ++i)
      out.vertices_[i].z() += v->sigma * positionalGaussian(static_cast<double>(i), 0.0, v->seed);
    out.finalize();
  }
  return out;
}

}  // namespace roadlift
