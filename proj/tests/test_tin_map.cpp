#include <doctest.h>

#include <set>

#include "roadlift/iou.hpp"
#include "roadlift/tin_map.hpp"
#include "support.hpp"

using namespace roadlift;
using roadlift::testing::Rng;
using roadlift::testing::uniform;

namespace {

std::vector<Vec3d> randomCloud(Rng& rng, int n, double extent = 100) {
  std::vector<Vec3d> pts;
  for (int i = 0; i < n; ++i) pts.emplace_back(uniform(rng, 0, extent), uniform(rng, 0, extent), uniform(rng, -1, 1));
  return pts;
}

std::vector<Vec2d> plan(const std::vector<Vec3d>& pts) {
  std::vector<Vec2d> out;
  for (const auto& p : pts) out.push_back(p.head<2>());
  return out;
}

// Monotone-chain hull area, independent of the TIN code.
double hullArea(std::vector<Vec2d> p) {
  std::sort(p.begin(), p.end(), [](const Vec2d& a, const Vec2d& b) { return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y()); });
  auto cross = [](const Vec2d& o, const Vec2d& a, const Vec2d& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<Vec2d> h(2 * p.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], p[i]) <= 0) --k;
    h[k++] = p[i];
  }
  for (std::size_t i = p.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross(h[k - 2], h[k - 1], p[i - 1]) <= 0) --k;
    h[k++] = p[i - 1];
  }
  h.resize(k - 1);
  double a = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const auto& u = h[i];
    const auto& v = h[(i + 1) % h.size()];
    a += u.x() * v.y() - v.x() * u.y();
  }
  return a / 2;
}

// Flat ramp z = 0.05 x + 0.02 y on a jittered grid.
TinMap planeMap(double extent = 100, double step = 5) {
  Rng rng(5);
  std::vector<Vec3d> pts;
  for (double x = 0; x <= extent + 1e-9; x += step)
    for (double y = 0; y <= extent + 1e-9; y += step) {
      const bool edge = x == 0 || y == 0 || x + 1e-9 >= extent || y + 1e-9 >= extent;
      const double px = edge ? x : x + uniform(rng, -1, 1), py = edge ? y : y + uniform(rng, -1, 1);
      pts.emplace_back(px, py, 0.05 * px + 0.02 * py);
    }
  return TinMap::build(pts);
}

}  // namespace

TEST_SUITE("tin_map") {

TEST_CASE("delaunay: every point is a vertex, areas sum to the hull, circumcircles are empty") {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    const auto pts = randomCloud(rng, 40 + static_cast<int>(seed) * 7);
    const auto p2 = plan(pts);
    const auto tris = delaunayTriangulate(p2);
    std::set<int> used;
    double area = 0;
    for (const auto& t : tris) {
      for (int k = 0; k < 3; ++k) used.insert(t[k]);
      const Vec2d a = p2[t[0]], b = p2[t[1]], c = p2[t[2]];
      const double signed_area = ((b - a).x() * (c - a).y() - (b - a).y() * (c - a).x()) / 2;
      REQUIRE(signed_area > 0);
      area += signed_area;
      // circumcircle of a, b, c
      const double d = 2 * (a.x() * (b.y() - c.y()) + b.x() * (c.y() - a.y()) + c.x() * (a.y() - b.y()));
      const Vec2d center((a.squaredNorm() * (b.y() - c.y()) + b.squaredNorm() * (c.y() - a.y()) +
                          c.squaredNorm() * (a.y() - b.y())) / d,
                         (a.squaredNorm() * (c.x() - b.x()) + b.squaredNorm() * (a.x() - c.x()) +
                          c.squaredNorm() * (b.x() - a.x())) / d);
      const double r = (a - center).norm();
      for (std::size_t i = 0; i < p2.size(); ++i) {
        if (static_cast<int>(i) == t[0] || static_cast<int>(i) == t[1] || static_cast<int>(i) == t[2]) continue;
        REQUIRE((p2[i] - center).norm() >= r - 1e-7 * r);
      }
    }
    CHECK(used.size() == pts.size());
    CHECK(std::abs(area - hullArea(p2)) < 1e-6);
  }
}

TEST_CASE("delaunay rejects degenerate input") {
  std::vector<Vec2d> two{{0, 0}, {1, 1}};
  CHECK_THROWS_AS(delaunayTriangulate(two), DegenerateInput);
  std::vector<Vec2d> line{{0, 0}, {1, 1}, {2, 2}, {3, 3}};
  CHECK_THROWS_AS(delaunayTriangulate(line), DegenerateInput);
  std::vector<Vec2d> dup{{0, 0}, {1, 0}, {0, 1}, {1, 0}};
  CHECK_THROWS_AS(delaunayTriangulate(dup), DegenerateInput);
}

TEST_CASE("constructor validates triangles") {
  std::vector<Vec3d> v{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  CHECK_THROWS_AS(TinMap(v, {Eigen::Vector3i(0, 1, 3)}), DegenerateInput);
  std::vector<Vec3d> flat{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  CHECK_THROWS_AS(TinMap(flat, {Eigen::Vector3i(0, 1, 2)}), DegenerateInput);
  // clockwise input is reoriented
  const TinMap m(v, {Eigen::Vector3i(0, 2, 1)});
  CHECK(m.facetNormal(0).z() > 0);
}

TEST_CASE("queries on a planar surface are exact") {
  const TinMap map = planeMap();
  Rng rng(21);
  const Vec3d n = Vec3d(-0.05, -0.02, 1).normalized();
  for (int i = 0; i < 2000; ++i) {
    const double x = uniform(rng, 0, 100), y = uniform(rng, 0, 100);
    const SurfaceSample s = map.query(x, y);
    REQUIRE(std::abs(s.point.z() - (0.05 * x + 0.02 * y)) < 1e-9);
    REQUIRE((s.normal - n).norm() < 1e-9);
  }
  CHECK_THROWS_AS(map.query(-1, 50), OutOfCoverage);
  CHECK_FALSE(map.tryQuery(50, 101).has_value());
}

TEST_CASE("point location agrees with brute force") {
  const TinMap map = planeMap();
  Rng rng(22);
  for (int i = 0; i < 2000; ++i) {
    const double x = uniform(rng, -5, 105), y = uniform(rng, -5, 105);
    REQUIRE(map.trianglesContaining(x, y) == map.trianglesContainingBruteForce(x, y));
  }
  // a shared vertex belongs to every incident triangle
  const Vec3d v = map.vertices()[map.triangles()[0][0]];
  CHECK(map.trianglesContaining(v.x(), v.y()).size() >= 1);
}

TEST_CASE("BVH ray casting agrees with brute force") {
  Rng rng(23);
  auto pts = randomCloud(rng, 300);
  for (auto& p : pts) p.z() = 2 * std::sin(p.x() / 9) + std::cos(p.y() / 7);
  const TinMap map = TinMap::build(pts);
  int hits = 0;
  for (int i = 0; i < 3000; ++i) {
    const Vec3d origin(uniform(rng, -20, 120), uniform(rng, -20, 120), uniform(rng, 5, 30));
    const Vec3d target(uniform(rng, 0, 100), uniform(rng, 0, 100), uniform(rng, -5, 5));
    const RayD ray = RayD::through(origin, target);
    const auto a = map.intersect(ray);
    const auto b = map.intersectBruteForce(ray);
    REQUIRE(a.has_value() == b.has_value());
    if (a) {
      ++hits;
      REQUIRE(a->t == b->t);
      REQUIRE((a->point - b->point).norm() == 0);
    }
  }
  CHECK(hits > 1000);
}

TEST_CASE("a ray from below or pointing away misses") {
  const TinMap map = planeMap();
  CHECK_FALSE(map.intersect(RayD::through(Vec3d(50, 50, 20), Vec3d(50, 50, 30))).has_value());
  CHECK_FALSE(map.intersect(RayD::through(Vec3d(-50, 50, 20), Vec3d(-60, 50, 0))).has_value());
  const auto hit = map.intersect(RayD::through(Vec3d(50, 50, 20), Vec3d(50, 50, 0)));
  REQUIRE(hit);
  CHECK(std::abs(hit->point.z() - 3.5) < 1e-9);
  CHECK(std::abs(hit->t - 16.5) < 1e-9);
}

TEST_CASE("elevation-only noise shifts elevations and keeps normals") {
  const TinMap map = planeMap();
  const TinMap noisy = map.withNoise(ElevationOnlyNoise{0.1, 9});
  Rng rng(24);
  double sum = 0, sum2 = 0;
  const int n = 4000;
  for (int i = 0; i < n; ++i) {
    const double x = uniform(rng, 1, 99), y = uniform(rng, 1, 99);
    const auto a = map.query(x, y), b = noisy.query(x, y);
    const double dz = b.point.z() - a.point.z();
    REQUIRE(std::abs(dz - noisy.elevationOffset(x, y)) < 1e-12);
    REQUIRE((a.normal - b.normal).norm() < 1e-12);
    REQUIRE(noisy.query(x, y).point.z() == b.point.z());
    sum += dz;
    sum2 += dz * dz;
  }
  const double mean = sum / n, sd = std::sqrt(sum2 / n - mean * mean);
  CHECK(std::abs(mean) < 0.01);
  CHECK(std::abs(sd - 0.1) < 0.01);
  // same query position, same offset; the ray hit moves with the surface
  const RayD ray = RayD::through(Vec3d(50, 50, 20), Vec3d(50, 50, 0));
  const auto hit = noisy.intersect(ray);
  REQUIRE(hit);
  CHECK(std::abs(hit->point.z() - (3.5 + noisy.elevationOffset(hit->point.x(), hit->point.y()))) < 1e-6);
}

TEST_CASE("zero-sigma noise is the nominal map") {
  const TinMap map = planeMap();
  for (const NoiseMode mode : {NoiseMode{ElevationOnlyNoise{0, 3}}, NoiseMode{VertexPerturbedNoise{0, 3}}}) {
    const TinMap noisy = map.withNoise(mode);
    for (double x = 1; x < 100; x += 7.3)
      CHECK(noisy.query(x, 40).point.z() == doctest::Approx(map.query(x, 40).point.z()).epsilon(1e-12));
  }
}

TEST_CASE("vertex perturbation tilts facets and is seeded") {
  const TinMap map = planeMap();
  const TinMap a = map.withNoise(VertexPerturbedNoise{0.2, 4});
  const TinMap b = map.withNoise(VertexPerturbedNoise{0.2, 4});
  const TinMap c = map.withNoise(VertexPerturbedNoise{0.2, 5});
  CHECK(a.vertices() == b.vertices());
  CHECK_FALSE(a.vertices() == c.vertices());
  bool tilted = false;
  for (std::size_t t = 0; t < map.size(); ++t) tilted |= (a.facetNormal(t) - map.facetNormal(t)).norm() > 1e-6;
  CHECK(tilted);
}

TEST_CASE("positional gaussian is a pure function of the millimeter cell") {
  CHECK(positionalGaussian(1.0001, 2.0, 3) == positionalGaussian(1.0001, 2.0, 3));
  CHECK(positionalGaussian(1.0, 2.0, 3) != positionalGaussian(1.0, 2.0, 4));
  CHECK(positionalGaussian(1.0, 2.0, 3) != positionalGaussian(1.01, 2.0, 3));
}

}
