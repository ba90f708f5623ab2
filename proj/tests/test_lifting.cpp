#include <doctest.h>

#include "roadlift/iou.hpp"
#include "roadlift/lifting.hpp"
#include "support.hpp"

using namespace roadlift;
using roadlift::testing::Rng;
using roadlift::testing::uniform;

namespace {

constexpr double kDeg = std::numbers::pi / 180;

// Plane z = grade * x over [20, x_max] x [-20, 20].
TinMap gradeMap(double grade, double x_max = 220) {
  std::vector<Vec3d> pts;
  std::vector<double> xs;
  for (double x = 20; x < x_max - 1e-6; x += 4) xs.push_back(x);
  xs.push_back(x_max);
  for (double x : xs)
    for (double y = -20; y <= 20 + 1e-9; y += 4) pts.emplace_back(x, y, grade * x);
  return TinMap::build(pts);
}

Camera roadCamera() { return Camera::lookingFrom(Vec3d(0, 0, 11), 0.0, 6 * kDeg, 21 * kDeg, 3840, 2160); }

// Box resting on z = grade * x, heading `yaw` in plan view.
Box3D boxOnGrade(double x, double y, double yaw, double grade, Size3 size = {1.8, 4.5, 1.5}) {
  const Vec3d n = Vec3d(-grade, 0, 1).normalized();
  const Vec3d f = (Vec3d(std::cos(yaw), std::sin(yaw), 0) - Vec3d(std::cos(yaw), std::sin(yaw), 0).dot(n) * n).normalized();
  Mat3d r;
  r.col(0) = f;
  r.col(1) = n.cross(f);
  r.col(2) = n;
  Box3D b;
  b.size = size;
  b.rotation = matrixToEuler(r).angles;
  b.center = Vec3d(x, y, grade * x) + size.height / 2 * n;
  return b;
}

Detection detect(const Box3D& box, const Camera& cam, DescriptorLayout layout = DescriptorLayout::Full) {
  Box2D b{1e18, 1e18, -1e18, -1e18};
  for (const auto& c : boxCorners(box)) {
    const Vec2d p = project(cam, c);
    b = {std::min(b.u_min, p.x()), std::min(b.v_min, p.y()), std::max(b.u_max, p.x()), std::max(b.v_max, p.y())};
  }
  Detection d;
  d.box2d = b;
  d.descriptor = encode(box, cam, b, layout);
  return d;
}

void requireSameBox(const Box3D& a, const Box3D& b, double tol) {
  const auto ca = boxCorners(a), cb = boxCorners(b);
  for (int i = 0; i < 9; ++i) REQUIRE((ca[i] - cb[i]).norm() < tol);
}

}  // namespace

TEST_SUITE("lifting") {

TEST_CASE("exact descriptors on a planar map reproduce the box") {
  Rng rng(51);
  const Camera cam = roadCamera();
  for (double grade : {0.0, 0.05, -0.08}) {
    const TinMap map = gradeMap(grade);
    for (int i = 0; i < 200; ++i) {
      const Box3D box = boxOnGrade(uniform(rng, 50, 160), uniform(rng, -8, 8), uniform(rng, -3.1, 3.1), grade,
                                   {uniform(rng, 1.6, 2.6), uniform(rng, 3.8, 10), uniform(rng, 1.4, 3.8)});
      const LiftResult r = lift(detect(box, cam), cam, map);
      CHECK_FALSE(r.flags.fallback);
      requireSameBox(r.box, box, 1e-6);
      REQUIRE(r.closure_residual);
      CHECK(*r.closure_residual < 1e-6);
      REQUIRE(r.dim_deltas);
      CHECK(r.dim_deltas->norm() < 1e-6);
      CHECK(iou3d(r.box, box) > 0.9999);
    }
  }
}

TEST_CASE("lifted pitch on an 8 percent grade is atan(0.08)") {
  const TinMap map = gradeMap(0.08);
  const Camera cam = Camera::lookingFrom(Vec3d(0, 0, 11), 0.0, 6 * kDeg, 21 * kDeg, 3840, 2160);
  const LiftResult up = lift(detect(boxOnGrade(100, -1.75, 0, 0.08), cam), cam, map);
  CHECK(std::abs(up.box.rotation.pitch - std::atan(0.08)) < 1e-4);
  CHECK(std::abs(up.box.rotation.roll) < 1e-4);
  const LiftResult down = lift(detect(boxOnGrade(100, 1.75, std::numbers::pi, 0.08), cam), cam, map);
  CHECK(std::abs(down.box.rotation.pitch + std::atan(0.08)) < 1e-4);
  CHECK(up.surface_normal.isApprox(Vec3d(-0.08, 0, 1).normalized(), 1e-9));
}

TEST_CASE("one missing corner closes the base from the other triple") {
  const Camera cam = roadCamera();
  const Box3D box = boxOnGrade(150, 0, -0.5, 0.03);
  const auto c = boxCorners(box);
  // map edge between the front-left and front-right corners
  const double edge = (c[kFrontLeft].x() + c[kFrontRight].x()) / 2;
  REQUIRE(c[kFrontLeft].x() > edge + 0.3);
  const TinMap map = gradeMap(0.03, edge);
  const Detection d = detect(box, cam);
  CHECK_THROWS_AS(liftPrimary(d, cam, map), RayMiss);
  const LiftResult r = lift(d, cam, map);
  CHECK(r.flags.fallback);
  CHECK(r.flags.closure_from_other_triple);
  CHECK_FALSE(r.flags.ray_hit[kFrontLeft]);
  requireSameBox(r.box, box, 1e-6);
}

TEST_CASE("two missing corners are completed from dimensions") {
  const Camera cam = roadCamera();
  const Box3D box = boxOnGrade(150, 2, 0.0, 0.03);
  const TinMap map = gradeMap(0.03, 152);
  const LiftResult r = lift(detect(box, cam), cam, map);
  CHECK(r.flags.fallback);
  CHECK(r.flags.dims_completion);
  CHECK(r.flags.ray_hit[kRearLeft]);
  CHECK(r.flags.ray_hit[kRearRight]);
  requireSameBox(r.box, box, 1e-6);
}

TEST_CASE("bottom-only descriptors extend the surface plane for missing rays") {
  const Camera cam = roadCamera();
  const Box3D box = boxOnGrade(150, 2, 0.0, 0.03);
  const TinMap map = gradeMap(0.03, 152);
  const LiftResult r = lift(detect(box, cam, DescriptorLayout::BottomOnly), cam, map);
  CHECK(r.flags.plane_extension);
  CHECK_FALSE(r.dim_deltas);
  requireSameBox(r.box, box, 1e-6);
}

TEST_CASE("heading from the observation angle when only one corner hits") {
  const Camera cam = roadCamera();
  const Box3D box = boxOnGrade(150, 2, 0.4, 0.0);
  const auto c = boxCorners(box);
  // keep only the nearest bottom corner on the map
  int nearest = 0;
  for (int i = 1; i < 4; ++i)
    if (c[i].x() < c[nearest].x()) nearest = i;
  const double x_max = c[nearest].x() + 0.05;
  for (int i = 0; i < 4; ++i)
    if (i != nearest) REQUIRE(c[i].x() > x_max);
  const TinMap map = gradeMap(0.0, x_max);
  const LiftResult r = lift(detect(box, cam), cam, map);
  CHECK(r.flags.dims_completion);
  CHECK(r.flags.ray_hit[nearest]);
  requireSameBox(r.box, box, 1e-6);
}

TEST_CASE("no hits at all is an error") {
  const Camera cam = roadCamera();
  const TinMap map = gradeMap(0.0, 60);
  const Detection d = detect(boxOnGrade(150, 0, 0, 0), cam);
  CHECK_THROWS_AS(lift(d, cam, map), AllRaysMiss);
}

TEST_CASE("degenerate bases are rejected") {
  const std::array<Vec3d, 4> line{Vec3d(0, 0, 0), Vec3d(1, 0, 0), Vec3d(2, 0, 0), Vec3d(1, 0, 0)};
  CHECK_THROWS_AS(boxFromBase(line, Vec3d::UnitZ(), 1.5), DegenerateBase);
  const std::array<Vec3d, 4> good{Vec3d(2, 1, 0), Vec3d(2, -1, 0), Vec3d(-2, -1, 0), Vec3d(-2, 1, 0)};
  CHECK_THROWS_AS(boxFromBase(good, Vec3d::UnitZ(), 0), DegenerateBase);
  const Box3D b = boxFromBase(good, Vec3d::UnitZ(), 1.5);
  CHECK(b.center.isApprox(Vec3d(0, 0, 0.75)));
  CHECK(b.size.length == doctest::Approx(4));
  CHECK(b.size.width == doctest::Approx(2));
  CHECK(std::abs(b.rotation.yaw) < 1e-12);
}

}
