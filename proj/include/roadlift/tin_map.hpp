#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "roadlift/geometry.hpp"

namespace roadlift {

struct SurfaceSample {
  Vec3d point = Vec3d::Zero();
  Vec3d normal = Vec3d::UnitZ();  // unit, upward
  int triangle_id = -1;
  double t = 0;  // ray parameter, set by intersection queries only
};

struct NominalNoise {};

// Gaussian offset added to returned elevations; normals stay nominal. The offset is
// a pure function of the query position quantized to 1 mm and the seed.
struct ElevationOnlyNoise {
  double sigma = 0;
  std::uint64_t seed = 0;
};

// Vertex elevations perturbed once when the noisy map is created; facet normals
// change accordingly.
struct VertexPerturbedNoise {
  double sigma = 0;
  std::uint64_t seed = 0;
};

using NoiseMode = std::variant<NominalNoise, ElevationOnlyNoise, VertexPerturbedNoise>;

// Standard normal sample keyed by (x, y) quantized to 1 mm and a seed.
double positionalGaussian(double x, double y, std::uint64_t seed);

// 2D Delaunay triangulation of the plan-view coordinates. Triangles are returned
// counter-clockwise in plan view. Throws DegenerateInput for fewer than three
// points, all-collinear input, or duplicate plan-view positions.
std::vector<Eigen::Vector3i> delaunayTriangulate(std::span<const Vec2d> points);

// Triangulated irregular network over a height-field road surface, indexed by an
// axis-aligned bounding-volume hierarchy. Immutable after construction.
class TinMap {
 public:
  // Delaunay-triangulates `points` in plan view and lifts by their elevations.
  static TinMap build(std::span<const Vec3d> points);

  // Adopts an existing triangulation. Triangles are reoriented counter-clockwise;
  // throws DegenerateInput for out-of-range indices or triangles with area <= 1e-9.
  TinMap(std::vector<Vec3d> vertices, std::vector<Eigen::Vector3i> triangles);

  const std::vector<Vec3d>& vertices() const { return vertices_; }
  const std::vector<Eigen::Vector3i>& triangles() const { return triangles_; }
  const NoiseMode& noiseMode() const { return noise_; }
  std::size_t size() const { return triangles_.size(); }

  Vec3d facetNormal(int triangle) const { return normals_[triangle]; }
  double planArea(int triangle) const;
  Eigen::AlignedBox3d bounds() const;

  // Triangles whose plan-view footprint contains (x, y), ascending id.
  std::vector<int> trianglesContaining(double x, double y) const;
  std::vector<int> trianglesContainingBruteForce(double x, double y) const;

  // Elevation and normal at (x, y); the lowest containing triangle id answers.
  // Throws OutOfCoverage outside the triangulated region.
  SurfaceSample query(double x, double y) const;
  std::optional<SurfaceSample> tryQuery(double x, double y) const;

  // Nearest hit with t > 1e-6; equal t resolves to the lowest triangle id.
  std::optional<SurfaceSample> intersect(const RayD& ray) const;
  std::optional<SurfaceSample> intersectBruteForce(const RayD& ray) const;

  TinMap withNoise(const NoiseMode& mode) const;

  // Nominal elevation offset applied at (x, y) under the current noise mode.
  double elevationOffset(double x, double y) const;

 private:
  struct Node {
    Eigen::AlignedBox3d box;
    int left = -1;
    int right = -1;
    int first = 0;  // leaf range into order_
    int count = 0;
  };

  TinMap() = default;
  void finalize();
  int buildNode(int first, int count);
  SurfaceSample sampleOnTriangle(int tri, double x, double y) const;
  bool containsPlan(int tri, double x, double y) const;
  std::optional<double> hitTriangle(int tri, const RayD& ray) const;
  std::optional<SurfaceSample> intersectNominal(const RayD& ray, bool brute) const;

  std::vector<Vec3d> vertices_;
  std::vector<Eigen::Vector3i> triangles_;
  std::vector<Vec3d> normals_;
  std::vector<Node> nodes_;
  std::vector<int> order_;
  NoiseMode noise_ = NominalNoise{};
};

}  // namespace roadlift
