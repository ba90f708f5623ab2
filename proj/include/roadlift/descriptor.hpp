#pragma once

// Descriptor input preprocessing and the 22-element output vector.
//
// Output layout (index: meaning):
//   0..17  nine keypoints (u, v) in canonical corner order, normalized against the
//          tight 2D box: origin at the box center, both axes divided by box width
//   18..20 width/10, length/10, height/10
//   21     observation angle mapped from [-pi, pi] to [0, 1]
// The bottom-only layout keeps the four bottom keypoints (8 values) and height/10.

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "roadlift/geometry.hpp"

namespace roadlift {

inline constexpr int kSnippetSize = 128;
inline constexpr int kFullDescriptorSize = 22;
inline constexpr int kBottomDescriptorSize = 9;

enum class DescriptorLayout { Full, BottomOnly };

int descriptorSize(DescriptorLayout layout);

// Crop window to square snippet: the longer crop edge maps to `out_size` pixels, the
// shorter one is centered with zero padding, any odd pixel going to the trailing side.
struct SnippetSpec {
  Box2D crop;
  double scale = 1;
  int pad_left = 0;
  int pad_top = 0;
  int pad_right = 0;
  int pad_bottom = 0;
  int out_size = kSnippetSize;

  static SnippetSpec forBox(const Box2D& crop, int out_size = kSnippetSize);

  Vec2d apply(const Vec2d& image_point) const {
    return {(image_point.x() - crop.u_min) * scale + pad_left,
            (image_point.y() - crop.v_min) * scale + pad_top};
  }
  Vec2d invert(const Vec2d& snippet_point) const {
    return {(snippet_point.x() - pad_left) / scale + crop.u_min,
            (snippet_point.y() - pad_top) / scale + crop.v_min};
  }
  // Whether snippet pixel (col, row) carries image content rather than padding.
  bool isContent(int col, int row) const {
    return col >= pad_left && col < out_size - pad_right && row >= pad_top &&
           row < out_size - pad_bottom;
  }
};

Vec2d normalizeKeypoint(const Vec2d& keypoint, const Box2D& box);
Vec2d denormalizeKeypoint(const Vec2d& normalized, const Box2D& box);

inline double normalizeAlpha(double alpha) { return (alpha + std::numbers::pi) / (2 * std::numbers::pi); }
inline double denormalizeAlpha(double alpha_norm) {
  return alpha_norm * 2 * std::numbers::pi - std::numbers::pi;
}

// Signed angle from the camera-to-centroid ray to the object X axis, both projected
// onto the camera XZ plane. Rotating the object by +d about the camera Y axis
// changes alpha by -d. Anti-parallel vectors give +pi. Throws Degenerate when
// either projected vector is shorter than 1e-9.
double computeObservationAngle(const Box3D& box, const Camera& camera);

struct DescriptorOutput {
  DescriptorLayout layout = DescriptorLayout::Full;
  std::vector<double> values;  // 22 or 9 entries

  static DescriptorOutput zeros(DescriptorLayout layout);

  Vec2d keypointNorm(int index) const;  // bottom corners 0..3 in either layout
  double heightScaled() const;
  bool hasFullSet() const { return layout == DescriptorLayout::Full; }
  std::optional<double> alphaNorm() const;
  std::optional<Vec3d> dimsScaled() const;  // (w, l, h) / 10
  DescriptorOutput reduced() const;         // bottom-only projection of a full vector
};

struct DecodedDescriptor {
  std::vector<Vec2d> keypoints;  // image pixels; 9 (full) or 4 (bottom-only)
  std::optional<Size3> size;     // full layout only
  double height = 0;
  std::optional<double> alpha;   // radians, full layout only
};

DescriptorOutput encode(const Box3D& box, const Camera& camera, const Box2D& box2d,
                        DescriptorLayout layout = DescriptorLayout::Full);
DecodedDescriptor decode(const DescriptorOutput& output, const Box2D& box2d);

enum class ObjectClass { Car, Truck };
std::string toString(ObjectClass c);
ObjectClass parseObjectClass(const std::string& name);

struct Detection {
  int frame = 0;
  int object_id = -1;  // source object when the 2D box comes from ground truth
  ObjectClass object_class = ObjectClass::Car;
  Box2D box2d;
  DescriptorOutput descriptor;
  double confidence = 1;
};

// A ground-truth object as seen in one frame.
struct LabeledObject {
  int object_id = 0;
  ObjectClass object_class = ObjectClass::Car;
  std::string model_name;
  Box3D box;
  Box2D box2d;
  double truncation = 0;
  int occlusion = 0;
  double alpha = 0;
};

struct LabeledFrame {
  int frame = 0;
  Camera camera;
  std::vector<LabeledObject> objects;
};

// Perfect when every sigma is zero. Sigmas are in descriptor units: normalized
// keypoint units, scaled dims, and alpha_norm.
struct OracleNoise {
  double sigma_keypoint = 0;
  double sigma_dims = 0;
  double sigma_alpha = 0;
  double confidence_scale = 2.0;  // rho in exp(-r / rho)
  std::uint64_t seed = 0;

  bool perfect() const { return sigma_keypoint == 0 && sigma_dims == 0 && sigma_alpha == 0; }
};

// Descriptors computed from ground truth. Noisy draws are seeded per (seed, frame,
// object), confidence = exp(-r / rho) with r the Mahalanobis norm of the draw.
std::vector<Detection> oracleDescriptor(const LabeledFrame& frame, const OracleNoise& noise,
                                        DescriptorLayout layout = DescriptorLayout::Full);

}  // namespace roadlift
