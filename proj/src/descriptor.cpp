#include "roadlift/descriptor.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "roadlift/random.hpp"

namespace roadlift {

int descriptorSize(DescriptorLayout layout) {
  return layout == DescriptorLayout::Full ? kFullDescriptorSize : kBottomDescriptorSize;
}

SnippetSpec SnippetSpec::forBox(const Box2D& crop, int out_size) {
  if (!crop.valid()) throw InvalidArgument("snippet crop box is empty");
  if (out_size < 1) throw InvalidArgument("snippet size must be at least 1");
  SnippetSpec s;
  s.crop = crop;
  s.out_size = out_size;
  const double w = crop.width(), h = crop.height();
  s.scale = out_size / std::max(w, h);
  if (w >= h) {
    const int content = std::clamp(static_cast<int>(std::lround(h * s.scale)), 0, out_size);
    s.pad_top = (out_size - content) / 2;
    s.pad_bottom = out_size - content - s.pad_top;
  } else {
    const int content = std::clamp(static_cast<int>(std::lround(w * s.scale)), 0, out_size);
    s.pad_left = (out_size - content) / 2;
    s.pad_right = out_size - content - s.pad_left;
  }
  return s;
}

Vec2d normalizeKeypoint(const Vec2d& keypoint, const Box2D& box) {
  return (keypoint - box.center()) / box.width();
}

Vec2d denormalizeKeypoint(const Vec2d& normalized, const Box2D& box) {
  return normalized * box.width() + box.center();
}

double computeObservationAngle(const Box3D& box, const Camera& camera) {
  const Vec3d ray = camera.toCamera(box.center);
  const Vec3d axis = camera.rotation * box.rotationMatrix().col(0);
  const Vec2d r(ray.x(), ray.z());
  const Vec2d a(axis.x(), axis.z());
  if (r.norm() < 1e-9 || a.norm() < 1e-9)
    throw Degenerate("observation angle undefined: vector vanishes in the camera XZ plane");
  double alpha = std::atan2(r.x() * a.y() - r.y() * a.x(), r.dot(a));
  if (alpha == -std::numbers::pi) alpha = std::numbers::pi;
  return alpha;
}

DescriptorOutput DescriptorOutput::zeros(DescriptorLayout layout) {
  return {layout, std::vector<double>(descriptorSize(layout), 0.0)};
}

Vec2d DescriptorOutput::keypointNorm(int index) const {
  return {values.at(2 * index), values.at(2 * index + 1)};
}

double DescriptorOutput::heightScaled() const {
  return layout == DescriptorLayout::Full ? values.at(20) : values.at(8);
}

std::optional<double> DescriptorOutput::alphaNorm() const {
  if (layout != DescriptorLayout::Full) return std::nullopt;
  return values.at(21);
}

std::optional<Vec3d> DescriptorOutput::dimsScaled() const {
  if (layout != DescriptorLayout::Full) return std::nullopt;
  return Vec3d(values.at(18), values.at(19), values.at(20));
}

DescriptorOutput DescriptorOutput::reduced() const {
  if (layout == DescriptorLayout::BottomOnly) return *this;
  DescriptorOutput out{DescriptorLayout::BottomOnly, std::vector<double>(values.begin(), values.begin() + 8)};
  out.values.push_back(values.at(20));
  return out;
}

DescriptorOutput encode(const Box3D& box, const Camera& camera, const Box2D& box2d,
                        DescriptorLayout layout) {
  if (!box2d.valid()) throw InvalidArgument("2D box is empty");
  const auto corners = boxCorners(box);
  DescriptorOutput out;
  out.layout = DescriptorLayout::Full;
  out.values.reserve(kFullDescriptorSize);
  for (const auto& c : corners) {
    const Vec2d kp = normalizeKeypoint(project(camera, c), box2d);
    out.values.push_back(kp.x());
    out.values.push_back(kp.y());
  }
  out.values.push_back(box.size.width / 10.0);
  out.values.push_back(box.size.length / 10.0);
  out.values.push_back(box.size.height / 10.0);
  out.values.push_back(normalizeAlpha(computeObservationAngle(box, camera)));
  return layout == DescriptorLayout::Full ? out : out.reduced();
}

DecodedDescriptor decode(const DescriptorOutput& output, const Box2D& box2d) {
  if (static_cast<int>(output.values.size()) != descriptorSize(output.layout))
    throw ShapeMismatch("descriptor has " + std::to_string(output.values.size()) + " values, expected " +
                        std::to_string(descriptorSize(output.layout)));
  DecodedDescriptor d;
  const int count = output.layout == DescriptorLayout::Full ? 9 : 4;
  for (int i = 0; i < count; ++i) d.keypoints.push_back(denormalizeKeypoint(output.keypointNorm(i), box2d));
  d.height = output.heightScaled() * 10.0;
  if (auto dims = output.dimsScaled()) d.size = Size3{(*dims)[0] * 10.0, (*dims)[1] * 10.0, (*dims)[2] * 10.0};
  if (auto a = output.alphaNorm()) d.alpha = denormalizeAlpha(*a);
  return d;
}

std::string toString(ObjectClass c) { return c == ObjectClass::Car ? "Car" : "Truck"; }

ObjectClass parseObjectClass(const std::string& name) {
  if (name == "Car" || name == "car") return ObjectClass::Car;
  if (name == "Truck" || name == "truck") return ObjectClass::Truck;
  throw FormatError("unknown object class '" + name + "'");
}

std::vector<Detection> oracleDescriptor(const LabeledFrame& frame, const OracleNoise& noise,
                                        DescriptorLayout layout) {
  std::vector<Detection> out;
  out.reserve(frame.objects.size());
  for (const auto& obj : frame.objects) {
    Detection det;
    det.frame = frame.frame;
    det.object_id = obj.object_id;
    det.object_class = obj.object_class;
    det.box2d = obj.box2d;
    det.descriptor = encode(obj.box, frame.camera, obj.box2d, layout);
    det.confidence = 1.0;
    if (!noise.perfect()) {
      std::mt19937_64 rng(mixSeed({noise.seed, static_cast<std::uint64_t>(frame.frame),
                                   static_cast<std::uint64_t>(obj.object_id)}));
      std::normal_distribution<double> gauss(0.0, 1.0);
      auto& v = det.descriptor.values;
      const int n = static_cast<int>(v.size());
      const int keypoint_values = layout == DescriptorLayout::Full ? 18 : 8;
      double r2 = 0;
      for (int i = 0; i < n; ++i) {
        double sigma = noise.sigma_dims;
        if (i < keypoint_values) sigma = noise.sigma_keypoint;
        if (layout == DescriptorLayout::Full && i == 21) sigma = noise.sigma_alpha;
        const double z = gauss(rng);
        if (sigma <= 0) continue;
        v[i] += sigma * z;
        r2 += z * z;
      }
      if (layout == DescriptorLayout::Full) v[21] = std::clamp(v[21], 0.0, 1.0);
      det.confidence = std::exp(-std::sqrt(r2) / noise.confidence_scale);
    }
    out.push_back(std::move(det));
  }
  return out;
}

}  // namespace roadlift
