#pragma once

// Shared geometric types and kernels.
//
// Frames: the world frame is right-handed and Z-up. The camera frame is X right,
// Y down, Z forward. Objects use X forward (length), Y left (width), Z up (height).
//
// Euler angles compose intrinsically as yaw about Z, then pitch about the new Y,
// then roll about the new X. Pitch is reported nose-up positive and roll
// left-side-up positive, so R = Rz(yaw) * Ry(-pitch) * Rx(roll).

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/SVD>

#include "roadlift/error.hpp"

namespace roadlift {

template <typename Scalar> using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar> using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar> using Mat3 = Eigen::Matrix<Scalar, 3, 3>;

template <typename Scalar>
Scalar wrapAngle(Scalar angle) {
  constexpr Scalar kPi = std::numbers::pi_v<Scalar>;
  angle = std::remainder(angle, Scalar(2) * kPi);
  if (angle < -kPi) angle += Scalar(2) * kPi;
  if (angle > kPi) angle -= Scalar(2) * kPi;
  return angle;
}

template <typename Scalar>
struct EulerAngles {
  Scalar yaw = 0;
  Scalar pitch = 0;
  Scalar roll = 0;
};

template <typename Scalar>
struct EulerDecomposition {
  EulerAngles<Scalar> angles;
  bool gimbal_lock = false;
};

template <typename Scalar>
Mat3<Scalar> eulerToMatrix(const EulerAngles<Scalar>& e) {
  using AngleAxis = Eigen::AngleAxis<Scalar>;
  return (AngleAxis(e.yaw, Vec3<Scalar>::UnitZ()) * AngleAxis(-e.pitch, Vec3<Scalar>::UnitY()) *
          AngleAxis(e.roll, Vec3<Scalar>::UnitX()))
      .toRotationMatrix();
}

// Inverse of eulerToMatrix. Within 1e-6 rad of |pitch| = pi/2 the decomposition is
// not unique; roll is pinned to 0 and gimbal_lock is set.
template <typename Scalar>
EulerDecomposition<Scalar> matrixToEuler(const Mat3<Scalar>& r) {
  constexpr Scalar kHalfPi = std::numbers::pi_v<Scalar> / 2;
  EulerDecomposition<Scalar> out;
  out.angles.pitch = std::atan2(r(2, 0), std::hypot(r(0, 0), r(1, 0)));
  if (kHalfPi - std::abs(out.angles.pitch) < Scalar(1e-6)) {
    out.gimbal_lock = true;
    out.angles.roll = 0;
    out.angles.yaw = std::atan2(-r(0, 1), r(1, 1));
  } else {
    out.angles.yaw = std::atan2(r(1, 0), r(0, 0));
    out.angles.roll = std::atan2(r(2, 1), r(2, 2));
  }
  return out;
}

// Dimensions in meters: width along object Y, length along object X, height along Z.
template <typename Scalar>
struct BoxSize {
  Scalar width = 1;
  Scalar length = 1;
  Scalar height = 1;
};

template <typename Scalar>
struct Box3 {
  Vec3<Scalar> center = Vec3<Scalar>::Zero();
  BoxSize<Scalar> size;
  EulerAngles<Scalar> rotation;

  Mat3<Scalar> rotationMatrix() const { return eulerToMatrix(rotation); }
  Scalar volume() const { return size.width * size.length * size.height; }
  bool valid() const {
    constexpr Scalar kPi = std::numbers::pi_v<Scalar>;
    auto inRange = [&](Scalar a) { return std::isfinite(a) && a >= -kPi && a <= kPi; };
    return size.width > 0 && size.length > 0 && size.height > 0 && center.allFinite() &&
           inRange(rotation.yaw) && inRange(rotation.pitch) && inRange(rotation.roll);
  }
};

template <typename Scalar>
struct Box2 {
  Scalar u_min = 0;
  Scalar v_min = 0;
  Scalar u_max = 0;
  Scalar v_max = 0;

  Scalar width() const { return u_max - u_min; }
  Scalar height() const { return v_max - v_min; }
  Vec2<Scalar> center() const {
    return {(u_min + u_max) / Scalar(2), (v_min + v_max) / Scalar(2)};
  }
  bool valid() const { return u_max > u_min && v_max > v_min; }
};

template <typename Scalar>
struct Ray {
  Vec3<Scalar> origin = Vec3<Scalar>::Zero();
  Vec3<Scalar> direction = Vec3<Scalar>::UnitZ();

  static Ray through(const Vec3<Scalar>& origin, const Vec3<Scalar>& toward) {
    return {origin, (toward - origin).normalized()};
  }
  Vec3<Scalar> at(Scalar t) const { return origin + t * direction; }
  Vec3<Scalar> closestPoint(const Vec3<Scalar>& p) const {
    return at(std::max(Scalar(0), direction.dot(p - origin)));
  }
};

// Pinhole camera, no distortion. `rotation`/`translation` map world to camera:
// p_cam = rotation * p_world + translation.
template <typename Scalar>
struct CameraModel {
  Scalar fx = 1;
  Scalar fy = 1;
  Scalar cx = 0;
  Scalar cy = 0;
  int image_width = 1;
  int image_height = 1;
  Mat3<Scalar> rotation = Mat3<Scalar>::Identity();
  Vec3<Scalar> translation = Vec3<Scalar>::Zero();

  Vec3<Scalar> center() const { return -rotation.transpose() * translation; }
  Vec3<Scalar> toCamera(const Vec3<Scalar>& world) const { return rotation * world + translation; }
  Vec3<Scalar> toWorldDirection(const Vec3<Scalar>& cam_dir) const {
    return rotation.transpose() * cam_dir;
  }

  void validate() const {
    if (!(fx > 0 && fy > 0)) throw InvalidArgument("camera focal lengths must be positive");
    if (image_width <= 0 || image_height <= 0)
      throw InvalidArgument("camera image dimensions must be positive");
    const Scalar orth = (rotation.transpose() * rotation - Mat3<Scalar>::Identity()).norm();
    if (!(orth < Scalar(1e-9)) || std::abs(rotation.determinant() - Scalar(1)) > Scalar(1e-9))
      throw InvalidArgument("camera extrinsic rotation is not a proper rotation");
  }

  // Camera at `position`, heading `yaw` (radians, about world Z, 0 = +X), tilted
  // `pitch_down` below the horizon, square pixels, principal point at image center.
  static CameraModel lookingFrom(const Vec3<Scalar>& position, Scalar yaw, Scalar pitch_down,
                                 Scalar horizontal_fov, int width, int height) {
    CameraModel cam;
    cam.image_width = width;
    cam.image_height = height;
    cam.fx = cam.fy = (Scalar(width) / 2) / std::tan(horizontal_fov / 2);
    cam.cx = Scalar(width) / 2;
    cam.cy = Scalar(height) / 2;
    const Vec3<Scalar> forward(std::cos(pitch_down) * std::cos(yaw),
                               std::cos(pitch_down) * std::sin(yaw), -std::sin(pitch_down));
    const Vec3<Scalar> right(std::sin(yaw), -std::cos(yaw), 0);
    const Vec3<Scalar> down = forward.cross(right);
    cam.rotation.row(0) = right.transpose();
    cam.rotation.row(1) = down.transpose();
    cam.rotation.row(2) = forward.transpose();
    cam.translation = -cam.rotation * position;
    return cam;
  }
};

template <typename Scalar>
Vec2<Scalar> projectCameraPoint(const CameraModel<Scalar>& cam, const Vec3<Scalar>& pc) {
  if (pc.z() <= Scalar(1e-9)) throw BehindCamera("point is behind the camera");
  return {cam.fx * pc.x() / pc.z() + cam.cx, cam.fy * pc.y() / pc.z() + cam.cy};
}

// No clipping to image bounds.
template <typename Scalar>
Vec2<Scalar> project(const CameraModel<Scalar>& cam, const Vec3<Scalar>& world) {
  return projectCameraPoint(cam, cam.toCamera(world));
}

template <typename Scalar>
Ray<Scalar> pixelRay(const CameraModel<Scalar>& cam, const Vec2<Scalar>& pixel) {
  const Vec3<Scalar> dir_cam((pixel.x() - cam.cx) / cam.fx, (pixel.y() - cam.cy) / cam.fy, 1);
  return {cam.center(), cam.toWorldDirection(dir_cam).normalized()};
}

enum Corner : int {
  kFrontLeft = 0,
  kFrontRight = 1,
  kRearRight = 2,
  kRearLeft = 3,
  kCentroid = 8,
};

// Object-frame unit offsets of the canonical corners: bottom 0..3, top 4..7.
template <typename Scalar>
Vec3<Scalar> cornerSigns(int index) {
  static constexpr int kX[4] = {1, 1, -1, -1};
  static constexpr int kY[4] = {1, -1, -1, 1};
  return {Scalar(kX[index % 4]), Scalar(kY[index % 4]), Scalar(index < 4 ? -1 : 1)};
}

// Eight corners then the centroid: 0 front-left, 1 front-right, 2 rear-right,
// 3 rear-left on the bottom face, 4..7 the matching top corners, 8 the centroid.
template <typename Scalar>
std::array<Vec3<Scalar>, 9> boxCorners(const Box3<Scalar>& box) {
  const Mat3<Scalar> r = box.rotationMatrix();
  const Vec3<Scalar> half(box.size.length / 2, box.size.width / 2, box.size.height / 2);
  std::array<Vec3<Scalar>, 9> pts;
  for (int i = 0; i < 8; ++i) pts[i] = box.center + r * cornerSigns<Scalar>(i).cwiseProduct(half);
  pts[8] = box.center;
  return pts;
}

// Least-squares box through eight corners in canonical order; the rotation is the
// nearest proper rotation to the averaged edge directions.
template <typename Scalar>
Box3<Scalar> boxFromCorners(const std::array<Vec3<Scalar>, 8>& c) {
  Vec3<Scalar> center = Vec3<Scalar>::Zero();
  for (const auto& p : c) center += p;
  center /= Scalar(8);
  Mat3<Scalar> axes = Mat3<Scalar>::Zero();
  for (int i = 0; i < 8; ++i) {
    const Vec3<Scalar> s = cornerSigns<Scalar>(i);
    axes += (c[i] - center) * s.transpose();
  }
  axes /= Scalar(8);  // columns are the half-extent vectors
  Eigen::JacobiSVD<Mat3<Scalar>> svd(axes, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3<Scalar> r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0) {
    Mat3<Scalar> u = svd.matrixU();
    u.col(2) *= -1;
    r = u * svd.matrixV().transpose();
  }
  const Vec3<Scalar> half = (r.transpose() * axes).diagonal();
  Box3<Scalar> box;
  box.center = center;
  box.size = {Scalar(2) * half.y(), Scalar(2) * half.x(), Scalar(2) * half.z()};
  box.rotation = matrixToEuler(r).angles;
  return box;
}

using Vec2d = Vec2<double>;
using Vec3d = Vec3<double>;
using Mat3d = Mat3<double>;
using Euler = EulerAngles<double>;
using Size3 = BoxSize<double>;
using Box3D = Box3<double>;
using Box2D = Box2<double>;
using RayD = Ray<double>;
using Camera = CameraModel<double>;

}  // namespace roadlift
