#pragma once

#include <stdexcept>
#include <string>

namespace roadlift {

enum class ErrorCode {
  BehindCamera,
  Degenerate,
  DegenerateInput,
  OutOfCoverage,
  FormatError,
  ShapeMismatch,
  NonFiniteWeights,
  RayMiss,
  AllRaysMiss,
  DegenerateBase,
  InfeasibleSpec,
  InvalidArgument,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

#define ROADLIFT_DEFINE_ERROR(Name)                                              \
  class Name : public Error {                                                   \
   public:                                                                      \
    explicit Name(const std::string& what) : Error(ErrorCode::Name, what) {}    \
  };

ROADLIFT_DEFINE_ERROR(BehindCamera)
ROADLIFT_DEFINE_ERROR(Degenerate)
ROADLIFT_DEFINE_ERROR(DegenerateInput)
ROADLIFT_DEFINE_ERROR(OutOfCoverage)
ROADLIFT_DEFINE_ERROR(FormatError)
ROADLIFT_DEFINE_ERROR(ShapeMismatch)
ROADLIFT_DEFINE_ERROR(NonFiniteWeights)
ROADLIFT_DEFINE_ERROR(AllRaysMiss)
ROADLIFT_DEFINE_ERROR(DegenerateBase)
ROADLIFT_DEFINE_ERROR(InfeasibleSpec)
ROADLIFT_DEFINE_ERROR(InvalidArgument)

#undef ROADLIFT_DEFINE_ERROR

class RayMiss : public Error {
 public:
  explicit RayMiss(int keypoint)
      : Error(ErrorCode::RayMiss, "ray through bottom keypoint " + std::to_string(keypoint) +
                                      " misses the road surface"),
        keypoint_(keypoint) {}
  int keypoint() const noexcept { return keypoint_; }

 private:
  int keypoint_;
};

}  // namespace roadlift
