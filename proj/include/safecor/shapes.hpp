#pragma once

#include <string>
#include <variant>

#include <Eigen/Dense>

namespace safecor {

struct Sphere {
  double radius = 0.0;
};

/// Segment of half-length along the local +z axis, inflated by `radius`.
struct Capsule {
  double half_length = 0.0;
  double radius = 0.0;
};

struct Box {
  Eigen::Vector3d half_extents = Eigen::Vector3d::Zero();
};

/// Solid region { x : normal . x <= offset } in the primitive's local frame.
/// Used for the table surface.
struct HalfSpace {
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
  double offset = 0.0;
};

using Primitive = std::variant<Sphere, Capsule, Box, HalfSpace>;

inline const char* primitive_name(const Primitive& p) {
  switch (p.index()) {
    case 0: return "sphere";
    case 1: return "capsule";
    case 2: return "box";
    default: return "halfspace";
  }
}

}  // namespace safecor
