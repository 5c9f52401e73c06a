#pragma once

// Internal JSON field helpers shared by the arm/scene/config loaders.

#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "safecor/pose.hpp"
#include "safecor/shapes.hpp"

namespace safecor::detail {

using json = nlohmann::json;

inline Eigen::Vector3d parse_vec3(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3) {
    throw std::runtime_error("field '" + field + "' must be a 3-element array");
  }
  return Eigen::Vector3d(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

inline Eigen::VectorXd parse_vec(const json& j, const std::string& field, int expected = -1) {
  if (!j.is_array() || (expected >= 0 && static_cast<int>(j.size()) != expected)) {
    throw std::runtime_error("field '" + field + "' must be an array of " +
                             std::to_string(expected) + " numbers");
  }
  Eigen::VectorXd v(j.size());
  for (size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

inline Pose parse_pose(const json& j, const std::string& field) {
  Pose p;
  if (j.contains("position")) p.position = parse_vec3(j["position"], field + ".position");
  if (j.contains("orientation")) {
    const auto& o = j["orientation"];
    if (!o.is_array() || o.size() != 4) {
      throw std::runtime_error("field '" + field + ".orientation' must be a [w,x,y,z] quaternion");
    }
    p.orientation = Eigen::Quaterniond(o[0].get<double>(), o[1].get<double>(),
                                       o[2].get<double>(), o[3].get<double>());
    if (std::abs(p.orientation.norm() - 1.0) > 1e-6) {
      throw std::runtime_error("field '" + field + ".orientation' is not a unit quaternion");
    }
    p.orientation.normalize();
  }
  return p;
}

inline Primitive parse_primitive(const json& j, const std::string& field) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "sphere") {
    return Sphere{j.at("radius").get<double>()};
  } else if (type == "capsule") {
    return Capsule{j.at("half_length").get<double>(), j.at("radius").get<double>()};
  } else if (type == "box") {
    return Box{parse_vec3(j.at("half_extents"), field + ".half_extents")};
  } else if (type == "halfspace") {
    HalfSpace h;
    h.normal = parse_vec3(j.at("normal"), field + ".normal").normalized();
    h.offset = j.value("offset", 0.0);
    return h;
  }
  throw std::runtime_error("field '" + field + "': unknown primitive type '" + type + "'");
}

}  // namespace safecor::detail
