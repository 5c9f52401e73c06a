#include "safecor/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json_parse.hpp"

namespace safecor {

namespace {

constexpr double kDegenerateEps = 1e-12;

/// Closest point to p on segment [a, b].
Eigen::Vector3d closest_on_segment(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                                   const Eigen::Vector3d& b) {
  const Eigen::Vector3d ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 < kDegenerateEps) return a;
  const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return a + t * ab;
}

/// Closest points between segments [p1,q1] and [p2,q2] (Ericson, robust to
/// degenerate segments).
void closest_segment_segment(const Eigen::Vector3d& p1, const Eigen::Vector3d& q1,
                             const Eigen::Vector3d& p2, const Eigen::Vector3d& q2,
                             Eigen::Vector3d& c1, Eigen::Vector3d& c2) {
  const Eigen::Vector3d d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
  const double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
  double s = 0.0, t = 0.0;
  if (a <= kDegenerateEps && e <= kDegenerateEps) {
    // both degenerate
  } else if (a <= kDegenerateEps) {
    t = std::clamp(f / e, 0.0, 1.0);
  } else {
    const double c = d1.dot(r);
    if (e <= kDegenerateEps) {
      s = std::clamp(-c / a, 0.0, 1.0);
    } else {
      const double b = d1.dot(d2);
      const double denom = a * e - b * b;
      s = denom > kDegenerateEps ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
      t = (b * s + f) / e;
      if (t < 0.0) {
        t = 0.0;
        s = std::clamp(-c / a, 0.0, 1.0);
      } else if (t > 1.0) {
        t = 1.0;
        s = std::clamp((b - c) / a, 0.0, 1.0);
      }
    }
  }
  c1 = p1 + s * d1;
  c2 = p2 + t * d2;
}

struct PointBox {
  double signed_dist;             // to the box surface; negative inside
  Eigen::Vector3d surface_point;  // on the box, in box frame
  Eigen::Vector3d outward;        // unit, pointing away from the box, box frame
  bool degenerate = false;
};

/// Signed distance from a point (box local frame) to the box surface.
PointBox point_box_local(const Eigen::Vector3d& p, const Eigen::Vector3d& h) {
  PointBox out;
  const Eigen::Vector3d cl = p.cwiseMax(-h).cwiseMin(h);
  const Eigen::Vector3d delta = p - cl;
  const double n = delta.norm();
  if (n > kDegenerateEps) {  // outside
    out.signed_dist = n;
    out.surface_point = cl;
    out.outward = delta / n;
    return out;
  }
  // inside (or on the surface): nearest face
  int k = 0;
  double best = h[0] - std::abs(p[0]);
  for (int i = 1; i < 3; ++i) {
    const double gap = h[i] - std::abs(p[i]);
    if (gap < best) {
      best = gap;
      k = i;
    }
  }
  const double side = p[k] >= 0.0 ? 1.0 : -1.0;
  out.signed_dist = -best;
  out.surface_point = p;
  out.surface_point[k] = side * h[k];
  out.outward = Eigen::Vector3d::Zero();
  out.outward[k] = side;
  return out;
}

Eigen::Vector3d capsule_end(const Pose& pose, const Capsule& c, double sign) {
  return pose.apply(Eigen::Vector3d(0, 0, sign * c.half_length));
}

/// Halfspace in world coordinates: { x : normal . x <= offset }.
void halfspace_world(const HalfSpace& h, const Pose& pose, Eigen::Vector3d& n, double& o) {
  n = pose.rotate(h.normal);
  o = h.offset + n.dot(pose.position);
}

ProximityReport from_cores(const Eigen::Vector3d& core_a, double ra, const Eigen::Vector3d& core_b,
                           double rb) {
  ProximityReport rep;
  const Eigen::Vector3d delta = core_a - core_b;
  const double n = delta.norm();
  if (n < kDegenerateEps) {
    rep.direction = Eigen::Vector3d::UnitZ();
    rep.degenerate = true;
  } else {
    rep.direction = delta / n;
  }
  rep.distance = n - ra - rb;
  rep.witness_a = core_a - ra * rep.direction;
  rep.witness_b = core_b + rb * rep.direction;
  return rep;
}

ProximityReport sphere_sphere(const Sphere& a, const Pose& pa, const Sphere& b, const Pose& pb) {
  return from_cores(pa.position, a.radius, pb.position, b.radius);
}

ProximityReport sphere_capsule(const Sphere& a, const Pose& pa, const Capsule& b, const Pose& pb) {
  const Eigen::Vector3d core =
      closest_on_segment(pa.position, capsule_end(pb, b, -1.0), capsule_end(pb, b, 1.0));
  return from_cores(pa.position, a.radius, core, b.radius);
}

ProximityReport capsule_capsule(const Capsule& a, const Pose& pa, const Capsule& b,
                                const Pose& pb) {
  Eigen::Vector3d ca, cb;
  closest_segment_segment(capsule_end(pa, a, -1.0), capsule_end(pa, a, 1.0),
                          capsule_end(pb, b, -1.0), capsule_end(pb, b, 1.0), ca, cb);
  return from_cores(ca, a.radius, cb, b.radius);
}

ProximityReport point_box_report(const Eigen::Vector3d& point_world, double radius, const Box& b,
                                 const Pose& pb) {
  const Eigen::Vector3d local = pb.inverse().apply(point_world);
  const PointBox pbres = point_box_local(local, b.half_extents);
  ProximityReport rep;
  rep.distance = pbres.signed_dist - radius;
  rep.direction = pb.rotate(pbres.outward);
  rep.witness_b = pb.apply(pbres.surface_point);
  rep.witness_a = point_world - radius * rep.direction;
  rep.degenerate = pbres.degenerate;
  return rep;
}

ProximityReport sphere_box(const Sphere& a, const Pose& pa, const Box& b, const Pose& pb) {
  return point_box_report(pa.position, a.radius, b, pb);
}

ProximityReport capsule_box(const Capsule& a, const Pose& pa, const Box& b, const Pose& pb) {
  const Pose inv = pb.inverse();
  const Eigen::Vector3d e0 = inv.apply(capsule_end(pa, a, -1.0));
  const Eigen::Vector3d e1 = inv.apply(capsule_end(pa, a, 1.0));
  const Eigen::Vector3d& h = b.half_extents;

  // Distance from a point of the segment to the box is convex in the segment
  // parameter, so ternary search finds the global core minimum exactly.
  auto outside_dist = [&](double t) {
    const Eigen::Vector3d p = e0 + t * (e1 - e0);
    return (p - p.cwiseMax(-h).cwiseMin(h)).norm();
  };
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double m1 = lo + (hi - lo) / 3.0;
    const double m2 = hi - (hi - lo) / 3.0;
    if (outside_dist(m1) < outside_dist(m2)) {
      hi = m2;
    } else {
      lo = m1;
    }
  }
  const double t_star = 0.5 * (lo + hi);
  if (outside_dist(t_star) > kDegenerateEps) {
    // core stays outside the box: exact even if the inflated surface overlaps
    const Eigen::Vector3d core_world = pa.apply(Eigen::Vector3d(0, 0, (2.0 * t_star - 1.0) * a.half_length));
    return point_box_report(core_world, a.radius, b, pb);
  }

  // Core enters the box. Sample the signed core distance and subtract the
  // Lipschitz slack so the reported penetration is never optimistic.
  constexpr int kSamples = 257;
  const double seg_len = (e1 - e0).norm();
  double best = std::numeric_limits<double>::infinity();
  double best_t = 0.0;
  for (int i = 0; i < kSamples; ++i) {
    const double t = static_cast<double>(i) / (kSamples - 1);
    const double s = point_box_local(e0 + t * (e1 - e0), h).signed_dist;
    if (s < best) {
      best = s;
      best_t = t;
    }
  }
  const double slack = seg_len / (2.0 * (kSamples - 1));
  const Eigen::Vector3d best_local = e0 + best_t * (e1 - e0);
  const PointBox pbres = point_box_local(best_local, h);
  ProximityReport rep;
  rep.distance = best - slack - a.radius;
  rep.direction = pb.rotate(pbres.outward);
  rep.witness_b = pb.apply(pbres.surface_point);
  rep.witness_a = pb.apply(best_local) - a.radius * rep.direction;
  return rep;
}

ProximityReport point_halfspace_report(const Eigen::Vector3d& point_world, double radius,
                                       const HalfSpace& b, const Pose& pb) {
  Eigen::Vector3d n;
  double o;
  halfspace_world(b, pb, n, o);
  ProximityReport rep;
  rep.distance = n.dot(point_world) - o - radius;
  rep.direction = n;
  rep.witness_a = point_world - radius * n;
  rep.witness_b = rep.witness_a - (n.dot(rep.witness_a) - o) * n;
  return rep;
}

ProximityReport sphere_halfspace(const Sphere& a, const Pose& pa, const HalfSpace& b,
                                 const Pose& pb) {
  return point_halfspace_report(pa.position, a.radius, b, pb);
}

ProximityReport capsule_halfspace(const Capsule& a, const Pose& pa, const HalfSpace& b,
                                  const Pose& pb) {
  Eigen::Vector3d n;
  double o;
  halfspace_world(b, pb, n, o);
  const Eigen::Vector3d e0 = capsule_end(pa, a, -1.0);
  const Eigen::Vector3d e1 = capsule_end(pa, a, 1.0);
  const Eigen::Vector3d& lower = n.dot(e0) <= n.dot(e1) ? e0 : e1;
  return point_halfspace_report(lower, a.radius, b, pb);
}

ProximityReport box_halfspace(const Box& a, const Pose& pa, const HalfSpace& b, const Pose& pb) {
  Eigen::Vector3d n;
  double o;
  halfspace_world(b, pb, n, o);
  Eigen::Vector3d best_corner = Eigen::Vector3d::Zero();
  double best = std::numeric_limits<double>::infinity();
  for (int ix = -1; ix <= 1; ix += 2) {
    for (int iy = -1; iy <= 1; iy += 2) {
      for (int iz = -1; iz <= 1; iz += 2) {
        const Eigen::Vector3d corner = pa.apply(Eigen::Vector3d(
            ix * a.half_extents.x(), iy * a.half_extents.y(), iz * a.half_extents.z()));
        const double d = n.dot(corner) - o;
        if (d < best) {
          best = d;
          best_corner = corner;
        }
      }
    }
  }
  ProximityReport rep;
  rep.distance = best;
  rep.direction = n;
  rep.witness_a = best_corner;
  rep.witness_b = best_corner - best * n;
  return rep;
}

ProximityReport swapped(ProximityReport rep) {
  std::swap(rep.witness_a, rep.witness_b);
  std::swap(rep.body_a, rep.body_b);
  std::swap(rep.link_a, rep.link_b);
  rep.direction = -rep.direction;
  return rep;
}

}  // namespace

ProximityReport primitive_distance(const Primitive& a, const Pose& pose_a, const Primitive& b,
                                   const Pose& pose_b) {
  if (a.index() > b.index()) {
    return swapped(primitive_distance(b, pose_b, a, pose_a));
  }
  return std::visit(
      [&](const auto& sa, const auto& sb) -> ProximityReport {
        using A = std::decay_t<decltype(sa)>;
        using B = std::decay_t<decltype(sb)>;
        if constexpr (std::is_same_v<A, Sphere> && std::is_same_v<B, Sphere>) {
          return sphere_sphere(sa, pose_a, sb, pose_b);
        } else if constexpr (std::is_same_v<A, Sphere> && std::is_same_v<B, Capsule>) {
          return sphere_capsule(sa, pose_a, sb, pose_b);
        } else if constexpr (std::is_same_v<A, Sphere> && std::is_same_v<B, Box>) {
          return sphere_box(sa, pose_a, sb, pose_b);
        } else if constexpr (std::is_same_v<A, Sphere> && std::is_same_v<B, HalfSpace>) {
          return sphere_halfspace(sa, pose_a, sb, pose_b);
        } else if constexpr (std::is_same_v<A, Capsule> && std::is_same_v<B, Capsule>) {
          return capsule_capsule(sa, pose_a, sb, pose_b);
        } else if constexpr (std::is_same_v<A, Capsule> && std::is_same_v<B, Box>) {
          return capsule_box(sa, pose_a, sb, pose_b);
        } else if constexpr (std::is_same_v<A, Capsule> && std::is_same_v<B, HalfSpace>) {
          return capsule_halfspace(sa, pose_a, sb, pose_b);
        } else if constexpr (std::is_same_v<A, Box> && std::is_same_v<B, HalfSpace>) {
          return box_halfspace(sa, pose_a, sb, pose_b);
        } else {
          throw std::runtime_error(std::string("primitive_distance: unsupported pair ") +
                                   primitive_name(Primitive(sa)) + "/" +
                                   primitive_name(Primitive(sb)));
        }
      },
      a, b);
}

namespace {

template <typename Fn>
void for_each_env_pair(const ArmModel& model, const FkResult& fk, const Scene& scene, Fn&& fn) {
  const Primitive table_prim = scene.table;
  const Pose identity;
  for (const auto& body : model.collision_bodies) {
    const Pose body_pose = body_world_pose(fk, body);
    for (const auto& obstacle : scene.obstacles) {
      if (scene.non_colliding_labels.count(obstacle.label)) continue;
      ProximityReport rep =
          primitive_distance(body.shape, body_pose, obstacle.shape, obstacle.pose);
      rep.body_a = body.name;
      rep.body_b = obstacle.label;
      rep.link_a = body.link;
      fn(std::move(rep));
    }
    ProximityReport rep = primitive_distance(body.shape, body_pose, table_prim, identity);
    rep.body_a = body.name;
    rep.body_b = "table";
    rep.link_a = body.link;
    fn(std::move(rep));
  }
}

template <typename Fn>
void for_each_self_pair(const ArmModel& model, const FkResult& fk, Fn&& fn) {
  const int n = static_cast<int>(model.collision_bodies.size());
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const auto& a = model.collision_bodies[i];
      const auto& b = model.collision_bodies[j];
      if (std::abs(a.link - b.link) <= 1) continue;  // same or adjacent link
      ProximityReport rep = primitive_distance(a.shape, body_world_pose(fk, a), b.shape,
                                               body_world_pose(fk, b));
      rep.body_a = a.name;
      rep.body_b = b.name;
      rep.link_a = a.link;
      rep.link_b = b.link;
      fn(std::move(rep));
    }
  }
}

}  // namespace

ProximityReport min_robot_env_distance(const ArmModel& model, const Eigen::VectorXd& q,
                                       const Scene& scene) {
  const FkResult fk = forward_kinematics(model, q);
  ProximityReport best;
  for_each_env_pair(model, fk, scene, [&](ProximityReport rep) {
    if (rep.distance < best.distance) best = std::move(rep);
  });
  return best;
}

ProximityReport min_self_distance(const ArmModel& model, const Eigen::VectorXd& q) {
  const FkResult fk = forward_kinematics(model, q);
  ProximityReport best;
  for_each_self_pair(model, fk, [&](ProximityReport rep) {
    if (rep.distance < best.distance) best = std::move(rep);
  });
  return best;
}

std::vector<ProximityReport> proximity_pairs(const ArmModel& model, const Eigen::VectorXd& q,
                                             const Scene& scene, double radius) {
  const FkResult fk = forward_kinematics(model, q);
  std::vector<ProximityReport> out;
  auto keep = [&](ProximityReport rep) {
    if (rep.distance < radius) out.push_back(std::move(rep));
  };
  for_each_env_pair(model, fk, scene, keep);
  for_each_self_pair(model, fk, keep);
  return out;
}

DistanceGradient distance_gradient(const ArmModel& model, const Eigen::VectorXd& q,
                                   const ProximityReport& report) {
  DistanceGradient out;
  out.d_dq = Eigen::VectorXd::Zero(model.dof);
  if (report.link_a >= 0) {
    out.d_dq += jacobian(model, q, report.witness_a, report.link_a).transpose() * report.direction;
  }
  if (report.link_b >= 0) {
    out.d_dq -= jacobian(model, q, report.witness_b, report.link_b).transpose() * report.direction;
  }
  out.degenerate = report.degenerate || std::abs(report.distance) < 1e-9;
  return out;
}

Scene load_scene_json(const std::string& json_text, const std::string& origin) {
  detail::json j;
  try {
    j = detail::json::parse(json_text);
  } catch (const detail::json::parse_error& e) {
    throw std::runtime_error("scene file '" + origin + "': " + e.what());
  }
  Scene scene;
  try {
    scene.name = j.value("name", origin);
    std::set<std::string> labels;
    for (const auto& obs : j.value("obstacles", detail::json::array())) {
      Obstacle o;
      o.shape = detail::parse_primitive(obs, "obstacles");
      if (obs.contains("pose")) o.pose = detail::parse_pose(obs["pose"], "obstacles.pose");
      o.label = obs.at("label").get<std::string>();
      if (!labels.insert(o.label).second) {
        throw std::runtime_error("duplicate obstacle label '" + o.label + "'");
      }
      scene.obstacles.push_back(std::move(o));
    }
    if (j.contains("table")) {
      const auto& t = j["table"];
      scene.table.normal = detail::parse_vec3(t.at("normal"), "table.normal").normalized();
      scene.table.offset = t.value("offset", 0.0);
    }
    if (j.contains("goal_region")) {
      const auto& g = j["goal_region"];
      scene.goal_region.center = detail::parse_vec3(g.at("center"), "goal_region.center");
      scene.goal_region.half_extents =
          detail::parse_vec3(g.at("half_extents"), "goal_region.half_extents");
    }
    for (const auto& label : j.value("non_colliding_labels", detail::json::array())) {
      scene.non_colliding_labels.insert(label.get<std::string>());
    }
  } catch (const detail::json::exception& e) {
    throw std::runtime_error("scene file '" + origin + "': " + e.what());
  }
  const double goal_height =
      scene.table.normal.dot(scene.goal_region.center) - scene.table.offset;
  if (goal_height < 0.0) {
    throw std::runtime_error("scene file '" + origin + "': goal region center lies below the table surface");
  }
  return scene;
}

Scene load_scene(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("scene file '" + path + "': cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  return load_scene_json(ss.str(), path);
}

}  // namespace safecor
