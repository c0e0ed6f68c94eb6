#pragma once

// Planar rigid-body model of the puck and the two kinematically driven
// mallets. The table frame has its origin at the table center, x along the
// length (side A at negative x) and y across the width.

#include "airhockey/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>

namespace airhockey {

template <typename Scalar>
struct TableSpec {
  Scalar length = Scalar(1.948);
  Scalar width = Scalar(1.038);
  Scalar goal_width = Scalar(0.25);
  Scalar puck_radius = Scalar(0.03165);
  Scalar mallet_radius = Scalar(0.048);
  Scalar restitution_wall = Scalar(0.9);
  Scalar restitution_mallet = Scalar(0.8);
  /// Linear velocity decay rate (1/s).
  Scalar damping = Scalar(0.1);
  /// Angular velocity decay rate (1/s).
  Scalar spin_friction = Scalar(0);
  /// Height of the mallet center when it rests on the playing surface.
  Scalar plane_height = Scalar(0.1);

  Scalar half_length() const { return length / 2; }
  Scalar half_width() const { return width / 2; }

  void validate() const {
    if (!(length > 0 && width > 0)) throw std::invalid_argument("table: length and width must be positive");
    if (!(goal_width >= 0 && goal_width < width)) throw std::invalid_argument("table: goal_width must be in [0, width)");
    if (!(puck_radius > 0 && mallet_radius > 0)) throw std::invalid_argument("table: radii must be positive");
    if (!(restitution_wall >= 0 && restitution_wall <= 1 && restitution_mallet >= 0 && restitution_mallet <= 1))
      throw std::invalid_argument("table: restitutions must lie in [0, 1]");
    if (!(damping >= 0 && spin_friction >= 0)) throw std::invalid_argument("table: damping must be non-negative");
  }
};

template <typename Scalar>
struct PuckState {
  Vec2<Scalar> position = Vec2<Scalar>::Zero();
  Vec2<Scalar> velocity = Vec2<Scalar>::Zero();
  Scalar angle = 0;
  Scalar angular_velocity = 0;

  Scalar kinetic_energy() const { return velocity.squaredNorm() / 2; }
};

template <typename Scalar>
struct MalletState {
  Vec2<Scalar> position = Vec2<Scalar>::Zero();
  Vec2<Scalar> velocity = Vec2<Scalar>::Zero();
};

/// Maps a table-frame vector into the frame of `side`, where the own goal is
/// always at negative x. The map is a half-turn, so it is its own inverse.
template <typename Scalar>
Vec2<Scalar> to_side_frame(Side side, const Vec2<Scalar>& v) {
  return side == Side::A ? v : Vec2<Scalar>(-v);
}

template <typename Scalar>
Scalar wrap_angle(Scalar a) {
  a = std::remainder(a, Scalar(2 * M_PI));
  return a;
}

/// Reachable mallet region for one side, in that side's frame: the own table
/// half inset by the mallet radius, intersected with a disk around the arm base.
template <typename Scalar>
struct Workspace {
  Vec2<Scalar> lo = Vec2<Scalar>::Zero();
  Vec2<Scalar> hi = Vec2<Scalar>::Zero();
  Vec2<Scalar> reach_center = Vec2<Scalar>::Zero();
  Scalar reach_radius = std::numeric_limits<Scalar>::infinity();

  Vec2<Scalar> center() const { return (lo + hi) / 2; }
  Vec2<Scalar> half_extent() const { return (hi - lo) / 2; }

  bool contains(const Vec2<Scalar>& p, Scalar tol = Scalar(1e-9)) const {
    return (p.array() >= lo.array() - tol).all() && (p.array() <= hi.array() + tol).all() &&
           (p - reach_center).norm() <= reach_radius + tol;
  }

  Vec2<Scalar> project(Vec2<Scalar> p) const {
    for (int pass = 0; pass < 2; ++pass) {
      p = p.cwiseMax(lo).cwiseMin(hi);
      const Vec2<Scalar> rel = p - reach_center;
      const Scalar r = rel.norm();
      if (r > reach_radius) p = reach_center + rel * (reach_radius / r);
    }
    return p;
  }

  /// Lower bound on the distance from p to the region (exact when the nearest
  /// point lies on only one of the two boundaries).
  Scalar distance(const Vec2<Scalar>& p) const {
    const Vec2<Scalar> outside = (lo - p).cwiseMax(p - hi).cwiseMax(Vec2<Scalar>::Zero());
    const Scalar to_disk = std::max(Scalar(0), (p - reach_center).norm() - reach_radius);
    return std::max(outside.norm(), to_disk);
  }
};

template <typename Scalar>
Workspace<Scalar> make_workspace(const TableSpec<Scalar>& table, const Vec2<Scalar>& reach_center,
                                 Scalar reach_radius) {
  Workspace<Scalar> ws;
  ws.lo = {-table.half_length() + table.mallet_radius, -table.half_width() + table.mallet_radius};
  ws.hi = {-table.mallet_radius, table.half_width() - table.mallet_radius};
  ws.reach_center = reach_center;
  ws.reach_radius = reach_radius;
  return ws;
}

/// Contact response between a kinematic (infinite-mass) mallet and the puck.
/// The relative normal velocity is reflected and scaled by restitution_mallet
/// when the bodies approach; the puck is moved out of penetration along the
/// contact normal. Coincident centers push the puck away from the mallet's own
/// goal.
template <typename Scalar>
PuckState<Scalar> collide_mallet_puck(PuckState<Scalar> puck, const MalletState<Scalar>& mallet,
                                      const TableSpec<Scalar>& table) {
  const Scalar contact = table.puck_radius + table.mallet_radius;
  const Vec2<Scalar> offset = puck.position - mallet.position;
  const Scalar dist = offset.norm();
  Vec2<Scalar> normal;
  if (dist <= Scalar(1e-12)) {
    normal = Vec2<Scalar>(mallet.position.x() <= 0 ? Scalar(1) : Scalar(-1), Scalar(0));
  } else {
    normal = offset / dist;
  }
  if (dist < contact) puck.position = mallet.position + normal * contact;

  const Vec2<Scalar> rel = puck.velocity - mallet.velocity;
  const Scalar approach = rel.dot(normal);
  if (approach < 0) {
    puck.velocity = mallet.velocity + rel - (1 + table.restitution_mallet) * approach * normal;
  }
  return puck;
}

template <typename Scalar>
bool in_contact(const PuckState<Scalar>& puck, const MalletState<Scalar>& mallet,
                const TableSpec<Scalar>& table) {
  return (puck.position - mallet.position).norm() < table.puck_radius + table.mallet_radius;
}

namespace detail {

// Reflect one coordinate off the bound `limit` approached from below
// (sign = +1) or from above (sign = -1).
template <typename Scalar>
void reflect_axis(Scalar& pos, Scalar& vel, Scalar limit, Scalar restitution) {
  if (limit >= 0 ? pos > limit : pos < limit) {
    const Scalar overshoot = pos - limit;
    pos = limit - restitution * overshoot;
    if (limit >= 0 ? vel > 0 : vel < 0) vel = -restitution * vel;
  }
}

}  // namespace detail

/// One semi-implicit Euler step of the puck against the walls and mallets.
/// Mallet states are taken as given for the whole step.
template <typename Scalar>
PuckState<Scalar> substep(PuckState<Scalar> puck, std::span<const MalletState<Scalar>> mallets,
                          const TableSpec<Scalar>& table, Scalar dt) {
  const Scalar decay = std::max(Scalar(0), Scalar(1) - table.damping * dt);
  puck.velocity *= decay;
  puck.position += puck.velocity * dt;
  puck.angular_velocity *= std::max(Scalar(0), Scalar(1) - table.spin_friction * dt);
  puck.angle = wrap_angle(puck.angle + puck.angular_velocity * dt);

  for (const auto& mallet : mallets) {
    if (in_contact(puck, mallet, table)) puck = collide_mallet_puck(puck, mallet, table);
  }

  const Scalar ylim = table.half_width() - table.puck_radius;
  detail::reflect_axis(puck.position.y(), puck.velocity.y(), ylim, table.restitution_wall);
  detail::reflect_axis(puck.position.y(), puck.velocity.y(), -ylim, table.restitution_wall);

  if (std::abs(puck.position.y()) > table.goal_width / 2) {
    const Scalar xlim = table.half_length() - table.puck_radius;
    detail::reflect_axis(puck.position.x(), puck.velocity.x(), xlim, table.restitution_wall);
    detail::reflect_axis(puck.position.x(), puck.velocity.x(), -xlim, table.restitution_wall);
  }
  return puck;
}

/// Side that conceded, if the puck center is past a goal line within the
/// goal aperture.
template <typename Scalar>
std::optional<Side> detect_goal(const PuckState<Scalar>& puck, const TableSpec<Scalar>& table) {
  if (std::abs(puck.position.y()) > table.goal_width / 2) return std::nullopt;
  if (puck.position.x() <= -table.half_length()) return Side::A;
  if (puck.position.x() >= table.half_length()) return Side::B;
  return std::nullopt;
}

}  // namespace airhockey
