#pragma once

// Serial-chain kinematics for the arms driving each mallet.
//
// All routines are templated on the scalar type and are pure functions of
// their arguments. Only revolute joints are modelled. Frames follow the usual
// convention: the pose of joint i is
//
//   T_i = base * origin_0 * R_0(q_0) * ... * origin_i
//
// and joint i rotates about `axis` expressed in T_i. The mallet center sits at
// mallet_offset applied after the last joint rotation.

#include "airhockey/common.hpp"

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace airhockey {

template <typename Scalar>
using JointVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Isometry3 = Eigen::Transform<Scalar, 3, Eigen::Isometry>;

template <typename Scalar>
struct RevoluteJoint {
  Vec3<Scalar> axis = Vec3<Scalar>::UnitZ();
  Isometry3<Scalar> origin = Isometry3<Scalar>::Identity();
  Scalar pos_min = Scalar(-M_PI);
  Scalar pos_max = Scalar(M_PI);
  Scalar vel_limit = Scalar(1);
};

template <typename Scalar>
struct KinematicChain {
  Isometry3<Scalar> base = Isometry3<Scalar>::Identity();
  std::vector<RevoluteJoint<Scalar>> joints;
  Isometry3<Scalar> mallet_offset = Isometry3<Scalar>::Identity();

  Eigen::Index joint_count() const { return static_cast<Eigen::Index>(joints.size()); }

  JointVector<Scalar> lower_limits() const {
    JointVector<Scalar> v(joint_count());
    for (Eigen::Index i = 0; i < joint_count(); ++i) v[i] = joints[i].pos_min;
    return v;
  }
  JointVector<Scalar> upper_limits() const {
    JointVector<Scalar> v(joint_count());
    for (Eigen::Index i = 0; i < joint_count(); ++i) v[i] = joints[i].pos_max;
    return v;
  }
  JointVector<Scalar> velocity_limits() const {
    JointVector<Scalar> v(joint_count());
    for (Eigen::Index i = 0; i < joint_count(); ++i) v[i] = joints[i].vel_limit;
    return v;
  }

  /// Throws std::invalid_argument when limits or axes are malformed.
  void validate() const {
    if (joints.empty()) throw std::invalid_argument("kinematic chain has no joints");
    for (std::size_t i = 0; i < joints.size(); ++i) {
      const auto& j = joints[i];
      const std::string tag = "joint " + std::to_string(i) + ": ";
      if (!(j.pos_min < j.pos_max)) throw std::invalid_argument(tag + "pos_limits must satisfy min < max");
      if (!(j.vel_limit > Scalar(0))) throw std::invalid_argument(tag + "vel_limit must be positive");
      if (!(std::abs(j.axis.norm() - Scalar(1)) < Scalar(1e-6)))
        throw std::invalid_argument(tag + "axis must be a unit vector");
    }
  }
};

template <typename Scalar>
struct JointState {
  JointVector<Scalar> positions;
  JointVector<Scalar> velocities;
};

template <typename Scalar>
struct CartesianDisplacement {
  Scalar dx = 0;
  Scalar dy = 0;
  Scalar dz = 0;

  Vec3<Scalar> vector() const { return {dx, dy, dz}; }
  bool finite() const { return std::isfinite(dx) && std::isfinite(dy) && std::isfinite(dz); }
};

/// Target joint positions and velocities for one control cycle.
template <typename Scalar>
struct JointCommand {
  JointVector<Scalar> positions;
  JointVector<Scalar> velocities;
};

namespace detail {

template <typename Scalar>
void check_dimension(const KinematicChain<Scalar>& chain, Eigen::Index n) {
  if (n != chain.joint_count())
    throw std::invalid_argument("joint vector has " + std::to_string(n) + " entries, chain has " +
                                std::to_string(chain.joint_count()) + " joints");
}

}  // namespace detail

/// Mallet center in the base frame of the table side that owns the chain.
template <typename Scalar>
Vec3<Scalar> forward_kinematics(const KinematicChain<Scalar>& chain,
                                const JointVector<Scalar>& positions) {
  detail::check_dimension(chain, positions.size());
  Eigen::Matrix<Scalar, 3, 3> rot = chain.base.linear();
  Vec3<Scalar> pos = chain.base.translation();
  for (Eigen::Index i = 0; i < chain.joint_count(); ++i) {
    const auto& joint = chain.joints[i];
    pos += rot * joint.origin.translation();
    rot = rot * joint.origin.linear() *
          Eigen::AngleAxis<Scalar>(positions[i], joint.axis).toRotationMatrix();
  }
  return pos + rot * chain.mallet_offset.translation();
}

template <typename Scalar>
Vec3<Scalar> forward_kinematics(const KinematicChain<Scalar>& chain,
                                const JointState<Scalar>& joints) {
  return forward_kinematics(chain, joints.positions);
}

/// Positional Jacobian of the mallet center (3 x joint_count, m/rad).
template <typename Scalar>
Eigen::Matrix<Scalar, 3, Eigen::Dynamic> jacobian(const KinematicChain<Scalar>& chain,
                                                  const JointVector<Scalar>& positions) {
  detail::check_dimension(chain, positions.size());
  const Eigen::Index n = chain.joint_count();
  Eigen::Matrix<Scalar, 3, Eigen::Dynamic> joint_pos(3, n);
  Eigen::Matrix<Scalar, 3, Eigen::Dynamic> joint_axis(3, n);

  Eigen::Matrix<Scalar, 3, 3> rot = chain.base.linear();
  Vec3<Scalar> pos = chain.base.translation();
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& joint = chain.joints[i];
    pos += rot * joint.origin.translation();
    rot = rot * joint.origin.linear();
    joint_pos.col(i) = pos;
    joint_axis.col(i) = rot * joint.axis;
    rot = rot * Eigen::AngleAxis<Scalar>(positions[i], joint.axis).toRotationMatrix();
  }
  const Vec3<Scalar> tip = pos + rot * chain.mallet_offset.translation();

  Eigen::Matrix<Scalar, 3, Eigen::Dynamic> jac(3, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec3<Scalar> axis = joint_axis.col(i);
    const Vec3<Scalar> arm = tip - joint_pos.col(i);
    jac.col(i) = axis.cross(arm);
  }
  return jac;
}

template <typename Scalar>
Eigen::Matrix<Scalar, 3, Eigen::Dynamic> jacobian(const KinematicChain<Scalar>& chain,
                                                  const JointState<Scalar>& joints) {
  return jacobian(chain, joints.positions);
}

/// Default singular-value floor below which the inverse is damped.
inline constexpr double kSingularFloor = 1e-4;

/// Moore-Penrose pseudo-inverse via SVD. Singular values at or above `floor`
/// are inverted exactly; smaller ones use the damped least-squares factor
/// sigma / (sigma^2 + floor^2), so the operator norm never exceeds 1/floor.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> pseudo_inverse(
    const Eigen::MatrixBase<Derived>& mat,
    typename Derived::Scalar floor = typename Derived::Scalar(kSingularFloor)) {
  using Scalar = typename Derived::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const Matrix m = mat;
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sigma = svd.singularValues();
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> inv(sigma.size());
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    const Scalar s = sigma[i];
    inv[i] = s >= floor ? Scalar(1) / s : s / (s * s + floor * floor);
  }
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

enum class ClipMode {
  /// Each joint displacement is clipped to its own velocity bound.
  per_joint,
  /// The whole displacement vector is scaled so the tightest joint sits on its
  /// bound, preserving direction.
  preserve_direction,
};

template <typename Scalar>
struct ResolveOptions {
  /// Element-wise scaling of (dx, dy, dz) before the pseudo-inverse product.
  Vec3<Scalar> weights{Scalar(0.25), Scalar(0.25), Scalar(0.5)};
  ClipMode clip = ClipMode::per_joint;
  Scalar singular_floor = Scalar(kSingularFloor);
};

/// Maps a Cartesian mallet displacement to a joint command for one control
/// cycle: dq = pinv(J) * (w .* d), clipped to vel_limit * cycle_s per joint
/// and then to the position limits. Velocities are dq / cycle_s.
template <typename Scalar>
JointCommand<Scalar> resolve_action(const KinematicChain<Scalar>& chain,
                                    const JointVector<Scalar>& positions,
                                    const CartesianDisplacement<Scalar>& displacement,
                                    Scalar cycle_s,
                                    const ResolveOptions<Scalar>& options = {}) {
  detail::check_dimension(chain, positions.size());
  if (!displacement.finite()) throw std::invalid_argument("non-finite Cartesian displacement");
  if (!(cycle_s > Scalar(0))) throw std::invalid_argument("control cycle must be positive");

  const Vec3<Scalar> weighted = options.weights.cwiseProduct(displacement.vector());
  JointVector<Scalar> delta =
      pseudo_inverse(jacobian(chain, positions), options.singular_floor) * weighted;

  const JointVector<Scalar> bound = chain.velocity_limits() * cycle_s;
  if (options.clip == ClipMode::per_joint) {
    delta = delta.cwiseMax(-bound).cwiseMin(bound);
  } else {
    Scalar scale(1);
    for (Eigen::Index i = 0; i < delta.size(); ++i) {
      const Scalar mag = std::abs(delta[i]);
      if (mag > bound[i]) scale = std::min(scale, bound[i] / mag);
    }
    delta *= scale;
  }

  JointCommand<Scalar> cmd;
  cmd.positions = (positions + delta).cwiseMax(chain.lower_limits()).cwiseMin(chain.upper_limits());
  cmd.velocities = (cmd.positions - positions) / cycle_s;
  return cmd;
}

template <typename Scalar>
JointCommand<Scalar> resolve_action(const KinematicChain<Scalar>& chain,
                                    const JointState<Scalar>& joints,
                                    const CartesianDisplacement<Scalar>& displacement,
                                    Scalar cycle_s,
                                    const ResolveOptions<Scalar>& options = {}) {
  return resolve_action(chain, joints.positions, displacement, cycle_s, options);
}

/// Iterative position-only IK used to place arms at their home pose. Returns
/// the best configuration found; callers check the residual themselves.
template <typename Scalar>
JointVector<Scalar> solve_position_ik(const KinematicChain<Scalar>& chain,
                                      JointVector<Scalar> positions,
                                      const Vec3<Scalar>& target, int max_iterations = 500,
                                      Scalar tolerance = Scalar(1e-9), Scalar max_step = Scalar(0.1)) {
  detail::check_dimension(chain, positions.size());
  const auto lo = chain.lower_limits();
  const auto hi = chain.upper_limits();
  for (int it = 0; it < max_iterations; ++it) {
    const Vec3<Scalar> err = target - forward_kinematics(chain, positions);
    if (err.norm() < tolerance) break;
    JointVector<Scalar> dq = pseudo_inverse(jacobian(chain, positions), Scalar(1e-3)) * err;
    const Scalar peak = dq.cwiseAbs().maxCoeff();
    if (peak > max_step) dq *= max_step / peak;
    positions = (positions + dq).cwiseMax(lo).cwiseMin(hi);
  }
  return positions;
}

}  // namespace airhockey
