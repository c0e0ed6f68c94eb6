#pragma once

#include "airhockey/env.hpp"

#include <array>
#include <cmath>
#include <random>

namespace airhockey::support {

inline Isometry3<double> random_transform(Rng& rng, double reach) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Isometry3<double> t = Isometry3<double>::Identity();
  t.translation() = Vec3d(u(rng), u(rng), u(rng)) * reach;
  const Vec3d axis = Vec3d(u(rng), u(rng), u(rng)).normalized();
  t.linear() = Eigen::AngleAxisd(M_PI * u(rng), axis).toRotationMatrix();
  return t;
}

/// Random revolute chain with 2 to 8 joints and arbitrary link frames.
inline Chain random_chain(Rng& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> count(2, 8);
  Chain c;
  c.base = random_transform(rng, 0.5);
  const int n = count(rng);
  for (int i = 0; i < n; ++i) {
    RevoluteJoint<double> j;
    j.axis = Vec3d(u(rng), u(rng), u(rng)).normalized();
    j.origin = random_transform(rng, 0.3);
    j.pos_min = -1.5 - std::abs(u(rng));
    j.pos_max = 1.5 + std::abs(u(rng));
    j.vel_limit = 0.5 + 2.0 * std::abs(u(rng));
    c.joints.push_back(j);
  }
  c.mallet_offset = random_transform(rng, 0.2);
  return c;
}

inline JointVec random_configuration(const Chain& c, Rng& rng) {
  JointVec q(c.joint_count());
  for (Eigen::Index i = 0; i < q.size(); ++i) {
    std::uniform_real_distribution<double> u(c.joints[i].pos_min, c.joints[i].pos_max);
    q[i] = u(rng);
  }
  return q;
}

}  // namespace airhockey::support
