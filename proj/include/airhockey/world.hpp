#pragma once

#include "airhockey/kinematics.hpp"
#include "airhockey/physics.hpp"

#include <array>
#include <cstdint>

namespace airhockey {

using Table = TableSpec<double>;
using Chain = KinematicChain<double>;
using Puck = PuckState<double>;
using Mallet = MalletState<double>;
using Joints = JointState<double>;
using JointVec = JointVector<double>;
using Region = Workspace<double>;

/// Complete simulator state of one match. Mallet states are in the table
/// frame; joint states are in each arm's own coordinates.
struct WorldState {
  Puck puck;
  std::array<Mallet, 2> mallets;
  std::array<Joints, 2> joints;
  std::int64_t step_index = 0;
  /// Consecutive control steps the puck has spent on each side.
  std::array<int, 2> possession_steps{0, 0};
  /// Consecutive control steps the puck has been slow and out of reach.
  int stuck_steps = 0;
  bool finished = false;
  std::uint64_t degenerate_contacts = 0;
  Rng rng;

  /// Side whose half currently holds the puck center.
  Side puck_side() const { return puck.position.x() < 0 ? Side::A : Side::B; }
};

/// Advances the puck by one physics substep against the current mallets.
void advance(WorldState& world, const Table& table, double dt);

/// Value-returning form of advance().
WorldState substep(WorldState world, const Table& table, double dt);

}  // namespace airhockey
