#include "airhockey/world.hpp"

namespace airhockey {

void advance(WorldState& world, const Table& table, double dt) {
  for (const auto& mallet : world.mallets) {
    if ((world.puck.position - mallet.position).norm() <= 1e-12) ++world.degenerate_contacts;
  }
  world.puck = airhockey::substep(world.puck, std::span<const Mallet>(world.mallets), table, dt);
}

WorldState substep(WorldState world, const Table& table, double dt) {
  advance(world, table, dt);
  return world;
}

}  // namespace airhockey
