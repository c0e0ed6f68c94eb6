#include "airhockey/match.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace airhockey {

std::string_view to_string(EventKind kind) {
  switch (kind) {
    case EventKind::goal: return "goal";
    case EventKind::fault: return "fault";
    case EventKind::stuck_reset: return "stuck_reset";
    case EventKind::episode_end: return "episode_end";
    case EventKind::match_end: return "match_end";
  }
  return "unknown";
}

bool is_terminal(const MatchEvent& event) {
  return event.kind == EventKind::goal || event.kind == EventKind::fault ||
         event.kind == EventKind::stuck_reset;
}

int RuleConfig::fault_steps() const { return static_cast<int>(std::lround(fault_seconds * control_hz)); }
int RuleConfig::stuck_steps() const { return static_cast<int>(std::lround(stuck_seconds * control_hz)); }

void RuleConfig::validate() const {
  if (!(control_hz > 0) || substeps < 1) throw std::invalid_argument("rules: control_hz and substeps must be positive");
  if (fault_steps() < 1 || stuck_steps() < 1) throw std::invalid_argument("rules: fault and stuck durations must cover a step");
  if (match_steps < 1) throw std::invalid_argument("rules: match_steps must be positive");
  if (!(stuck_speed >= 0 && faceoff_jitter >= 0)) throw std::invalid_argument("rules: thresholds must be non-negative");
}

double fault_timer_seconds(const WorldState& world, Side side, const RuleConfig& rules) {
  return world.possession_steps[index(side)] * rules.control_dt();
}

void faceoff(WorldState& world, Side side, const Table& table, const RuleConfig& rules) {
  std::uniform_real_distribution<double> jitter(-rules.faceoff_jitter, rules.faceoff_jitter);
  std::uniform_real_distribution<double> angle(-M_PI, M_PI);
  std::uniform_real_distribution<double> spin(-1.0, 1.0);
  Vec2d spot(-table.length / 4, 0.0);
  spot.x() += jitter(world.rng);
  spot.y() += jitter(world.rng);
  world.puck.position = to_side_frame(side, spot);
  world.puck.velocity.setZero();
  // orientation is drawn in the receiving side's frame
  world.puck.angle = wrap_angle(angle(world.rng) + (side == Side::B ? M_PI : 0.0));
  world.puck.angular_velocity = spin(world.rng);
  world.possession_steps = {0, 0};
  world.stuck_steps = 0;
}

namespace {

bool out_of_reach(const WorldState& world, const Table& table, const std::array<Region, 2>& workspaces) {
  const double contact = table.puck_radius + table.mallet_radius;
  for (Side s : {Side::A, Side::B}) {
    if (workspaces[index(s)].distance(to_side_frame(s, world.puck.position)) <= contact) return false;
  }
  return true;
}

}  // namespace

std::vector<MatchEvent> apply_rules(WorldState& world, const Table& table,
                                    const std::array<Region, 2>& workspaces, const RuleConfig& rules) {
  std::vector<MatchEvent> events;
  if (world.finished) return events;
  ++world.step_index;
  const auto step = world.step_index;

  auto terminal = [&](EventKind kind, Side side, Side faceoff_side) {
    events.push_back({kind, side, step});
    faceoff(world, faceoff_side, table, rules);
    events.push_back({EventKind::episode_end, std::nullopt, step});
  };

  if (auto conceded = detect_goal(world.puck, table)) {
    terminal(EventKind::goal, other(*conceded), *conceded);
  } else {
    const Side holder = world.puck_side();
    ++world.possession_steps[index(holder)];
    world.possession_steps[index(other(holder))] = 0;

    if (world.possession_steps[index(holder)] >= rules.fault_steps()) {
      terminal(EventKind::fault, holder, holder);
    } else {
      const bool slow = world.puck.velocity.norm() < rules.stuck_speed;
      world.stuck_steps = (slow && out_of_reach(world, table, workspaces)) ? world.stuck_steps + 1 : 0;
      if (world.stuck_steps >= rules.stuck_steps()) {
        const Side target = std::bernoulli_distribution(0.5)(world.rng) ? Side::A : Side::B;
        terminal(EventKind::stuck_reset, target, target);
      }
    }
  }

  if (step >= rules.match_steps) {
    events.push_back({EventKind::match_end, std::nullopt, step});
    world.finished = true;
  }
  return events;
}

RulesUpdate update_rules(WorldState world, const Table& table, const std::array<Region, 2>& workspaces,
                         const RuleConfig& rules) {
  auto events = apply_rules(world, table, workspaces, rules);
  return {std::move(world), std::move(events)};
}

int MatchResult::points(Side side) const {
  return goals[index(side)] - faults[index(side)] / 3;
}

MatchResult score_match(const std::vector<MatchEvent>& log) {
  if (log.empty() || log.back().kind != EventKind::match_end)
    throw std::invalid_argument("event log does not end with match_end");
  MatchResult result;
  std::int64_t last = 0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    const auto& e = log[i];
    if (e.step_index < last) throw std::invalid_argument("event log step indices are not monotone");
    last = e.step_index;
    if (e.kind == EventKind::match_end && i + 1 != log.size())
      throw std::invalid_argument("events after match_end");
    if ((e.kind == EventKind::goal || e.kind == EventKind::fault) && !e.side)
      throw std::invalid_argument("goal or fault event without a side");
    if (e.kind == EventKind::goal) ++result.goals[index(*e.side)];
    if (e.kind == EventKind::fault) ++result.faults[index(*e.side)];
  }
  result.event_log = log;
  return result;
}

std::string format_event(const MatchEvent& event) {
  std::string out = std::to_string(event.step_index);
  out += ' ';
  out += to_string(event.kind);
  out += ' ';
  out += event.side ? to_string(*event.side) : std::string_view("none");
  return out;
}

MatchEvent parse_event(std::string_view line) {
  std::istringstream in{std::string(line)};
  MatchEvent e;
  std::string kind, side;
  if (!(in >> e.step_index >> kind >> side)) throw std::invalid_argument("malformed event line: " + std::string(line));
  if (kind == "goal") e.kind = EventKind::goal;
  else if (kind == "fault") e.kind = EventKind::fault;
  else if (kind == "stuck_reset") e.kind = EventKind::stuck_reset;
  else if (kind == "episode_end") e.kind = EventKind::episode_end;
  else if (kind == "match_end") e.kind = EventKind::match_end;
  else throw std::invalid_argument("unknown event kind: " + kind);
  if (side == "A") e.side = Side::A;
  else if (side == "B") e.side = Side::B;
  else if (side != "none") throw std::invalid_argument("unknown side: " + side);
  return e;
}

}  // namespace airhockey
