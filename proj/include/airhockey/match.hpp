#pragma once

// Match rules: possession clocks, faults, stuck-puck resets, goals, scoring
// and the fixed match length.

#include "airhockey/world.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace airhockey {

enum class EventKind : std::uint8_t { goal, fault, stuck_reset, episode_end, match_end };

std::string_view to_string(EventKind kind);

/// One rule event. `side` is the scorer for goals, the offender for faults and
/// the side receiving the puck for stuck resets; it is empty otherwise.
struct MatchEvent {
  EventKind kind = EventKind::episode_end;
  std::optional<Side> side;
  std::int64_t step_index = 0;

  friend bool operator==(const MatchEvent&, const MatchEvent&) = default;
};

bool is_terminal(const MatchEvent& event);

struct RuleConfig {
  double control_hz = 50.0;
  int substeps = 10;
  double fault_seconds = 15.0;
  std::int64_t match_steps = 45000;
  double stuck_speed = 0.01;
  double stuck_seconds = 3.0;
  /// Half-width of the uniform positional jitter applied at faceoffs (m).
  double faceoff_jitter = 0.02;

  double control_dt() const { return 1.0 / control_hz; }
  double substep_dt() const { return control_dt() / substeps; }
  int fault_steps() const;
  int stuck_steps() const;
  void validate() const;
};

/// Possession time of `side` in seconds.
double fault_timer_seconds(const WorldState& world, Side side, const RuleConfig& rules);

/// Places the puck at rest on the faceoff point of `side` with seeded jitter
/// and random orientation, and clears the possession and stuck clocks.
void faceoff(WorldState& world, Side side, const Table& table, const RuleConfig& rules);

/// Applies the rules for one completed control step and advances step_index.
/// Returns nothing once the match has finished.
std::vector<MatchEvent> apply_rules(WorldState& world, const Table& table,
                                    const std::array<Region, 2>& workspaces, const RuleConfig& rules);

struct RulesUpdate {
  WorldState world;
  std::vector<MatchEvent> events;
};

RulesUpdate update_rules(WorldState world, const Table& table, const std::array<Region, 2>& workspaces,
                         const RuleConfig& rules);

struct MatchResult {
  std::array<int, 2> goals{0, 0};
  std::array<int, 2> faults{0, 0};
  std::vector<MatchEvent> event_log;

  /// goals - floor(faults / 3)
  int points(Side side) const;
  int differential(Side side) const { return points(side) - points(other(side)); }
};

/// Tallies a complete log; throws std::invalid_argument unless the log ends
/// with match_end and step indices are monotone.
MatchResult score_match(const std::vector<MatchEvent>& log);

/// `step kind side` with side one of A, B, none.
std::string format_event(const MatchEvent& event);
MatchEvent parse_event(std::string_view line);

}  // namespace airhockey
