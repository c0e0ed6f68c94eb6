#pragma once

// Agent-facing view of the game: normalized stacked observations, action
// decoding through the arm kinematics, sparse rewards, and injected noise.

#include "airhockey/match.hpp"

#include <array>
#include <optional>
#include <string>
#include <string_view>

namespace airhockey {

inline constexpr int kObservationDim = 40;
inline constexpr int kObservedJoints = 7;
inline constexpr int kMalletHistory = 2;
inline constexpr int kPuckHistory = 10;
inline constexpr int kOrientationHistory = 2;

using Observation = Eigen::Matrix<double, kObservationDim, 1>;
using Action = Vec2d;

/// Per-side observation history. Each stacked component keeps its newest
/// entry in column 0. flatten() emits the components in the order joints,
/// own mallet, opponent mallet, puck position, puck orientation, fault timer.
struct ObservationStack {
  Eigen::Matrix<double, kObservedJoints, 1> joints = Eigen::Matrix<double, kObservedJoints, 1>::Zero();
  Eigen::Matrix<double, 2, kMalletHistory> own_mallet = Eigen::Matrix<double, 2, kMalletHistory>::Zero();
  Eigen::Matrix<double, 2, kMalletHistory> opp_mallet = Eigen::Matrix<double, 2, kMalletHistory>::Zero();
  Eigen::Matrix<double, 2, kPuckHistory> puck_position = Eigen::Matrix<double, 2, kPuckHistory>::Zero();
  Eigen::Matrix<double, 2, kOrientationHistory> puck_orientation =
      Eigen::Matrix<double, 2, kOrientationHistory>::Zero();
  double fault_timer = 0.0;

  /// False until the first observation of an episode has been written.
  bool primed = false;
  /// Remaining steps of an ongoing simulated tracking loss.
  int tracking_loss_remaining = 0;

  Observation flatten() const;
  /// Inverse of flatten() for the observed fields; the stack is marked primed.
  static ObservationStack from_flat(const Observation& flat);
};

struct NoiseConfig {
  double obs_noise_sigma = 0.0;
  double action_noise_sigma = 0.0;
  double disturbance_impulse_sigma = 0.0;
  /// Probability per control step of a disturbance during play.
  double disturbance_rate = 0.0;
  double tracking_loss_prob = 0.0;
  double tracking_loss_mean_duration = 10.0;

  /// Defaults applied to the trained agent.
  static NoiseConfig training_defaults();
  bool any() const;
  void validate() const;
};

enum class Strategy : std::uint8_t { balanced, aggressive, defensive };

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view name);
inline constexpr std::array<Strategy, 3> kStrategies{Strategy::balanced, Strategy::aggressive,
                                                     Strategy::defensive};

struct StrategyRewardConfig {
  Rational score_goal{2, 3};
  Rational receive_goal{-1};
  Rational cause_fault{-1, 3};

  static StrategyRewardConfig of(Strategy s);
};

struct ArmConfig {
  Chain chain;
  /// Radius of the reachable disk around the arm base, in the table plane.
  double reach_radius = 1.2;
  /// Mallet rest position in the side frame.
  Vec2d home{-0.78, 0.0};
  /// Starting guess for the home-pose IK; zeros when empty.
  JointVec ik_seed;

  Vec2d base_xy() const { return chain.base.translation().head<2>(); }
};

/// Approximate 7-DoF chain of a KUKA iiwa14 carrying the mallet end effector.
/// Joint limits follow the manufacturer's datasheet; link geometry is a
/// simplified straight-stacked model, not a calibrated one.
ArmConfig default_arm();

struct SimConfig {
  Table table;
  ArmConfig arm = default_arm();
  RuleConfig rules;
  ResolveOptions<double> resolve;
};

/// Builds the normalized observation of `side`, pushes it onto `stack`, and
/// returns the updated stack. Noise and tracking loss apply only when `noise`
/// is non-zero.
ObservationStack observe(const WorldState& world, Side side, const Chain& chain, const Table& table,
                         const RuleConfig& rules, ObservationStack stack, const NoiseConfig& noise, Rng& rng);

struct ActOutcome {
  JointCommand<double> command;
  /// Mallet target in the side frame.
  Vec2d target = Vec2d::Zero();
  bool invalid_action = false;
};

/// Decodes a normalized mallet target into a joint command for one cycle.
ActOutcome act(const WorldState& world, Side side, const Action& action, const Chain& chain,
               const Table& table, const Region& workspace, const NoiseConfig& noise, Rng& rng,
               double cycle_s = 0.02, const ResolveOptions<double>& resolve = {});

/// Sparse reward of `event` for `side`. Non-terminal events yield zero, as do
/// opponent faults and stuck resets.
Rational reward(const MatchEvent& event, Side side, const StrategyRewardConfig& strategy);

/// Adds a zero-mean Gaussian impulse to the puck velocity.
WorldState apply_disturbance(WorldState world, const NoiseConfig& noise, Rng& rng);

struct StepOutcome {
  std::vector<MatchEvent> events;
  bool episode_over = false;
  bool match_over = false;
  std::array<bool, 2> invalid_action{false, false};
};

/// Two-arm game driver: decodes both actions, interpolates the joint commands
/// across the physics substeps, applies the rules, and maintains both sides'
/// observation stacks.
class Simulator {
 public:
  explicit Simulator(SimConfig config);

  void reset(std::uint64_t seed, const std::array<NoiseConfig, 2>& noise = {},
             std::optional<Side> first_faceoff = std::nullopt);

  StepOutcome step(const std::array<Action, 2>& actions);

  const WorldState& world() const { return world_; }
  WorldState& mutable_world() { return world_; }
  const ObservationStack& observation(Side side) const { return stacks_[index(side)]; }
  const SimConfig& config() const { return config_; }
  const Region& workspace() const { return workspace_; }
  const std::array<Region, 2>& workspaces() const { return workspaces_; }
  const JointVec& home_joints() const { return home_joints_; }

  /// Re-observes both sides after external edits to the world state.
  void refresh_observations(bool restart_stacks);

 private:
  void place_arms_home();
  void start_episode();

  SimConfig config_;
  Region workspace_;
  std::array<Region, 2> workspaces_;
  JointVec home_joints_;
  WorldState world_;
  std::array<NoiseConfig, 2> noise_{};
  NoiseConfig disturbance_{};
  std::array<Rng, 2> noise_rng_;
  Rng disturbance_rng_;
  std::array<ObservationStack, 2> stacks_{};
};

}  // namespace airhockey
