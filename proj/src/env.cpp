#include "airhockey/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace airhockey {

Observation ObservationStack::flatten() const {
  Observation out;
  int k = 0;
  auto put = [&](const auto& block) {
    for (Eigen::Index i = 0; i < block.size(); ++i) out[k++] = block.data()[i];
  };
  put(joints);
  put(own_mallet);
  put(opp_mallet);
  put(puck_position);
  put(puck_orientation);
  out[k++] = fault_timer;
  return out;
}

ObservationStack ObservationStack::from_flat(const Observation& flat) {
  ObservationStack s;
  int k = 0;
  auto take = [&](auto& block) {
    for (Eigen::Index i = 0; i < block.size(); ++i) block.data()[i] = flat[k++];
  };
  take(s.joints);
  take(s.own_mallet);
  take(s.opp_mallet);
  take(s.puck_position);
  take(s.puck_orientation);
  s.fault_timer = flat[k];
  s.primed = true;
  return s;
}

NoiseConfig NoiseConfig::training_defaults() {
  NoiseConfig n;
  n.obs_noise_sigma = 0.005;
  n.action_noise_sigma = 0.01;
  n.disturbance_impulse_sigma = 0.05;
  n.disturbance_rate = 0.01;
  n.tracking_loss_prob = 0.01;
  n.tracking_loss_mean_duration = 10.0;
  return n;
}

bool NoiseConfig::any() const {
  return obs_noise_sigma > 0 || action_noise_sigma > 0 || disturbance_impulse_sigma > 0 || tracking_loss_prob > 0;
}

void NoiseConfig::validate() const {
  if (!(obs_noise_sigma >= 0 && action_noise_sigma >= 0 && disturbance_impulse_sigma >= 0))
    throw std::invalid_argument("noise: sigmas must be non-negative");
  if (!(disturbance_rate >= 0 && disturbance_rate <= 1 && tracking_loss_prob >= 0 && tracking_loss_prob <= 1))
    throw std::invalid_argument("noise: probabilities must lie in [0, 1]");
  if (!(tracking_loss_mean_duration >= 1)) throw std::invalid_argument("noise: tracking loss duration must be >= 1");
}

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::balanced: return "balanced";
    case Strategy::aggressive: return "aggressive";
    case Strategy::defensive: return "defensive";
  }
  return "balanced";
}

Strategy parse_strategy(std::string_view name) {
  for (Strategy s : kStrategies)
    if (to_string(s) == name) return s;
  throw std::invalid_argument("unknown strategy: " + std::string(name));
}

StrategyRewardConfig StrategyRewardConfig::of(Strategy s) {
  switch (s) {
    case Strategy::balanced: return {Rational(2, 3), Rational(-1), Rational(-1, 3)};
    case Strategy::aggressive: return {Rational(1), Rational(-1), Rational(-1, 3)};
    case Strategy::defensive: return {Rational(0), Rational(-1), Rational(-1, 3)};
  }
  return {};
}

ArmConfig default_arm() {
  ArmConfig arm;
  struct Spec {
    Vec3d axis;
    double z;
    double limit_deg;
    double vel_deg;
  };
  const Spec specs[] = {
      {Vec3d::UnitZ(), 0.1575, 170, 85},  {Vec3d::UnitY(), 0.2025, 120, 85},
      {Vec3d::UnitZ(), 0.2045, 170, 100}, {-Vec3d::UnitY(), 0.2155, 120, 75},
      {Vec3d::UnitZ(), 0.1845, 170, 130}, {Vec3d::UnitY(), 0.2155, 120, 135},
      {Vec3d::UnitZ(), 0.0810, 175, 135},
  };
  constexpr double deg = M_PI / 180.0;
  arm.chain.base = Isometry3<double>::Identity();
  arm.chain.base.translation() = Vec3d(-1.3, 0.0, 0.0);
  for (const auto& s : specs) {
    RevoluteJoint<double> j;
    j.axis = s.axis;
    j.origin = Isometry3<double>::Identity();
    j.origin.translation() = Vec3d(0, 0, s.z);
    j.pos_min = -s.limit_deg * deg;
    j.pos_max = s.limit_deg * deg;
    j.vel_limit = s.vel_deg * deg;
    arm.chain.joints.push_back(j);
  }
  arm.chain.mallet_offset = Isometry3<double>::Identity();
  arm.chain.mallet_offset.translation() = Vec3d(0, 0, 0.545);
  arm.reach_radius = 1.2;
  arm.home = Vec2d(-0.78, 0.0);
  arm.ik_seed = JointVec(7);
  arm.ik_seed << 0.0, 0.3, 0.0, -1.5, 0.0, 0.84, 0.0;
  return arm;
}

namespace {

double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

Vec2d normalize_position(const Vec2d& p, const Table& table) {
  return {p.x() / table.half_length(), p.y() / table.half_width()};
}

}  // namespace

ObservationStack observe(const WorldState& world, Side side, const Chain& chain, const Table& table,
                         const RuleConfig& rules, ObservationStack stack, const NoiseConfig& noise, Rng& rng) {
  const auto& q = world.joints[index(side)].positions;
  if (q.size() != kObservedJoints || chain.joint_count() != kObservedJoints)
    throw std::invalid_argument("observation expects a 7-joint arm");

  Eigen::Matrix<double, kObservedJoints, 1> joints;
  for (int i = 0; i < kObservedJoints; ++i) {
    const auto& j = chain.joints[i];
    joints[i] = 2.0 * (q[i] - j.pos_min) / (j.pos_max - j.pos_min) - 1.0;
  }
  Vec2d own = normalize_position(to_side_frame(side, world.mallets[index(side)].position), table);
  Vec2d opp = normalize_position(to_side_frame(side, world.mallets[index(other(side))].position), table);
  Vec2d puck = normalize_position(to_side_frame(side, world.puck.position), table);
  const double angle = side == Side::A ? world.puck.angle : world.puck.angle + M_PI;
  Vec2d orient(std::sin(angle), std::cos(angle));

  const Side holder = world.puck_side();
  const double elapsed = static_cast<double>(world.possession_steps[index(holder)]) / rules.fault_steps();
  double timer = holder == side ? -elapsed : elapsed;

  bool frozen = false;
  if (noise.tracking_loss_prob > 0 && stack.primed) {
    if (stack.tracking_loss_remaining > 0) {
      --stack.tracking_loss_remaining;
      frozen = true;
    } else if (std::bernoulli_distribution(noise.tracking_loss_prob)(rng)) {
      std::geometric_distribution<int> extra(1.0 / noise.tracking_loss_mean_duration);
      stack.tracking_loss_remaining = extra(rng);  // this step plus the extra ones
      frozen = true;
    }
  }

  if (noise.obs_noise_sigma > 0) {
    std::normal_distribution<double> n(0.0, noise.obs_noise_sigma);
    for (int i = 0; i < kObservedJoints; ++i) joints[i] += n(rng);
    own += Vec2d(n(rng), n(rng));
    opp += Vec2d(n(rng), n(rng));
    if (!frozen) {
      puck += Vec2d(n(rng), n(rng));
      orient += Vec2d(n(rng), n(rng));
    }
    timer += n(rng);
  }
  if (frozen) {
    puck = stack.puck_position.col(0);
    orient = stack.puck_orientation.col(0);
  }

  joints = joints.unaryExpr(&clamp_unit);
  own = own.unaryExpr(&clamp_unit);
  opp = opp.unaryExpr(&clamp_unit);
  puck = puck.unaryExpr(&clamp_unit);
  orient = orient.unaryExpr(&clamp_unit);
  timer = clamp_unit(timer);

  auto push = [&](auto& history, const Vec2d& value) {
    if (!stack.primed) {
      history.colwise() = value;
    } else {
      for (Eigen::Index c = history.cols() - 1; c > 0; --c) history.col(c) = history.col(c - 1);
      history.col(0) = value;
    }
  };
  stack.joints = joints;
  push(stack.own_mallet, own);
  push(stack.opp_mallet, opp);
  push(stack.puck_position, puck);
  push(stack.puck_orientation, orient);
  stack.fault_timer = timer;
  stack.primed = true;
  return stack;
}

ActOutcome act(const WorldState& world, Side side, const Action& action, const Chain& chain, const Table& table,
               const Region& workspace, const NoiseConfig& noise, Rng& rng, double cycle_s,
               const ResolveOptions<double>& resolve) {
  const JointVec& q = world.joints[index(side)].positions;
  const Vec3d current = forward_kinematics(chain, q);

  ActOutcome out;
  if (!action.allFinite()) {
    out.invalid_action = true;
    out.target = current.head<2>();
  } else {
    Vec2d a = action.unaryExpr(&clamp_unit);
    if (noise.action_noise_sigma > 0) {
      std::normal_distribution<double> n(0.0, noise.action_noise_sigma);
      a += Vec2d(n(rng), n(rng));
      a = a.unaryExpr(&clamp_unit);
    }
    out.target = workspace.project(workspace.center() + a.cwiseProduct(workspace.half_extent()));
  }
  const CartesianDisplacement<double> d{out.target.x() - current.x(), out.target.y() - current.y(),
                                        table.plane_height - current.z()};
  out.command = resolve_action(chain, q, d, cycle_s, resolve);
  return out;
}

Rational reward(const MatchEvent& event, Side side, const StrategyRewardConfig& strategy) {
  if (!event.side) return Rational(0);
  switch (event.kind) {
    case EventKind::goal: return *event.side == side ? strategy.score_goal : strategy.receive_goal;
    case EventKind::fault: return *event.side == side ? strategy.cause_fault : Rational(0);
    default: return Rational(0);
  }
}

WorldState apply_disturbance(WorldState world, const NoiseConfig& noise, Rng& rng) {
  if (noise.disturbance_impulse_sigma <= 0) return world;
  std::normal_distribution<double> n(0.0, noise.disturbance_impulse_sigma);
  const double dx = n(rng);
  const double dy = n(rng);
  world.puck.velocity += Vec2d(dx, dy);
  return world;
}

Simulator::Simulator(SimConfig config) : config_(std::move(config)) {
  config_.table.validate();
  config_.rules.validate();
  config_.arm.chain.validate();
  if (config_.arm.chain.joint_count() != kObservedJoints)
    throw std::invalid_argument("simulator requires a 7-joint arm");

  workspace_ = make_workspace(config_.table, config_.arm.base_xy(), config_.arm.reach_radius);
  workspaces_ = {workspace_, workspace_};

  JointVec seed = config_.arm.ik_seed.size() == config_.arm.chain.joint_count()
                      ? config_.arm.ik_seed
                      : JointVec::Zero(config_.arm.chain.joint_count());
  const Vec2d home = workspace_.project(config_.arm.home);
  const Vec3d target(home.x(), home.y(), config_.table.plane_height);
  home_joints_ = solve_position_ik(config_.arm.chain, seed, target, 2000);
  const double residual = (forward_kinematics(config_.arm.chain, home_joints_) - target).norm();
  if (residual > 1e-6)
    throw std::invalid_argument("arm cannot reach its home position (residual " + std::to_string(residual) + " m)");
}

void Simulator::place_arms_home() {
  for (Side s : {Side::A, Side::B}) {
    auto& j = world_.joints[index(s)];
    j.positions = home_joints_;
    j.velocities = JointVec::Zero(home_joints_.size());
    const Vec3d p = forward_kinematics(config_.arm.chain, home_joints_);
    world_.mallets[index(s)].position = to_side_frame(s, Vec2d(p.head<2>()));
    world_.mallets[index(s)].velocity.setZero();
  }
}

void Simulator::reset(std::uint64_t seed, const std::array<NoiseConfig, 2>& noise, std::optional<Side> first_faceoff) {
  for (const auto& n : noise) n.validate();
  noise_ = noise;
  disturbance_ = noise[0].disturbance_impulse_sigma >= noise[1].disturbance_impulse_sigma ? noise[0] : noise[1];

  world_ = WorldState{};
  world_.rng.seed(mix_seed(seed, 0));
  noise_rng_[0].seed(mix_seed(seed, 1));
  noise_rng_[1].seed(mix_seed(seed, 2));
  disturbance_rng_.seed(mix_seed(seed, 3));

  place_arms_home();
  const Side side = first_faceoff ? *first_faceoff
                                  : (std::bernoulli_distribution(0.5)(world_.rng) ? Side::A : Side::B);
  faceoff(world_, side, config_.table, config_.rules);
  start_episode();
}

void Simulator::start_episode() {
  world_ = apply_disturbance(std::move(world_), disturbance_, disturbance_rng_);
  refresh_observations(true);
}

void Simulator::refresh_observations(bool restart_stacks) {
  for (Side s : {Side::A, Side::B}) {
    auto& stack = stacks_[index(s)];
    if (restart_stacks) {
      stack.primed = false;
      stack.tracking_loss_remaining = 0;
    }
    stack = observe(world_, s, config_.arm.chain, config_.table, config_.rules, std::move(stack), noise_[index(s)],
                    noise_rng_[index(s)]);
  }
}

StepOutcome Simulator::step(const std::array<Action, 2>& actions) {
  StepOutcome out;
  if (world_.finished) {
    out.match_over = true;
    return out;
  }
  const auto& chain = config_.arm.chain;
  const auto& rules = config_.rules;

  std::array<JointVec, 2> start;
  std::array<JointCommand<double>, 2> command;
  for (Side s : {Side::A, Side::B}) {
    const auto i = index(s);
    auto decoded = act(world_, s, actions[i], chain, config_.table, workspace_, noise_[i], noise_rng_[i],
                       rules.control_dt(), config_.resolve);
    out.invalid_action[i] = decoded.invalid_action;
    command[i] = std::move(decoded.command);
    start[i] = world_.joints[i].positions;
  }

  const double dt = rules.substep_dt();
  JointVec q(chain.joint_count());
  bool scored = false;
  for (int k = 1; k <= rules.substeps; ++k) {
    const double frac = static_cast<double>(k) / rules.substeps;
    for (Side s : {Side::A, Side::B}) {
      const auto i = index(s);
      q = start[i] + frac * (command[i].positions - start[i]);
      const Vec3d p = forward_kinematics(chain, q);
      const Vec2d pos = to_side_frame(s, Vec2d(p.head<2>()));
      world_.mallets[i].velocity = (pos - world_.mallets[i].position) / dt;
      world_.mallets[i].position = pos;
    }
    // the puck is frozen once it is past a goal line
    if (!scored) {
      advance(world_, config_.table, dt);
      scored = detect_goal(world_.puck, config_.table).has_value();
    }
  }
  for (Side s : {Side::A, Side::B}) {
    world_.joints[index(s)].positions = command[index(s)].positions;
    world_.joints[index(s)].velocities = command[index(s)].velocities;
  }

  if (disturbance_.disturbance_rate > 0 && std::bernoulli_distribution(disturbance_.disturbance_rate)(disturbance_rng_))
    world_ = apply_disturbance(std::move(world_), disturbance_, disturbance_rng_);

  out.events = apply_rules(world_, config_.table, workspaces_, rules);
  for (const auto& e : out.events) {
    if (e.kind == EventKind::episode_end) out.episode_over = true;
    if (e.kind == EventKind::match_end) out.match_over = true;
  }
  if (out.episode_over) {
    start_episode();
  } else {
    refresh_observations(false);
  }
  return out;
}

}  // namespace airhockey
