#include "airhockey/policy.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace airhockey {

namespace {

constexpr std::string_view kMagic = "airhockey-policy";
constexpr int kFormatVersion = 1;

// Layout shared by the scripted policies.
constexpr int kBaselineParams = 8;  // ws lo x/y, ws hi x/y, home_x, reach_x, slow_speed, lunge_depth
constexpr int kVariantParams = 7;   // type, ws lo x/y, ws hi x/y, home_x, jitter

double clamp_unit(double v) { return std::clamp(v, -1.0, 1.0); }

struct NormalizedRect {
  Vec2d lo;
  Vec2d hi;

  Action to_action(const Vec2d& target) const {
    const Vec2d center = (lo + hi) / 2;
    const Vec2d half = (hi - lo) / 2;
    return ((target - center).cwiseQuotient(half)).unaryExpr(&clamp_unit);
  }
};

NormalizedRect rect_from(const Eigen::VectorXd& p, int offset) {
  return {Vec2d(p[offset], p[offset + 1]), Vec2d(p[offset + 2], p[offset + 3])};
}

Action baseline_act(const Eigen::VectorXd& p, const ObservationStack& obs) {
  const NormalizedRect rect = rect_from(p, 0);
  const double home_x = p[4];
  const double reach_x = p[5];
  const double slow = p[6];
  const double depth = p[7];

  const Vec2d puck = obs.puck_position.col(0);
  const Vec2d vel = puck - Vec2d(obs.puck_position.col(1));
  const Vec2d mallet = obs.own_mallet.col(0);

  Vec2d target(home_x, 0.0);
  if (puck.x() < 0 && puck.x() <= reach_x && vel.x() <= slow) {
    if (mallet.x() > puck.x() - 0.02) {
      // get behind the puck before striking
      target = Vec2d(puck.x() - 0.15, puck.y() + (mallet.y() > puck.y() ? 0.15 : -0.15));
    } else {
      const Vec2d aim = (Vec2d(1.0, 0.0) - puck).normalized();
      target = puck + depth * aim;
    }
  } else if (vel.x() < -slow) {
    target = Vec2d(home_x, puck.y());
  }
  return rect.to_action(target);
}

Action variant_act(const Eigen::VectorXd& p, const ObservationStack& obs, Rng& rng) {
  const auto type = static_cast<VariantType>(static_cast<int>(std::lround(p[0])));
  const NormalizedRect rect = rect_from(p, 1);
  const double home_x = p[5];
  const double jitter = p[6];
  const Vec2d puck = obs.puck_position.col(0);

  switch (type) {
    case VariantType::passive_blocker:
      return rect.to_action(Vec2d(home_x, std::clamp(puck.y(), -0.3, 0.3)));
    case VariantType::random_jitterer: {
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      const Vec2d noise(jitter * u(rng), jitter * u(rng));
      if (puck.x() < 0) return rect.to_action(puck + noise);
      return rect.to_action(Vec2d(home_x, puck.y()) + noise);
    }
    case VariantType::idle:
      return rect.to_action(Vec2d(home_x, 0.0));
  }
  throw std::invalid_argument("unknown scripted variant type");
}

Action learner_act(const PolicySnapshot& s, const Observation& x) {
  const auto& d = s.dims();
  const double* w = s.parameters().data();
  if (d.size() == 2) {
    Eigen::Map<const Eigen::Matrix<double, 2, kObservationDim>> W(w);
    Eigen::Map<const Vec2d> b(w + 2 * kObservationDim);
    return (W * x + b).array().tanh().matrix();
  }
  const int h = d[1];
  Eigen::Map<const Eigen::MatrixXd> W1(w, h, kObservationDim);
  Eigen::Map<const Eigen::VectorXd> b1(w + h * kObservationDim, h);
  Eigen::Map<const Eigen::MatrixXd> W2(w + h * (kObservationDim + 1), 2, h);
  Eigen::Map<const Vec2d> b2(w + h * (kObservationDim + 3));
  const Eigen::VectorXd hidden = (W1 * x + b1).array().tanh().matrix();
  return (W2 * hidden + b2).array().tanh().matrix();
}

}  // namespace

std::string_view to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::scripted_baseline: return "scripted_baseline";
    case PolicyKind::scripted_variant: return "scripted_variant";
    case PolicyKind::toy_learner: return "toy_learner";
  }
  return "unknown";
}

PolicyKind parse_policy_kind(std::string_view name) {
  for (auto k : {PolicyKind::scripted_baseline, PolicyKind::scripted_variant, PolicyKind::toy_learner})
    if (to_string(k) == name) return k;
  throw std::invalid_argument("unknown policy kind: " + std::string(name));
}

Eigen::Index declared_dimension(PolicyKind kind, const std::vector<int>& dims) {
  switch (kind) {
    case PolicyKind::scripted_baseline:
      if (dims != std::vector<int>{kBaselineParams}) break;
      return kBaselineParams;
    case PolicyKind::scripted_variant:
      if (dims != std::vector<int>{kVariantParams}) break;
      return kVariantParams;
    case PolicyKind::toy_learner:
      if (dims.size() == 2 && dims[0] == kObservationDim && dims[1] == 2) return toy_learner_parameter_count(0);
      if (dims.size() == 3 && dims[0] == kObservationDim && dims[1] > 0 && dims[2] == 2)
        return toy_learner_parameter_count(dims[1]);
      break;
  }
  throw std::invalid_argument("unsupported dims for policy kind " + std::string(to_string(kind)));
}

PolicySnapshot::PolicySnapshot(PolicyKind kind, std::vector<int> dims, Eigen::VectorXd parameters,
                               PolicyMetadata metadata)
    : kind_(kind), dims_(std::move(dims)), parameters_(std::move(parameters)), metadata_(std::move(metadata)) {
  if (parameters_.size() != declared_dimension(kind_, dims_))
    throw std::invalid_argument("policy parameter count does not match its declared dims");
}

std::uint64_t PolicySnapshot::fingerprint() const { return fnv1a64(serialize_checkpoint(*this)); }

Action policy_act(const PolicySnapshot& snapshot, const ObservationStack& obs, Rng& rng) {
  switch (snapshot.kind()) {
    case PolicyKind::scripted_baseline: return baseline_act(snapshot.parameters(), obs);
    case PolicyKind::scripted_variant: return variant_act(snapshot.parameters(), obs, rng);
    case PolicyKind::toy_learner: return learner_act(snapshot, obs.flatten()).unaryExpr(&clamp_unit);
  }
  throw std::invalid_argument("unknown policy kind");
}

Action policy_act(const PolicySnapshot& snapshot, const Eigen::VectorXd& obs, Rng& rng) {
  if (obs.size() != kObservationDim)
    throw std::invalid_argument("observation has " + std::to_string(obs.size()) + " entries, expected 40");
  return policy_act(snapshot, ObservationStack::from_flat(obs), rng);
}

namespace {

Eigen::Vector4d normalized_workspace(const SimConfig& config) {
  const auto ws = make_workspace(config.table, config.arm.base_xy(), config.arm.reach_radius);
  const double hl = config.table.half_length();
  const double hw = config.table.half_width();
  return {ws.lo.x() / hl, ws.lo.y() / hw, ws.hi.x() / hl, ws.hi.y() / hw};
}

}  // namespace

SnapshotPtr make_scripted_baseline(const SimConfig& config) {
  Eigen::VectorXd p(kBaselineParams);
  p.head<4>() = normalized_workspace(config);
  p[4] = config.arm.home.x() / config.table.half_length();
  p[5] = -0.15;
  p[6] = 0.01;
  p[7] = 0.2;
  return std::make_shared<const PolicySnapshot>(PolicyKind::scripted_baseline, std::vector<int>{kBaselineParams},
                                                std::move(p), PolicyMetadata{"balanced", 0, kFormatVersion});
}

SnapshotPtr make_scripted_variant(VariantType type, const SimConfig& config) {
  Eigen::VectorXd p(kVariantParams);
  p[0] = static_cast<double>(type);
  p.segment<4>(1) = normalized_workspace(config);
  p[5] = config.arm.home.x() / config.table.half_length();
  p[6] = 0.15;
  return std::make_shared<const PolicySnapshot>(PolicyKind::scripted_variant, std::vector<int>{kVariantParams},
                                                std::move(p), PolicyMetadata{"balanced", 0, kFormatVersion});
}

int toy_learner_parameter_count(int hidden) {
  if (hidden == 0) return 2 * kObservationDim + 2;
  return hidden * kObservationDim + hidden + 2 * hidden + 2;
}

SnapshotPtr make_toy_learner(int hidden, Eigen::VectorXd parameters, PolicyMetadata metadata) {
  std::vector<int> dims = hidden == 0 ? std::vector<int>{kObservationDim, 2}
                                      : std::vector<int>{kObservationDim, hidden, 2};
  return std::make_shared<const PolicySnapshot>(PolicyKind::toy_learner, std::move(dims), std::move(parameters),
                                                std::move(metadata));
}

Eigen::VectorXd random_toy_parameters(int hidden, double scale, Rng& rng) {
  std::normal_distribution<double> n(0.0, scale);
  Eigen::VectorXd p(toy_learner_parameter_count(hidden));
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = n(rng);
  return p;
}

std::pair<EmaFilterState, Action> ema_filter(EmaFilterState state, const Action& action) {
  if (!(state.alpha > 0 && state.alpha <= 1)) throw std::invalid_argument("EMA alpha must lie in (0, 1]");
  const Action out = state.alpha * action + (1.0 - state.alpha) * state.last_output;
  state.last_output = out;
  return {state, out};
}

std::string serialize_checkpoint(const PolicySnapshot& snapshot) {
  std::string out;
  out += std::string(kMagic) + "\n";
  out += "format_version " + std::to_string(snapshot.metadata().format_version) + "\n";
  out += "kind " + std::string(to_string(snapshot.kind())) + "\n";
  out += "dims";
  for (int d : snapshot.dims()) out += " " + std::to_string(d);
  out += "\n";
  out += "strategy " + snapshot.metadata().strategy + "\n";
  out += "episode " + std::to_string(snapshot.metadata().episode) + "\n";
  out += "params " + std::to_string(snapshot.parameters().size()) + "\n";
  char buf[64];
  for (Eigen::Index i = 0; i < snapshot.parameters().size(); ++i) {
    const auto res = std::to_chars(buf, buf + sizeof(buf), snapshot.parameters()[i]);
    out.append(buf, res.ptr);
    out += "\n";
  }
  return out;
}

PolicySnapshot parse_checkpoint(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  auto fail = [](const std::string& why) -> PolicySnapshot { throw std::invalid_argument("checkpoint: " + why); };

  if (!std::getline(in, line) || line != kMagic) fail("bad magic");
  PolicyMetadata meta;
  std::optional<PolicyKind> kind;
  std::vector<int> dims;
  long count = -1;
  while (count < 0 && std::getline(in, line)) {
    std::istringstream fields(line);
    std::string key;
    fields >> key;
    if (key == "format_version") {
      fields >> meta.format_version;
      if (meta.format_version != kFormatVersion) fail("unsupported format_version");
    } else if (key == "kind") {
      std::string k;
      fields >> k;
      kind = parse_policy_kind(k);
    } else if (key == "dims") {
      int d;
      while (fields >> d) dims.push_back(d);
    } else if (key == "strategy") {
      fields >> meta.strategy;
    } else if (key == "episode") {
      fields >> meta.episode;
    } else if (key == "params") {
      fields >> count;
    } else {
      fail("unknown header key '" + key + "'");
    }
  }
  if (!kind || count < 0) fail("incomplete header");
  Eigen::VectorXd params(count);
  for (long i = 0; i < count; ++i) {
    if (!std::getline(in, line)) fail("truncated parameter list");
    const auto res = std::from_chars(line.data(), line.data() + line.size(), params[i]);
    if (res.ec != std::errc()) fail("bad parameter value '" + line + "'");
  }
  return PolicySnapshot(*kind, std::move(dims), std::move(params), std::move(meta));
}

void save_checkpoint(const PolicySnapshot& snapshot, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint " + path.string());
  out << serialize_checkpoint(snapshot);
}

SnapshotPtr load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read checkpoint " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return std::make_shared<const PolicySnapshot>(parse_checkpoint(buf.str()));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

SnapshotController::SnapshotController(SnapshotPtr snapshot, std::optional<double> ema_alpha, std::string label)
    : snapshot_(std::move(snapshot)), ema_alpha_(ema_alpha), label_(std::move(label)) {
  if (!snapshot_) throw std::invalid_argument("SnapshotController needs a snapshot");
  if (ema_alpha_) ema_.alpha = *ema_alpha_;
}

void SnapshotController::reset(std::uint64_t seed) {
  rng_.seed(seed);
  ema_.last_output.setZero();
}

Action SnapshotController::act(const ObservationStack& obs) {
  Action a = policy_act(*snapshot_, obs, rng_);
  if (ema_alpha_) std::tie(ema_, a) = ema_filter(ema_, a);
  return a;
}

std::string SnapshotController::describe() const {
  if (!label_.empty()) return label_;
  return std::string(to_string(snapshot_->kind())) + ":" + hex64(snapshot_->fingerprint());
}

}  // namespace airhockey
