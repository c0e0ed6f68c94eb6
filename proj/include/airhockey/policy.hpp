#pragma once

// Frozen policy snapshots, the scripted opponents, the small feedforward
// learner, and the action smoothing filter.

#include "airhockey/env.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace airhockey {

enum class PolicyKind : std::uint8_t { scripted_baseline, scripted_variant, toy_learner };

std::string_view to_string(PolicyKind kind);
PolicyKind parse_policy_kind(std::string_view name);

/// Behaviour selector stored as the first parameter of scripted_variant
/// snapshots.
enum class VariantType : int { passive_blocker = 0, random_jitterer = 1, idle = 2 };

struct PolicyMetadata {
  std::string strategy = "balanced";
  std::int64_t episode = 0;
  int format_version = 1;
};

/// Immutable policy parameters. Shared between threads through SnapshotPtr.
class PolicySnapshot {
 public:
  PolicySnapshot(PolicyKind kind, std::vector<int> dims, Eigen::VectorXd parameters, PolicyMetadata metadata = {});

  PolicyKind kind() const { return kind_; }
  const std::vector<int>& dims() const { return dims_; }
  const Eigen::VectorXd& parameters() const { return parameters_; }
  const PolicyMetadata& metadata() const { return metadata_; }

  /// FNV-1a of the serialized checkpoint.
  std::uint64_t fingerprint() const;

 private:
  PolicyKind kind_;
  std::vector<int> dims_;
  Eigen::VectorXd parameters_;
  PolicyMetadata metadata_;
};

using SnapshotPtr = std::shared_ptr<const PolicySnapshot>;

/// Parameter count implied by a kind and its dims; throws for unsupported dims.
Eigen::Index declared_dimension(PolicyKind kind, const std::vector<int>& dims);

/// Deterministic given (snapshot, observation, rng state); output in [-1, 1]^2.
Action policy_act(const PolicySnapshot& snapshot, const ObservationStack& obs, Rng& rng);
/// Flat form; throws std::invalid_argument unless obs has 40 entries.
Action policy_act(const PolicySnapshot& snapshot, const Eigen::VectorXd& obs, Rng& rng);

// Scripted policies read the workspace rectangle (in normalized table
// coordinates) from their parameters so that policy_act needs no geometry.
SnapshotPtr make_scripted_baseline(const SimConfig& config);
SnapshotPtr make_scripted_variant(VariantType type, const SimConfig& config);

/// Feedforward learner with `hidden` tanh units (0 for a linear map).
int toy_learner_parameter_count(int hidden);
SnapshotPtr make_toy_learner(int hidden, Eigen::VectorXd parameters, PolicyMetadata metadata = {});
Eigen::VectorXd random_toy_parameters(int hidden, double scale, Rng& rng);

struct EmaFilterState {
  double alpha = 0.3;
  Action last_output = Action::Zero();
};

/// out = alpha * action + (1 - alpha) * last_output
std::pair<EmaFilterState, Action> ema_filter(EmaFilterState state, const Action& action);

/// Checkpoint text: header lines `magic`, `format_version`, `kind`, `dims`,
/// `strategy`, `episode`, a `params` line, then one decimal per line written
/// in shortest round-trip form.
std::string serialize_checkpoint(const PolicySnapshot& snapshot);
PolicySnapshot parse_checkpoint(std::string_view text);
void save_checkpoint(const PolicySnapshot& snapshot, const std::filesystem::path& path);
SnapshotPtr load_checkpoint(const std::filesystem::path& path);

/// A stateful actor for one side of a match.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual void reset(std::uint64_t seed) = 0;
  virtual Action act(const ObservationStack& obs) = 0;
  virtual std::string describe() const = 0;
};

class SnapshotController : public Controller {
 public:
  explicit SnapshotController(SnapshotPtr snapshot, std::optional<double> ema_alpha = std::nullopt,
                              std::string label = {});
  void reset(std::uint64_t seed) override;
  Action act(const ObservationStack& obs) override;
  std::string describe() const override;
  const SnapshotPtr& snapshot() const { return snapshot_; }

 private:
  SnapshotPtr snapshot_;
  std::optional<double> ema_alpha_;
  EmaFilterState ema_;
  std::string label_;
  Rng rng_;
};

}  // namespace airhockey
