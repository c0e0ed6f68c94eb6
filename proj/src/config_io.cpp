#include "airhockey/config_io.hpp"

#include <fstream>
#include <sstream>

namespace airhockey {

namespace {

void check_version(const Json& doc, const char* what) {
  if (!doc.is_object()) throw ConfigError(std::string(what) + ": expected a JSON object");
  if (!doc.contains("format_version")) throw ConfigError(std::string(what) + ": missing format_version");
  if (doc.at("format_version").get<int>() != kConfigFormatVersion)
    throw ConfigError(std::string(what) + ": unsupported format_version");
}

template <typename T>
void read(const Json& doc, const char* key, T& out) {
  if (doc.contains(key)) out = doc.at(key).get<T>();
}

Vec3d vec3(const Json& j) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

Json vec_json(const Vec3d& v) { return Json::array({v.x(), v.y(), v.z()}); }

Isometry3<double> transform_from_json(const Json& j) {
  Isometry3<double> t = Isometry3<double>::Identity();
  if (j.contains("xyz")) t.translation() = vec3(j.at("xyz"));
  if (j.contains("rpy")) {
    const Vec3d rpy = vec3(j.at("rpy"));
    t.linear() = (Eigen::AngleAxisd(rpy.z(), Vec3d::UnitZ()) * Eigen::AngleAxisd(rpy.y(), Vec3d::UnitY()) *
                  Eigen::AngleAxisd(rpy.x(), Vec3d::UnitX()))
                     .toRotationMatrix();
  }
  return t;
}

Json transform_json(const Isometry3<double>& t) {
  const Vec3d ypr = t.linear().eulerAngles(2, 1, 0);
  return {{"xyz", vec_json(t.translation())}, {"rpy", vec_json(Vec3d(ypr[2], ypr[1], ypr[0]))}};
}

template <typename F>
auto guarded(const char* what, F&& f) {
  try {
    return f();
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string(what) + ": " + e.what());
  }
}

}  // namespace

Json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void save_json_file(const Json& doc, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc.dump(2) << "\n";
}

Json to_json(const Table& t) {
  return {{"format_version", kConfigFormatVersion}, {"length", t.length}, {"width", t.width},
          {"goal_width", t.goal_width}, {"puck_radius", t.puck_radius}, {"mallet_radius", t.mallet_radius},
          {"restitution_wall", t.restitution_wall}, {"restitution_mallet", t.restitution_mallet},
          {"damping", t.damping}, {"spin_friction", t.spin_friction}, {"plane_height", t.plane_height}};
}

Table table_from_json(const Json& doc) {
  return guarded("table", [&] {
    check_version(doc, "table");
    Table t;
    read(doc, "length", t.length);
    read(doc, "width", t.width);
    read(doc, "goal_width", t.goal_width);
    read(doc, "puck_radius", t.puck_radius);
    read(doc, "mallet_radius", t.mallet_radius);
    read(doc, "restitution_wall", t.restitution_wall);
    read(doc, "restitution_mallet", t.restitution_mallet);
    read(doc, "damping", t.damping);
    read(doc, "spin_friction", t.spin_friction);
    read(doc, "plane_height", t.plane_height);
    t.validate();
    return t;
  });
}

Json to_json(const ArmConfig& arm) {
  Json joints = Json::array();
  for (const auto& j : arm.chain.joints) {
    joints.push_back({{"axis", vec_json(j.axis)}, {"origin", transform_json(j.origin)},
                      {"pos_limits", Json::array({j.pos_min, j.pos_max})}, {"vel_limit", j.vel_limit}});
  }
  Json doc = {{"format_version", kConfigFormatVersion},
              {"joint_count", arm.chain.joint_count()},
              {"base", transform_json(arm.chain.base)},
              {"joints", joints},
              {"mallet_offset", transform_json(arm.chain.mallet_offset)},
              {"reach_radius", arm.reach_radius},
              {"home", Json::array({arm.home.x(), arm.home.y()})}};
  if (arm.ik_seed.size() > 0) doc["ik_seed"] = std::vector<double>(arm.ik_seed.data(), arm.ik_seed.data() + arm.ik_seed.size());
  return doc;
}

ArmConfig arm_from_json(const Json& doc) {
  return guarded("chain", [&] {
    check_version(doc, "chain");
    ArmConfig arm = default_arm();
    if (doc.contains("joints")) {
      arm.chain.joints.clear();
      arm.ik_seed.resize(0);
      for (const auto& jj : doc.at("joints")) {
        RevoluteJoint<double> j;
        j.axis = vec3(jj.at("axis")).normalized();
        if (jj.contains("origin")) j.origin = transform_from_json(jj.at("origin"));
        const auto lim = jj.at("pos_limits");
        if (!lim.is_array() || lim.size() != 2) throw ConfigError("chain: pos_limits must be [min, max]");
        j.pos_min = lim[0].get<double>();
        j.pos_max = lim[1].get<double>();
        j.vel_limit = jj.at("vel_limit").get<double>();
        arm.chain.joints.push_back(j);
      }
    }
    if (doc.contains("joint_count") && doc.at("joint_count").get<Eigen::Index>() != arm.chain.joint_count())
      throw ConfigError("chain: joint_count does not match the joints list");
    if (doc.contains("base")) arm.chain.base = transform_from_json(doc.at("base"));
    if (doc.contains("mallet_offset")) arm.chain.mallet_offset = transform_from_json(doc.at("mallet_offset"));
    read(doc, "reach_radius", arm.reach_radius);
    if (doc.contains("home")) {
      const auto h = doc.at("home");
      arm.home = Vec2d(h.at(0).get<double>(), h.at(1).get<double>());
    }
    if (doc.contains("ik_seed")) {
      const auto seed = doc.at("ik_seed").get<std::vector<double>>();
      arm.ik_seed = Eigen::Map<const JointVec>(seed.data(), static_cast<Eigen::Index>(seed.size()));
    }
    arm.chain.validate();
    return arm;
  });
}

Json to_json(const RuleConfig& r) {
  return {{"format_version", kConfigFormatVersion}, {"control_hz", r.control_hz}, {"substeps", r.substeps},
          {"fault_seconds", r.fault_seconds}, {"match_steps", r.match_steps}, {"stuck_speed", r.stuck_speed},
          {"stuck_seconds", r.stuck_seconds}, {"faceoff_jitter", r.faceoff_jitter}};
}

RuleConfig rules_from_json(const Json& doc) {
  return guarded("rules", [&] {
    check_version(doc, "rules");
    RuleConfig r;
    read(doc, "control_hz", r.control_hz);
    read(doc, "substeps", r.substeps);
    read(doc, "fault_seconds", r.fault_seconds);
    read(doc, "match_steps", r.match_steps);
    read(doc, "stuck_speed", r.stuck_speed);
    read(doc, "stuck_seconds", r.stuck_seconds);
    read(doc, "faceoff_jitter", r.faceoff_jitter);
    r.validate();
    return r;
  });
}

Json to_json(const NoiseConfig& n) {
  return {{"format_version", kConfigFormatVersion},
          {"obs_noise_sigma", n.obs_noise_sigma},
          {"action_noise_sigma", n.action_noise_sigma},
          {"disturbance_impulse_sigma", n.disturbance_impulse_sigma},
          {"disturbance_rate", n.disturbance_rate},
          {"tracking_loss_prob", n.tracking_loss_prob},
          {"tracking_loss_mean_duration", n.tracking_loss_mean_duration}};
}

NoiseConfig noise_from_json(const Json& doc) {
  return guarded("noise", [&] {
    check_version(doc, "noise");
    NoiseConfig n = NoiseConfig::training_defaults();
    read(doc, "obs_noise_sigma", n.obs_noise_sigma);
    read(doc, "action_noise_sigma", n.action_noise_sigma);
    read(doc, "disturbance_impulse_sigma", n.disturbance_impulse_sigma);
    read(doc, "disturbance_rate", n.disturbance_rate);
    read(doc, "tracking_loss_prob", n.tracking_loss_prob);
    read(doc, "tracking_loss_mean_duration", n.tracking_loss_mean_duration);
    n.validate();
    return n;
  });
}

Rational parse_rational(const std::string& text) {
  std::istringstream in(text);
  std::int64_t num = 0, den = 1;
  if (!(in >> num)) throw ConfigError("bad fraction '" + text + "'");
  char slash = 0;
  if (in >> slash) {
    if (slash != '/' || !(in >> den) || den == 0) throw ConfigError("bad fraction '" + text + "'");
  }
  return Rational(num, den);
}

Json to_json(const StrategyRewardConfig& r, Strategy name) {
  return {{"format_version", kConfigFormatVersion}, {"strategy", std::string(to_string(name))},
          {"score_goal", to_string(r.score_goal)}, {"receive_goal", to_string(r.receive_goal)},
          {"cause_fault", to_string(r.cause_fault)}};
}

StrategyRewardConfig strategy_from_json(const Json& doc) {
  return guarded("strategy", [&] {
    check_version(doc, "strategy");
    StrategyRewardConfig r = StrategyRewardConfig::of(parse_strategy(doc.value("strategy", std::string("balanced"))));
    if (doc.contains("score_goal")) r.score_goal = parse_rational(doc.at("score_goal").get<std::string>());
    if (doc.contains("receive_goal")) r.receive_goal = parse_rational(doc.at("receive_goal").get<std::string>());
    if (doc.contains("cause_fault")) r.cause_fault = parse_rational(doc.at("cause_fault").get<std::string>());
    return r;
  });
}

Json to_json(const std::array<StrategyRewardConfig, 3>& rewards) {
  Json list = Json::array();
  for (Strategy s : kStrategies) list.push_back(to_json(rewards[static_cast<std::size_t>(s)], s));
  return {{"format_version", kConfigFormatVersion}, {"strategies", list}};
}

std::array<StrategyRewardConfig, 3> strategies_from_json(const Json& doc) {
  return guarded("strategies", [&] {
    check_version(doc, "strategies");
    std::array<StrategyRewardConfig, 3> out{StrategyRewardConfig::of(Strategy::balanced),
                                            StrategyRewardConfig::of(Strategy::aggressive),
                                            StrategyRewardConfig::of(Strategy::defensive)};
    for (const auto& entry : doc.at("strategies")) {
      const Strategy s = parse_strategy(entry.at("strategy").get<std::string>());
      out[static_cast<std::size_t>(s)] = strategy_from_json(entry);
    }
    return out;
  });
}

std::string config_hash(const Json& doc) { return hex64(fnv1a64(doc.dump())); }

LoadedConfig load_config(const ConfigPaths& paths) {
  LoadedConfig out;
  if (paths.table) out.sim.table = table_from_json(load_json_file(*paths.table));
  if (paths.chain) out.sim.arm = arm_from_json(load_json_file(*paths.chain));
  if (paths.rules) out.sim.rules = rules_from_json(load_json_file(*paths.rules));
  if (paths.noise) out.noise = noise_from_json(load_json_file(*paths.noise));
  if (paths.strategies) out.rewards = strategies_from_json(load_json_file(*paths.strategies));
  // hashes are taken over the effective values so defaults and files agree
  out.table_hash = config_hash(to_json(out.sim.table));
  out.chain_hash = config_hash(to_json(out.sim.arm));
  out.rules_hash = config_hash(to_json(out.sim.rules));
  out.noise_hash = config_hash(to_json(out.noise));
  out.strategies_hash = config_hash(to_json(out.rewards));
  return out;
}

}  // namespace airhockey
