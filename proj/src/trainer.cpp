#include "airhockey/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <numeric>
#include <stdexcept>
#include <mutex>
#include <thread>

namespace airhockey {

FixedOpponent::FixedOpponent(SnapshotPtr opponent) : opponent_(std::move(opponent)) {
  if (!opponent_) throw std::invalid_argument("FixedOpponent needs a snapshot");
}

SnapshotPtr FixedOpponent::sample(Rng&) { return opponent_; }

EnvFactory default_env_factory(LearnerEnvConfig base) {
  return [base](Strategy s) {
    LearnerEnvConfig c = base;
    c.strategy = s;
    return std::make_unique<LearnerEnv>(c);
  };
}

namespace {

struct Job {
  int member;
  std::uint64_t seed;
  SnapshotPtr opponent;
};

std::vector<double> centered_ranks(const std::vector<double>& x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size(), 0.0);
  if (x.size() < 2) return r;
  // ties share their mean rank
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j);
    for (std::size_t k = i; k <= j; ++k) r[order[k]] = rank / static_cast<double>(x.size() - 1) - 0.5;
    i = j + 1;
  }
  return r;
}

}  // namespace

TrainingResult train_toy_learner(const EnvFactory& make_env, OpponentSource& opponents, Strategy strategy,
                                 std::int64_t budget_episodes, Rng& rng, const EsOptions& opt) {
  if (opt.population < 2 || opt.population % 2 != 0) throw std::invalid_argument("population must be even");
  if (opt.episodes_per_member < 1 || opt.sigma <= 0 || opt.learning_rate <= 0 || opt.checkpoint_every < 1)
    throw std::invalid_argument("invalid ES options");
  if (budget_episodes < 0) throw std::invalid_argument("budget must be non-negative");

  const int dim = toy_learner_parameter_count(opt.hidden);
  const std::string strategy_name(to_string(strategy));
  Eigen::VectorXd theta = random_toy_parameters(opt.hidden, opt.init_scale, rng);
  auto snapshot = [&](std::int64_t episode) {
    return make_toy_learner(opt.hidden, theta, PolicyMetadata{strategy_name, episode, 1});
  };

  TrainingResult result;
  result.checkpoints.push_back(snapshot(0));

  const std::int64_t per_gen = static_cast<std::int64_t>(opt.population) * opt.episodes_per_member;
  const std::int64_t generations = budget_episodes / per_gen;
  const int half = opt.population / 2;
  const int workers = std::max(1, opt.workers);

  std::vector<std::unique_ptr<LearnerEnv>> envs;
  for (int w = 0; w < workers; ++w) envs.push_back(make_env(strategy));

  Eigen::VectorXd m = Eigen::VectorXd::Zero(dim), v = Eigen::VectorXd::Zero(dim);
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::normal_distribution<double> normal(0.0, 1.0);

  for (std::int64_t g = 0; g < generations; ++g) {
    Eigen::MatrixXd noise(dim, half);
    for (Eigen::Index c = 0; c < noise.cols(); ++c)
      for (Eigen::Index r = 0; r < noise.rows(); ++r) noise(r, c) = normal(rng);

    // antithetic pairs share seeds and opponents
    std::vector<Job> jobs;
    for (int k = 0; k < half; ++k) {
      for (int e = 0; e < opt.episodes_per_member; ++e) {
        const std::uint64_t seed = rng();
        SnapshotPtr opp = opponents.sample(rng);
        jobs.push_back({2 * k, seed, opp});
        jobs.push_back({2 * k + 1, seed, opp});
      }
    }
    std::vector<SnapshotPtr> members(opt.population);
    for (int k = 0; k < half; ++k) {
      members[2 * k] = make_toy_learner(opt.hidden, theta + opt.sigma * noise.col(k));
      members[2 * k + 1] = make_toy_learner(opt.hidden, theta - opt.sigma * noise.col(k));
    }

    std::vector<double> returns(jobs.size(), 0.0);
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto work = [&](int w) {
      try {
        for (std::size_t j = next++; j < jobs.size(); j = next++) {
          envs[w]->set_opponent(jobs[j].opponent);
          returns[j] = run_episode(*envs[w], *members[jobs[j].member], jobs[j].seed);
        }
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    };
    if (workers == 1) {
      work(0);
    } else {
      std::vector<std::thread> pool;
      for (int w = 0; w < workers; ++w) pool.emplace_back(work, w);
      for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    std::vector<double> fitness(opt.population, 0.0);
    for (std::size_t j = 0; j < jobs.size(); ++j) fitness[jobs[j].member] += returns[j] / opt.episodes_per_member;
    const std::vector<double> u = centered_ranks(fitness);

    Eigen::VectorXd grad = Eigen::VectorXd::Zero(dim);
    for (int k = 0; k < half; ++k) grad += (u[2 * k] - u[2 * k + 1]) * noise.col(k);
    grad /= opt.population * opt.sigma;
    grad -= opt.weight_decay * theta;

    const double t = static_cast<double>(g + 1);
    m = beta1 * m + (1 - beta1) * grad;
    v = beta2 * v + (1 - beta2) * grad.cwiseAbs2();
    const Eigen::VectorXd m_hat = m / (1 - std::pow(beta1, t));
    const Eigen::VectorXd v_hat = v / (1 - std::pow(beta2, t));
    theta += opt.learning_rate * m_hat.cwiseQuotient((v_hat.array().sqrt() + eps).matrix());

    result.episodes += per_gen;
    GenerationStats stats;
    stats.generation = static_cast<int>(g);
    stats.episodes = result.episodes;
    stats.episode_returns = returns;
    stats.mean_return = std::accumulate(returns.begin(), returns.end(), 0.0) / static_cast<double>(returns.size());
    result.generations.push_back(stats);

    const SnapshotPtr current = snapshot(result.episodes);
    opponents.after_generation(result.episodes, current, rng);

    const bool stop = opt.on_generation && opt.on_generation(stats);
    const bool last = stop || g + 1 == generations;
    if ((g + 1) % opt.checkpoint_every == 0 || last) result.checkpoints.push_back(current);
    if (stop) break;
  }
  return result;
}

}  // namespace airhockey
