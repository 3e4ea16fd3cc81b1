#include "aurora/ppo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "aurora/util.hpp"

namespace aurora::ppo {

void PpoConfig::validate() const {
  require(gamma >= 0.0 && gamma < 1.0, "gamma must be in [0,1)");
  require(gae_lambda >= 0.0 && gae_lambda <= 1.0, "gae_lambda must be in [0,1]");
  require(clip_eps > 0.0, "clip_eps must be > 0");
  require(learning_rate > 0.0, "learning_rate must be > 0");
  require(steps_per_update >= 1, "steps_per_update must be >= 1");
  require(epochs_per_update >= 1, "epochs_per_update must be >= 1");
  require(minibatch_size >= 1, "minibatch_size must be >= 1");
  require(value_coef >= 0.0, "value_coef must be >= 0");
  require(entropy_coef >= 0.0, "entropy_coef must be >= 0");
  require(total_episodes >= 1, "total_episodes must be >= 1");
  require(n_envs >= 1, "n_envs must be >= 1");
  require(steps_per_update % n_envs == 0, "steps_per_update must be divisible by n_envs");
  require(reward_scale > 0.0, "reward_scale must be > 0");
  require(max_grad_norm > 0.0, "max_grad_norm must be > 0");
}

GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const uint8_t> dones, double gamma, double lambda,
                      double bootstrap_value) {
  const size_t n = rewards.size();
  if (values.size() != n || dones.size() != n)
    throw std::invalid_argument("compute_gae: rewards/values/dones lengths differ");
  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  double next_adv = 0.0;
  double next_value = bootstrap_value;
  for (size_t i = n; i-- > 0;) {
    const double nonterminal = dones[i] ? 0.0 : 1.0;
    const double delta = rewards[i] + gamma * next_value * nonterminal - values[i];
    next_adv = delta + gamma * lambda * nonterminal * next_adv;
    out.advantages[i] = next_adv;
    out.returns[i] = next_adv + values[i];
    next_value = values[i];
  }
  return out;
}

void RolloutBuffer::clear() {
  states.clear();
  actions.clear();
  log_probs.clear();
  rewards.clear();
  values.clear();
  dones.clear();
  advantages.clear();
  returns.clear();
}

void RolloutBuffer::push(std::span<const double> state, double action, double log_prob,
                         double reward, double value, bool done) {
  if (state_dim == 0) state_dim = static_cast<int>(state.size());
  states.insert(states.end(), state.begin(), state.end());
  actions.push_back(action);
  log_probs.push_back(log_prob);
  rewards.push_back(reward);
  values.push_back(value);
  dones.push_back(done ? 1 : 0);
}

void RolloutBuffer::append(const RolloutBuffer& other) {
  if (state_dim == 0) state_dim = other.state_dim;
  states.insert(states.end(), other.states.begin(), other.states.end());
  actions.insert(actions.end(), other.actions.begin(), other.actions.end());
  log_probs.insert(log_probs.end(), other.log_probs.begin(), other.log_probs.end());
  rewards.insert(rewards.end(), other.rewards.begin(), other.rewards.end());
  values.insert(values.end(), other.values.begin(), other.values.end());
  dones.insert(dones.end(), other.dones.begin(), other.dones.end());
  advantages.insert(advantages.end(), other.advantages.begin(), other.advantages.end());
  returns.insert(returns.end(), other.returns.begin(), other.returns.end());
}

void normalize_advantages(std::span<double> advantages) {
  const size_t n = advantages.size();
  if (n == 0) return;
  double mean = 0.0;
  for (double a : advantages) mean += a;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double a : advantages) var += (a - mean) * (a - mean);
  var /= static_cast<double>(n);
  const double inv = 1.0 / (std::sqrt(var) + 1e-8);
  for (double& a : advantages) a = (a - mean) * inv;
}

LossStats ppo_loss(const RolloutBuffer& buf, std::span<const int> indices,
                   const policy::GaussianPolicy& policy, double clip_eps, double value_coef,
                   double entropy_coef, std::span<double> grad) {
  if (indices.empty()) throw std::invalid_argument("ppo_loss: empty batch");
  policy::MlpWorkspace ws;
  const double inv_m = 1.0 / static_cast<double>(indices.size());
  LossStats stats;
  for (int idx : indices) {
    const size_t i = static_cast<size_t>(idx);
    const auto state = buf.state_at(i);
    const double adv = buf.advantages[i];

    // Policy term. The clipped branch carries no gradient.
    const double logp_new = policy.log_prob(state, buf.actions[i], ws);
    const double ratio = std::exp(logp_new - buf.log_probs[i]);
    const double clipped = std::min(std::max(ratio, 1.0 - clip_eps), 1.0 + clip_eps);
    const double pg1 = -adv * ratio;
    const double pg2 = -adv * clipped;
    stats.policy += std::max(pg1, pg2) * inv_m;
    if (pg1 >= pg2) {
      policy.log_prob_backward(state, buf.actions[i], ws, grad, -adv * ratio * inv_m);
    }

    // Value term: value_coef * mean((V - R)^2).
    const double v = policy.value(state, ws);
    const double verr = v - buf.returns[i];
    stats.value += verr * verr * inv_m;
    policy.value_backward(state, ws, grad, 2.0 * value_coef * verr * inv_m);
  }
  stats.entropy = policy.entropy();
  if (entropy_coef != 0.0) grad[policy.log_std_index()] -= entropy_coef;
  stats.total = stats.policy + value_coef * stats.value - entropy_coef * stats.entropy;
  return stats;
}

void adam_step(AdamState& opt, std::span<double> params, std::span<const double> grads,
               double lr) {
  if (params.size() != grads.size() || params.size() != opt.m.size())
    throw std::invalid_argument("adam_step: shape mismatch");
  opt.t += 1;
  const double bc1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(opt.t));
  const double bc2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(opt.t));
  for (size_t i = 0; i < params.size(); ++i) {
    opt.m[i] = kAdamBeta1 * opt.m[i] + (1.0 - kAdamBeta1) * grads[i];
    opt.v[i] = kAdamBeta2 * opt.v[i] + (1.0 - kAdamBeta2) * grads[i] * grads[i];
    const double mhat = opt.m[i] / bc1;
    const double vhat = opt.v[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + kAdamEps);
  }
}

double clip_grad_norm(std::span<double> grads, double max_norm) {
  double sq = 0.0;
  for (double g : grads) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double scale = max_norm / norm;
    for (double& g : grads) g *= scale;
  }
  return norm;
}

namespace {

struct EnvSlot {
  std::unique_ptr<env::Env> env;
  std::mt19937_64 action_rng;
  std::vector<double> state;
  double episode_reward = 0.0;  // unscaled
  RolloutBuffer segment;
  double bootstrap = 0.0;
  std::vector<double> finished_rewards;
};

void rollout_env(EnvSlot& slot, const policy::GaussianPolicy& policy, int steps,
                 double reward_scale) {
  policy::MlpWorkspace ws;
  slot.segment.clear();
  slot.finished_rewards.clear();
  for (int s = 0; s < steps; ++s) {
    if (slot.env->done()) {
      slot.state = slot.env->reset();
      slot.episode_reward = 0.0;
    }
    const auto sample = policy.sample_action(slot.state, slot.action_rng, ws);
    const double value = policy.value(slot.state, ws);
    env::StepResult sr = slot.env->step(sample.action);
    slot.segment.push(slot.state, sample.action, sample.log_prob, sr.reward * reward_scale, value,
                      sr.done);
    slot.episode_reward += sr.reward;
    if (sr.done) {
      slot.finished_rewards.push_back(slot.episode_reward);
      slot.episode_reward = 0.0;
    }
    slot.state = std::move(sr.state);
  }
  slot.bootstrap = slot.env->done() ? 0.0 : policy.value(slot.state, ws);
}

std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

TrainResult train(const features::EnvConfig& env_config, const PpoConfig& ppo_config,
                  uint64_t seed, const std::string& out_dir) {
  env_config.validate();
  ppo_config.validate();
  const auto wall_start = std::chrono::steady_clock::now();

  const int n_envs = ppo_config.n_envs;
  const int steps_per_env = ppo_config.steps_per_update / n_envs;

  std::vector<EnvSlot> slots(static_cast<size_t>(n_envs));
  for (int i = 0; i < n_envs; ++i) {
    slots[static_cast<size_t>(i)].env =
        std::make_unique<env::Env>(env_config, mix_seed(seed, 100 + static_cast<uint64_t>(i)));
    slots[static_cast<size_t>(i)].action_rng = make_rng(seed, 200 + static_cast<uint64_t>(i));
  }

  policy::GaussianPolicy policy(env_config.k, mix_seed(seed, 1));
  AdamState adam(policy.param_count());
  auto shuffle_rng = make_rng(seed, 3);

  TrainResult result{std::move(policy), {}};
  policy::GaussianPolicy& pol = result.policy;

  RolloutBuffer buffer;
  std::vector<double> grad(pol.param_count(), 0.0);
  long long episodes_done = 0;
  double smoothed = 0.0;
  bool have_smoothed = false;
  int iter = 0;

  const unsigned max_threads = std::max(1u, std::thread::hardware_concurrency());

  while (episodes_done < ppo_config.total_episodes) {
    ++iter;

    // Rollout. Envs are independent; results do not depend on scheduling.
    {
      const unsigned workers = std::min<unsigned>(max_threads, static_cast<unsigned>(n_envs));
      std::vector<std::thread> threads;
      threads.reserve(workers);
      for (unsigned w = 0; w < workers; ++w) {
        threads.emplace_back([&, w]() {
          for (int i = static_cast<int>(w); i < n_envs; i += static_cast<int>(workers))
            rollout_env(slots[static_cast<size_t>(i)], pol, steps_per_env,
                        ppo_config.reward_scale);
        });
      }
      for (auto& t : threads) t.join();
    }

    // Merge in fixed env order.
    buffer.clear();
    std::vector<double> iter_episode_rewards;
    for (auto& slot : slots) {
      auto gae = compute_gae(slot.segment.rewards, slot.segment.values, slot.segment.dones,
                             ppo_config.gamma, ppo_config.gae_lambda, slot.bootstrap);
      slot.segment.advantages = std::move(gae.advantages);
      slot.segment.returns = std::move(gae.returns);
      buffer.append(slot.segment);
      iter_episode_rewards.insert(iter_episode_rewards.end(), slot.finished_rewards.begin(),
                                  slot.finished_rewards.end());
    }
    normalize_advantages(buffer.advantages);

    // Optimize.
    std::vector<int> indices(buffer.size());
    std::iota(indices.begin(), indices.end(), 0);
    for (int epoch = 0; epoch < ppo_config.epochs_per_update; ++epoch) {
      std::shuffle(indices.begin(), indices.end(), shuffle_rng);
      for (size_t start = 0; start < indices.size();
           start += static_cast<size_t>(ppo_config.minibatch_size)) {
        const size_t count =
            std::min(static_cast<size_t>(ppo_config.minibatch_size), indices.size() - start);
        std::fill(grad.begin(), grad.end(), 0.0);
        ppo_loss(buffer, std::span<const int>(indices.data() + start, count), pol,
                 ppo_config.clip_eps, ppo_config.value_coef, ppo_config.entropy_coef, grad);
        clip_grad_norm(grad, ppo_config.max_grad_norm);
        adam_step(adam, pol.params(), grad, ppo_config.learning_rate);
        pol.clamp_log_std();
      }
    }

    episodes_done += static_cast<long long>(iter_episode_rewards.size());
    double mean_reward = 0.0;
    if (!iter_episode_rewards.empty()) {
      for (double r : iter_episode_rewards) mean_reward += r;
      mean_reward /= static_cast<double>(iter_episode_rewards.size());
    } else if (!result.curve.empty()) {
      mean_reward = result.curve.back().mean_reward;
    }
    smoothed = have_smoothed ? 0.9 * smoothed + 0.1 * mean_reward : mean_reward;
    have_smoothed = true;
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
    result.curve.push_back({iter, episodes_done, mean_reward, smoothed, wall});
  }

  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    const std::string policy_path = out_dir + "/policy.txt";
    const std::string curve_path = out_dir + "/training.csv";
    save_params(pol, policy_path);
    std::ofstream csv(curve_path);
    if (!csv) throw std::runtime_error("cannot open training curve for writing: " + curve_path);
    csv << "iter,episodes,mean_reward,smoothed_reward,wall_s\n";
    for (const auto& p : result.curve) {
      csv << p.iter << ',' << p.episodes << ',' << fmt_real(p.mean_reward) << ','
          << fmt_real(p.smoothed_reward) << ',' << fmt_real(p.wall_s) << "\n";
    }
    if (!csv) throw std::runtime_error("write failed for training curve: " + curve_path);
  }
  return result;
}

}  // namespace aurora::ppo
