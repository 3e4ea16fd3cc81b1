#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "aurora/env.hpp"
#include "aurora/features.hpp"
#include "aurora/policy.hpp"

namespace aurora::ppo {

struct PpoConfig {
  double gamma = 0.99;
  double gae_lambda = 0.95;
  double clip_eps = 0.2;
  double learning_rate = 3e-4;
  int steps_per_update = 4096;
  int epochs_per_update = 4;
  int minibatch_size = 256;
  double value_coef = 0.5;
  double entropy_coef = 0.0;
  int total_episodes = 3072;
  int n_envs = 8;
  // Rewards are scaled before entering the buffer so value targets stay in
  // a range the tanh nets can reach; curves report unscaled rewards.
  double reward_scale = 1e-3;
  double max_grad_norm = 0.5;

  void validate() const;
};

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// delta_t = r_t + gamma*V(s_{t+1})*(1-done_t) - V(s_t)
// A_t = delta_t + gamma*lambda*(1-done_t)*A_{t+1}, returns_t = A_t + V(s_t).
GaeResult compute_gae(std::span<const double> rewards, std::span<const double> values,
                      std::span<const uint8_t> dones, double gamma, double lambda,
                      double bootstrap_value);

struct RolloutBuffer {
  int state_dim = 0;
  std::vector<double> states;  // size() * state_dim, row-major
  std::vector<double> actions;
  std::vector<double> log_probs;
  std::vector<double> rewards;
  std::vector<double> values;
  std::vector<uint8_t> dones;
  std::vector<double> advantages;
  std::vector<double> returns;

  size_t size() const { return actions.size(); }
  void clear();
  void push(std::span<const double> state, double action, double log_prob, double reward,
            double value, bool done);
  void append(const RolloutBuffer& other);
  std::span<const double> state_at(size_t i) const {
    return {states.data() + i * static_cast<size_t>(state_dim), static_cast<size_t>(state_dim)};
  }
};

// In place: mean 0, standard deviation 1 (plus epsilon).
void normalize_advantages(std::span<double> advantages);

struct LossStats {
  double total = 0.0;
  double policy = 0.0;
  double value = 0.0;
  double entropy = 0.0;
};

// Clipped-surrogate loss over the indexed samples:
//   -mean(min(rho*A, clip(rho, 1-eps, 1+eps)*A))
//   + value_coef * mean((V - returns)^2) - entropy_coef * entropy.
// Accumulates d(loss)/d(theta) into grad (must be zeroed by the caller).
LossStats ppo_loss(const RolloutBuffer& buf, std::span<const int> indices,
                   const policy::GaussianPolicy& policy, double clip_eps, double value_coef,
                   double entropy_coef, std::span<double> grad);

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  long long t = 0;

  explicit AdamState(size_t n) : m(n, 0.0), v(n, 0.0) {}
};

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

// Bias-corrected adaptive-moment update, in place.
void adam_step(AdamState& opt, std::span<double> params, std::span<const double> grads, double lr);

// Scales grads so the global L2 norm is at most max_norm; returns the norm.
double clip_grad_norm(std::span<double> grads, double max_norm);

struct TrainingCurvePoint {
  int iter = 0;
  long long episodes = 0;
  double mean_reward = 0.0;      // mean total reward of episodes finished this iter
  double smoothed_reward = 0.0;  // exponential smoothing, factor 0.9
  double wall_s = 0.0;
};

struct TrainResult {
  policy::GaussianPolicy policy;
  std::vector<TrainingCurvePoint> curve;
};

// Runs n_envs environments, collects steps_per_update transitions per
// iteration, updates with epochs x minibatches, and loops until
// total_episodes have completed. Deterministic given the seed. When
// out_dir is non-empty, writes out_dir/policy.txt and out_dir/training.csv.
TrainResult train(const features::EnvConfig& env_config, const PpoConfig& ppo_config,
                  uint64_t seed, const std::string& out_dir);

}  // namespace aurora::ppo
