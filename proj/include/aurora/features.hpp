#pragma once

#include <deque>
#include <vector>

#include "aurora/netsim.hpp"

namespace aurora::features {

// Per-MI scale-free features: latency gradient (d latency / d time),
// latency ratio (current mean over the running minimum), and sending ratio
// (sent over acked).
struct StatVector {
  double latency_gradient = 0.0;
  double latency_ratio = 1.0;
  double send_ratio = 1.0;
};

// Clipping bounds keeping the features in the network's sensitive range.
inline constexpr double kGradientClip = 10.0;
inline constexpr double kLatencyRatioClip = 1e4;
inline constexpr double kSendRatioClip = 1e3;

// Empty-MI conventions: no acked packets means no latency information
// (gradient 0, ratio 1) and a sending ratio pinned at the upper clip when
// anything was sent.
StatVector compute_stat_vector(const netsim::MiReport& cur, double prev_mean_latency_s,
                               double running_min_latency_s);

// Fixed-length window of the last k+d statistics vectors. The flattened
// state covers the k oldest of those, i.e. it ends d MIs in the past.
class ObservationHistory {
 public:
  ObservationHistory(int k, int d);

  void push(const StatVector& v);
  // Tracks the minimum MI mean latency seen so far; call for acked MIs only.
  void update_min(double mi_mean_latency_s);

  double running_min_latency_s() const { return running_min_latency_; }
  bool has_min() const { return running_min_latency_ > 0.0; }
  int k() const { return k_; }
  int d() const { return d_; }

  // Oldest-first (gradient, ratio-1, send_ratio-1) per MI; length 3k.
  // The rest state (0, 1, 1) maps to zeros.
  std::vector<double> flatten() const;

 private:
  int k_;
  int d_;
  std::deque<StatVector> window_;  // size k+d, oldest first
  double running_min_latency_ = 0.0;
};

std::vector<double> flatten_state(const ObservationHistory& hist);

struct RewardCoefs {
  double throughput = 10.0;     // per packet/second
  double latency_penalty = 1000.0;  // per second
  double loss_penalty = 2000.0;     // per unit loss fraction
};

// 10 * throughput - 1000 * latency - 2000 * loss with the default coefficients.
double reward(double throughput_pps, double latency_s, double loss_fraction,
              const RewardCoefs& coefs = RewardCoefs{});

// Multiplicative rate update damped by alpha: a >= 0 scales by (1 + alpha a),
// a < 0 divides by (1 - alpha a). The two branches are exact inverses.
// Result is clamped to the rate floor. Throws on non-finite a.
double apply_action(double rate_prev_pps, double a, double alpha);

inline constexpr double kDefaultAlpha = 0.025;
inline constexpr double kActionClip = 1e2;

struct ParamRange {
  double min = 0.0;
  double max = 0.0;
};

struct EnvConfig {
  int k = 10;
  int d = 0;
  double alpha = kDefaultAlpha;
  int episode_len = 400;  // MIs per episode

  ParamRange bandwidth_pps{100.0, 500.0};
  ParamRange latency_s{0.05, 0.5};       // end-to-end one-way propagation
  ParamRange queue_pkts{2.0, 2981.0};    // sampled log-uniformly
  ParamRange loss_rate{0.0, 0.05};       // end-to-end random loss
  ParamRange initial_rate_factor{0.30, 1.50};  // x bandwidth

  RewardCoefs reward;

  void validate() const;
};

// Feature pipeline shared by the training env and policy-driven
// controllers: running min, previous-MI latency, history window.
class FeatureTracker {
 public:
  FeatureTracker(int k, int d) : hist_(k, d) {}

  // Folds one report into the window and returns the flattened state.
  std::vector<double> observe(const netsim::MiReport& report);

  const ObservationHistory& history() const { return hist_; }

 private:
  ObservationHistory hist_;
  double prev_mean_latency_ = -1.0;  // <0 until the first acked MI
};

}  // namespace aurora::features
