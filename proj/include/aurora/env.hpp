#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "aurora/features.hpp"
#include "aurora/netsim.hpp"

namespace aurora::env {

// Parameters drawn at reset. queue_cont is the continuous log-uniform draw
// behind the integer queue size; kept for distribution checks.
struct EpisodeParams {
  double bandwidth_pps = 0.0;
  double latency_s = 0.0;
  double queue_cont = 0.0;
  int queue_pkts = 0;
  double loss_rate = 0.0;
  double initial_rate_pps = 0.0;
};

struct StepResult {
  std::vector<double> state;
  double reward = 0.0;
  bool done = false;
  netsim::MiReport report;
};

// One sender on a two-link path with randomized parameters. Each MI the
// agent picks a damped rate change, the simulator runs one smoothed-RTT
// worth of traffic and the features/reward are computed from the report.
class Env {
 public:
  Env(features::EnvConfig config, uint64_t seed);

  std::vector<double> reset();
  StepResult step(double action);

  bool done() const { return done_; }
  int mi_index() const { return mi_index_; }
  double sim_time_s() const;
  double rate_pps() const { return rate_; }
  double mi_duration_s() const;
  const EpisodeParams& params() const { return params_; }
  const features::EnvConfig& config() const { return config_; }
  int state_dim() const { return 3 * config_.k; }

 private:
  features::EnvConfig config_;
  uint64_t seed_;
  uint64_t episode_ = 0;

  EpisodeParams params_;
  std::unique_ptr<netsim::Network> net_;
  std::unique_ptr<features::FeatureTracker> tracker_;
  double rate_ = netsim::kRateFloorPps;
  double srtt_s_ = 0.0;
  int mi_index_ = 0;
  bool done_ = true;
};

// Smoothed RTT clamp bounds for the monitor-interval duration.
inline constexpr double kMinMiDurationS = 1e-3;
inline constexpr double kMaxMiDurationS = 1.0;
inline constexpr double kSrttSmoothing = 0.875;

inline double clamp_mi_duration(double srtt_s) {
  return std::min(std::max(srtt_s, kMinMiDurationS), kMaxMiDurationS);
}

// Builds the canonical two-link single-sender network: the quoted latency
// is the end-to-end one-way propagation (split across the links) and the
// quoted loss is applied once, at the first link.
netsim::Network make_two_link_network(double bandwidth_pps, double oneway_latency_s,
                                      int queue_pkts, double loss_rate,
                                      double initial_rate_pps, uint64_t seed);

}  // namespace aurora::env
