#include "aurora/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace aurora::baselines {

std::pair<AimdState, double> aimd_step(const AimdState& state, const netsim::MiReport& report) {
  AimdState next = state;
  if (report.acked > 0) {
    next.rtt_estimate_s =
        kRttSmoothing * next.rtt_estimate_s + (1.0 - kRttSmoothing) * report.mean_latency_s;
  }
  if (report.lost > 0) {
    next.ssthresh_pkts = std::max(2.0, state.cwnd_pkts / 2.0);
    next.cwnd_pkts = next.ssthresh_pkts;
    next.phase = AimdPhase::kCongestionAvoidance;
  } else {
    // Growth is expressed per RTT; an interval spanning r RTTs grows by
    // the r-th power (slow start) or r packets (congestion avoidance).
    const double rtts = report.mi_duration_s / std::max(next.rtt_estimate_s, 1e-9);
    if (next.phase == AimdPhase::kSlowStart) {
      next.cwnd_pkts = state.cwnd_pkts * std::pow(2.0, rtts);
      if (next.cwnd_pkts >= next.ssthresh_pkts) {
        next.cwnd_pkts = next.ssthresh_pkts;
        next.phase = AimdPhase::kCongestionAvoidance;
      }
    } else {
      next.cwnd_pkts = state.cwnd_pkts + rtts;
    }
  }
  next.cwnd_pkts = std::max(1.0, next.cwnd_pkts);
  const double rate = next.cwnd_pkts / std::max(next.rtt_estimate_s, 1e-9);
  return {next, std::max(rate, netsim::kRateFloorPps)};
}

TcpLikeController::TcpLikeController(double rtt_init_s) {
  state_.rtt_estimate_s = std::max(rtt_init_s, 1e-9);
}

double TcpLikeController::observe(const netsim::MiReport& report, double) {
  auto [next, rate] = aimd_step(state_, report);
  state_ = next;
  return rate;
}

double TcpLikeController::initial_rate_pps() const {
  return std::max(state_.cwnd_pkts / state_.rtt_estimate_s, netsim::kRateFloorPps);
}

}  // namespace aurora::baselines
