#include "aurora/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "aurora/util.hpp"

namespace aurora::env {

using netsim::LinkSpec;
using netsim::SenderInit;

netsim::Network make_two_link_network(double bandwidth_pps, double oneway_latency_s,
                                      int queue_pkts, double loss_rate,
                                      double initial_rate_pps, uint64_t seed) {
  LinkSpec first{bandwidth_pps, oneway_latency_s / 2.0, queue_pkts, loss_rate};
  LinkSpec second{bandwidth_pps, oneway_latency_s / 2.0, queue_pkts, 0.0};
  return netsim::make_network({first, second}, {SenderInit{{0, 1}, initial_rate_pps}}, seed);
}

Env::Env(features::EnvConfig config, uint64_t seed) : config_(std::move(config)), seed_(seed) {
  config_.validate();
}

double Env::sim_time_s() const { return net_ ? net_->clock_s() : 0.0; }

double Env::mi_duration_s() const { return clamp_mi_duration(srtt_s_); }

std::vector<double> Env::reset() {
  auto rng = make_rng(seed_, episode_);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  auto sample = [&](const features::ParamRange& r) { return r.min + (r.max - r.min) * uni(rng); };

  params_.bandwidth_pps = sample(config_.bandwidth_pps);
  params_.latency_s = sample(config_.latency_s);
  double log_q = std::log(config_.queue_pkts.min) +
                 (std::log(config_.queue_pkts.max) - std::log(config_.queue_pkts.min)) * uni(rng);
  params_.queue_cont = std::exp(log_q);
  params_.queue_pkts = std::max(1, static_cast<int>(std::llround(params_.queue_cont)));
  params_.loss_rate = sample(config_.loss_rate);
  params_.initial_rate_pps = sample(config_.initial_rate_factor) * params_.bandwidth_pps;

  net_ = std::make_unique<netsim::Network>(make_two_link_network(
      params_.bandwidth_pps, params_.latency_s, params_.queue_pkts, params_.loss_rate,
      params_.initial_rate_pps, mix_seed(seed_, episode_ * 2 + 1)));
  tracker_ = std::make_unique<features::FeatureTracker>(config_.k, config_.d);
  rate_ = std::max(params_.initial_rate_pps, netsim::kRateFloorPps);
  srtt_s_ = net_->route_rtprop_s(0);
  mi_index_ = 0;
  done_ = false;
  ++episode_;
  return std::vector<double>(static_cast<size_t>(state_dim()), 0.0);
}

StepResult Env::step(double action) {
  if (done_) throw std::logic_error("step() called on a finished episode; call reset()");
  double a = std::min(std::max(action, -features::kActionClip), features::kActionClip);
  rate_ = features::apply_action(rate_, a, config_.alpha);

  double mi = clamp_mi_duration(srtt_s_);
  netsim::MiReport report = net_->run_monitor_interval(0, rate_, mi);
  netsim::MiStats stats = netsim::mi_stats(report);
  if (report.acked > 0)
    srtt_s_ = kSrttSmoothing * srtt_s_ + (1.0 - kSrttSmoothing) * report.mean_latency_s;

  StepResult out;
  out.state = tracker_->observe(report);
  out.reward = features::reward(stats.throughput_pps, stats.latency_s, stats.loss, config_.reward);
  out.report = report;
  ++mi_index_;
  done_ = mi_index_ >= config_.episode_len;
  out.done = done_;
  return out;
}

}  // namespace aurora::env
