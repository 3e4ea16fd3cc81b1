#include "aurora/features.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "aurora/util.hpp"

namespace aurora::features {

namespace {
double clip(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }
}  // namespace

StatVector compute_stat_vector(const netsim::MiReport& cur, double prev_mean_latency_s,
                               double running_min_latency_s) {
  StatVector v;
  if (cur.acked > 0 && prev_mean_latency_s > 0.0 && cur.mi_duration_s > 0.0) {
    v.latency_gradient = (cur.mean_latency_s - prev_mean_latency_s) / cur.mi_duration_s;
  }
  if (cur.acked > 0 && running_min_latency_s > 0.0) {
    v.latency_ratio = cur.mean_latency_s / running_min_latency_s;
  }
  if (cur.acked > 0) {
    v.send_ratio = static_cast<double>(cur.sent) / static_cast<double>(cur.acked);
  } else if (cur.sent > 0) {
    v.send_ratio = kSendRatioClip;
  }
  v.latency_gradient = clip(v.latency_gradient, -kGradientClip, kGradientClip);
  v.latency_ratio = clip(v.latency_ratio, 1.0, kLatencyRatioClip);
  v.send_ratio = clip(v.send_ratio, 1.0, kSendRatioClip);
  return v;
}

ObservationHistory::ObservationHistory(int k, int d) : k_(k), d_(d) {
  require(k >= 1, "history length k must be >= 1");
  require(d >= 0, "observation delay d must be >= 0");
  window_.assign(static_cast<size_t>(k_ + d_), StatVector{});  // rest-state padding
}

void ObservationHistory::push(const StatVector& v) {
  window_.pop_front();
  window_.push_back(v);
}

void ObservationHistory::update_min(double mi_mean_latency_s) {
  if (mi_mean_latency_s <= 0.0) return;
  if (running_min_latency_ <= 0.0 || mi_mean_latency_s < running_min_latency_)
    running_min_latency_ = mi_mean_latency_s;
}

std::vector<double> ObservationHistory::flatten() const {
  std::vector<double> out;
  out.reserve(static_cast<size_t>(3 * k_));
  for (int i = 0; i < k_; ++i) {
    const StatVector& v = window_[static_cast<size_t>(i)];
    out.push_back(v.latency_gradient);
    out.push_back(v.latency_ratio - 1.0);
    out.push_back(v.send_ratio - 1.0);
  }
  return out;
}

std::vector<double> flatten_state(const ObservationHistory& hist) { return hist.flatten(); }

double reward(double throughput_pps, double latency_s, double loss_fraction,
              const RewardCoefs& coefs) {
  return coefs.throughput * throughput_pps - coefs.latency_penalty * latency_s -
         coefs.loss_penalty * loss_fraction;
}

double apply_action(double rate_prev_pps, double a, double alpha) {
  if (!std::isfinite(a)) throw std::invalid_argument("action must be finite");
  double rate = a >= 0.0 ? rate_prev_pps * (1.0 + alpha * a) : rate_prev_pps / (1.0 - alpha * a);
  return std::max(rate, netsim::kRateFloorPps);
}

void EnvConfig::validate() const {
  require(k >= 1, "k must be >= 1");
  require(d >= 0, "d must be >= 0");
  require(alpha > 0.0, "alpha must be > 0");
  require(episode_len >= 1, "episode_len must be >= 1");
  auto check_range = [](const ParamRange& r, const char* name, double lo) {
    require(r.min >= lo && r.max >= r.min, std::string(name) + " range must satisfy min <= max");
  };
  check_range(bandwidth_pps, "bandwidth", 1e-9);
  require(bandwidth_pps.min > 0.0, "bandwidth must be positive");
  check_range(latency_s, "latency", 0.0);
  check_range(queue_pkts, "queue", 1.0);
  check_range(loss_rate, "loss", 0.0);
  require(loss_rate.max <= 1.0, "loss rate must be <= 1");
  check_range(initial_rate_factor, "initial rate factor", 1e-9);
}

std::vector<double> FeatureTracker::observe(const netsim::MiReport& report) {
  if (report.acked > 0) hist_.update_min(report.mean_latency_s);
  StatVector v = compute_stat_vector(report, prev_mean_latency_, hist_.running_min_latency_s());
  if (report.acked > 0) prev_mean_latency_ = report.mean_latency_s;
  hist_.push(v);
  return hist_.flatten();
}

}  // namespace aurora::features
