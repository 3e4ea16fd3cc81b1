#pragma once

#include <memory>
#include <string>

#include "aurora/netsim.hpp"

namespace aurora::baselines {

// Uniform contract the harness drives: fold in the last interval's report,
// return the rate for the next interval. next_mi_start_s is the simulated
// time at which that rate takes effect.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual double observe(const netsim::MiReport& report, double next_mi_start_s) = 0;
  virtual double initial_rate_pps() const = 0;
  virtual std::string name() const = 0;
};

enum class AimdPhase { kSlowStart, kCongestionAvoidance };

struct AimdState {
  double cwnd_pkts = 10.0;
  double ssthresh_pkts = 1e9;
  double rtt_estimate_s = 0.1;
  AimdPhase phase = AimdPhase::kSlowStart;
};

inline constexpr double kRttSmoothing = 0.875;

// Loss-halving window control: any loss in the interval halves the window;
// otherwise the window doubles per RTT in slow start and grows by one
// packet per RTT in congestion avoidance. Returned rate is cwnd over the
// smoothed RTT estimate.
std::pair<AimdState, double> aimd_step(const AimdState& state, const netsim::MiReport& report);

class TcpLikeController : public Controller {
 public:
  explicit TcpLikeController(double rtt_init_s);
  double observe(const netsim::MiReport& report, double next_mi_start_s) override;
  double initial_rate_pps() const override;
  std::string name() const override { return "tcp-like"; }
  const AimdState& state() const { return state_; }

 private:
  AimdState state_;
};

}  // namespace aurora::baselines
