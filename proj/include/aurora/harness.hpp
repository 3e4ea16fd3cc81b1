#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "aurora/baselines.hpp"
#include "aurora/env.hpp"
#include "aurora/features.hpp"
#include "aurora/netsim.hpp"
#include "aurora/policy.hpp"

namespace aurora::harness {

struct CapacityStep {
  double start_s = 0.0;
  double mbps = 0.0;
};

// Capacity redrawn every period from a uniform range; realized per run seed.
struct CapacityRedraw {
  double period_s = 5.0;
  double min_mbps = 16.0;
  double max_mbps = 32.0;
};

// A single-bottleneck scenario. Latency is the end-to-end one-way
// propagation and loss the end-to-end random loss of the data path; the
// capacity schedule is piecewise-constant and quoted in Mbps (1500-byte
// packets).
struct Scenario {
  std::string name;
  double duration_s = 120.0;
  double latency_s = 0.030;
  int queue_pkts = 1000;
  double loss_rate = 0.0;
  std::vector<CapacityStep> capacity_mbps{{0.0, 30.0}};
  std::optional<CapacityRedraw> redraw;
};

// Catalog: static, random-loss, alternating, dynamic-random.
Scenario builtin_scenario(const std::string& name);
std::vector<std::string> builtin_scenario_names();

// Materializes the capacity schedule (draws the redraw sequence when
// present); the result has no pending redraw.
Scenario realize(const Scenario& scenario, uint64_t seed);

// Instantaneous bottleneck capacity of a realized scenario. t must be >= 0.
double oracle_rate_pps(const Scenario& realized, double t_s);
// Time-averaged capacity over [from_s, to_s].
double average_capacity_pps(const Scenario& realized, double from_s, double to_s);

class OracleController : public baselines::Controller {
 public:
  explicit OracleController(Scenario realized);
  double observe(const netsim::MiReport& report, double next_mi_start_s) override;
  double initial_rate_pps() const override;
  std::string name() const override { return "oracle"; }

 private:
  Scenario scenario_;
};

// Drives a trained policy deterministically (mean action) through the same
// feature pipeline the training environment uses.
class PolicyController : public baselines::Controller {
 public:
  PolicyController(policy::GaussianPolicy policy, double initial_rate_pps, std::string label);
  double observe(const netsim::MiReport& report, double next_mi_start_s) override;
  double initial_rate_pps() const override { return initial_rate_; }
  std::string name() const override { return label_; }

 private:
  policy::GaussianPolicy policy_;
  features::FeatureTracker tracker_;
  policy::MlpWorkspace ws_;
  double rate_;
  double initial_rate_;
  std::string label_;
};

// spec is "tcp-like", "oracle", or a policy file path. The policy
// controller's initial rate factor is drawn from the run seed within the
// training range.
std::unique_ptr<baselines::Controller> make_controller(const std::string& spec,
                                                       const Scenario& realized, uint64_t seed);

struct RunSummary {
  std::string controller;
  std::string scenario;
  uint64_t seed = 0;
  double mean_throughput_pps = 0.0;
  double mean_latency_s = 0.0;
  double loss_fraction = 0.0;
  double mean_reward = 0.0;
  double utilization = 0.0;
  long long mis = 0;
};

// Means exclude the first two simulated seconds of warm-up.
inline constexpr double kSummaryWarmupS = 2.0;

// Drives monitor intervals over the schedule; writes the per-MI trace when
// trace_path is non-empty. Deterministic per (scenario, controller, seed).
RunSummary run_scenario(const Scenario& scenario, const std::string& controller_spec,
                        uint64_t seed, const std::string& trace_path);

enum class SweepAxis { kBandwidth, kLatency, kQueue, kLoss };

SweepAxis sweep_axis_from_string(const std::string& s);
std::string to_string(SweepAxis axis);

// Axis units: bandwidth in Mbps, latency in seconds (one-way), queue in
// packets, loss as a fraction.
struct SweepSpec {
  SweepAxis axis = SweepAxis::kBandwidth;
  std::vector<double> values;
  Scenario base;
  std::vector<std::string> controllers;
};

Scenario apply_axis(const Scenario& base, SweepAxis axis, double value);

// One row per (controller, value, seed), sorted. Returns the rows and, when
// out_path is non-empty, writes them as CSV.
std::vector<RunSummary> sweep(const SweepSpec& spec, int seeds_per_point,
                              const std::string& out_path);

// Fig-7 style table: per-controller means over the seeds.
struct CompareRow {
  std::string controller;
  std::string scenario;
  int seeds = 0;
  double mean_throughput_pps = 0.0;
  double mean_latency_s = 0.0;
  double loss_fraction = 0.0;
  double mean_reward = 0.0;
  double utilization = 0.0;
};

std::vector<CompareRow> compare(const Scenario& scenario,
                                const std::vector<std::string>& controllers, int seeds,
                                const std::string& out_path);

}  // namespace aurora::harness
