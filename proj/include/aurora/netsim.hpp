#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <random>
#include <vector>

namespace aurora::netsim {

// Mbps <-> packets/second with the 1500-byte packet convention.
inline constexpr double kPacketBytes = 1500.0;
inline double mbps_to_pps(double mbps) { return mbps * 1e6 / (kPacketBytes * 8.0); }
inline double pps_to_mbps(double pps) { return pps * kPacketBytes * 8.0 / 1e6; }

inline constexpr double kRateFloorPps = 1.0;

// One step of a piecewise-constant capacity schedule.
struct BandwidthStep {
  double start_s;
  double bandwidth_pps;
};

struct LinkSpec {
  double bandwidth_pps = 0.0;   // service rate
  double base_latency_s = 0.0;  // one-way propagation
  int queue_size_pkts = 1;      // max occupancy, including the packet in service
  double loss_rate = 0.0;       // independent per-packet drop probability

  void validate() const;
};

struct Packet {
  int sender_id = 0;
  double send_time_s = 0.0;
  double latency_s = 0.0;  // accumulated propagation + queueing
  bool is_dropped = false;
};

struct ScheduleResult {
  bool dropped = false;
  double departure_s = 0.0;  // service completion; valid when !dropped
};

// FIFO queue with a fixed-size buffer and optional capacity schedule.
// Packets are dropped on entry by the random-loss draw or a full buffer;
// drops never occupy the queue.
class LinkState {
 public:
  explicit LinkState(const LinkSpec& spec);

  // Replaces the constant rate with a schedule. Steps must be sorted by
  // start time; the first step must start at 0.
  void set_bandwidth_schedule(std::vector<BandwidthStep> steps);
  double bandwidth_at(double t) const;

  // `now` must be non-decreasing across calls (FIFO arrivals).
  ScheduleResult enqueue(Packet& pkt, double now, std::mt19937_64& rng);

  const LinkSpec& spec() const { return spec_; }
  int occupancy(double now);

  // test hooks
  int max_occupancy_seen() const { return max_occupancy_; }
  double last_departure_s() const { return last_departure_; }

 private:
  LinkSpec spec_;
  std::vector<BandwidthStep> schedule_;
  double next_free_s_ = 0.0;
  std::deque<double> departures_;  // pending service completions, ascending
  int max_occupancy_ = 0;
  double last_departure_ = -std::numeric_limits<double>::infinity();
};

struct SenderInit {
  std::vector<int> route;  // link ids, data path; acks retrace it in reverse
  double initial_rate_pps = kRateFloorPps;
};

struct SenderState {
  int sender_id = 0;
  double rate_pps = kRateFloorPps;
  std::vector<int> route;
  // cumulative counters, for packet-conservation checks
  long long sent_total = 0;
  long long acked_total = 0;
  long long lost_total = 0;
  int mi_count = 0;
};

struct MiReport {
  int mi_index = 0;
  double mi_duration_s = 0.0;
  long long sent = 0;
  long long acked = 0;
  long long lost = 0;
  double mean_latency_s = 0.0;  // over acked packets; 0 when acked == 0
  double rate_pps = 0.0;        // rate used during the interval
};

struct MiStats {
  double throughput_pps = 0.0;
  double latency_s = 0.0;
  double loss = 0.0;
};

// throughput = acked/duration, latency = mean over acked (0 if none),
// loss = lost/sent (0 if nothing sent).
MiStats mi_stats(const MiReport& report);

// Packet-level simulation of senders pushing packets through FIFO links.
// Data packets traverse the route in order, paying propagation, queueing
// and service at each link; acks retrace the route in reverse paying
// propagation only. A drop is reported to the sender at the time the
// packet's acknowledgement would have arrived (propagation only).
class Network {
 public:
  Network(std::vector<LinkSpec> links, std::vector<SenderInit> senders, uint64_t seed);

  // Sends at uniform 1/rate spacing for mi_duration of simulated time and
  // resolves every packet of the interval (ack or loss report) before
  // returning. The clock advances by exactly mi_duration; in-flight tails
  // interact with later intervals through the link queues.
  MiReport run_monitor_interval(int sender_id, double rate_pps, double mi_duration_s);

  double clock_s() const { return clock_; }
  // Round-trip propagation of a sender's route (both directions).
  double route_rtprop_s(int sender_id) const;
  double route_oneway_prop_s(int sender_id) const;

  size_t link_count() const { return links_.size(); }
  LinkState& link(int i) { return links_.at(i); }
  const SenderState& sender(int i) const { return senders_.at(i); }

  // Called once per resolved packet with its resolution time (ack arrival
  // or loss report). Test instrumentation; default off.
  void set_packet_observer(std::function<void(const Packet&, double)> obs) {
    observer_ = std::move(obs);
  }

 private:
  std::vector<LinkState> links_;
  std::vector<SenderState> senders_;
  double clock_ = 0.0;
  std::mt19937_64 rng_;
  std::function<void(const Packet&, double)> observer_;
};

Network make_network(std::vector<LinkSpec> links, std::vector<SenderInit> senders, uint64_t seed);

}  // namespace aurora::netsim
