#include "aurora/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "aurora/util.hpp"

namespace aurora::netsim {

void LinkSpec::validate() const {
  require(bandwidth_pps > 0.0, "link bandwidth must be > 0");
  require(base_latency_s >= 0.0, "link base latency must be >= 0");
  require(queue_size_pkts >= 1, "link queue size must be >= 1");
  require(loss_rate >= 0.0 && loss_rate <= 1.0, "link loss rate must be in [0,1]");
}

LinkState::LinkState(const LinkSpec& spec) : spec_(spec) {
  spec_.validate();
  schedule_ = {{0.0, spec_.bandwidth_pps}};
}

void LinkState::set_bandwidth_schedule(std::vector<BandwidthStep> steps) {
  require(!steps.empty(), "bandwidth schedule must be non-empty");
  require(steps.front().start_s == 0.0, "bandwidth schedule must start at t=0");
  for (size_t i = 0; i < steps.size(); ++i) {
    require(steps[i].bandwidth_pps > 0.0, "scheduled bandwidth must be > 0");
    if (i > 0) require(steps[i].start_s > steps[i - 1].start_s, "bandwidth schedule must be time-sorted");
  }
  schedule_ = std::move(steps);
  spec_.bandwidth_pps = schedule_.front().bandwidth_pps;
}

double LinkState::bandwidth_at(double t) const {
  auto it = std::upper_bound(schedule_.begin(), schedule_.end(), t,
                             [](double v, const BandwidthStep& s) { return v < s.start_s; });
  return std::prev(it)->bandwidth_pps;
}

int LinkState::occupancy(double now) {
  while (!departures_.empty() && departures_.front() <= now) departures_.pop_front();
  return static_cast<int>(departures_.size());
}

ScheduleResult LinkState::enqueue(Packet& pkt, double now, std::mt19937_64& rng) {
  // One uniform draw per packet per lossy link.
  if (spec_.loss_rate > 0.0) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    if (uni(rng) < spec_.loss_rate) {
      pkt.is_dropped = true;
      return {true, 0.0};
    }
  }
  if (occupancy(now) >= spec_.queue_size_pkts) {
    pkt.is_dropped = true;
    return {true, 0.0};
  }
  // The whole packet is served at the rate in effect when its service
  // starts; a capacity change mid-queue re-rates the packets behind it.
  double service_start = std::max(now, next_free_s_);
  double departure = service_start + 1.0 / bandwidth_at(service_start);
  next_free_s_ = departure;
  departures_.push_back(departure);
  max_occupancy_ = std::max(max_occupancy_, static_cast<int>(departures_.size()));
  last_departure_ = departure;
  pkt.latency_s += spec_.base_latency_s + (departure - now);
  return {false, departure};
}

MiStats mi_stats(const MiReport& report) {
  MiStats s;
  if (report.mi_duration_s > 0.0) s.throughput_pps = static_cast<double>(report.acked) / report.mi_duration_s;
  s.latency_s = report.acked > 0 ? report.mean_latency_s : 0.0;
  s.loss = report.sent > 0 ? static_cast<double>(report.lost) / static_cast<double>(report.sent) : 0.0;
  return s;
}

Network::Network(std::vector<LinkSpec> links, std::vector<SenderInit> senders, uint64_t seed)
    : rng_(make_rng(seed, 0)) {
  require(!links.empty(), "network needs at least one link");
  links_.reserve(links.size());
  for (const auto& spec : links) links_.emplace_back(spec);
  senders_.reserve(senders.size());
  for (size_t i = 0; i < senders.size(); ++i) {
    const auto& init = senders[i];
    require(!init.route.empty(), "sender route must be non-empty");
    for (int id : init.route) {
      if (id < 0 || id >= static_cast<int>(links_.size()))
        throw std::invalid_argument("sender route references invalid link id " + std::to_string(id));
    }
    SenderState s;
    s.sender_id = static_cast<int>(i);
    s.rate_pps = std::max(init.initial_rate_pps, kRateFloorPps);
    s.route = init.route;
    senders_.push_back(std::move(s));
  }
}

double Network::route_oneway_prop_s(int sender_id) const {
  const auto& route = senders_.at(sender_id).route;
  double sum = 0.0;
  for (int id : route) sum += links_[id].spec().base_latency_s;
  return sum;
}

double Network::route_rtprop_s(int sender_id) const { return 2.0 * route_oneway_prop_s(sender_id); }

MiReport Network::run_monitor_interval(int sender_id, double rate_pps, double mi_duration_s) {
  require(rate_pps >= kRateFloorPps, "rate must be >= the rate floor");
  require(mi_duration_s > 0.0, "monitor interval duration must be > 0");
  SenderState& sender = senders_.at(sender_id);
  sender.rate_pps = rate_pps;

  const double t0 = clock_;
  const double ack_prop = route_oneway_prop_s(sender_id);
  // Packets at t0 + i/rate for every spacing that starts inside the MI.
  const long long n_send = std::max<long long>(
      1, static_cast<long long>(std::ceil(rate_pps * mi_duration_s - 1e-9)));

  MiReport report;
  report.mi_index = sender.mi_count++;
  report.mi_duration_s = mi_duration_s;
  report.rate_pps = rate_pps;
  report.sent = n_send;
  sender.sent_total += n_send;

  double latency_sum = 0.0;
  for (long long i = 0; i < n_send; ++i) {
    Packet pkt;
    pkt.sender_id = sender_id;
    pkt.send_time_s = t0 + static_cast<double>(i) / rate_pps;
    double t = pkt.send_time_s;
    const auto& route = sender.route;
    bool dropped = false;
    for (size_t hop = 0; hop < route.size(); ++hop) {
      LinkState& link = links_[route[hop]];
      ScheduleResult res = link.enqueue(pkt, t, rng_);
      if (res.dropped) {
        // Loss surfaces when the packet's ack would have arrived:
        // remaining forward propagation plus the reverse path.
        double notice = t;
        for (size_t h = hop; h < route.size(); ++h) notice += links_[route[h]].spec().base_latency_s;
        notice += ack_prop;
        ++report.lost;
        ++sender.lost_total;
        if (observer_) observer_(pkt, notice);
        dropped = true;
        break;
      }
      t = res.departure_s + link.spec().base_latency_s;  // arrival at next hop
    }
    if (!dropped) {
      // Ack retraces the route in reverse: propagation only.
      pkt.latency_s += ack_prop;
      double ack_arrival = t + ack_prop;
      ++report.acked;
      ++sender.acked_total;
      latency_sum += pkt.latency_s;
      if (observer_) observer_(pkt, ack_arrival);
    }
  }
  if (report.acked > 0) report.mean_latency_s = latency_sum / static_cast<double>(report.acked);
  clock_ = t0 + mi_duration_s;
  return report;
}

Network make_network(std::vector<LinkSpec> links, std::vector<SenderInit> senders, uint64_t seed) {
  return Network(std::move(links), std::move(senders), seed);
}

}  // namespace aurora::netsim
