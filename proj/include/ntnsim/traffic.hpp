#pragma once

#include <cstdint>
#include <vector>

#include "ntnsim/rng.hpp"

namespace ntnsim {

/// Offered traffic per node. The per-node Poisson arrival rate is
/// duty_cycle / packet_airtime, so node_count * duty_cycle is the offered
/// network load relative to single-channel capacity.
struct TrafficConfig {
    double duty_cycle = 0.001;
    double total_time_s = 600.0;

    void validate() const;
};

/// Poisson arrival times for one node over [0, total_time).
std::vector<double> poisson_arrivals(const TrafficConfig& cfg, double airtime_s,
                                     RngStream& rng);

/// Buffered traffic volume over gateway single-channel capacity.
double offered_load(std::int64_t buffered_packets, double airtime_s, double total_time_s);

} // namespace ntnsim
