#include "ntnsim/traffic.hpp"

#include "ntnsim/error.hpp"

namespace ntnsim {

void TrafficConfig::validate() const {
    if (duty_cycle < 0.0 || duty_cycle > 1.0)
        throw ConfigError("traffic.duty_cycle: must be in [0,1], got " +
                          std::to_string(duty_cycle));
    if (total_time_s <= 0.0)
        throw ConfigError("traffic.total_time_s: must be > 0");
}

std::vector<double> poisson_arrivals(const TrafficConfig& cfg, double airtime_s,
                                     RngStream& rng) {
    cfg.validate();
    std::vector<double> out;
    if (cfg.duty_cycle <= 0.0) return out;
    double rate = cfg.duty_cycle / airtime_s;
    double t = rng.exponential(rate);
    while (t < cfg.total_time_s) {
        out.push_back(t);
        t += rng.exponential(rate);
    }
    return out;
}

double offered_load(std::int64_t buffered_packets, double airtime_s, double total_time_s) {
    if (buffered_packets < 0)
        throw ConfigError("offered_load: packet count must be >= 0");
    return static_cast<double>(buffered_packets) * airtime_s / total_time_s;
}

} // namespace ntnsim
