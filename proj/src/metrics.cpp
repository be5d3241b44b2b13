#include "ntnsim/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "ntnsim/error.hpp"

namespace ntnsim {

void EnergyModel::validate() const {
    if (node_tx_w < 0 || node_rx_cad_w < 0 || node_sleep_w < 0 || gateway_chirp_w < 0 ||
        gateway_tone_w < 0)
        throw ConfigError("energy: power draws must be >= 0");
}

EnergyLedger& EnergyLedger::operator+=(const EnergyLedger& o) {
    tx_j += o.tx_j;
    cad_j += o.cad_j;
    listen_j += o.listen_j;
    sleep_j += o.sleep_j;
    gateway_chirp_j += o.gateway_chirp_j;
    gateway_tone_j += o.gateway_tone_j;
    return *this;
}

void energy_accrue(EnergyLedger& ledger, Activity activity, double duration_s,
                   const EnergyModel& model) {
    if (duration_s < 0)
        throw ConfigError("energy_accrue: duration must be >= 0");
    switch (activity) {
        case Activity::tx: ledger.tx_j += model.node_tx_w * duration_s; break;
        case Activity::cad: ledger.cad_j += model.node_rx_cad_w * duration_s; break;
        case Activity::listen: ledger.listen_j += model.node_rx_cad_w * duration_s; break;
        case Activity::sleep: ledger.sleep_j += model.node_sleep_w * duration_s; break;
        case Activity::gateway_chirp:
            ledger.gateway_chirp_j += model.gateway_chirp_w * duration_s;
            break;
        case Activity::gateway_tone:
            ledger.gateway_tone_j += model.gateway_tone_w * duration_s;
            break;
    }
}

namespace {
double percentile(std::vector<double>& sorted, double p) {
    if (sorted.empty()) return 0.0;
    double idx = p * (static_cast<double>(sorted.size()) - 1.0);
    auto lo = static_cast<std::size_t>(idx);
    if (lo + 1 >= sorted.size()) return sorted.back();
    double f = idx - static_cast<double>(lo);
    return sorted[lo] * (1.0 - f) + sorted[lo + 1] * f;
}
} // namespace

void compute_metrics(MetricsReport& r, const std::vector<NodeCounters>& nodes,
                     const std::vector<double>& waits, const GatewayTallies& gw,
                     const EnergyModel& energy) {
    r.buffered = r.transmitted = r.decoded = 0;
    r.lost_collision = r.lost_detect = r.lost_link = 0;
    r.node_energy_total = EnergyLedger{};
    for (const auto& n : nodes) {
        r.buffered += n.buffered;
        r.transmitted += n.transmitted;
        r.decoded += n.decoded;
        r.lost_collision += n.lost_collision;
        r.lost_detect += n.lost_detect;
        r.lost_link += n.lost_link;
        r.node_energy_total += n.energy;
    }
    if (r.transmitted != r.decoded + r.lost_collision + r.lost_detect + r.lost_link)
        throw SimError("compute_metrics: outcome conservation violated");
    r.undelivered = r.buffered - r.transmitted;
    r.per_node = nodes;
    r.detected_at_gateway = gw.detected;

    r.offered_load = static_cast<double>(r.buffered) * r.airtime_s / r.total_time_s;
    r.throughput_bps = static_cast<double>(gw.decoded_payload_bits) / r.total_time_s;
    double capacity_bps = 8.0 * static_cast<double>(r.payload_bytes) / r.airtime_s;
    r.normalized_throughput = capacity_bps > 0 ? r.throughput_bps / capacity_bps : 0.0;
    r.prr = r.transmitted > 0
                ? static_cast<double>(r.decoded) / static_cast<double>(r.transmitted)
                : 0.0;
    r.channel_usage = gw.busy_union_s / r.total_time_s;

    double node_energy = r.node_energy_total.tx_j + r.node_energy_total.cad_j +
                         r.node_energy_total.listen_j;
    double single_tx_j = energy.node_tx_w * r.airtime_s;
    if (r.decoded > 0) {
        r.energy_per_success_j = node_energy / static_cast<double>(r.decoded);
        r.energy_ratio_node = r.energy_per_success_j / single_tx_j;
    } else {
        r.energy_per_success_j = std::numeric_limits<double>::infinity();
        r.energy_ratio_node =
            node_energy > 0 ? std::numeric_limits<double>::infinity() : 0.0;
    }

    r.gateway_chirp_energy_j = gw.gateway_energy.gateway_chirp_j;
    r.gateway_tone_energy_j = gw.gateway_energy.gateway_tone_j;
    r.gateway_extra_energy_j = gw.gateway_energy.total_j();
    r.gateway_failure_ratio =
        gw.detected > 0
            ? static_cast<double>(gw.detected - r.decoded) / static_cast<double>(gw.detected)
            : 0.0;
    r.chirp_count = gw.chirp_count;
    r.tone_time_s = gw.tone_time_s;
    r.max_txstart_spread_colliding_s = gw.max_txstart_spread_colliding_s;

    std::vector<double> sorted = waits;
    std::sort(sorted.begin(), sorted.end());
    double sum = 0.0;
    for (double w : sorted) sum += w;
    r.mean_wait_s = sorted.empty() ? 0.0 : sum / static_cast<double>(sorted.size());
    r.p50_wait_s = percentile(sorted, 0.50);
    r.p95_wait_s = percentile(sorted, 0.95);
}

} // namespace ntnsim
