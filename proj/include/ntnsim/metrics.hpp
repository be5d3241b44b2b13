#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "ntnsim/time.hpp"

namespace ntnsim {

/// Device power draws. Absolute values are configuration; the evaluation
/// criteria compare ratios.
struct EnergyModel {
    double node_tx_w = 0.4;        // 22 dBm PA class
    double node_rx_cad_w = 0.05;
    double node_sleep_w = 1e-6;
    double gateway_chirp_w = 0.4;
    double gateway_tone_w = 0.4;   // BSMA busy tone

    void validate() const;
};

enum class Activity { tx, cad, listen, sleep, gateway_chirp, gateway_tone };

/// Itemized energy account; the total is always the sum of the items.
struct EnergyLedger {
    double tx_j = 0, cad_j = 0, listen_j = 0, sleep_j = 0;
    double gateway_chirp_j = 0, gateway_tone_j = 0;

    double total_j() const {
        return tx_j + cad_j + listen_j + sleep_j + gateway_chirp_j + gateway_tone_j;
    }
    EnergyLedger& operator+=(const EnergyLedger& o);
};

void energy_accrue(EnergyLedger& ledger, Activity activity, double duration_s,
                   const EnergyModel& model);

/// Raw per-node outcome counters; conservation requires
/// transmitted == decoded + lost_collision + lost_detect + lost_link.
struct NodeCounters {
    std::int64_t buffered = 0;     // packets that entered the queue
    std::int64_t transmitted = 0;
    std::int64_t decoded = 0;
    std::int64_t lost_collision = 0;
    std::int64_t lost_detect = 0;
    std::int64_t lost_link = 0;
    std::int64_t cad_ops = 0;
    std::int64_t backoffs = 0;
    double wait_sum_s = 0.0;       // sum of (tx_start - arrival) over transmitted
    EnergyLedger energy;
};

/// Per-run aggregate in the shape the results writers emit.
struct MetricsReport {
    std::string scenario_id;
    std::string protocol;
    std::uint64_t seed = 0;
    int node_count = 0;
    double duty_cycle = 0.0;
    double total_time_s = 0.0;
    double airtime_s = 0.0;        // node packet airtime
    int payload_bytes = 0;

    // traffic and outcome totals
    std::int64_t buffered = 0;
    std::int64_t transmitted = 0;
    std::int64_t decoded = 0;
    std::int64_t lost_collision = 0;
    std::int64_t lost_detect = 0;
    std::int64_t lost_link = 0;
    std::int64_t undelivered = 0;  // still queued when the run ended
    std::int64_t detected_at_gateway = 0;

    // headline metrics
    double offered_load = 0.0;         // buffered * airtime / total_time
    double throughput_bps = 0.0;
    double normalized_throughput = 0.0;
    double prr = 0.0;
    double channel_usage = 0.0;
    double energy_per_success_j = 0.0; // +inf sentinel when decoded == 0
    double energy_ratio_node = 0.0;    // energy_per_success / single-tx energy
    double gateway_extra_energy_j = 0.0;
    double gateway_failure_ratio = 0.0;
    double mean_wait_s = 0.0;
    double p50_wait_s = 0.0;
    double p95_wait_s = 0.0;

    // protocol-side detail
    std::int64_t chirp_count = 0;
    double gateway_chirp_energy_j = 0.0;
    double gateway_tone_energy_j = 0.0;
    double tone_time_s = 0.0;
    double max_txstart_spread_colliding_s = 0.0;  // empirical collision window
    double t_nsense_s = 0.0;                      // 0 for non-FSMA runs
    double t_nsense_node_symbols = 0.0;

    std::uint64_t trace_hash = 0;

    EnergyLedger node_energy_total;
    std::vector<NodeCounters> per_node;
};

/// Folds per-node counters, wait samples and gateway-side tallies into the
/// report metrics; throws on conservation violations.
struct GatewayTallies {
    std::int64_t detected = 0;
    std::int64_t decoded_payload_bits = 0;
    double busy_union_s = 0.0;   // union of detectable arrival intervals
    std::int64_t chirp_count = 0;
    EnergyLedger gateway_energy;
    double tone_time_s = 0.0;
    double max_txstart_spread_colliding_s = 0.0;
};

void compute_metrics(MetricsReport& report, const std::vector<NodeCounters>& nodes,
                     const std::vector<double>& wait_samples_s,
                     const GatewayTallies& gw, const EnergyModel& energy);

} // namespace ntnsim
