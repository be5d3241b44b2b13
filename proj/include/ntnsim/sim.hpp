#pragma once

#include <span>
#include <string>

#include "ntnsim/metrics.hpp"
#include "ntnsim/phy.hpp"
#include "ntnsim/scenario.hpp"

namespace ntnsim {

/// An in-flight packet as the engine tracks it between a node and the
/// gateway antenna.
struct Transmission {
    int source = -1;
    TimeUs tx_start_us = 0;
    TimeUs airtime_us = 0;
    int sf = 10;
    double rx_power_dbm = 0.0;
    TimeUs prop_delay_us = 0;

    TimeUs arrival_start_us() const { return tx_start_us + prop_delay_us; }
    TimeUs arrival_end_us() const { return arrival_start_us() + airtime_us; }
};

/// Resolves transmissions that overlap at the gateway: shifts each one by its
/// propagation delay and applies the capture rules. Fates are returned in the
/// input order.
CaptureResult gateway_rx_resolve(std::span<const Transmission> txs, TimeUs symbol_us,
                                 const CaptureModel& capture, double min_power_dbm);

struct RunResult {
    MetricsReport report;
    std::string trace_text;  // empty unless keep_trace was requested
};

/// Executes one scenario to completion. Identical (scenario, seed) pairs
/// produce byte-identical reports and equal trace hashes.
RunResult run_scenario(const Scenario& scenario, bool keep_trace = false);

} // namespace ntnsim
