#pragma once

#include <span>
#include <string>

#include "json.hpp"
#include "ntnsim/metrics.hpp"

namespace ntnsim {

/// Full nested report. Key order is fixed so equal reports serialize to
/// identical bytes; the trace hash is emitted as a hex string.
nlohmann::ordered_json report_to_json(const MetricsReport& report);

/// One row per run, stable column order:
/// scenario_id,protocol,seed,node_count,offered_load,throughput_bps,
/// normalized_throughput,prr,channel_usage,energy_ratio_node,
/// gateway_energy_j,gateway_failure_ratio,mean_wait_s
std::string reports_to_csv(std::span<const MetricsReport> reports);

/// Per-(protocol, point) mean and 95% interval across replicates.
std::string sweep_summary_csv(std::span<const MetricsReport> reports);

void write_text_file(const std::string& path, const std::string& content);

} // namespace ntnsim
