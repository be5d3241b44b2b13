#include "ntnsim/results.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <vector>

#include "ntnsim/error.hpp"

namespace ntnsim {

using nlohmann::ordered_json;

namespace {

ordered_json ledger_json(const EnergyLedger& e) {
    return ordered_json{{"tx_j", e.tx_j},
                        {"cad_j", e.cad_j},
                        {"listen_j", e.listen_j},
                        {"sleep_j", e.sleep_j},
                        {"gateway_chirp_j", e.gateway_chirp_j},
                        {"gateway_tone_j", e.gateway_tone_j},
                        {"total_j", e.total_j()}};
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

} // namespace

ordered_json report_to_json(const MetricsReport& r) {
    ordered_json j;
    j["scenario_id"] = r.scenario_id;
    j["protocol"] = r.protocol;
    j["seed"] = r.seed;
    j["node_count"] = r.node_count;
    j["duty_cycle"] = r.duty_cycle;
    j["total_time_s"] = r.total_time_s;
    j["airtime_s"] = r.airtime_s;
    j["payload_bytes"] = r.payload_bytes;
    j["counters"] = ordered_json{{"buffered", r.buffered},
                                 {"transmitted", r.transmitted},
                                 {"decoded", r.decoded},
                                 {"lost_collision", r.lost_collision},
                                 {"lost_detect", r.lost_detect},
                                 {"lost_link", r.lost_link},
                                 {"undelivered", r.undelivered},
                                 {"detected_at_gateway", r.detected_at_gateway}};
    j["metrics"] = ordered_json{{"offered_load", r.offered_load},
                                {"throughput_bps", r.throughput_bps},
                                {"normalized_throughput", r.normalized_throughput},
                                {"prr", r.prr},
                                {"channel_usage", r.channel_usage},
                                {"energy_per_success_j", r.energy_per_success_j},
                                {"energy_ratio_node", r.energy_ratio_node},
                                {"gateway_extra_energy_j", r.gateway_extra_energy_j},
                                {"gateway_failure_ratio", r.gateway_failure_ratio},
                                {"mean_wait_s", r.mean_wait_s},
                                {"p50_wait_s", r.p50_wait_s},
                                {"p95_wait_s", r.p95_wait_s}};
    j["gateway"] = ordered_json{{"chirp_count", r.chirp_count},
                                {"chirp_energy_j", r.gateway_chirp_energy_j},
                                {"tone_energy_j", r.gateway_tone_energy_j},
                                {"tone_time_s", r.tone_time_s},
                                {"max_txstart_spread_colliding_s",
                                 r.max_txstart_spread_colliding_s},
                                {"t_nsense_s", r.t_nsense_s},
                                {"t_nsense_node_symbols", r.t_nsense_node_symbols}};
    j["node_energy"] = ledger_json(r.node_energy_total);
    char hash[24];
    std::snprintf(hash, sizeof hash, "0x%016llx",
                  static_cast<unsigned long long>(r.trace_hash));
    j["trace_hash"] = hash;
    ordered_json per_node = ordered_json::array();
    for (const NodeCounters& n : r.per_node) {
        per_node.push_back(ordered_json{{"buffered", n.buffered},
                                        {"transmitted", n.transmitted},
                                        {"decoded", n.decoded},
                                        {"lost_collision", n.lost_collision},
                                        {"lost_detect", n.lost_detect},
                                        {"lost_link", n.lost_link},
                                        {"cad_ops", n.cad_ops},
                                        {"backoffs", n.backoffs},
                                        {"wait_sum_s", n.wait_sum_s},
                                        {"energy", ledger_json(n.energy)}});
    }
    j["per_node"] = std::move(per_node);
    return j;
}

static const char* kCsvHeader =
    "scenario_id,protocol,seed,node_count,offered_load,throughput_bps,"
    "normalized_throughput,prr,channel_usage,energy_ratio_node,gateway_energy_j,"
    "gateway_failure_ratio,mean_wait_s";

std::string reports_to_csv(std::span<const MetricsReport> reports) {
    std::string out = kCsvHeader;
    out.push_back('\n');
    for (const MetricsReport& r : reports) {
        out += r.scenario_id + "," + r.protocol + "," + std::to_string(r.seed) + "," +
               std::to_string(r.node_count) + "," + fmt(r.offered_load) + "," +
               fmt(r.throughput_bps) + "," + fmt(r.normalized_throughput) + "," + fmt(r.prr) +
               "," + fmt(r.channel_usage) + "," + fmt(r.energy_ratio_node) + "," +
               fmt(r.gateway_extra_energy_j) + "," + fmt(r.gateway_failure_ratio) + "," +
               fmt(r.mean_wait_s) + "\n";
    }
    return out;
}

std::string sweep_summary_csv(std::span<const MetricsReport> reports) {
    struct Acc {
        int n = 0;
        std::map<std::string, std::vector<double>> values;
    };
    // Key: protocol + node_count + duty (covers both sweep axes).
    std::map<std::tuple<std::string, int, double>, Acc> groups;
    static const char* metric_names[] = {"throughput_bps",   "normalized_throughput",
                                         "prr",              "channel_usage",
                                         "energy_ratio_node", "gateway_energy_j",
                                         "gateway_failure_ratio", "mean_wait_s"};
    for (const MetricsReport& r : reports) {
        Acc& a = groups[{r.protocol, r.node_count, r.duty_cycle}];
        a.n += 1;
        double vals[] = {r.throughput_bps,   r.normalized_throughput, r.prr,
                         r.channel_usage,    r.energy_ratio_node,     r.gateway_extra_energy_j,
                         r.gateway_failure_ratio, r.mean_wait_s};
        for (std::size_t i = 0; i < std::size(metric_names); ++i)
            a.values[metric_names[i]].push_back(vals[i]);
    }

    std::string out = "protocol,node_count,duty_cycle,replicates";
    for (const char* m : metric_names) {
        out += std::string(",") + m + "_mean," + m + "_ci95";
    }
    out.push_back('\n');
    for (const auto& [key, acc] : groups) {
        const auto& [proto, nodes, duty] = key;
        out += proto + "," + std::to_string(nodes) + "," + fmt(duty) + "," +
               std::to_string(acc.n);
        for (const char* m : metric_names) {
            const std::vector<double>& v = acc.values.at(m);
            double mean = 0;
            for (double x : v) mean += x;
            mean /= static_cast<double>(v.size());
            double var = 0;
            for (double x : v) var += (x - mean) * (x - mean);
            double ci = 0;
            if (v.size() > 1) {
                var /= static_cast<double>(v.size() - 1);
                ci = 1.96 * std::sqrt(var / static_cast<double>(v.size()));
            }
            out += "," + fmt(mean) + "," + fmt(ci);
        }
        out.push_back('\n');
    }
    return out;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot open '" + path + "' for writing");
    out << content;
    if (!out)
        throw ConfigError("write failed for '" + path + "'");
}

} // namespace ntnsim
