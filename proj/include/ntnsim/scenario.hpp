#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "ntnsim/channel.hpp"
#include "ntnsim/geo.hpp"
#include "ntnsim/metrics.hpp"
#include "ntnsim/phy.hpp"
#include "ntnsim/traffic.hpp"

namespace ntnsim {

enum class Protocol { fsma, aloha, csma, bsma };

std::string protocol_name(Protocol p);

/// Complete, validated run configuration. Keys carry units in their names;
/// see the presets for the full schema.
struct Scenario {
    std::string id = "scenario";
    Protocol protocol = Protocol::fsma;
    std::uint64_t seed = 1;
    double total_time_s = 600.0;

    LoRaParams lora;
    int chirp_sf = 9;

    double duty_cycle = 0.001;

    int node_count = 16;
    Region region;
    std::vector<GeoPos> explicit_positions;  // overrides region deployment when set

    MobilityModel gateway;

    LinkBudget link;
    EnergyModel energy;
    CaptureModel capture;

    /// Demodulation floor per SF 7..12; the stock SX127x-class values unless
    /// overridden by link.demod_snr_thresholds_db.
    std::array<double, 6> demod_snr_db = {-7.5, -10.0, -12.5, -15.0, -17.5, -20.0};
    double demod_snr(int sf) const { return demod_snr_db.at(static_cast<std::size_t>(sf - 7)); }

    // MAC model parameters
    double hearing_range_m = 10e3;     // node-to-node CAD audibility (CSMA + FSMA verify)
    double min_elevation_deg = 10.0;   // links below this are in outage
    double cad_margin_db = 1.5;
    double cad_overhead_symbols = 0.5; // per-CAD processing cost (energy only)
    double turnaround_s = 0.0;         // sense-to-transmit switch time
    int bsma_tone_sf = 10;

    void validate() const;

    TrafficConfig traffic() const { return TrafficConfig{duty_cycle, total_time_s}; }
};

/// Applies a protocol selector token: "fsma", "aloha", "bsma", "csma"
/// (configured hearing range), or "csma-<N>km" (explicit range).
void apply_protocol_token(Scenario& sc, const std::string& token);

/// Parses scenario text (INI-style sections, '#' comments). Unknown keys,
/// type mismatches and invariant violations name the key and line.
Scenario parse_scenario(const std::string& text, const std::string& origin = "scenario");

/// Loads a built-in preset ("static-16", "drone-25", "leo-pass") or a file.
Scenario load_scenario(const std::string& name_or_path);

std::vector<std::string> preset_names();
std::string preset_text(const std::string& name);

} // namespace ntnsim
