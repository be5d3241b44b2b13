#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "ntnsim/phy.hpp"
#include "ntnsim/rng.hpp"
#include "ntnsim/time.hpp"

namespace ntnsim {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

/// Link budget shared by uplink (node -> gateway) and downlink
/// (gateway -> node); only the transmit power differs per direction.
struct LinkBudget {
    double node_tx_power_dbm = 22.0;
    double gateway_tx_power_dbm = 22.0;
    double node_antenna_gain_dbi = 2.15;
    double gateway_antenna_gain_dbi = 2.15;
    double carrier_hz = 430e6;
    double noise_figure_db = 6.0;
    double shadowing_sigma_db = 0.0;
    double shadow_epoch_s = 10.0;   // shadowing redrawn per (node, epoch)
    double extra_attenuation_db = 0.0;  // fixed per-link pad (emulated attenuators)

    void validate() const;
};

enum class LinkDirection { uplink, downlink };

struct LinkSample {
    double distance_m = 0.0;
    double rx_power_dbm = 0.0;
    double snr_db = 0.0;
    double prop_delay_s = 0.0;
};

/// Free-space path loss, 20 log10(d_km) + 20 log10(f_MHz) + 32.45.
double path_loss_db(double distance_m, double carrier_hz);

/// Thermal noise floor -174 + 10 log10(bw) + NF, in dBm.
double noise_floor_dbm(double bw_hz, double noise_figure_db);

/// Received power / SNR / delay at the given distance. shadow_db is the
/// slow-fading term for this link epoch (0 when sigma = 0); reciprocity is
/// assumed, so callers apply the same value in both directions.
LinkSample rx_snr(const LinkBudget& budget, LinkDirection dir, double distance_m,
                  double bw_hz, double shadow_db = 0.0);

double propagation_delay_s(double distance_m);
TimeUs propagation_delay_us(double distance_m);

/// 2 * (max - min) propagation delay over a set of gateway distances: the
/// worst-case gateway arrival offset among transmissions triggered by the
/// same free chirp. Needs at least two entries.
double arrival_delay_spread_s(std::span<const double> distances_m);

/// Detection probability of a chirp at the given SNR: 0 below the demod
/// floor minus margin, 1 above floor plus margin, linear in between.
double cad_detect_probability(double snr_db, int chirp_sf, double margin_db = 1.5);

/// Same ramp against an explicit threshold (for configured floor tables).
double cad_detect_probability_at(double snr_db, double threshold_db, double margin_db);

/// One CAD operation. No signal present -> always false, with no draw
/// consumed (zero false positives). Otherwise true with the ramp probability.
bool cad_detect(std::optional<double> signal_snr_db, int chirp_sf, RngStream& rng,
                double margin_db = 1.5);

/// Preamble-detection delay at the gateway: uniform integer symbol count in
/// [preamble_detect_symbols_min, max].
int preamble_detect_delay_symbols(const CaptureModel& capture, RngStream& rng);

/// Log-normal shadowing for (node, epoch); order-independent by construction.
double shadow_db_for_epoch(const LinkBudget& budget, std::uint64_t channel_seed,
                           std::uint64_t node_id, TimeUs now_us);

} // namespace ntnsim
