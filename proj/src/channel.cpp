#include "ntnsim/channel.hpp"

#include <algorithm>
#include <cmath>

#include "ntnsim/error.hpp"

namespace ntnsim {

void LinkBudget::validate() const {
    if (carrier_hz <= 0)
        throw ConfigError("link.carrier_hz: must be > 0");
    if (noise_figure_db < 0)
        throw ConfigError("link.noise_figure_db: must be >= 0");
    if (shadowing_sigma_db < 0)
        throw ConfigError("link.shadowing_sigma_db: must be >= 0");
    if (shadow_epoch_s <= 0)
        throw ConfigError("link.shadow_epoch_s: must be > 0");
}

double path_loss_db(double distance_m, double carrier_hz) {
    if (distance_m < 1.0)
        throw ConfigError("path_loss: distance must be >= 1 m");
    return 20.0 * std::log10(distance_m / 1000.0) + 20.0 * std::log10(carrier_hz / 1e6) + 32.45;
}

double noise_floor_dbm(double bw_hz, double noise_figure_db) {
    return -174.0 + 10.0 * std::log10(bw_hz) + noise_figure_db;
}

LinkSample rx_snr(const LinkBudget& budget, LinkDirection dir, double distance_m,
                  double bw_hz, double shadow_db) {
    double tx_dbm = (dir == LinkDirection::uplink) ? budget.node_tx_power_dbm
                                                   : budget.gateway_tx_power_dbm;
    LinkSample s;
    s.distance_m = distance_m;
    s.rx_power_dbm = tx_dbm + budget.node_antenna_gain_dbi + budget.gateway_antenna_gain_dbi -
                     path_loss_db(distance_m, budget.carrier_hz) -
                     budget.extra_attenuation_db - shadow_db;
    s.snr_db = s.rx_power_dbm - noise_floor_dbm(bw_hz, budget.noise_figure_db);
    s.prop_delay_s = propagation_delay_s(distance_m);
    return s;
}

double propagation_delay_s(double distance_m) {
    if (distance_m < 0)
        throw ConfigError("propagation_delay: distance must be >= 0");
    return distance_m / kSpeedOfLight;
}

TimeUs propagation_delay_us(double distance_m) {
    return s_to_us(propagation_delay_s(distance_m));
}

double arrival_delay_spread_s(std::span<const double> distances_m) {
    if (distances_m.size() < 2)
        throw ConfigError("arrival_delay_spread: need at least 2 distances");
    auto [lo, hi] = std::minmax_element(distances_m.begin(), distances_m.end());
    return 2.0 * (propagation_delay_s(*hi) - propagation_delay_s(*lo));
}

double cad_detect_probability(double snr_db, int chirp_sf, double margin_db) {
    return cad_detect_probability_at(snr_db, demod_snr_threshold(chirp_sf), margin_db);
}

double cad_detect_probability_at(double snr_db, double threshold_db, double margin_db) {
    if (snr_db <= threshold_db - margin_db) return 0.0;
    if (snr_db >= threshold_db + margin_db) return 1.0;
    return (snr_db - (threshold_db - margin_db)) / (2.0 * margin_db);
}

bool cad_detect(std::optional<double> signal_snr_db, int chirp_sf, RngStream& rng,
                double margin_db) {
    if (!signal_snr_db.has_value())
        return false;  // nothing on the air: no false positives, no draw
    double p = cad_detect_probability(*signal_snr_db, chirp_sf, margin_db);
    if (p >= 1.0) return true;
    if (p <= 0.0) return false;
    return rng.uniform() < p;
}

int preamble_detect_delay_symbols(const CaptureModel& capture, RngStream& rng) {
    if (capture.preamble_detect_symbols_min == capture.preamble_detect_symbols_max)
        return capture.preamble_detect_symbols_min;
    return rng.uniform_int(capture.preamble_detect_symbols_min,
                           capture.preamble_detect_symbols_max);
}

double shadow_db_for_epoch(const LinkBudget& budget, std::uint64_t channel_seed,
                           std::uint64_t node_id, TimeUs now_us) {
    if (budget.shadowing_sigma_db <= 0.0)
        return 0.0;
    auto epoch = static_cast<std::uint64_t>(
        static_cast<double>(now_us) / (budget.shadow_epoch_s * 1e6));
    return budget.shadowing_sigma_db * normal_from_hash(channel_seed, node_id, epoch);
}

} // namespace ntnsim
