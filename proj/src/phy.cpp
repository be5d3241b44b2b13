#include "ntnsim/phy.hpp"

#include <algorithm>
#include <cmath>

namespace ntnsim {

void LoRaParams::validate() const {
    if (sf < 7 || sf > 12)
        throw ConfigError("lora.sf: must be in [7,12], got " + std::to_string(sf));
    if (bw_hz != 125000 && bw_hz != 250000 && bw_hz != 500000)
        throw ConfigError("lora.bw_hz: must be one of 125000/250000/500000, got " +
                          std::to_string(bw_hz));
    if (cr < 1 || cr > 4)
        throw ConfigError("lora.cr: must be in [1,4], got " + std::to_string(cr));
    if (preamble_symbols < 1)
        throw ConfigError("lora.preamble_symbols: must be >= 1");
    if (payload_bytes < 0 || payload_bytes > 255)
        throw ConfigError("lora.payload_bytes: must be in [0,255], got " +
                          std::to_string(payload_bytes));
}

std::string Airtime::symbols_str() const {
    static const char* frac[4] = {"", ".25", ".5", ".75"};
    std::int64_t whole = symbol_quarters / 4;
    int rem = static_cast<int>(symbol_quarters % 4);
    return std::to_string(whole) + frac[rem];
}

double symbol_duration_s(int sf, std::int64_t bw_hz) {
    if (sf < 7 || sf > 12)
        throw ConfigError("symbol_duration: sf must be in [7,12], got " + std::to_string(sf));
    if (bw_hz <= 0)
        throw ConfigError("symbol_duration: bw must be positive");
    return static_cast<double>(std::int64_t{1} << sf) / static_cast<double>(bw_hz);
}

TimeUs symbol_duration_us(int sf, std::int64_t bw_hz) {
    if (sf < 7 || sf > 12)
        throw ConfigError("symbol_duration: sf must be in [7,12], got " + std::to_string(sf));
    if (bw_hz <= 0)
        throw ConfigError("symbol_duration: bw must be positive");
    std::int64_t num = (std::int64_t{1} << sf) * 1000000;
    if (num % bw_hz != 0)
        throw ConfigError("symbol_duration: 2^sf/bw not exact at 1 us for bw " +
                          std::to_string(bw_hz));
    return num / bw_hz;
}

Airtime packet_airtime(const LoRaParams& p) {
    p.validate();
    // Standard LoRa airtime: preamble of N + 4.25 symbols, then
    // 8 + max(ceil((8 PL - 4 SF + 28 + 16 CRC - 20 IH) / (4 (SF - 2 DE))) * (CR + 4), 0).
    int ih = p.explicit_header ? 0 : 1;
    int de = p.ldro ? 1 : 0;
    int crc = p.crc_in_airtime ? 1 : 0;
    std::int64_t num = 8 * std::int64_t{p.payload_bytes} - 4 * p.sf + 28 + 16 * crc - 20 * ih;
    std::int64_t den = 4 * (p.sf - 2 * de);
    // ceil on a possibly negative numerator
    std::int64_t blocks = (num <= 0) ? 0 : (num + den - 1) / den;
    std::int64_t payload_symbols = 8 + std::max<std::int64_t>(blocks * (p.cr + 4), 0);

    Airtime a;
    a.symbol_quarters = (std::int64_t{p.preamble_symbols} * 4 + 17) + payload_symbols * 4;
    TimeUs sym_us = symbol_duration_us(p.sf, p.bw_hz);
    a.us = a.symbol_quarters * sym_us / 4;  // sym_us is a multiple of 4 for supported bw
    return a;
}

FreeChirpSchedule freechirp_schedule(const LoRaParams& node_params, int chirp_sf) {
    node_params.validate();
    if (chirp_sf >= node_params.sf)
        throw ConfigError("chirp_sf: must be below the node SF (link-aware chirp), got chirp_sf=" +
                          std::to_string(chirp_sf) + " node sf=" + std::to_string(node_params.sf));
    if (chirp_sf < 7)
        throw ConfigError("chirp_sf: must be >= 7, got " + std::to_string(chirp_sf));

    FreeChirpSchedule s;
    s.node_symbol_us = symbol_duration_us(node_params.sf, node_params.bw_hz);
    s.t_chirp_us = symbol_duration_us(chirp_sf, node_params.bw_hz);
    s.t_wait_us = 6 * s.node_symbol_us;
    s.t_interval_us = s.t_chirp_us + s.t_wait_us;
    s.t_nsense_us = s.t_interval_us;
    s.t_busy_backoff_us = 4 * s.t_wait_us;
    return s;
}

double demod_snr_threshold(int sf) {
    // SX127x-class demodulator floor per SF (see README for the source table).
    static const double floor_db[6] = {-7.5, -10.0, -12.5, -15.0, -17.5, -20.0};
    if (sf < 7 || sf > 12)
        throw ConfigError("demod_snr_threshold: sf must be in [7,12], got " + std::to_string(sf));
    return floor_db[sf - 7];
}

void CaptureModel::validate() const {
    if (capture_threshold_db <= 0)
        throw ConfigError("capture.threshold_db: must be > 0");
    if (lock_window_symbols < 1)
        throw ConfigError("capture.lock_window_symbols: must be >= 1");
    if (preamble_detect_symbols_min > preamble_detect_symbols_max ||
        preamble_detect_symbols_min < 1)
        throw ConfigError("capture.preamble_detect_symbols: need 1 <= min <= max");
}

namespace {
inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

inline bool overlaps(const Reception& a, const Reception& b) {
    return a.arrival_us < b.arrival_us + b.airtime_us &&
           b.arrival_us < a.arrival_us + a.airtime_us;
}
} // namespace

CaptureResult capture_resolve(std::span<const Reception> rx,
                              TimeUs symbol_us,
                              const CaptureModel& capture,
                              double min_power_dbm) {
    CaptureResult res;
    res.fates.assign(rx.size(), PacketFate::lost_collision);
    if (rx.empty()) {
        res.outcome = RxOutcome::idle;
        return res;
    }

    int first_det = -1;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        if (i > 0 && rx[i].arrival_us < rx[i - 1].arrival_us)
            throw SimError("capture_resolve: receptions not sorted by arrival time");
        if (rx[i].rx_power_dbm < min_power_dbm)
            res.fates[i] = PacketFate::lost_link;
        else if (first_det < 0)
            first_det = static_cast<int>(i);
    }
    if (first_det < 0) {
        res.outcome = RxOutcome::idle;  // nothing ever rose above the floor
        return res;
    }

    // Lock window opens at the first detectable arrival.
    TimeUs window_close =
        rx[first_det].arrival_us + TimeUs{capture.lock_window_symbols} * symbol_us;

    // Receiver locks the strongest detectable packet arriving within the window.
    int cand = -1;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        if (res.fates[i] == PacketFate::lost_link || rx[i].arrival_us > window_close)
            continue;
        if (cand < 0 || rx[i].rx_power_dbm > rx[cand].rx_power_dbm)
            cand = static_cast<int>(i);
    }

    const double thr_lin = dbm_to_mw(capture.capture_threshold_db);
    const double cand_mw = dbm_to_mw(rx[cand].rx_power_dbm);

    double interferer_mw = 0.0;  // strongest competing signal
    for (std::size_t i = 0; i < rx.size(); ++i) {
        if (static_cast<int>(i) != cand && overlaps(rx[i], rx[cand]))
            interferer_mw = std::max(interferer_mw, dbm_to_mw(rx[i].rx_power_dbm));
    }

    if (cand_mw >= thr_lin * interferer_mw) {
        res.outcome = RxOutcome::success;
        res.winner = cand;
        res.fates[cand] = PacketFate::decoded;
        return res;
    }

    // Lock failed. A stronger late arrival overlapping the locked packet
    // broke the lock (detection failure); otherwise it is a plain
    // no-dominator collision.
    bool late_steal = false;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        if (rx[i].arrival_us > window_close && overlaps(rx[i], rx[cand]) &&
            dbm_to_mw(rx[i].rx_power_dbm) >= thr_lin * cand_mw) {
            late_steal = true;
            break;
        }
    }
    res.outcome = RxOutcome::detect_failure;
    if (late_steal) res.fates[static_cast<std::size_t>(cand)] = PacketFate::lost_detect;
    return res;
}

} // namespace ntnsim
