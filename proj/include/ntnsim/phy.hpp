#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ntnsim/error.hpp"
#include "ntnsim/time.hpp"

namespace ntnsim {

/// LoRa radio configuration from which all airtime arithmetic derives.
struct LoRaParams {
    int sf = 10;                  // spreading factor, 7..12
    std::int64_t bw_hz = 125000;  // 125k / 250k / 500k
    int cr = 4;                   // coding-rate denominator addend: 1..4, 4 = rate 4/8
    int preamble_symbols = 8;
    int payload_bytes = 20;       // 0..255
    bool explicit_header = true;
    bool crc_in_airtime = false;
    bool ldro = true;             // low-data-rate optimization

    void validate() const;
};

/// Packet duration as an exact rational symbol count (quarter-symbol
/// resolution) plus its microsecond/second value.
struct Airtime {
    std::int64_t symbol_quarters = 0;  // symbols * 4, exact
    TimeUs us = 0;

    double symbols() const { return static_cast<double>(symbol_quarters) / 4.0; }
    double seconds() const { return us_to_s(us); }
    /// "20.25", "60.25", ... exact decimal form of the quarter-symbol count.
    std::string symbols_str() const;
};

/// Symbol duration 2^sf / bw. The _us form is exact for the supported
/// bandwidths and is what the event engine consumes.
double symbol_duration_s(int sf, std::int64_t bw_hz);
TimeUs symbol_duration_us(int sf, std::int64_t bw_hz);

Airtime packet_airtime(const LoRaParams& params);

/// Gateway free-signal timing. Identities hold exactly in microseconds:
/// t_interval = t_chirp + t_wait, t_nsense = t_interval,
/// t_busy_backoff = 4 * t_wait.
struct FreeChirpSchedule {
    TimeUs t_chirp_us = 0;         // one chirp at the (lower) chirp SF
    TimeUs t_wait_us = 0;          // 6 node symbols
    TimeUs t_interval_us = 0;
    TimeUs t_nsense_us = 0;        // node sensing window
    TimeUs t_busy_backoff_us = 0;  // 4 * t_wait
    TimeUs node_symbol_us = 0;

    double nsense_node_symbols() const {
        return static_cast<double>(t_nsense_us) / static_cast<double>(node_symbol_us);
    }
};

/// chirp_sf must be strictly below the node SF (link-aware lower-SF chirp).
FreeChirpSchedule freechirp_schedule(const LoRaParams& node_params, int chirp_sf);

/// Minimum decodable SNR per SF (SX127x-class demodulation floor, see docs).
double demod_snr_threshold(int sf);

/// Capture-effect receiver parameters.
struct CaptureModel {
    double capture_threshold_db = 1.0;
    int lock_window_symbols = 4;
    int preamble_detect_symbols_min = 3;
    int preamble_detect_symbols_max = 5;

    void validate() const;
};

/// One packet as seen at the gateway antenna.
struct Reception {
    TimeUs arrival_us = 0;  // start of arrival (tx start + propagation delay)
    double rx_power_dbm = 0.0;
    TimeUs airtime_us = 0;
};

enum class PacketFate {
    decoded,
    lost_collision,  // overlapped a stronger packet / no dominator
    lost_detect,     // receiver locked a weaker packet, stronger arrived late
    lost_link,       // below the demodulation floor
};

enum class RxOutcome { success, detect_failure, idle };

struct CaptureResult {
    RxOutcome outcome = RxOutcome::idle;
    int winner = -1;  // index into the reception list when outcome == success
    std::vector<PacketFate> fates;
};

/// Resolves one lock cycle of a single-demodulator receiver over a set of
/// receptions that overlap pairwise.
///
/// Rule set (the test-side brute-force evaluator implements the same rules
/// independently; both compare powers in the linear domain):
///  1. Packets below min_power_dbm are undetectable (lost_link) but still
///     count as competing signals.
///  2. The lock window opens at the first detectable arrival and spans
///     lock_window_symbols at symbol_us.
///  3. The receiver locks the strongest detectable packet arriving within
///     the window.
///  4. That packet decodes iff its linear power >= 10^(threshold/10) times
///     the strongest other reception overlapping its arrival interval.
///  5. Otherwise, if any packet stronger by >= threshold arrives after the
///     window closes and overlaps the locked packet, the lock was stolen: a
///     detection failure (lost_detect for the locked packet).
///  6. Otherwise nothing dominates and all packets are lost (lost_collision).
///
/// Input must be sorted by arrival_us. Empty input -> idle.
CaptureResult capture_resolve(std::span<const Reception> receptions,
                              TimeUs symbol_us,
                              const CaptureModel& capture,
                              double min_power_dbm);

} // namespace ntnsim
