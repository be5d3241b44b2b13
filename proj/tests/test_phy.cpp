#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "capture_oracle.hpp"
#include "ntnsim/phy.hpp"
#include "ntnsim/rng.hpp"

using namespace ntnsim;

namespace {

LoRaParams paper_params(int payload) {
    LoRaParams p;
    p.sf = 10;
    p.bw_hz = 125000;
    p.cr = 4;
    p.preamble_symbols = 8;
    p.payload_bytes = payload;
    p.explicit_header = true;
    p.crc_in_airtime = false;
    p.ldro = true;
    return p;
}

} // namespace

TEST_CASE("symbol duration") {
    CHECK(symbol_duration_s(10, 125000) == doctest::Approx(8.192e-3).epsilon(1e-12));
    CHECK(symbol_duration_s(9, 125000) == doctest::Approx(4.096e-3).epsilon(1e-12));
    CHECK(symbol_duration_s(12, 125000) == doctest::Approx(32.768e-3).epsilon(1e-12));
    CHECK(symbol_duration_us(10, 125000) == 8192);
    CHECK(symbol_duration_us(7, 500000) == 256);
    CHECK_THROWS_AS(symbol_duration_s(6, 125000), ConfigError);
    CHECK_THROWS_AS(symbol_duration_s(13, 125000), ConfigError);
    CHECK_THROWS_AS(symbol_duration_s(10, 0), ConfigError);
}

TEST_CASE("airtime endpoints are exact rationals") {
    // 0 and 192 payload bytes bracket the supported packet sizes.
    Airtime a0 = packet_airtime(paper_params(0));
    CHECK(a0.symbol_quarters == 81);  // 20.25 symbols
    CHECK(a0.symbols_str() == "20.25");
    CHECK(a0.us == 165888);

    Airtime a192 = packet_airtime(paper_params(192));
    CHECK(a192.symbol_quarters == 1617);  // 404.25 symbols
    CHECK(a192.symbols_str() == "404.25");

    Airtime a20 = packet_airtime(paper_params(20));
    CHECK(a20.symbol_quarters == 241);  // 60.25 symbols
    CHECK(a20.us == 493568);
    CHECK(a20.seconds() == doctest::Approx(0.493568).epsilon(1e-12));
}

TEST_CASE("airtime is monotone in payload") {
    TimeUs prev = 0;
    for (int pl = 0; pl <= 192; ++pl) {
        Airtime a = packet_airtime(paper_params(pl));
        CHECK(a.us >= prev);
        prev = a.us;
    }
}

TEST_CASE("airtime flags move the duration the right way") {
    LoRaParams base = paper_params(20);
    Airtime plain = packet_airtime(base);
    LoRaParams crc = base;
    crc.crc_in_airtime = true;
    CHECK(packet_airtime(crc).symbol_quarters > plain.symbol_quarters);
    LoRaParams implicit = base;
    implicit.explicit_header = false;
    CHECK(packet_airtime(implicit).symbol_quarters < plain.symbol_quarters);
    LoRaParams params_bad = base;
    params_bad.payload_bytes = 300;
    CHECK_THROWS_AS(packet_airtime(params_bad), ConfigError);
}

TEST_CASE("free chirp schedule for the SF10/SF9 pairing") {
    FreeChirpSchedule s = freechirp_schedule(paper_params(20), 9);
    CHECK(s.t_chirp_us == 4096);
    CHECK(s.t_wait_us == 49152);
    CHECK(s.t_interval_us == 53248);
    CHECK(s.t_nsense_us == 53248);
    CHECK(s.t_busy_backoff_us == 196608);
    CHECK(s.node_symbol_us == 8192);
    CHECK(s.nsense_node_symbols() == doctest::Approx(6.5));

    LoRaParams sf12 = paper_params(20);
    sf12.sf = 12;
    CHECK(freechirp_schedule(sf12, 11).t_wait_us == 196608);  // 6 x 32.768 ms

    CHECK_THROWS_AS(freechirp_schedule(paper_params(20), 10), ConfigError);
    CHECK_THROWS_AS(freechirp_schedule(paper_params(20), 11), ConfigError);
}

TEST_CASE("schedule identities hold exactly for every pairing") {
    for (std::int64_t bw : {125000, 250000, 500000}) {
        for (int sf = 8; sf <= 12; ++sf) {
            for (int chirp = 7; chirp < sf; ++chirp) {
                LoRaParams p = paper_params(20);
                p.sf = sf;
                p.bw_hz = bw;
                FreeChirpSchedule s = freechirp_schedule(p, chirp);
                CHECK(s.t_interval_us - s.t_chirp_us - s.t_wait_us == 0);
                CHECK(s.t_nsense_us - s.t_interval_us == 0);
                CHECK(s.t_busy_backoff_us == 4 * s.t_wait_us);
                if (chirp == sf - 1) CHECK(2 * s.t_chirp_us == s.node_symbol_us);
            }
        }
    }
}

TEST_CASE("demodulation floor per SF") {
    CHECK(demod_snr_threshold(7) == doctest::Approx(-7.5));
    CHECK(demod_snr_threshold(10) == doctest::Approx(-15.0));
    CHECK(demod_snr_threshold(12) == doctest::Approx(-20.0));
    for (int sf = 8; sf <= 12; ++sf)
        CHECK(demod_snr_threshold(sf) < demod_snr_threshold(sf - 1));
    CHECK_THROWS_AS(demod_snr_threshold(6), ConfigError);
}

namespace {

constexpr TimeUs kSym = 8192;          // SF10 at 125 kHz
constexpr double kFloor = -132.0;      // representative demod floor in dBm
constexpr TimeUs kAirtime = 241 * kSym / 4;

Reception rx_at(double offset_symbols, double power_dbm) {
    return Reception{static_cast<TimeUs>(offset_symbols * kSym), power_dbm, kAirtime};
}

CaptureResult resolve(std::vector<Reception> rx) {
    return capture_resolve(rx, kSym, CaptureModel{}, kFloor);
}

} // namespace

TEST_CASE("capture: stronger of two within a symbol is decoded") {
    auto r = resolve({rx_at(0.0, -120.0), rx_at(1.0, -123.0)});
    CHECK(r.outcome == RxOutcome::success);
    CHECK(r.winner == 0);
    CHECK(r.fates[0] == PacketFate::decoded);
    CHECK(r.fates[1] == PacketFate::lost_collision);
}

TEST_CASE("capture: equal powers lose both") {
    auto r = resolve({rx_at(0.0, -120.0), rx_at(2.0, -120.0)});
    CHECK(r.outcome == RxOutcome::detect_failure);
    CHECK(r.fates[0] == PacketFate::lost_collision);
    CHECK(r.fates[1] == PacketFate::lost_collision);
}

TEST_CASE("capture: stronger packet after the lock window steals detection") {
    auto r = resolve({rx_at(0.0, -126.0), rx_at(6.0, -120.0)});
    CHECK(r.outcome == RxOutcome::detect_failure);
    CHECK(r.fates[0] == PacketFate::lost_detect);
    CHECK(r.fates[1] == PacketFate::lost_collision);
}

TEST_CASE("capture: single packet above the floor is decoded") {
    auto r = resolve({rx_at(0.0, -125.0)});
    CHECK(r.outcome == RxOutcome::success);
    CHECK(r.fates[0] == PacketFate::decoded);
}

TEST_CASE("capture: empty and sub-floor inputs are idle") {
    auto r = resolve({});
    CHECK(r.outcome == RxOutcome::idle);
    auto r2 = resolve({rx_at(0.0, -140.0)});
    CHECK(r2.outcome == RxOutcome::idle);
    CHECK(r2.fates[0] == PacketFate::lost_link);
}

TEST_CASE("capture is a pure function of its input") {
    std::vector<Reception> rx = {rx_at(0.0, -121.0), rx_at(0.5, -124.0), rx_at(3.0, -119.5)};
    auto a = capture_resolve(rx, kSym, CaptureModel{}, kFloor);
    auto b = capture_resolve(rx, kSym, CaptureModel{}, kFloor);
    CHECK(a.outcome == b.outcome);
    CHECK(a.winner == b.winner);
    CHECK(a.fates == b.fates);
}

TEST_CASE("capture matches the brute-force rules on random cases") {
    RngStream rng(7, 7);
    CaptureModel cap;
    for (int iter = 0; iter < 5000; ++iter) {
        int n = 1 + rng.uniform_int(0, 2);
        std::vector<oracle::Pkt> pkts;
        std::vector<Reception> rx;
        TimeUs t = 0;
        for (int i = 0; i < n; ++i) {
            if (i > 0) t += static_cast<TimeUs>(rng.uniform_int(0, 20)) * (kSym / 2);
            double p = -130.0 + rng.uniform_int(0, 30);
            pkts.push_back({t, p, kAirtime});
            rx.push_back({t, p, kAirtime});
        }
        auto got = capture_resolve(rx, kSym, cap, kFloor);
        auto want = oracle::capture_reference(pkts, kSym, cap.capture_threshold_db,
                                              cap.lock_window_symbols, kFloor);
        CHECK(got.outcome == want.outcome);
        CHECK(got.winner == want.winner);
        CHECK(got.fates == want.fates);
    }
}

TEST_CASE("capture: guaranteed decode within four symbols and 1 dB clearance") {
    RngStream rng(11, 3);
    for (int iter = 0; iter < 2000; ++iter) {
        int n = 2 + rng.uniform_int(0, 2);
        std::vector<Reception> rx;
        TimeUs t = 0;
        for (int i = 0; i < n; ++i) {
            if (i > 0) t = static_cast<TimeUs>(rng.uniform_int(0, 8)) * (kSym / 2);
            rx.push_back({t, -130.0 + rng.uniform_int(0, 15), kAirtime});
        }
        std::sort(rx.begin(), rx.end(),
                  [](const Reception& a, const Reception& b) { return a.arrival_us < b.arrival_us; });
        // Give one packet >= 1 dB over the aggregate of the rest.
        int boosted = rng.uniform_int(0, n - 1);
        double sum_mw = 0;
        for (int i = 0; i < n; ++i)
            if (i != boosted) sum_mw += std::pow(10.0, rx[i].rx_power_dbm / 10.0);
        rx[boosted].rx_power_dbm = 10.0 * std::log10(sum_mw) + 1.0 + rng.uniform(0.0, 3.0);

        auto r = capture_resolve(rx, kSym, CaptureModel{}, kFloor);
        CHECK(r.outcome == RxOutcome::success);
        CHECK(r.winner == boosted);
    }
}
