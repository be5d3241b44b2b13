#include "doctest.h"

#include <cmath>

#include "ntnsim/error.hpp"
#include "ntnsim/metrics.hpp"
#include "ntnsim/traffic.hpp"

using namespace ntnsim;

TEST_CASE("poisson arrivals hit the duty-cycle rate") {
    TrafficConfig cfg{0.001, 600.0};
    double airtime = 0.493568;
    // rate x duration = 0.001 / 0.493568 * 600 = 1.2156 packets per node
    std::int64_t total = 0;
    for (int node = 0; node < 10000; ++node) {
        RngStream rng(99, stream_id(StreamPurpose::traffic, node));
        auto arr = poisson_arrivals(cfg, airtime, rng);
        total += static_cast<std::int64_t>(arr.size());
        for (double t : arr) {
            CHECK(t >= 0.0);
            CHECK(t < 600.0);
        }
    }
    double mean = static_cast<double>(total) / 10000.0;
    CHECK(mean == doctest::Approx(1.2156).epsilon(0.03));
}

TEST_CASE("poisson arrivals: zero duty and determinism") {
    TrafficConfig off{0.0, 600.0};
    RngStream rng(1, 1);
    CHECK(poisson_arrivals(off, 0.4936, rng).empty());

    TrafficConfig cfg{0.01, 600.0};
    RngStream a(5, 5), b(5, 5);
    CHECK(poisson_arrivals(cfg, 0.4936, a) == poisson_arrivals(cfg, 0.4936, b));

    TrafficConfig bad{1.5, 600.0};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("offered load arithmetic") {
    CHECK(offered_load(1215, 0.493568, 600.0) == doctest::Approx(1.0).epsilon(0.002));
    CHECK(offered_load(0, 0.493568, 600.0) == 0.0);
    CHECK(offered_load(2430, 0.493568, 600.0) ==
          doctest::Approx(2 * offered_load(1215, 0.493568, 600.0)));
    CHECK_THROWS_AS(offered_load(-1, 0.4936, 600.0), ConfigError);
}

TEST_CASE("energy accrual is P x t, itemized") {
    EnergyModel m;
    EnergyLedger led;
    energy_accrue(led, Activity::tx, 0.4936, m);
    CHECK(led.tx_j == doctest::Approx(0.19744).epsilon(1e-9));
    energy_accrue(led, Activity::cad, 2.0, m);
    energy_accrue(led, Activity::listen, 1.0, m);
    energy_accrue(led, Activity::sleep, 100.0, m);
    energy_accrue(led, Activity::gateway_chirp, 0.5, m);
    energy_accrue(led, Activity::gateway_tone, 0.25, m);
    CHECK(led.total_j() == doctest::Approx(led.tx_j + led.cad_j + led.listen_j + led.sleep_j +
                                           led.gateway_chirp_j + led.gateway_tone_j));
    CHECK(led.cad_j == doctest::Approx(0.1));
    CHECK(led.gateway_tone_j == doctest::Approx(0.1));
    CHECK_THROWS_AS(energy_accrue(led, Activity::tx, -1.0, m), ConfigError);

    EnergyLedger sleep_only;
    energy_accrue(sleep_only, Activity::sleep, 600.0, m);
    CHECK(sleep_only.tx_j == 0.0);
}

namespace {

MetricsReport base_report() {
    MetricsReport r;
    r.scenario_id = "synthetic";
    r.protocol = "aloha";
    r.node_count = 1;
    r.total_time_s = 600.0;
    r.airtime_s = 0.493568;
    r.payload_bytes = 20;
    return r;
}

} // namespace

TEST_CASE("metrics: lossless baseline has prr 1 and energy ratio 1") {
    MetricsReport r = base_report();
    EnergyModel energy;
    NodeCounters n;
    n.buffered = n.transmitted = n.decoded = 100;
    energy_accrue(n.energy, Activity::tx, 100 * r.airtime_s, energy);
    GatewayTallies gw;
    gw.detected = 100;
    gw.decoded_payload_bits = 100 * 8 * 20;
    gw.busy_union_s = 100 * r.airtime_s;
    std::vector<double> waits(100, 0.0);
    compute_metrics(r, {n}, waits, gw, energy);
    CHECK(r.prr == doctest::Approx(1.0));
    CHECK(r.energy_ratio_node == doctest::Approx(1.0));
    CHECK(r.gateway_failure_ratio == doctest::Approx(0.0));
    CHECK(r.normalized_throughput == doctest::Approx(100 * r.airtime_s / 600.0));
}

TEST_CASE("metrics: normalized throughput equals busy fraction when all decode") {
    MetricsReport r = base_report();
    EnergyModel energy;
    // Channel busy 80% of the time with decodes only.
    std::int64_t decoded = static_cast<std::int64_t>(0.8 * 600.0 / r.airtime_s);
    NodeCounters n;
    n.buffered = n.transmitted = n.decoded = decoded;
    GatewayTallies gw;
    gw.detected = decoded;
    gw.decoded_payload_bits = decoded * 8 * 20;
    gw.busy_union_s = static_cast<double>(decoded) * r.airtime_s;
    compute_metrics(r, {n}, {}, gw, energy);
    CHECK(r.normalized_throughput == doctest::Approx(r.channel_usage).epsilon(1e-12));
    CHECK(r.normalized_throughput == doctest::Approx(0.8).epsilon(0.01));
}

TEST_CASE("metrics: gateway failure ratio and loss categories") {
    MetricsReport r = base_report();
    EnergyModel energy;
    NodeCounters n;
    n.buffered = 12;
    n.transmitted = 12;
    n.decoded = 6;
    n.lost_collision = 4;
    n.lost_link = 2;
    GatewayTallies gw;
    gw.detected = 10;  // 6 decoded + 4 undecodable collisions
    gw.decoded_payload_bits = 6 * 8 * 20;
    compute_metrics(r, {n}, {}, gw, energy);
    CHECK(r.gateway_failure_ratio == doctest::Approx(0.4));
    CHECK(r.undelivered == 0);
}

TEST_CASE("metrics: zero decodes produce an infinite sentinel, not a crash") {
    MetricsReport r = base_report();
    EnergyModel energy;
    NodeCounters n;
    n.buffered = 5;
    n.transmitted = 5;
    n.lost_collision = 5;
    energy_accrue(n.energy, Activity::tx, 5 * r.airtime_s, energy);
    GatewayTallies gw;
    gw.detected = 5;
    compute_metrics(r, {n}, {}, gw, energy);
    CHECK(std::isinf(r.energy_per_success_j));
    CHECK(std::isinf(r.energy_ratio_node));
    CHECK(r.prr == 0.0);
}

TEST_CASE("metrics: conservation violations are rejected") {
    MetricsReport r = base_report();
    EnergyModel energy;
    NodeCounters n;
    n.transmitted = 5;
    n.decoded = 1;  // 4 unaccounted
    GatewayTallies gw;
    CHECK_THROWS_AS(compute_metrics(r, {n}, {}, gw, energy), SimError);
}
