#include "doctest.h"

#include <sstream>

#include "ntnsim/results.hpp"
#include "ntnsim/sim.hpp"
#include "ntnsim/sweep.hpp"

using namespace ntnsim;

namespace {

Scenario desk16(Protocol proto, double load, std::uint64_t seed) {
    Scenario sc = load_scenario("static-16");
    sc.protocol = proto;
    sc.duty_cycle = load / 16.0;
    sc.seed = seed;
    return sc;
}

} // namespace

TEST_CASE("paired PRR ordering: fsma beats aloha in every saturated replicate") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        MetricsReport f = run_scenario(desk16(Protocol::fsma, 1.0, seed)).report;
        MetricsReport a = run_scenario(desk16(Protocol::aloha, 1.0, seed)).report;
        CHECK(f.prr > a.prr);
    }
}

TEST_CASE("gateway energy ordering: bsma tone exceeds fsma chirps when busy") {
    MetricsReport f = run_scenario(desk16(Protocol::fsma, 2.0, 7)).report;
    MetricsReport b = run_scenario(desk16(Protocol::bsma, 2.0, 7)).report;
    REQUIRE(b.channel_usage >= 0.5);
    double fsma_chirp_airtime = static_cast<double>(f.chirp_count) * 0.004096;
    CHECK(b.tone_time_s > fsma_chirp_airtime);
    CHECK(b.gateway_tone_energy_j > f.gateway_chirp_energy_j);
}

TEST_CASE("fsma trigger exclusivity: no chirp while the detection flag is up") {
    Scenario sc = desk16(Protocol::fsma, 2.0, 11);
    sc.total_time_s = 120.0;
    RunResult r = run_scenario(sc, true);
    std::istringstream in(r.trace_text);
    std::string line;
    bool trigger_up = false;
    int chirps_checked = 0;
    while (std::getline(in, line)) {
        if (line.find(",trigger_up,") != std::string::npos) trigger_up = true;
        else if (line.find(",trigger_down,") != std::string::npos) trigger_up = false;
        else if (line.find(",chirp,") != std::string::npos) {
            CHECK_FALSE(trigger_up);
            ++chirps_checked;
        }
    }
    CHECK(chirps_checked > 100);
}

TEST_CASE("collision-window maxima: aloha spreads reach packet airtime") {
    MetricsReport f = run_scenario(desk16(Protocol::fsma, 2.0, 3)).report;
    MetricsReport a = run_scenario(desk16(Protocol::aloha, 2.0, 3)).report;
    // FSMA confines colliding starts to the sensing window; aloha does not.
    CHECK(f.max_txstart_spread_colliding_s <= f.t_nsense_s + 1e-9);
    CHECK(a.max_txstart_spread_colliding_s > f.t_nsense_s);
    CHECK(a.max_txstart_spread_colliding_s <= a.airtime_s + 1e-9);
}

TEST_CASE("golden output: fixed-seed run serializes to frozen bytes") {
    Scenario sc;
    sc.id = "golden";
    sc.protocol = Protocol::aloha;
    sc.seed = 42;
    sc.total_time_s = 30.0;
    sc.duty_cycle = 0.05;
    sc.node_count = 3;
    sc.region = Region{32.60, 32.64, -117.22, -117.18};
    sc.gateway.model = StaticPos{GeoPos{32.62, -117.20, 100.0}};
    sc.min_elevation_deg = 0.0;
    RunResult r = run_scenario(sc);
    CHECK(reports_to_csv({&r.report, 1}) ==
          "scenario_id,protocol,seed,node_count,offered_load,throughput_bps,"
          "normalized_throughput,prr,channel_usage,energy_ratio_node,gateway_energy_j,"
          "gateway_failure_ratio,mean_wait_s\n"
          "golden,aloha,42,3,0.0493568,16,0.0493568,1,0.0493568,1,0,0,0\n");
}

TEST_CASE("sweep rows are ordered by protocol, point, seed") {
    SweepSpec spec;
    spec.base = load_scenario("static-16");
    spec.base.total_time_s = 30.0;
    spec.base.node_count = 4;
    spec.axis = SweepAxis::offered_load;
    spec.points = {0.5, 1.0};
    spec.protocols = {"fsma", "aloha"};
    spec.replicates = 2;
    SweepResult res = run_sweep(spec, 2);
    REQUIRE(res.reports.size() == 8);
    for (std::size_t i = 1; i < res.reports.size(); ++i) {
        const auto& a = res.reports[i - 1];
        const auto& b = res.reports[i];
        auto key = [](const MetricsReport& r) {
            return std::make_tuple(r.protocol, r.node_count, r.duty_cycle, r.seed);
        };
        CHECK(key(a) < key(b));
    }
    // Single point, single replicate reduces to one plain run.
    SweepSpec one;
    one.base = spec.base;
    one.replicates = 1;
    SweepResult single = run_sweep(one, 1);
    REQUIRE(single.reports.size() == 1);
    MetricsReport direct = run_scenario(one.base).report;
    CHECK(report_to_json(single.reports[0]).dump() == report_to_json(direct).dump());
}

TEST_CASE("sweep aborts on an invalid point, naming the constraint") {
    SweepSpec spec;
    spec.base = load_scenario("static-16");
    spec.axis = SweepAxis::offered_load;
    spec.points = {20.0};  // duty 125% per node: impossible
    CHECK_THROWS_WITH_AS(run_sweep(spec, 1), doctest::Contains("exceeds 100%"), ConfigError);

    SweepSpec empty;
    empty.base = spec.base;
    empty.axis = SweepAxis::node_count;
    CHECK_THROWS_AS(run_sweep(empty, 1), ConfigError);  // axis set, no points
}

TEST_CASE("zero-node runs stay well-formed for every protocol") {
    for (Protocol p : {Protocol::fsma, Protocol::aloha, Protocol::csma, Protocol::bsma}) {
        Scenario sc = load_scenario("static-16");
        sc.protocol = p;
        sc.node_count = 0;
        sc.total_time_s = 5.0;
        MetricsReport r = run_scenario(sc).report;
        CHECK(r.buffered == 0);
        CHECK(r.prr == 0.0);
        CHECK(r.channel_usage == 0.0);
    }
}

TEST_CASE("drone-25 smoke run reports the full metric set") {
    Scenario sc = load_scenario("drone-25");
    sc.total_time_s = 120.0;
    MetricsReport r = run_scenario(sc).report;
    CHECK(r.node_count == 25);
    CHECK(r.buffered > 0);
    CHECK(r.transmitted > 0);
    CHECK(r.decoded > 0);
    CHECK(r.throughput_bps > 0.0);
    CHECK(r.prr > 0.0);
    CHECK(r.channel_usage > 0.0);
    CHECK(r.energy_ratio_node >= 1.0);
    CHECK(r.gateway_extra_energy_j > 0.0);
    CHECK(r.per_node.size() == 25);
}
