// Acceptance suite: runs every shipped criterion at its stated tolerance and
// prints one PASS/FAIL line per criterion. Exit code is the failure count.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <unistd.h>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "capture_oracle.hpp"
#include "ntnsim/channel.hpp"
#include "ntnsim/results.hpp"
#include "ntnsim/scenario.hpp"
#include "ntnsim/sim.hpp"
#include "ntnsim/sweep.hpp"

using namespace ntnsim;

namespace {

int g_failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail,
            double elapsed_s) {
    std::printf("%s  #%-2d %-28s %s  [%.1fs]\n", pass ? "PASS" : "FAIL", id, name,
                detail.c_str(), elapsed_s);
    if (!pass) ++g_failures;
}

struct Timer {
    std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
    double elapsed() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }
};

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

// Mean of one metric over the runs matching (protocol, key).
struct Sweeps {
    std::vector<MetricsReport> static_runs;  // offered-load axis
    std::vector<MetricsReport> leo_runs;     // node-count axis
};

double mean_static(const Sweeps& s, const std::string& proto, double load,
                   double (*get)(const MetricsReport&)) {
    double sum = 0;
    int n = 0;
    for (const auto& r : s.static_runs) {
        if (r.protocol == proto && std::abs(r.duty_cycle * 16 - load) < 1e-9) {
            sum += get(r);
            ++n;
        }
    }
    return n ? sum / n : 0.0;
}

double mean_leo(const Sweeps& s, const std::string& proto, int nodes,
                double (*get)(const MetricsReport&)) {
    double sum = 0;
    int n = 0;
    for (const auto& r : s.leo_runs) {
        if (r.protocol == proto && r.node_count == nodes) {
            sum += get(r);
            ++n;
        }
    }
    return n ? sum / n : 0.0;
}

double get_prr(const MetricsReport& r) { return r.prr; }
double get_norm_tp(const MetricsReport& r) { return r.normalized_throughput; }
double get_usage(const MetricsReport& r) { return r.channel_usage; }
double get_decoded(const MetricsReport& r) { return static_cast<double>(r.decoded); }
double get_energy_ratio(const MetricsReport& r) { return r.energy_ratio_node; }
double get_gw_energy(const MetricsReport& r) { return r.gateway_extra_energy_j; }
double get_fail_ratio(const MetricsReport& r) { return r.gateway_failure_ratio; }
double get_wait(const MetricsReport& r) { return r.mean_wait_s; }

// ---------------------------------------------------------------- criteria --

void criterion_1_airtime() {
    Timer t;
    LoRaParams p;
    p.sf = 10;
    p.bw_hz = 125000;
    p.cr = 4;
    p.payload_bytes = 0;
    bool ok = packet_airtime(p).symbol_quarters == 81;  // 20.25 symbols
    p.payload_bytes = 192;
    ok = ok && packet_airtime(p).symbol_quarters == 1617;  // 404.25 symbols

    // The CLI must print the same exact rationals. It lives next to this
    // binary in the build tree.
    char exe[4096] = "./";
    ssize_t len = readlink("/proc/self/exe", exe, sizeof exe - 1);
    std::string dir = ".";
    if (len > 0) {
        exe[len] = '\0';
        std::string path(exe);
        dir = path.substr(0, path.find_last_of('/'));
    }
    std::string cli0, cli192;
    for (int pl : {0, 192}) {
        std::string cmd =
            dir + "/ntnsim airtime --sf 10 --bw 125000 --cr 4 --payload " + std::to_string(pl);
        FILE* pipe = popen(cmd.c_str(), "r");
        std::string out;
        if (pipe) {
            char buf[256];
            while (fgets(buf, sizeof buf, pipe)) out += buf;
            pclose(pipe);
        }
        (pl == 0 ? cli0 : cli192) = out;
    }
    bool cli_ok = cli0.find("symbols  20.25\n") != std::string::npos &&
                  cli192.find("symbols  404.25\n") != std::string::npos;
    report(1, "airtime exactness", ok && cli_ok,
           fmt("PL0=20.25 PL192=404.25 exact; cli=%s", cli_ok ? "ok" : "MISMATCH"),
           t.elapsed());
}

void criterion_2_schedule() {
    Timer t;
    LoRaParams p;
    p.sf = 10;
    p.bw_hz = 125000;
    FreeChirpSchedule s = freechirp_schedule(p, 9);
    bool ok = s.t_chirp_us == 4096 && s.t_wait_us == 49152 && s.t_interval_us == 53248 &&
              s.t_nsense_us == 53248 && s.t_busy_backoff_us == 196608;
    report(2, "schedule exactness", ok,
           fmt("{%lld,%lld,%lld,%lld,%lld} us", (long long)s.t_chirp_us,
               (long long)s.t_wait_us, (long long)s.t_interval_us, (long long)s.t_nsense_us,
               (long long)s.t_busy_backoff_us),
           t.elapsed());
}

void criterion_3_collision_window() {
    Timer t;
    Scenario base = load_scenario("static-16");
    FreeChirpSchedule sched = freechirp_schedule(base.lora, base.chirp_sf);
    double t_nsense = us_to_s(sched.t_nsense_us);
    double worst = 0.0;
    bool ok = true;
    for (int rep = 0; rep < 20; ++rep) {
        Scenario sc = base;
        sc.seed = 1000 + rep;
        MetricsReport r = run_scenario(sc).report;
        worst = std::max(worst, r.max_txstart_spread_colliding_s);
        if (r.max_txstart_spread_colliding_s > t_nsense + 1e-9) ok = false;
    }
    LoRaParams full = base.lora;
    full.payload_bytes = 192;
    double ratio = packet_airtime(full).seconds() / t_nsense;
    ok = ok && ratio >= 60.0;
    report(3, "collision window", ok,
           fmt("max spread %.4f s <= t_nsense %.6f s; airtime(192B)/t_nsense = %.1fx (>=60)",
               worst, t_nsense, ratio),
           t.elapsed());
}

void criterion_4_capture_oracle() {
    Timer t;
    const TimeUs sym = 8192;
    const TimeUs airtime = 241 * sym / 4;  // 60.25 symbols
    const double floor_dbm = -132.0;
    CaptureModel cap;
    long long cases = 0, mismatches = 0;

    auto check = [&](const std::vector<oracle::Pkt>& pkts) {
        std::vector<Reception> rx;
        rx.reserve(pkts.size());
        for (const auto& p : pkts) rx.push_back({p.arrival_us, p.power_dbm, p.airtime_us});
        CaptureResult got = capture_resolve(rx, sym, cap, floor_dbm);
        oracle::Verdict want = oracle::capture_reference(pkts, sym, cap.capture_threshold_db,
                                                         cap.lock_window_symbols, floor_dbm);
        ++cases;
        if (got.outcome != want.outcome || got.winner != want.winner ||
            got.fates != want.fates)
            ++mismatches;
    };

    for (int p = -130; p <= -100; ++p) check({{0, double(p), airtime}});
    for (int p1 = -130; p1 <= -100; ++p1)
        for (int p2 = -130; p2 <= -100; ++p2)
            for (int o = 0; o <= 20; ++o)  // 0..10 symbols, step 0.5
                check({{0, double(p1), airtime}, {o * (sym / 2), double(p2), airtime}});
    for (int p1 = -130; p1 <= -100; p1 += 2)
        for (int p2 = -130; p2 <= -100; p2 += 2)
            for (int p3 = -130; p3 <= -100; p3 += 2)
                for (int o2 = 0; o2 <= 10; ++o2)
                    for (int o3 = o2; o3 <= 10; ++o3)
                        check({{0, double(p1), airtime},
                               {o2 * sym, double(p2), airtime},
                               {o3 * sym, double(p3), airtime}});

    report(4, "capture oracle equivalence", mismatches == 0,
           fmt("%lld grid cases, %lld mismatches", cases, mismatches), t.elapsed());
}

Sweeps run_sweeps() {
    Sweeps s;
    {
        SweepSpec spec;
        spec.base = load_scenario("static-16");
        spec.base.seed = 100;
        spec.axis = SweepAxis::offered_load;
        spec.points = {0.25, 0.5, 1.0, 2.0, 5.0};
        spec.protocols = {"fsma", "aloha", "bsma"};
        spec.replicates = 20;
        s.static_runs = run_sweep(spec, 8).reports;
    }
    {
        SweepSpec spec;
        spec.base = load_scenario("leo-pass");
        spec.base.seed = 300;
        spec.axis = SweepAxis::node_count;
        spec.points = {500, 1000, 2000, 5000};
        spec.protocols = {"fsma", "aloha", "bsma"};
        spec.replicates = 5;
        s.leo_runs = run_sweep(spec, 8).reports;
    }
    return s;
}

void criterion_5_static_throughput_prr(const Sweeps& s, double elapsed) {
    Timer t;
    bool ok = true;
    std::string detail;
    for (double load : {1.0, 2.0, 5.0}) {
        double tf = mean_static(s, "fsma", load, get_norm_tp);
        double ta = mean_static(s, "aloha", load, get_norm_tp);
        if (tf < 1.6 * ta) ok = false;
        if (load == 1.0) detail += fmt("thr@100%%: %.3f vs %.3f (%.1fx); ", tf, ta, tf / ta);
    }
    double p1f = mean_static(s, "fsma", 1.0, get_prr);
    double p1a = mean_static(s, "aloha", 1.0, get_prr);
    double p5f = mean_static(s, "fsma", 5.0, get_prr);
    double p5a = mean_static(s, "aloha", 5.0, get_prr);
    ok = ok && p1f >= 2.0 * p1a && p5f >= 5.0 * p5a;
    detail += fmt("prr@100%%: %.3f vs %.3f (%.1fx, need 2x); prr@500%%: %.3f vs %.4f (%.1fx, need 5x)",
                  p1f, p1a, p1f / p1a, p5f, p5a, p5f / p5a);
    report(5, "static throughput/PRR", ok, detail, elapsed + t.elapsed());
}

void criterion_6_channel_usage(const Sweeps& s) {
    Timer t;
    // Saturation: offered load >= 100%.
    double sum = 0;
    int n = 0;
    std::string per_point;
    for (double load : {1.0, 2.0, 5.0}) {
        double u = mean_static(s, "fsma", load, get_usage);
        per_point += fmt("%.0f%%:%.3f ", 100 * load, u);
        sum += u;
        ++n;
    }
    double mean = sum / n;
    bool ok = mean >= 0.70 && mean <= 0.90;
    report(6, "FSMA usage at saturation", ok,
           fmt("mean %.3f in [0.70,0.90]; per-load %s", mean, per_point.c_str()), t.elapsed());
}

void criterion_7_leo_scalability(const Sweeps& s, double elapsed) {
    Timer t;
    double d_f = mean_leo(s, "fsma", 2000, get_decoded);
    double d_a = mean_leo(s, "aloha", 2000, get_decoded);
    double p2_f = mean_leo(s, "fsma", 2000, get_prr);
    double p2_a = mean_leo(s, "aloha", 2000, get_prr);
    double p5_f = mean_leo(s, "fsma", 5000, get_prr);
    double p5_a = mean_leo(s, "aloha", 5000, get_prr);
    bool ok = d_f >= 2.5 * d_a && p2_f >= 2.5 * p2_a && p5_f >= 2.5 * p5_a;
    report(7, "moving-gateway scalability", ok,
           fmt("decoded@2000: %.0f vs %.0f (%.1fx); prr@2000: %.3f vs %.3f (%.1fx); "
               "prr@5000: %.3f vs %.3f (%.1fx); need 2.5x",
               d_f, d_a, d_f / d_a, p2_f, p2_a, p2_f / p2_a, p5_f, p5_a, p5_f / p5_a),
           elapsed + t.elapsed());
}

void criterion_8_node_energy(const Sweeps& s) {
    Timer t;
    double ef = mean_leo(s, "fsma", 5000, get_energy_ratio);
    double ea = mean_leo(s, "aloha", 5000, get_energy_ratio);
    bool ok = ef <= ea / 3.0;
    report(8, "node energy ratio", ok,
           fmt("fsma %.2f vs aloha %.2f at 5000 nodes (%.1fx better, need 3x)", ef, ea,
               ea / ef),
           t.elapsed());
}

void criterion_9_gateway_energy(const Sweeps& s) {
    Timer t;
    // Highest-load static point; both protocols drive the channel hard there.
    double fsma_gw = mean_static(s, "fsma", 5.0, get_gw_energy);
    double bsma_gw = mean_static(s, "bsma", 5.0, get_gw_energy);
    double occupancy = std::max(mean_static(s, "fsma", 5.0, get_usage),
                                mean_static(s, "bsma", 5.0, get_usage));
    bool ok = occupancy >= 0.80 && fsma_gw <= bsma_gw / 10.0;
    report(9, "gateway energy", ok,
           fmt("fsma %.2f J vs bsma tone %.2f J (%.0fx, need 10x) at occupancy %.2f (>=0.80)",
               fsma_gw, bsma_gw, bsma_gw / fsma_gw, occupancy),
           t.elapsed());
}

void criterion_10_failure_ratio(const Sweeps& s) {
    Timer t;
    double ff = mean_leo(s, "fsma", 5000, get_fail_ratio);
    double fa = mean_leo(s, "aloha", 5000, get_fail_ratio);
    bool ok = ff <= fa / 2.0;
    report(10, "gateway failure ratio", ok,
           fmt("fsma %.3f vs aloha %.3f at 5000 nodes (%.1fx lower, need 2x)", ff, fa,
               fa / ff),
           t.elapsed());
}

void criterion_11_wait_times(const Sweeps& s) {
    Timer t;
    bool ok = true;
    std::string detail;
    for (int nodes : {500, 1000, 2000, 5000}) {
        double w = mean_leo(s, "fsma", nodes, get_wait);
        detail += fmt("%d:%.0fs ", nodes, w);
        if (w > 150.0) ok = false;
    }
    report(11, "node wait times", ok, fmt("fsma mean wait %s(<=150 s)", detail.c_str()),
           t.elapsed());
}

void criterion_12_determinism() {
    Timer t;
    Scenario sc = load_scenario("leo-pass");
    sc.node_count = 300;
    RunResult a = run_scenario(sc, true);
    RunResult b = run_scenario(sc, true);
    bool runs_equal = report_to_json(a.report).dump() == report_to_json(b.report).dump() &&
                      a.report.trace_hash == b.report.trace_hash &&
                      a.trace_text == b.trace_text;

    SweepSpec spec;
    spec.base = load_scenario("static-16");
    spec.axis = SweepAxis::offered_load;
    spec.points = {1.0, 2.0};
    spec.protocols = {"fsma", "aloha"};
    spec.replicates = 3;
    SweepResult s1 = run_sweep(spec, 1);
    SweepResult s4 = run_sweep(spec, 4);
    bool sweeps_equal =
        s1.runs_csv == s4.runs_csv && s1.summary_csv == s4.summary_csv;

    report(12, "determinism", runs_equal && sweeps_equal,
           fmt("repeat runs byte-identical: %s; sweep parallelism 1 vs 4 identical: %s",
               runs_equal ? "yes" : "NO", sweeps_equal ? "yes" : "NO"),
           t.elapsed());
}

void criterion_13_cad_zero_false_positives() {
    Timer t;
    RngStream rng(99, 1);
    long long detections = 0;
    for (int i = 0; i < 1000000; ++i)
        if (cad_detect(std::nullopt, 9, rng)) ++detections;
    report(13, "zero-false-positive CAD", detections == 0,
           fmt("%lld detections in 1e6 signal-absent calls", detections), t.elapsed());
}

void criterion_14_link_calibration() {
    Timer t;
    LinkBudget budget;  // defaults
    LinkSample down = rx_snr(budget, LinkDirection::downlink, 2000e3, 125e3);
    double p_detect = cad_detect_probability(down.snr_db, 9);
    LinkSample up = rx_snr(budget, LinkDirection::uplink, 2000e3, 125e3);
    double floor = noise_floor_dbm(125e3, budget.noise_figure_db) + demod_snr_threshold(10);
    // Collision-free decode at 2000 km: a single packet above the floor.
    Reception rx{0, up.rx_power_dbm, 493568};
    CaptureResult cr = capture_resolve({&rx, 1}, 8192, CaptureModel{}, floor);
    bool ok = p_detect >= 0.99 && cr.outcome == RxOutcome::success &&
              up.rx_power_dbm >= floor + 1.0;
    report(14, "link calibration at 2000 km", ok,
           fmt("SF9 chirp detect p=%.3f (>=0.99); SF10 rx %.2f dBm vs floor %.2f dBm -> %s",
               p_detect, up.rx_power_dbm, floor,
               cr.outcome == RxOutcome::success ? "decoded" : "LOST"),
           t.elapsed());
}

} // namespace

int main() {
    std::printf("ntnsim acceptance suite\n");
    Timer total;

    criterion_1_airtime();
    criterion_2_schedule();
    criterion_3_collision_window();
    criterion_4_capture_oracle();

    Timer sweeps_t;
    Sweeps sweeps = run_sweeps();
    double sweeps_elapsed = sweeps_t.elapsed();

    criterion_5_static_throughput_prr(sweeps, sweeps_elapsed / 2);
    criterion_6_channel_usage(sweeps);
    criterion_7_leo_scalability(sweeps, sweeps_elapsed / 2);
    criterion_8_node_energy(sweeps);
    criterion_9_gateway_energy(sweeps);
    criterion_10_failure_ratio(sweeps);
    criterion_11_wait_times(sweeps);
    criterion_12_determinism();
    criterion_13_cad_zero_false_positives();
    criterion_14_link_calibration();

    std::printf("%d/14 criteria passed in %.1f s\n", 14 - g_failures, total.elapsed());
    return g_failures;
}
