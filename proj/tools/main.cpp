#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ntnsim/results.hpp"
#include "ntnsim/scenario.hpp"
#include "ntnsim/sim.hpp"
#include "ntnsim/sweep.hpp"

using namespace ntnsim;

namespace {

std::vector<double> parse_number_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(std::stod(item));
    }
    return out;
}

std::vector<std::string> parse_token_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

void print_run_summary(const MetricsReport& r) {
    std::printf("scenario      %s  protocol=%s  seed=%llu  nodes=%d\n", r.scenario_id.c_str(),
                r.protocol.c_str(), static_cast<unsigned long long>(r.seed), r.node_count);
    std::printf("offered load  %.3f   (buffered %lld, transmitted %lld, undelivered %lld)\n",
                r.offered_load, static_cast<long long>(r.buffered),
                static_cast<long long>(r.transmitted), static_cast<long long>(r.undelivered));
    std::printf("decoded       %lld  (collision %lld, detect %lld, link %lld)\n",
                static_cast<long long>(r.decoded), static_cast<long long>(r.lost_collision),
                static_cast<long long>(r.lost_detect), static_cast<long long>(r.lost_link));
    std::printf("throughput    %.2f bps  (normalized %.3f)\n", r.throughput_bps,
                r.normalized_throughput);
    std::printf("prr           %.4f   channel usage %.3f   gw failure ratio %.3f\n", r.prr,
                r.channel_usage, r.gateway_failure_ratio);
    std::printf("energy ratio  %.3f   gateway energy %.4f J   mean wait %.2f s\n",
                r.energy_ratio_node, r.gateway_extra_energy_j, r.mean_wait_s);
    if (r.chirp_count > 0)
        std::printf("chirps        %lld  (%.4f J)\n", static_cast<long long>(r.chirp_count),
                    r.gateway_chirp_energy_j);
    if (r.tone_time_s > 0)
        std::printf("tone          %.2f s (%.4f J)\n", r.tone_time_s, r.gateway_tone_energy_j);
    std::printf("trace hash    0x%016llx\n", static_cast<unsigned long long>(r.trace_hash));
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ntnsim - discrete-event simulator for LoRa MAC protocols with mobile gateways"};
    app.require_subcommand(1);

    // ------------------------------------------------------------------ run
    auto* run = app.add_subcommand("run", "run one scenario (preset name or file)");
    std::string run_scn, run_proto, run_out, run_format = "json", run_trace;
    std::uint64_t run_seed = 0;
    bool run_seed_set = false;
    int run_nodes = -1;
    double run_duty = -1, run_load = -1, run_time = -1;
    run->add_option("scenario", run_scn, "preset name or scenario file")->required();
    run->add_option("--protocol", run_proto, "fsma|aloha|bsma|csma|csma-<N>km");
    run->add_option("--nodes", run_nodes, "override node count");
    run->add_option("--duty", run_duty, "override per-node duty cycle");
    run->add_option("--load", run_load, "override offered network load (sets duty)");
    run->add_option("--total-time", run_time, "override run length in seconds");
    run->add_option("--seed", run_seed, "override RNG seed")->each([&](const std::string&) {
        run_seed_set = true;
    });
    run->add_option("--out", run_out, "write report to this path");
    run->add_option("--format", run_format, "json|csv (with --out)");
    run->add_option("--trace", run_trace, "write the event trace to this path");

    // ---------------------------------------------------------------- sweep
    auto* sweep = app.add_subcommand("sweep", "run a parameter sweep");
    std::string sw_scn, sw_axis = "none", sw_points, sw_protocols, sw_out;
    int sw_reps = 1, sw_par = 1;
    std::uint64_t sw_seed = 0;
    bool sw_seed_set = false;
    sweep->add_option("scenario", sw_scn, "preset name or scenario file")->required();
    sweep->add_option("--axis", sw_axis, "node_count|offered_load|none");
    sweep->add_option("--points", sw_points, "comma-separated axis points");
    sweep->add_option("--protocols", sw_protocols, "comma-separated protocol selectors");
    sweep->add_option("--replicates", sw_reps, "replicates per point");
    sweep->add_option("--parallelism", sw_par, "worker threads");
    sweep->add_option("--seed", sw_seed, "base seed")->each([&](const std::string&) {
        sw_seed_set = true;
    });
    sweep->add_option("--out", sw_out, "output prefix (<prefix>_runs.csv, <prefix>_summary.csv)");

    // -------------------------------------------------------------- airtime
    auto* air = app.add_subcommand("airtime", "print packet airtime for LoRa parameters");
    int a_sf = 10, a_cr = 4, a_preamble = 8, a_payload = 20;
    std::int64_t a_bw = 125000;
    bool a_implicit = false, a_crc = false, a_no_ldro = false, a_table = false;
    air->add_option("--sf", a_sf, "spreading factor (7..12)");
    air->add_option("--bw", a_bw, "bandwidth in Hz");
    air->add_option("--cr", a_cr, "coding rate addend (1..4; 4 = rate 4/8)");
    air->add_option("--preamble", a_preamble, "preamble symbols");
    air->add_option("--payload", a_payload, "payload bytes");
    air->add_flag("--implicit-header", a_implicit, "implicit header mode");
    air->add_flag("--crc", a_crc, "include the CRC term in airtime");
    air->add_flag("--no-ldro", a_no_ldro, "disable low-data-rate optimization");
    air->add_flag("--table", a_table, "print a payload sweep table (0..255)");

    // ------------------------------------------------------------- schedule
    auto* sched = app.add_subcommand("schedule", "print the free-chirp timing schedule");
    int s_sf = 10, s_chirp = 9;
    std::int64_t s_bw = 125000;
    sched->add_option("--sf", s_sf, "node spreading factor");
    sched->add_option("--chirp-sf", s_chirp, "chirp spreading factor (must be lower)");
    sched->add_option("--bw", s_bw, "bandwidth in Hz");

    // -------------------------------------------------------------- tle-info
    auto* tle = app.add_subcommand("tle-info", "parse a TLE file and summarize the orbit");
    std::string t_file;
    int t_track = 0;
    double t_track_step = 60.0;
    tle->add_option("file", t_file, "TLE file (2 or 3 lines)")->required();
    tle->add_option("--track", t_track, "print N subsatellite points from the epoch");
    tle->add_option("--track-step", t_track_step, "seconds between track points");

    // -------------------------------------------------------------- presets
    auto* presets = app.add_subcommand("presets", "list built-in presets");
    std::string p_dump;
    presets->add_option("--dump", p_dump, "print the named preset");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            Scenario sc = load_scenario(run_scn);
            if (!run_proto.empty()) apply_protocol_token(sc, run_proto);
            if (run_nodes >= 0) sc.node_count = run_nodes;
            if (run_duty >= 0) sc.duty_cycle = run_duty;
            if (run_load >= 0) sc.duty_cycle = run_load / std::max(1, sc.node_count);
            if (run_time > 0) sc.total_time_s = run_time;
            if (run_seed_set) sc.seed = run_seed;
            sc.validate();
            RunResult res = run_scenario(sc, !run_trace.empty());
            print_run_summary(res.report);
            if (!run_out.empty()) {
                if (run_format == "json")
                    write_text_file(run_out, report_to_json(res.report).dump(2) + "\n");
                else if (run_format == "csv")
                    write_text_file(run_out, reports_to_csv({&res.report, 1}));
                else
                    throw ConfigError("run: --format must be json or csv");
                std::printf("report        %s\n", run_out.c_str());
            }
            if (!run_trace.empty()) {
                write_text_file(run_trace, res.trace_text);
                std::printf("trace         %s\n", run_trace.c_str());
            }
        } else if (*sweep) {
            SweepSpec spec;
            spec.base = load_scenario(sw_scn);
            if (sw_seed_set) spec.base.seed = sw_seed;
            if (sw_axis == "node_count") spec.axis = SweepAxis::node_count;
            else if (sw_axis == "offered_load") spec.axis = SweepAxis::offered_load;
            else if (sw_axis == "none") spec.axis = SweepAxis::none;
            else throw ConfigError("sweep: --axis must be node_count|offered_load|none");
            spec.points = parse_number_list(sw_points);
            spec.protocols = parse_token_list(sw_protocols);
            spec.replicates = sw_reps;
            SweepResult res = run_sweep(spec, sw_par);
            std::printf("%zu runs complete\n", res.reports.size());
            if (!sw_out.empty()) {
                write_text_file(sw_out + "_runs.csv", res.runs_csv);
                write_text_file(sw_out + "_summary.csv", res.summary_csv);
                std::printf("wrote %s_runs.csv and %s_summary.csv\n", sw_out.c_str(),
                            sw_out.c_str());
            } else {
                std::fputs(res.summary_csv.c_str(), stdout);
            }
        } else if (*air) {
            LoRaParams p;
            p.sf = a_sf;
            p.bw_hz = a_bw;
            p.cr = a_cr;
            p.preamble_symbols = a_preamble;
            p.payload_bytes = a_payload;
            p.explicit_header = !a_implicit;
            p.crc_in_airtime = a_crc;
            p.ldro = !a_no_ldro;
            if (a_table) {
                std::printf("payload_bytes,symbols,airtime_ms\n");
                for (int pl = 0; pl <= 255; ++pl) {
                    p.payload_bytes = pl;
                    Airtime at = packet_airtime(p);
                    std::printf("%d,%s,%.3f\n", pl, at.symbols_str().c_str(),
                                at.seconds() * 1e3);
                }
            } else {
                Airtime at = packet_airtime(p);
                std::printf("sf=%d bw=%lld cr=4/%d payload=%d preamble=%d header=%s crc=%s ldro=%s\n",
                            p.sf, static_cast<long long>(p.bw_hz), 4 + p.cr, p.payload_bytes,
                            p.preamble_symbols, p.explicit_header ? "explicit" : "implicit",
                            p.crc_in_airtime ? "on" : "off", p.ldro ? "on" : "off");
                std::printf("symbols  %s\n", at.symbols_str().c_str());
                std::printf("airtime  %.3f ms (%lld us)\n", at.seconds() * 1e3,
                            static_cast<long long>(at.us));
            }
        } else if (*sched) {
            LoRaParams p;
            p.sf = s_sf;
            p.bw_hz = s_bw;
            FreeChirpSchedule fs = freechirp_schedule(p, s_chirp);
            std::printf("node sf=%d chirp sf=%d bw=%lld\n", s_sf, s_chirp,
                        static_cast<long long>(s_bw));
            std::printf("t_chirp        %10.3f ms (%lld us)\n", us_to_s(fs.t_chirp_us) * 1e3,
                        static_cast<long long>(fs.t_chirp_us));
            std::printf("t_wait         %10.3f ms (%lld us)\n", us_to_s(fs.t_wait_us) * 1e3,
                        static_cast<long long>(fs.t_wait_us));
            std::printf("t_interval     %10.3f ms (%lld us)\n", us_to_s(fs.t_interval_us) * 1e3,
                        static_cast<long long>(fs.t_interval_us));
            std::printf("t_nsense       %10.3f ms (%lld us)\n", us_to_s(fs.t_nsense_us) * 1e3,
                        static_cast<long long>(fs.t_nsense_us));
            std::printf("t_busy_backoff %10.3f ms (%lld us)\n",
                        us_to_s(fs.t_busy_backoff_us) * 1e3,
                        static_cast<long long>(fs.t_busy_backoff_us));
            std::printf("node symbol    %10.3f ms; t_nsense = %.4g node symbols (~6 with the chirp"
                        " term dropped)\n",
                        us_to_s(fs.node_symbol_us) * 1e3, fs.nsense_node_symbols());
        } else if (*tle) {
            std::ifstream in(t_file);
            if (!in) throw ConfigError("tle-info: cannot open '" + t_file + "'");
            std::vector<std::string> lines;
            std::string line;
            while (std::getline(in, line)) {
                if (!line.empty() && line.back() == '\r') line.pop_back();
                if (!line.empty()) lines.push_back(line);
            }
            std::string l1, l2, name;
            if (lines.size() >= 3 && lines[0][0] != '1') {
                name = lines[0];
                l1 = lines[1];
                l2 = lines[2];
            } else if (lines.size() >= 2) {
                l1 = lines[0];
                l2 = lines[1];
            } else {
                throw ParseError("tle-info: need at least two TLE lines");
            }
            OrbitalElements el = parse_tle(l1, l2);
            if (!name.empty()) std::printf("name            %s\n", name.c_str());
            std::printf("catalog         %d\n", el.catalog_number);
            std::printf("epoch           year %d day %.8f\n", el.epoch_year, el.epoch_day);
            std::printf("inclination     %.4f deg\n", el.inclination_deg);
            std::printf("raan            %.4f deg\n", el.raan_deg);
            std::printf("eccentricity    %.7f\n", el.eccentricity);
            std::printf("arg perigee     %.4f deg\n", el.arg_perigee_deg);
            std::printf("mean anomaly    %.4f deg\n", el.mean_anomaly_deg);
            std::printf("mean motion     %.8f rev/day\n", el.mean_motion_rev_day);
            std::printf("period          %.1f s\n", el.period_s());
            std::printf("semi-major axis %.1f km (mean altitude %.1f km)\n",
                        el.semi_major_axis_m() / 1e3,
                        (el.semi_major_axis_m() - kEarthRadiusM) / 1e3);
            if (t_track > 0) {
                std::printf("t_s,lat_deg,lon_deg,alt_km\n");
                for (int i = 0; i < t_track; ++i) {
                    double t = i * t_track_step;
                    GeoPos p = propagate(el, t);
                    std::printf("%.0f,%.4f,%.4f,%.1f\n", t, p.lat_deg, p.lon_deg,
                                p.alt_m / 1e3);
                }
            }
        } else if (*presets) {
            if (!p_dump.empty()) {
                std::fputs(preset_text(p_dump).c_str(), stdout);
            } else {
                for (const std::string& n : preset_names()) std::printf("%s\n", n.c_str());
            }
        }
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 1;
    }
    return 0;
}
