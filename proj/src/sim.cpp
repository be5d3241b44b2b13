#include "ntnsim/sim.hpp"

#include <algorithm>
#include <cassert>
#include <cstdio>
#include <deque>
#include <limits>
#include <optional>

#include "ntnsim/channel.hpp"
#include "ntnsim/engine.hpp"
#include "ntnsim/mac.hpp"
#include "ntnsim/traffic.hpp"

namespace ntnsim {

namespace {

struct SeqOutcome {
    CaptureResult result;  // fates aligned with the (sorted) input
    int attempts = 0;      // lock attempts the receiver made
};

/// Sequential receiver over a whole busy episode: repeats the capture lock
/// cycle, re-arming after each locked packet ends. Packets whose preamble
/// passes while the receiver is busy are never attempted. On inputs that all
/// overlap pairwise this reduces to a single capture_resolve lock cycle.
SeqOutcome sequential_resolve(std::span<const Reception> rx, TimeUs symbol_us,
                              const CaptureModel& capture, double min_power_dbm) {
    SeqOutcome out;
    out.result.fates.assign(rx.size(), PacketFate::lost_collision);
    out.result.outcome = RxOutcome::idle;
    const std::size_t n = rx.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0 && rx[i].arrival_us < rx[i - 1].arrival_us)
            throw SimError("sequential_resolve: receptions not sorted by arrival time");
        if (rx[i].rx_power_dbm < min_power_dbm)
            out.result.fates[i] = PacketFate::lost_link;
    }

    auto mw = [](double dbm) { return std::pow(10.0, dbm / 10.0); };
    const double thr = mw(capture.capture_threshold_db);
    const TimeUs window = TimeUs{capture.lock_window_symbols} * symbol_us;

    TimeUs t_free = std::numeric_limits<TimeUs>::min();
    for (;;) {
        int open = -1;
        for (std::size_t i = 0; i < n; ++i) {
            if (out.result.fates[i] == PacketFate::lost_link) continue;
            if (rx[i].arrival_us >= t_free) {
                open = static_cast<int>(i);
                break;
            }
        }
        if (open < 0) break;

        TimeUs close = rx[static_cast<std::size_t>(open)].arrival_us + window;
        int cand = -1;
        for (std::size_t i = static_cast<std::size_t>(open); i < n; ++i) {
            if (rx[i].arrival_us > close) break;
            if (out.result.fates[i] == PacketFate::lost_link || rx[i].arrival_us < t_free)
                continue;
            if (cand < 0 ||
                rx[i].rx_power_dbm > rx[static_cast<std::size_t>(cand)].rx_power_dbm)
                cand = static_cast<int>(i);
        }
        const Reception& c = rx[static_cast<std::size_t>(cand)];
        out.attempts += 1;

        auto overlaps_cand = [&](std::size_t i) {
            return rx[i].arrival_us < c.arrival_us + c.airtime_us &&
                   c.arrival_us < rx[i].arrival_us + rx[i].airtime_us;
        };
        double competing = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (static_cast<int>(i) == cand || !overlaps_cand(i)) continue;
            competing = std::max(competing, mw(rx[i].rx_power_dbm));
        }
        if (mw(c.rx_power_dbm) >= thr * competing) {
            out.result.fates[static_cast<std::size_t>(cand)] = PacketFate::decoded;
            if (out.result.winner < 0) out.result.winner = cand;
        } else {
            for (std::size_t i = 0; i < n; ++i) {
                if (rx[i].arrival_us > close && overlaps_cand(i) &&
                    mw(rx[i].rx_power_dbm) >= thr * mw(c.rx_power_dbm)) {
                    out.result.fates[static_cast<std::size_t>(cand)] =
                        PacketFate::lost_detect;
                    break;
                }
            }
        }
        t_free = c.arrival_us + c.airtime_us;
    }

    if (out.result.winner >= 0) out.result.outcome = RxOutcome::success;
    else if (out.attempts > 0) out.result.outcome = RxOutcome::detect_failure;
    return out;
}

} // namespace

CaptureResult gateway_rx_resolve(std::span<const Transmission> txs, TimeUs symbol_us,
                                 const CaptureModel& capture, double min_power_dbm) {
    struct Tagged {
        Reception rx;
        std::size_t input_index;
    };
    std::vector<Tagged> tagged;
    tagged.reserve(txs.size());
    for (std::size_t i = 0; i < txs.size(); ++i)
        tagged.push_back({Reception{txs[i].arrival_start_us(), txs[i].rx_power_dbm,
                                    txs[i].airtime_us},
                          i});
    std::stable_sort(tagged.begin(), tagged.end(), [](const Tagged& a, const Tagged& b) {
        return a.rx.arrival_us < b.rx.arrival_us;
    });
    std::vector<Reception> sorted;
    sorted.reserve(tagged.size());
    for (const auto& t : tagged) sorted.push_back(t.rx);

    CaptureResult inner = sequential_resolve(sorted, symbol_us, capture, min_power_dbm).result;
    CaptureResult out;
    out.outcome = inner.outcome;
    out.fates.assign(txs.size(), PacketFate::lost_collision);
    for (std::size_t i = 0; i < tagged.size(); ++i) {
        out.fates[tagged[i].input_index] = inner.fates[i];
        if (inner.winner == static_cast<int>(i))
            out.winner = static_cast<int>(tagged[i].input_index);
    }
    return out;
}

namespace {

enum EvKind : int {
    ev_arrival = 1,
    ev_node_wake,
    ev_neighbor_decide,
    ev_sense_deadline,
    ev_verify_complete,
    ev_tx_end,
    ev_gw_chirp_end,
    ev_gw_phase_expiry,
    ev_trigger_rise,
    ev_trigger_fall,
    ev_arrival_start,
    ev_episode_resolve,
    ev_sim_end,
};

const char* fate_name(PacketFate f) {
    switch (f) {
        case PacketFate::decoded: return "decoded";
        case PacketFate::lost_collision: return "lost_collision";
        case PacketFate::lost_detect: return "lost_detect";
        case PacketFate::lost_link: return "lost_link";
    }
    return "?";
}

class Simulation {
public:
    Simulation(const Scenario& sc, bool keep_trace)
        : sc_(sc),
          trace_(keep_trace),
          gw_rng_(sc.seed, stream_id(StreamPurpose::gateway, 0)),
          channel_seed_(splitmix64(sc.seed ^ 0xC0FFEE5EEDULL)) {
        sc_.validate();
        airtime_ = packet_airtime(sc_.lora);
        node_symbol_us_ = symbol_duration_us(sc_.lora.sf, sc_.lora.bw_hz);
        min_power_dbm_ = noise_floor_dbm(static_cast<double>(sc_.lora.bw_hz),
                                         sc_.link.noise_figure_db) +
                         sc_.demod_snr(sc_.lora.sf);
        if (sc_.protocol == Protocol::fsma) {
            sched_ = freechirp_schedule(sc_.lora, sc_.chirp_sf);
            fsma_gw_ = FsmaGateway(sched_);
            slot_us_ = sched_.t_chirp_us;
            slots_max_ = static_cast<int>((sched_.t_nsense_us + slot_us_ - 1) / slot_us_);
            cad_op_j_ = (1.0 + sc_.cad_overhead_symbols) * us_to_s(slot_us_) *
                        sc_.energy.node_rx_cad_w;
        } else {
            // CSMA/BSMA perform CAD at the node (or tone) SF
            int cad_sf = sc_.protocol == Protocol::bsma ? sc_.bsma_tone_sf : sc_.lora.sf;
            cad_op_j_ = (1.0 + sc_.cad_overhead_symbols) *
                        symbol_duration_s(cad_sf, sc_.lora.bw_hz) * sc_.energy.node_rx_cad_w;
        }
        end_us_ = s_to_us(sc_.total_time_s);
        gw_static_ = std::holds_alternative<StaticPos>(sc_.gateway.model);
        if (gw_static_) {
            gw_pos_cache_ = std::get<StaticPos>(sc_.gateway.model).pos;
            gw_ecef_cache_ = geo_to_ecef(gw_pos_cache_);
        }
        setup_nodes();
    }

    RunResult run() {
        schedule_traffic();
        q_.schedule(end_us_, ev_sim_end);
        if (sc_.protocol == Protocol::fsma && sc_.node_count >= 0) {
            auto act = fsma_gw_.start(0);
            do_chirp(0);
            q_.schedule(act.next_event_at, ev_gw_chirp_end);
        }
        while (!q_.empty()) dispatch(q_.pop());

        // Close out per-node sleep accounting.
        for (auto& n : nodes_) {
            double sleep_s = std::max(0.0, sc_.total_time_s - n.active_s);
            energy_accrue(n.counters.energy, Activity::sleep, sleep_s, sc_.energy);
        }

        MetricsReport rep;
        rep.scenario_id = sc_.id;
        rep.protocol = protocol_label();
        rep.seed = sc_.seed;
        rep.node_count = sc_.node_count;
        rep.duty_cycle = sc_.duty_cycle;
        rep.total_time_s = sc_.total_time_s;
        rep.airtime_s = airtime_.seconds();
        rep.payload_bytes = sc_.lora.payload_bytes;
        if (sc_.protocol == Protocol::fsma) {
            rep.t_nsense_s = us_to_s(sched_.t_nsense_us);
            rep.t_nsense_node_symbols = sched_.nsense_node_symbols();
        }
        std::vector<NodeCounters> counters;
        counters.reserve(nodes_.size());
        for (auto& n : nodes_) counters.push_back(n.counters);
        compute_metrics(rep, counters, waits_, gw_tallies_, sc_.energy);
        rep.trace_hash = trace_.hash();
        return RunResult{std::move(rep), trace_.text()};
    }

private:
    struct NodeState {
        GeoPos pos;
        Vec3 ecef;
        std::deque<std::pair<std::int64_t, TimeUs>> queue;  // (packet id, arrival)
        bool serving = false;
        BackoffState backoff;
        RngStream rng;
        NodeCounters counters;
        // FSMA sensing
        std::uint64_t sense_gen = 0;
        bool sensing = false;
        bool verify_pending = false;
        TimeUs sense_start = 0;
        int sensing_slot = -1;  // index into sensing_ids_, -1 when absent
        // bookkeeping
        double active_s = 0.0;
        bool tx_out_of_coverage = false;
    };

    struct GwArrival {
        int node = -1;
        std::int64_t pkt = 0;
        TimeUs arrival = 0, end = 0;
        double power_dbm = 0.0;
        bool detectable = false;
        TimeUs tx_start = 0;
    };

    struct Episode {
        std::uint64_t id = 0;
        std::vector<GwArrival> pkts;
        TimeUs union_end = 0;
        bool has_det = false;
        TimeUs det_union_end = 0;
    };

    struct ActiveTx {
        int node = -1;
        double start_s = 0.0, end_s = 0.0;
    };

    // ------------------------------------------------------------- setup --

    void setup_nodes() {
        nodes_.resize(static_cast<std::size_t>(sc_.node_count));
        std::vector<GeoPos> positions;
        if (!sc_.explicit_positions.empty()) {
            positions = sc_.explicit_positions;
        } else if (sc_.node_count > 0) {
            RngStream deploy_rng(sc_.seed, stream_id(StreamPurpose::deploy, 0));
            positions = deploy_nodes(sc_.region, sc_.node_count, deploy_rng);
        }
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            nodes_[i].pos = positions[i];
            nodes_[i].ecef = geo_to_ecef(positions[i]);
            nodes_[i].rng = RngStream(sc_.seed, stream_id(StreamPurpose::mac, i));
            nodes_[i].backoff = BackoffState::init(airtime_.seconds());
        }
    }

    void schedule_traffic() {
        TrafficConfig cfg = sc_.traffic();
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            RngStream traffic_rng(sc_.seed, stream_id(StreamPurpose::traffic, i));
            for (double t : poisson_arrivals(cfg, airtime_.seconds(), traffic_rng))
                q_.schedule(s_to_us(t), ev_arrival, static_cast<int>(i), next_pkt_id_++);
        }
    }

    // ---------------------------------------------------------- geometry --

    void gw_state_at(TimeUs t, GeoPos& pos, Vec3& ecef) const {
        if (gw_static_) {
            pos = gw_pos_cache_;
            ecef = gw_ecef_cache_;
            return;
        }
        pos = sc_.gateway.position_at(us_to_s(t));
        ecef = geo_to_ecef(pos);
    }

    static double elevation_deg_from(const Vec3& from, const Vec3& to, double dist) {
        Vec3 d = to - from;
        double up = d.dot(from) / (dist * from.norm());
        return rad2deg(std::asin(std::clamp(up, -1.0, 1.0)));
    }

    double node_gap_m(int i, int j) const { return (nodes_[i].ecef - nodes_[j].ecef).norm(); }

    // --------------------------------------------------------------- trace --

    void trace_node(TimeUs t, const char* kind, int node, const char* fmt = nullptr,
                    long long v = 0) {
        char entity[16];
        std::snprintf(entity, sizeof entity, "n%d", node);
        if (!fmt) {
            trace_.record(t, kind, entity, "");
            return;
        }
        char detail[64];
        std::snprintf(detail, sizeof detail, fmt, v);
        trace_.record(t, kind, entity, detail);
    }

    void trace_gw(TimeUs t, const char* kind, const char* fmt = nullptr, long long v = 0) {
        if (!fmt) {
            trace_.record(t, kind, "gw", "");
            return;
        }
        char detail[64];
        std::snprintf(detail, sizeof detail, fmt, v);
        trace_.record(t, kind, "gw", detail);
    }

    // ------------------------------------------------------------ dispatch --

    void dispatch(const Event& e) {
        switch (e.kind) {
            case ev_arrival: on_arrival(e); break;
            case ev_node_wake: on_node_wake(e); break;
            case ev_neighbor_decide: on_neighbor_decide(e); break;
            case ev_sense_deadline: on_sense_deadline(e); break;
            case ev_verify_complete: on_verify_complete(e); break;
            case ev_tx_end: on_tx_end(e); break;
            case ev_gw_chirp_end: on_gw_chirp_end(e); break;
            case ev_gw_phase_expiry: on_gw_phase_expiry(e); break;
            case ev_trigger_rise: on_trigger_rise(e); break;
            case ev_trigger_fall: on_trigger_fall(e); break;
            case ev_arrival_start: on_arrival_start(e); break;
            case ev_episode_resolve: on_episode_resolve(e); break;
            case ev_sim_end:
                draining_ = true;
                trace_gw(e.fire_time, "end");
                break;
            default: throw SimError("dispatch: unknown event kind");
        }
    }

    // ------------------------------------------------------------- traffic --

    void on_arrival(const Event& e) {
        NodeState& n = nodes_[static_cast<std::size_t>(e.entity)];
        n.counters.buffered += 1;
        trace_node(e.fire_time, "arrival", e.entity, "pkt=%lld", e.a);
        n.queue.emplace_back(e.a, e.fire_time);
        if (!n.serving) {
            n.serving = true;
            begin_service(e.entity, e.fire_time);
        }
    }

    void on_node_wake(const Event& e) {
        if (draining_) return;
        begin_service(e.entity, e.fire_time);
    }

    void begin_service(int node, TimeUs now) {
        if (draining_) return;
        switch (sc_.protocol) {
            case Protocol::fsma: fsma_sense_start(node, now); break;
            case Protocol::aloha: start_tx(node, now); break;
            case Protocol::csma: csma_attempt(node, now); break;
            case Protocol::bsma: bsma_attempt(node, now); break;
        }
    }

    // ---------------------------------------------------------- FSMA node --

    void fsma_sense_start(int node, TimeUs now) {
        NodeState& n = nodes_[static_cast<std::size_t>(node)];
        n.sensing = true;
        n.verify_pending = false;
        n.sense_gen += 1;
        n.sense_start = now;
        sensing_add(node);
        trace_node(now, "sense_start", node);
        q_.schedule(now + TimeUs{slots_max_} * slot_us_, ev_sense_deadline, node,
                    static_cast<std::int64_t>(n.sense_gen));

        // A neighbor transmission already on the air reads as positive CAD in
        // the first two slots: back off after the verification pair.
        if (neighbor_covers(node, now, now + 2 * slot_us_)) {
            q_.schedule(now + 2 * slot_us_, ev_neighbor_decide, node,
                        static_cast<std::int64_t>(n.sense_gen));
            return;
        }
        // The latest chirp may still be in flight toward this node.
        if (last_chirp_us_ >= 0) {
            double dist = (last_chirp_ecef_ - n.ecef).norm();
            TimeUs arrival = last_chirp_us_ + propagation_delay_us(dist);
            if (arrival + slot_us_ / 2 > now)
                evaluate_chirp(node, last_chirp_us_, last_chirp_ecef_);
        }
    }

    /// Push a freshly emitted (or in-flight) chirp to one sensing node.
    void evaluate_chirp(int node, TimeUs chirp_time, const Vec3& gw_ecef) {
        NodeState& n = nodes_[static_cast<std::size_t>(node)];
        if (!n.sensing || n.verify_pending) return;
        double dist = (gw_ecef - n.ecef).norm();
        if (elevation_deg_from(n.ecef, gw_ecef, dist) < sc_.min_elevation_deg) return;
        double shadow = shadow_db_for_epoch(sc_.link, channel_seed_,
                                            static_cast<std::uint64_t>(node), chirp_time);
        LinkSample down = rx_snr(sc_.link, LinkDirection::downlink, dist,
                                 static_cast<double>(sc_.lora.bw_hz), shadow);
        double p = cad_detect_probability_at(down.snr_db, sc_.demod_snr(sc_.chirp_sf),
                                             sc_.cad_margin_db);
        if (p <= 0.0) return;
        TimeUs arrival = chirp_time + propagation_delay_us(dist);
        // CAD detects the chirp in the slot holding its midpoint.
        TimeUs mid_offset = arrival + slot_us_ / 2 - n.sense_start;
        if (mid_offset < 0) return;
        auto k = mid_offset / slot_us_;
        if (k >= slots_max_) return;  // past the sensing window
        if (p < 1.0 && n.rng.uniform() >= p) return;  // missed detection
        n.verify_pending = true;
        TimeUs verify_end = n.sense_start + (k + 2) * slot_us_;
        q_.schedule(verify_end + s_to_us(sc_.turnaround_s), ev_verify_complete, node,
                    static_cast<std::int64_t>(n.sense_gen), k);
    }

    void on_neighbor_decide(const Event& e) {
        NodeState& n = nodes_[static_cast<std::size_t>(e.entity)];
        if (!n.sensing || n.sense_gen != static_cast<std::uint64_t>(e.a) || n.verify_pending)
            return;
        finish_sense(e.entity, 2, e.fire_time);
        trace_node(e.fire_time, "neighbor_busy", e.entity);
        if (!draining_) do_backoff(e.entity, e.fire_time);
    }

    void on_sense_deadline(const Event& e) {
        NodeState& n = nodes_[static_cast<std::size_t>(e.entity)];
        if (!n.sensing || n.sense_gen != static_cast<std::uint64_t>(e.a) || n.verify_pending)
            return;
        finish_sense(e.entity, slots_max_, e.fire_time);
        trace_node(e.fire_time, "sense_timeout", e.entity);
        if (!draining_) do_backoff(e.entity, e.fire_time);
    }

    void on_verify_complete(const Event& e) {
        NodeState& n = nodes_[static_cast<std::size_t>(e.entity)];
        if (!n.sensing || n.sense_gen != static_cast<std::uint64_t>(e.a)) return;
        auto k = e.b;
        TimeUs vs = n.sense_start + (k + 1) * slot_us_;
        TimeUs ve = n.sense_start + (k + 2) * slot_us_;
        finish_sense(e.entity, static_cast<int>(k) + 2, e.fire_time);
        bool dirty = neighbor_in_cad_slot(e.entity, vs, ve);
        if (dirty) {
            trace_node(e.fire_time, "verify_fail", e.entity);
            if (!draining_) do_backoff(e.entity, e.fire_time);
            return;
        }
        trace_node(e.fire_time, "verify_ok", e.entity);
        if (!draining_) start_tx(e.entity, e.fire_time);
    }

    /// True when some other node's transmission is audible at `node` for all
    /// of [from, to] (hearing-range cutoff plus propagation delay).
    bool neighbor_covers(int node, TimeUs from, TimeUs to) {
        prune_recent(from);
        double from_s = us_to_s(from), to_s = us_to_s(to);
        for (const ActiveTx& t : recent_tx_) {
            if (t.node == node) continue;
            double d = node_gap_m(node, t.node);
            if (d > sc_.hearing_range_m) continue;
            double flight = propagation_delay_s(d);
            if (t.start_s + flight <= from_s && t.end_s + flight >= to_s) return true;
        }
        return false;
    }

    /// CAD registers a neighbor signal in a slot only when the signal covers
    /// at least half of it, the same majority rule the chirp detector uses.
    bool neighbor_in_cad_slot(int node, TimeUs from, TimeUs to) {
        prune_recent(from);
        double from_s = us_to_s(from), to_s = us_to_s(to);
        double need = (to_s - from_s) / 2.0;
        for (const ActiveTx& t : recent_tx_) {
            if (t.node == node) continue;
            double d = node_gap_m(node, t.node);
            if (d > sc_.hearing_range_m) continue;
            double flight = propagation_delay_s(d);
            double lo = std::max(from_s, t.start_s + flight);
            double hi = std::min(to_s, t.end_s + flight);
            if (hi - lo >= need) return true;
        }
        return false;
    }

    void finish_sense(int node, int cad_ops, TimeUs now) {
        NodeState& n = nodes_[static_cast<std::size_t>(node)];
        n.sensing = false;
        n.verify_pending = false;
        sensing_remove(node);
        n.counters.cad_ops += cad_ops;
        n.counters.energy.cad_j += cad_op_j_ * cad_ops;
        n.active_s += us_to_s(now - n.sense_start);
    }

    void do_backoff(int node, TimeUs now) {
        NodeState& n = nodes_[static_cast<std::size_t>(node)];
        n.counters.backoffs += 1;
        double delay_s = backoff_next(n.backoff, n.rng);
        TimeUs delay = s_to_us(delay_s);
        trace_node(now, "backoff", node, "delay_us=%lld", static_cast<long long>(delay));
        q_.schedule(now + delay, ev_node_wake, node);
    }

    void sensing_add(int node) {
        NodeState& n = nodes_[static_cast<std::size_t>(node)];
        n.sensing_slot = static_cast<int>(sensing_ids_.size());
        sensing_ids_.push_back(node);
    }

    void sensing_remove(int node) {
        NodeState& n = nodes_[static_cast<std::size_t>(node)];
        if (n.sensing_slot < 0) return;
        int last = sensing_ids_.back();
        sensing_ids_[static_cast<std::size_t>(n.sensing_slot)] = last;
        nodes_[static_cast<std::size_t>(last)].sensing_slot = n.sensing_slot;
        sensing_ids_.pop_back();
        n.sensing_slot = -1;
    }

    // --------------------------------------------------------- CSMA / BSMA --

    void csma_attempt(int node, TimeUs now) {
        NodeState& n = nodes_[static_cast<std::size_t>(node)];
        n.counters.cad_ops += 1;
        n.counters.energy.cad_j += cad_op_j_;
        prune_recent(now);
        bool busy = false;
        double now_s = us_to_s(now);
        for (const ActiveTx& t : recent_tx_) {
            if (t.node == node) continue;
            if (csma_hears(node_gap_m(node, t.node), sc_.hearing_range_m, t.start_s, t.end_s,
                           now_s)) {
                busy = true;
                break;
            }
        }
        if (busy) {
            trace_node(now, "csma_busy", node);
            do_backoff(node, now);
        } else {
            start_tx(node, now);
        }
    }

    void bsma_attempt(int node, TimeUs now) {
        NodeState& n = nodes_[static_cast<std::size_t>(node)];
        n.counters.cad_ops += 1;
        n.counters.energy.cad_j += cad_op_j_;
        GeoPos gw_pos;
        Vec3 gw_ecef;
        gw_state_at(now, gw_pos, gw_ecef);
        double dist = (gw_ecef - n.ecef).norm();
        bool busy = false;
        if (elevation_deg_from(n.ecef, gw_ecef, dist) >= sc_.min_elevation_deg) {
            double heard_at = us_to_s(now) - propagation_delay_s(dist);
            bool audible = tone_state_at(heard_at);
            if (audible) {
                double shadow = shadow_db_for_epoch(sc_.link, channel_seed_,
                                                    static_cast<std::uint64_t>(node), now);
                LinkSample down = rx_snr(sc_.link, LinkDirection::downlink, dist,
                                         static_cast<double>(sc_.lora.bw_hz), shadow);
                double p = cad_detect_probability_at(
                    down.snr_db, sc_.demod_snr(sc_.bsma_tone_sf), sc_.cad_margin_db);
                busy = p >= 1.0 || (p > 0.0 && n.rng.uniform() < p);
            }
        }
        if (busy) {
            trace_node(now, "tone_busy", node);
            do_backoff(node, now);
        } else {
            start_tx(node, now);
        }
    }

    bool tone_state_at(double t_s) const {
        if (tone_on_ && t_s >= tone_on_since_s_) return true;
        for (std::size_t i = tone_head_; i < tone_intervals_.size(); ++i) {
            if (t_s >= tone_intervals_[i].first && t_s < tone_intervals_[i].second) return true;
        }
        return false;
    }

    // ------------------------------------------------------------ transmit --

    void start_tx(int node, TimeUs now) {
        NodeState& n = nodes_[static_cast<std::size_t>(node)];
        auto [pkt, arrival_ts] = n.queue.front();
        n.counters.transmitted += 1;
        double wait_s = us_to_s(now - arrival_ts);
        n.counters.wait_sum_s += wait_s;
        waits_.push_back(wait_s);
        trace_node(now, "tx_start", node, "pkt=%lld", pkt);
        n.active_s += airtime_.seconds();
        energy_accrue(n.counters.energy, Activity::tx, airtime_.seconds(), sc_.energy);

        double now_s = us_to_s(now);
        prune_recent(now);
        recent_tx_.push_back(ActiveTx{node, now_s, now_s + airtime_.seconds()});

        GeoPos gw_pos;
        Vec3 gw_ecef;
        gw_state_at(now, gw_pos, gw_ecef);
        double dist = (gw_ecef - n.ecef).norm();
        bool in_coverage = elevation_deg_from(n.ecef, gw_ecef, dist) >= sc_.min_elevation_deg;
        n.tx_out_of_coverage = !in_coverage;
        if (in_coverage) {
            double shadow = shadow_db_for_epoch(sc_.link, channel_seed_,
                                                static_cast<std::uint64_t>(node), now);
            LinkSample up = rx_snr(sc_.link, LinkDirection::uplink, dist,
                                   static_cast<double>(sc_.lora.bw_hz), shadow);
            TimeUs arrival = now + propagation_delay_us(dist);
            GwArrival ga;
            ga.node = node;
            ga.pkt = pkt;
            ga.arrival = arrival;
            ga.end = arrival + airtime_.us;
            ga.power_dbm = up.rx_power_dbm;
            ga.detectable = up.rx_power_dbm >= min_power_dbm_;
            ga.tx_start = now;
            arrival_store_.push_back(ga);
            q_.schedule(arrival, ev_arrival_start, node,
                        static_cast<std::int64_t>(arrival_store_.size() - 1));
        }
        q_.schedule(now + airtime_.us, ev_tx_end, node, pkt);
    }

    void on_tx_end(const Event& e) {
        NodeState& n = nodes_[static_cast<std::size_t>(e.entity)];
        trace_node(e.fire_time, "tx_end", e.entity, "pkt=%lld", e.a);
        if (n.tx_out_of_coverage) {
            n.counters.lost_link += 1;
            trace_node(e.fire_time, "rx_blocked", e.entity, "pkt=%lld", e.a);
            n.tx_out_of_coverage = false;
        }
        n.queue.pop_front();
        if (!n.queue.empty() && !draining_) {
            begin_service(e.entity, e.fire_time);
        } else {
            n.serving = !n.queue.empty();
        }
    }

    void prune_recent(TimeUs now) {
        double cutoff = us_to_s(now) - 0.2;  // max propagation is ~7 ms
        std::erase_if(recent_tx_, [cutoff](const ActiveTx& t) { return t.end_s < cutoff; });
    }

    // ------------------------------------------------------- FSMA gateway --

    void do_chirp(TimeUs now) {
        gw_tallies_.chirp_count += 1;
        energy_accrue(gw_tallies_.gateway_energy, Activity::gateway_chirp,
                      us_to_s(sched_.t_chirp_us), sc_.energy);
        trace_gw(now, "chirp", "n=%lld", static_cast<long long>(gw_tallies_.chirp_count));
        gw_state_at(now, last_chirp_pos_, last_chirp_ecef_);
        last_chirp_us_ = now;
        // Evaluate for every currently sensing node (draws come from each
        // node's own stream, so iteration order is immaterial).
        for (std::size_t idx = 0; idx < sensing_ids_.size(); ++idx)
            evaluate_chirp(sensing_ids_[idx], now, last_chirp_ecef_);
    }

    void on_gw_chirp_end(const Event& e) {
        auto act = fsma_gw_.on_chirp_end(e.fire_time);
        if (act.next_event_at >= 0 && !draining_)
            q_.schedule(act.next_event_at, ev_gw_phase_expiry, -1,
                        static_cast<std::int64_t>(fsma_gw_.generation()));
    }

    void on_gw_phase_expiry(const Event& e) {
        if (static_cast<std::uint64_t>(e.a) != fsma_gw_.generation()) return;  // stale
        if (draining_) return;
        auto act = fsma_gw_.on_phase_expiry(e.fire_time);
        if (act.emit_chirp) {
            do_chirp(e.fire_time);
            q_.schedule(act.next_event_at, ev_gw_chirp_end);
        } else if (act.next_event_at >= 0) {
            q_.schedule(act.next_event_at, ev_gw_phase_expiry, -1,
                        static_cast<std::int64_t>(fsma_gw_.generation()));
        }
    }

    // ------------------------------------------------- gateway reception --

    void on_arrival_start(const Event& e) {
        const GwArrival& pa = arrival_store_[static_cast<std::size_t>(e.a)];
        if (ep_ && pa.arrival < ep_->union_end) {
            ep_->pkts.push_back(pa);
            if (pa.end > ep_->union_end) {
                ep_->union_end = pa.end;
                q_.schedule(ep_->union_end, ev_episode_resolve, -1,
                            static_cast<std::int64_t>(ep_->id));
            }
            if (pa.detectable) note_detectable(pa);
        } else {
            if (ep_) resolve_episode();  // touching or stale: close the old one
            ep_ = Episode{next_ep_id_++, {pa}, pa.end, false, 0};
            q_.schedule(ep_->union_end, ev_episode_resolve, -1,
                        static_cast<std::int64_t>(ep_->id));
            if (pa.detectable) note_detectable(pa);
        }
    }

    void note_detectable(const GwArrival& pa) {
        if (!ep_->has_det) {
            ep_->has_det = true;
            ep_->det_union_end = pa.end;
            int delay_sym = preamble_detect_delay_symbols(sc_.capture, gw_rng_);
            q_.schedule(pa.arrival + TimeUs{delay_sym} * node_symbol_us_, ev_trigger_rise);
        } else if (pa.end > ep_->det_union_end) {
            ep_->det_union_end = pa.end;
            if (trigger_) {
                trigger_fall_at_ = ep_->det_union_end;
                q_.schedule(trigger_fall_at_, ev_trigger_fall);
            }
        }
    }

    void on_trigger_rise(const Event& e) {
        trigger_ = true;
        trace_gw(e.fire_time, "trigger_up");
        if (sc_.protocol == Protocol::bsma && !tone_on_) {
            tone_on_ = true;
            tone_on_since_s_ = us_to_s(e.fire_time);
            trace_gw(e.fire_time, "tone_on");
        }
        if (sc_.protocol == Protocol::fsma) {
            auto act = fsma_gw_.on_detection_rise(e.fire_time);
            if (act.next_event_at >= 0 && !draining_)
                q_.schedule(act.next_event_at, ev_gw_phase_expiry, -1,
                            static_cast<std::int64_t>(fsma_gw_.generation()));
        }
        trigger_fall_at_ = ep_ ? ep_->det_union_end : e.fire_time;
        q_.schedule(trigger_fall_at_, ev_trigger_fall);
    }

    void on_trigger_fall(const Event& e) {
        if (!trigger_ || e.fire_time != trigger_fall_at_) return;  // superseded
        trigger_ = false;
        trace_gw(e.fire_time, "trigger_down");
        if (sc_.protocol == Protocol::bsma && tone_on_) {
            tone_on_ = false;
            double off_s = us_to_s(e.fire_time);
            tone_intervals_.emplace_back(tone_on_since_s_, off_s);
            double dur = off_s - tone_on_since_s_;
            gw_tallies_.tone_time_s += dur;
            energy_accrue(gw_tallies_.gateway_energy, Activity::gateway_tone, dur, sc_.energy);
            trace_gw(e.fire_time, "tone_off");
            prune_tone(us_to_s(e.fire_time));
        }
        if (sc_.protocol == Protocol::fsma) {
            auto act = fsma_gw_.on_detection_fall(e.fire_time);
            if (!draining_) {
                if (act.emit_chirp) {
                    do_chirp(e.fire_time);
                    q_.schedule(act.next_event_at, ev_gw_chirp_end);
                } else if (act.next_event_at >= 0) {
                    q_.schedule(act.next_event_at, ev_gw_phase_expiry, -1,
                                static_cast<std::int64_t>(fsma_gw_.generation()));
                }
            }
        }
    }

    void prune_tone(double now_s) {
        while (tone_head_ < tone_intervals_.size() &&
               tone_intervals_[tone_head_].second < now_s - 1.0)
            ++tone_head_;
    }

    void on_episode_resolve(const Event& e) {
        if (!ep_ || ep_->id != static_cast<std::uint64_t>(e.a) ||
            e.fire_time != ep_->union_end)
            return;  // superseded by a later join
        resolve_episode();
    }

    void resolve_episode() {
        Episode ep = std::move(*ep_);
        ep_.reset();

        std::vector<Reception> rx;
        rx.reserve(ep.pkts.size());
        for (const GwArrival& p : ep.pkts)
            rx.push_back(Reception{p.arrival, p.power_dbm, airtime_.us});
        SeqOutcome seq = sequential_resolve(rx, node_symbol_us_, sc_.capture, min_power_dbm_);
        const CaptureResult& cr = seq.result;
        gw_tallies_.detected += seq.attempts;

        for (std::size_t i = 0; i < ep.pkts.size(); ++i) {
            const GwArrival& p = ep.pkts[i];
            NodeCounters& c = nodes_[static_cast<std::size_t>(p.node)].counters;
            switch (cr.fates[i]) {
                case PacketFate::decoded:
                    c.decoded += 1;
                    gw_tallies_.decoded_payload_bits += 8 * sc_.lora.payload_bytes;
                    break;
                case PacketFate::lost_collision: c.lost_collision += 1; break;
                case PacketFate::lost_detect: c.lost_detect += 1; break;
                case PacketFate::lost_link: c.lost_link += 1; break;
            }
            char detail[64];
            std::snprintf(detail, sizeof detail, "pkt=%lld fate=%s",
                          static_cast<long long>(p.pkt), fate_name(cr.fates[i]));
            char entity[16];
            std::snprintf(entity, sizeof entity, "n%d", p.node);
            trace_.record(ep.union_end, "rx", entity, detail);
        }

        // Channel usage: union of the detectable arrival intervals.
        auto add_busy = [this](TimeUs a, TimeUs b) {
            gw_tallies_.busy_union_s += us_to_s(b - a);
        };
        TimeUs cur_start = -1, cur_end = -1;
        for (const GwArrival& p : ep.pkts) {
            if (!p.detectable) continue;
            if (cur_start < 0) {
                cur_start = p.arrival;
                cur_end = p.end;
            } else if (p.arrival <= cur_end) {
                cur_end = std::max(cur_end, p.end);
            } else {
                add_busy(cur_start, cur_end);
                cur_start = p.arrival;
                cur_end = p.end;
            }
        }
        if (cur_start >= 0) add_busy(cur_start, cur_end);

        // Empirical collision window: TxStart spread across overlapping pairs.
        for (std::size_t i = 0; i < ep.pkts.size(); ++i) {
            for (std::size_t j = i + 1; j < ep.pkts.size(); ++j) {
                const GwArrival& a = ep.pkts[i];
                const GwArrival& b = ep.pkts[j];
                if (a.arrival < b.end && b.arrival < a.end) {
                    double spread = std::abs(us_to_s(a.tx_start - b.tx_start));
                    gw_tallies_.max_txstart_spread_colliding_s =
                        std::max(gw_tallies_.max_txstart_spread_colliding_s, spread);
                }
            }
        }
    }

    std::string protocol_label() const {
        if (sc_.protocol != Protocol::csma) return protocol_name(sc_.protocol);
        char buf[32];
        std::snprintf(buf, sizeof buf, "csma-%gkm", sc_.hearing_range_m / 1000.0);
        return buf;
    }

    // --------------------------------------------------------------- state --

    Scenario sc_;
    EventQueue q_;
    EventTrace trace_;
    RngStream gw_rng_;
    std::uint64_t channel_seed_;

    Airtime airtime_;
    TimeUs node_symbol_us_ = 0;
    double min_power_dbm_ = 0.0;
    FreeChirpSchedule sched_;
    TimeUs slot_us_ = 1;
    int slots_max_ = 0;
    double cad_op_j_ = 0.0;
    TimeUs end_us_ = 0;
    bool draining_ = false;

    bool gw_static_ = false;
    GeoPos gw_pos_cache_;
    Vec3 gw_ecef_cache_;

    std::vector<NodeState> nodes_;
    std::vector<int> sensing_ids_;
    std::int64_t next_pkt_id_ = 1;

    FsmaGateway fsma_gw_{FreeChirpSchedule{}};
    TimeUs last_chirp_us_ = -1;
    GeoPos last_chirp_pos_;
    Vec3 last_chirp_ecef_;

    bool trigger_ = false;
    TimeUs trigger_fall_at_ = -1;
    std::optional<Episode> ep_;
    std::uint64_t next_ep_id_ = 1;
    std::vector<GwArrival> arrival_store_;

    std::vector<ActiveTx> recent_tx_;
    bool tone_on_ = false;
    double tone_on_since_s_ = 0.0;
    std::vector<std::pair<double, double>> tone_intervals_;
    std::size_t tone_head_ = 0;

    GatewayTallies gw_tallies_;
    std::vector<double> waits_;
};

} // namespace

RunResult run_scenario(const Scenario& scenario, bool keep_trace) {
    Simulation sim(scenario, keep_trace);
    return sim.run();
}

} // namespace ntnsim
