#include "ntnsim/mac.hpp"

#include "ntnsim/channel.hpp"

namespace ntnsim {

double backoff_next(BackoffState& state, RngStream& rng) {
    double delay = rng.uniform(0.0, state.current_window_s);
    state.miss_count += 1;
    state.cumulative_window_s += state.current_window_s;
    state.current_window_s *= 2.0;
    if (state.cumulative_window_s > 100.0 * state.initial_window_s)
        backoff_reset(state);
    return delay;
}

SenseDecision FsmaSenseTracker::feed(bool cad_positive) {
    if (decision_ != SenseDecision::pending) return decision_;
    ++fed_;
    if (prev_positive_) {
        decision_ = cad_positive ? SenseDecision::neighbor_backoff : SenseDecision::transmit;
        return decision_;
    }
    if (!cad_positive && fed_ >= slots_max_) {
        decision_ = SenseDecision::timeout_backoff;
        return decision_;
    }
    prev_positive_ = cad_positive;
    return decision_;
}

SenseDecision FsmaSenseTracker::run(const std::vector<bool>& results, int detection_slots) {
    FsmaSenseTracker t(detection_slots);
    for (bool r : results) {
        if (t.feed(r) != SenseDecision::pending) break;
    }
    return t.decision();
}

FsmaGateway::Action FsmaGateway::begin_chirp(TimeUs now) {
    phase_ = GwPhase::chirp_tx;
    holdoff_elapsed_ = false;
    ++generation_;
    return Action{true, now + sched_.t_chirp_us};
}

FsmaGateway::Action FsmaGateway::start(TimeUs now) { return begin_chirp(now); }

FsmaGateway::Action FsmaGateway::on_chirp_end(TimeUs now) {
    ++generation_;
    if (detected_) {
        // Trigger rose while the chirp was in flight; the chirp completed,
        // now hold off.
        phase_ = GwPhase::busy_backoff;
        return Action{false, now + sched_.t_busy_backoff_us};
    }
    phase_ = GwPhase::waiting;
    return Action{false, now + sched_.t_wait_us};
}

FsmaGateway::Action FsmaGateway::on_phase_expiry(TimeUs now) {
    if (phase_ == GwPhase::busy_backoff) {
        if (detected_) {
            // Minimum hold-off served; keep watching the pin and resume on
            // its falling edge.
            holdoff_elapsed_ = true;
            return Action{};
        }
        return begin_chirp(now);
    }
    if (phase_ == GwPhase::waiting) {
        // A rise during waiting switches phases immediately, so reaching the
        // expiry means the channel stayed idle for the whole window.
        return begin_chirp(now);
    }
    return Action{};  // chirp_tx expiries are handled by on_chirp_end
}

FsmaGateway::Action FsmaGateway::on_detection_rise(TimeUs now) {
    detected_ = true;
    if (phase_ == GwPhase::waiting) {
        phase_ = GwPhase::busy_backoff;
        holdoff_elapsed_ = false;
        ++generation_;
        return Action{false, now + sched_.t_busy_backoff_us};
    }
    // chirp_tx: finish the chirp, on_chirp_end routes to busy backoff.
    // busy_backoff: the running hold-off continues.
    return Action{};
}

FsmaGateway::Action FsmaGateway::on_detection_fall(TimeUs now) {
    detected_ = false;
    if (phase_ == GwPhase::busy_backoff && holdoff_elapsed_) {
        // Hold-off served and the channel just cleared: rejoin the loop at
        // the probing step, so the next chirp comes t_wait after the fall.
        phase_ = GwPhase::waiting;
        holdoff_elapsed_ = false;
        ++generation_;
        return Action{false, now + sched_.t_wait_us};
    }
    return Action{};
}

bool csma_hears(double distance_m, double hearing_range_m, double tx_start_s,
                double tx_end_s, double now_s) {
    if (distance_m > hearing_range_m) return false;
    double flight = propagation_delay_s(distance_m);
    return now_s >= tx_start_s + flight && now_s < tx_end_s + flight;
}

bool bsma_tone_audible(std::span<const std::pair<double, double>> tone_intervals_s,
                       double distance_m, double now_s) {
    double t = now_s - propagation_delay_s(distance_m);
    for (const auto& [on, off] : tone_intervals_s) {
        if (t >= on && t < off) return true;
    }
    return false;
}

} // namespace ntnsim
