#pragma once

#include <span>
#include <utility>
#include <vector>

#include "ntnsim/phy.hpp"
#include "ntnsim/rng.hpp"
#include "ntnsim/time.hpp"

namespace ntnsim {

// ----------------------------------------------------------------- backoff --

/// Exponential backoff: window starts at the packet airtime, doubles on each
/// miss, and snaps back to the initial window once the accrued windows exceed
/// 100x the initial one. The delay for miss k (k = 0,1,...) is drawn from the
/// window after k doublings, so the third consecutive miss draws from
/// 4x the initial window.
struct BackoffState {
    double initial_window_s = 0.0;
    double current_window_s = 0.0;
    int miss_count = 0;
    double cumulative_window_s = 0.0;

    static BackoffState init(double initial_window_s) {
        return BackoffState{initial_window_s, initial_window_s, 0, 0.0};
    }
};

/// Draws the delay for a miss that just occurred and advances the state.
double backoff_next(BackoffState& state, RngStream& rng);

inline void backoff_reset(BackoffState& state) {
    state.current_window_s = state.initial_window_s;
    state.miss_count = 0;
    state.cumulative_window_s = 0.0;
}

// ---------------------------------------------------------- FSMA node side --

enum class SenseDecision {
    pending,
    transmit,          // positive CAD followed by a negative one: free chirp
    neighbor_backoff,  // positive followed by positive: nearby transmission
    timeout_backoff,   // sensing window expired with no positive
};

/// Decision logic over the node's CAD result stream. Detection slots are one
/// chirp-SF symbol back to back; a positive in the final detection slot is
/// still verified by one more slot (the verification may complete just past
/// the sensing deadline).
class FsmaSenseTracker {
public:
    explicit FsmaSenseTracker(int detection_slots) : slots_max_(detection_slots) {}

    SenseDecision feed(bool cad_positive);
    SenseDecision decision() const { return decision_; }

    /// Convenience for fixed result sequences (tests, trace replay).
    static SenseDecision run(const std::vector<bool>& results, int detection_slots);

private:
    int slots_max_;
    int fed_ = 0;
    bool prev_positive_ = false;
    SenseDecision decision_ = SenseDecision::pending;
};

// ------------------------------------------------------- FSMA gateway side --

enum class GwPhase { chirp_tx, waiting, busy_backoff };

/// Gateway loop: chirp when idle, wait t_wait while probing the detection
/// trigger, and hold off at least 4x t_wait once a transmission is detected.
/// The trigger pin is probed continuously, so chirping resumes at
/// max(rise + 4 x t_wait, pin fall); a chirp is never started while the
/// trigger is high.
class FsmaGateway {
public:
    struct Action {
        bool emit_chirp = false;
        TimeUs next_event_at = -1;  // phase expiry to schedule (-1: none)
    };

    explicit FsmaGateway(const FreeChirpSchedule& sched) : sched_(sched) {}

    Action start(TimeUs now);             // begin the chirp loop
    Action on_chirp_end(TimeUs now);
    Action on_phase_expiry(TimeUs now);   // waiting or busy-backoff deadline
    Action on_detection_rise(TimeUs now); // trigger pin went high
    Action on_detection_fall(TimeUs now); // trigger pin released

    GwPhase phase() const { return phase_; }
    bool detected() const { return detected_; }
    /// Bumped whenever a pending phase expiry becomes stale.
    std::uint64_t generation() const { return generation_; }

private:
    Action begin_chirp(TimeUs now);

    FreeChirpSchedule sched_;
    GwPhase phase_ = GwPhase::waiting;
    bool detected_ = false;
    bool holdoff_elapsed_ = false;  // busy hold-off expired with the pin high
    std::uint64_t generation_ = 0;
};

// ------------------------------------------------------------ CSMA / BSMA --

/// Sharp-cutoff carrier sense: a transmission is audible at the listener iff
/// the transmitter is within hearing range and the signal, delayed by d/c,
/// has reached (and not yet passed) the listener.
bool csma_hears(double distance_m, double hearing_range_m, double tx_start_s,
                double tx_end_s, double now_s);

/// Busy-tone sense: whether the gateway tone, as emitted over the given
/// on/off intervals, is present at the node at `now` after d/c of flight.
bool bsma_tone_audible(std::span<const std::pair<double, double>> tone_intervals_s,
                       double distance_m, double now_s);

} // namespace ntnsim
