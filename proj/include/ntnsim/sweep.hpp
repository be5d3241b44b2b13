#pragma once

#include <string>
#include <vector>

#include "ntnsim/scenario.hpp"
#include "ntnsim/sim.hpp"

namespace ntnsim {

enum class SweepAxis { none, node_count, offered_load };

/// A grid of runs over one axis crossed with a protocol list; replicate k of
/// any point runs with seed = base.seed + k, so points share paired streams.
struct SweepSpec {
    Scenario base;
    SweepAxis axis = SweepAxis::none;
    std::vector<double> points;           // node counts or offered-load fractions
    std::vector<std::string> protocols;   // selector tokens; empty keeps the base
    int replicates = 1;

    void validate() const;
};

struct SweepResult {
    std::vector<MetricsReport> reports;  // sorted by (protocol, point, seed)
    std::string runs_csv;
    std::string summary_csv;
};

/// Runs every (protocol, point, replicate) combination. The result is
/// independent of the parallelism level.
SweepResult run_sweep(const SweepSpec& spec, int parallelism);

} // namespace ntnsim
