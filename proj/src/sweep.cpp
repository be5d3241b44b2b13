#include "ntnsim/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "ntnsim/error.hpp"
#include "ntnsim/results.hpp"

namespace ntnsim {

void SweepSpec::validate() const {
    base.validate();
    if (axis != SweepAxis::none && points.empty())
        throw ConfigError("sweep: axis set but no points given");
    if (replicates < 1)
        throw ConfigError("sweep: replicates must be >= 1");
    if (axis == SweepAxis::node_count)
        for (double p : points)
            if (p < 0 || p != std::floor(p))
                throw ConfigError("sweep: node_count points must be non-negative integers");
    if (axis == SweepAxis::offered_load)
        for (double p : points)
            if (p < 0)
                throw ConfigError("sweep: offered_load points must be >= 0");
}

SweepResult run_sweep(const SweepSpec& spec, int parallelism) {
    spec.validate();

    std::vector<std::string> protocols = spec.protocols;
    if (protocols.empty()) protocols.push_back(protocol_name(spec.base.protocol));
    std::vector<double> points = spec.points;
    if (spec.axis == SweepAxis::none) points = {0.0};

    std::vector<Scenario> runs;
    for (const std::string& proto : protocols) {
        for (double point : points) {
            for (int rep = 0; rep < spec.replicates; ++rep) {
                Scenario sc = spec.base;
                apply_protocol_token(sc, proto);
                if (spec.axis == SweepAxis::node_count) {
                    sc.node_count = static_cast<int>(point);
                } else if (spec.axis == SweepAxis::offered_load) {
                    if (sc.node_count < 1)
                        throw ConfigError("sweep: offered_load axis needs nodes");
                    sc.duty_cycle = point / static_cast<double>(sc.node_count);
                    if (sc.duty_cycle > 1.0)
                        throw ConfigError("sweep: offered load " + std::to_string(point) +
                                          " exceeds 100% duty per node");
                }
                sc.seed = spec.base.seed + static_cast<std::uint64_t>(rep);
                sc.validate();
                runs.push_back(std::move(sc));
            }
        }
    }

    std::vector<MetricsReport> reports(runs.size());
    std::vector<std::string> failures(runs.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (;;) {
            std::size_t i = next.fetch_add(1);
            if (i >= runs.size()) return;
            try {
                reports[i] = run_scenario(runs[i]).report;
            } catch (const std::exception& ex) {
                failures[i] = ex.what();
            }
        }
    };
    int threads = std::max(1, parallelism);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    for (std::size_t i = 0; i < runs.size(); ++i) {
        if (!failures[i].empty())
            throw SimError("sweep: run failed (protocol=" + reports[i].protocol + " point " +
                           runs[i].id + " nodes=" + std::to_string(runs[i].node_count) +
                           " seed=" + std::to_string(runs[i].seed) + "): " + failures[i]);
    }

    std::stable_sort(reports.begin(), reports.end(),
                     [](const MetricsReport& a, const MetricsReport& b) {
                         if (a.protocol != b.protocol) return a.protocol < b.protocol;
                         if (a.node_count != b.node_count) return a.node_count < b.node_count;
                         if (a.duty_cycle != b.duty_cycle) return a.duty_cycle < b.duty_cycle;
                         return a.seed < b.seed;
                     });

    SweepResult res;
    res.runs_csv = reports_to_csv(reports);
    res.summary_csv = sweep_summary_csv(reports);
    res.reports = std::move(reports);
    return res;
}

} // namespace ntnsim
