#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "rotpend/analysis.hpp"
#include "rotpend/simulator.hpp"

// Timing comparison of the serial reference paths against the OpenMP ones:
// a batch of balance scenarios and the windowed sup-difference kernel.

namespace {

double now() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

rotpend::sim::Scenario balance_scenario(double alpha0_deg) {
    rotpend::sim::Scenario sc;
    sc.gains = {-7.302, -6.348, 27.681, -3.166, 3.829};
    sc.initial.x2 = alpha0_deg * std::numbers::pi / 180.0;
    sc.duration = 30.0;
    sc.dt = 1e-3;
    return sc;
}

}  // namespace

int main() {
#ifdef _OPENMP
    std::printf("openmp threads: %d\n", omp_get_max_threads());
#else
    std::printf("openmp: not enabled, both paths run serially\n");
#endif

    // Batch of independent balance runs with a sweep of release angles.
    std::vector<rotpend::sim::Scenario> batch;
    for (int i = 0; i < 32; ++i) {
        batch.push_back(balance_scenario(2.0 + 0.5 * i));
    }

    double t0 = now();
    auto serial = rotpend::sim::run_batch_serial(batch);
    double t_serial = now() - t0;

    t0 = now();
    auto parallel = rotpend::sim::run_batch(batch);
    double t_parallel = now() - t0;

    bool identical = serial.size() == parallel.size();
    for (size_t i = 0; identical && i < serial.size(); ++i) {
        identical = serial[i].samples.size() == parallel[i].samples.size();
        for (size_t j = 0; identical && j < serial[i].samples.size(); ++j) {
            identical = serial[i].samples[j].theta == parallel[i].samples[j].theta &&
                        serial[i].samples[j].alpha == parallel[i].samples[j].alpha;
        }
    }
    std::printf("batch of %zu runs:    serial %.3f s   parallel %.3f s   speedup %.2fx   %s\n",
                batch.size(), t_serial, t_parallel, t_serial / t_parallel,
                identical ? "bit-identical" : "MISMATCH");

    // Windowed sup-difference kernel on one long trace.
    auto trace = serial.front();
    t0 = now();
    auto ds = rotpend::analysis::cauchy_check_serial(trace, 1.0, 200);
    double t_cs = now() - t0;
    t0 = now();
    auto dp = rotpend::analysis::cauchy_check(trace, 1.0, 200);
    double t_cp = now() - t0;

    bool same = ds.size() == dp.size();
    for (size_t i = 0; same && i < ds.size(); ++i) {
        same = ds[i].sup_diff == dp[i].sup_diff && ds[i].t == dp[i].t;
    }
    std::printf("cauchy %zu samples:  serial %.3f s   parallel %.3f s   speedup %.2fx   %s\n",
                trace.samples.size(), t_cs, t_cp, t_cs / t_cp, same ? "bit-identical" : "MISMATCH");
    return (identical && same) ? 0 : 1;
}
