#pragma once

#include <string>
#include <vector>

namespace rotpend::sim {

struct TraceSample {
    double t = 0.0;
    double theta_ref = 0.0;
    double theta = 0.0;
    double alpha = 0.0;
    double theta_dot_est = 0.0;
    double alpha_dot_est = 0.0;
    double x0 = 0.0;
    double v_cmd = 0.0;
    double v_sat = 0.0;
    bool engaged = false;
    bool terminated = false;
};

struct TraceMeta {
    std::string plant_mode;   // "full" or "reduced"
    double dt = 0.0;
    std::string config_hash;
    std::string rate_source;  // "filtered" or "exact"
    bool open_loop = false;
    bool friction_free = false;
    bool diverged = false;
};

// Uniformly sampled run record. Time is strictly increasing; the engaged
// and terminated flags latch on.
struct Trace {
    TraceMeta meta;
    std::vector<TraceSample> samples;

    double duration() const {
        return samples.empty() ? 0.0 : samples.back().t - samples.front().t;
    }
};

// CSV with '#'-prefixed metadata lines, the fixed column header and one row
// per sample; floats carry 9 significant digits, flags are 0/1.
void write_trace_csv(const Trace& trace, const std::string& path);
Trace read_trace_csv(const std::string& path);

}  // namespace rotpend::sim
