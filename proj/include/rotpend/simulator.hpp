#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "rotpend/lti.hpp"
#include "rotpend/pendulum.hpp"
#include "rotpend/synthesis.hpp"
#include "rotpend/trace.hpp"

// Scenario engine: fixed-step integration of either plant model under the
// sampled state-feedback controller with saturation, filtered derivatives,
// back-calculation anti-windup, catch-region engagement and travel limits.

namespace rotpend::sim {

enum class RateSource { filtered, exact };

struct ControllerRuntimeConfig {
    double sample_period = 1e-3;               // controller period [s]
    double v_sat = 15.0;                       // symmetric voltage clamp [V]
    double filter_cutoff = 20.0 * std::numbers::pi;  // derivative low-pass [rad/s]
    double antiwindup_reset = 1.0;             // back-calculation reset time [s]
    double catch_angle = 20.0 * std::numbers::pi / 180.0;   // engage when |alpha| below
    double theta_limit = 45.0 * std::numbers::pi / 180.0;   // terminate when |theta| above
    double quantization = 0.0;                 // encoder grid [rad/count], 0 = off
    RateSource rate_source = RateSource::filtered;
    // Evaluate the feedback law inside the integrator stages instead of
    // sampling it; requires exact rates, no quantization, sample_period == dt.
    bool continuous = false;

    void validate() const;
};

struct ReferenceSignal {
    enum class Kind { constant, square_pulse };
    Kind kind = Kind::constant;
    double amplitude = 0.0;   // [rad]
    double period = 0.0;      // [s], full period of the pulse
    double start_time = 0.0;  // pulse starts here; constant before
    double offset = 0.0;      // [rad]

    double value_at(double t) const;
    void validate() const;
};

enum class PlantMode { full_nonlinear, small_angle_reduced };

struct Scenario {
    PlantMode plant_mode = PlantMode::small_angle_reduced;
    model::PhysicalParams params = model::PhysicalParams::calibrated();
    model::ReducedDynamics reduced = model::ReducedDynamics::identified();
    synthesis::GainVector gains;
    ControllerRuntimeConfig runtime;
    ReferenceSignal reference;
    lti::DisturbanceProfile disturbance;  // torque [N m] into the theta channel
    model::PendulumState initial;         // x0 seeds the integrator
    bool open_loop = false;               // controller held at 0 V throughout
    double duration = 10.0;
    double dt = 1e-3;
    std::string config_hash;

    void validate() const;
};

// Classical fourth-order Runge-Kutta update for an autonomous system.
template <typename Deriv, typename State>
State rk4_step(Deriv&& deriv, const State& y, double dt) {
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
    const State k1 = deriv(y);
    State tmp = y;
    for (size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + 0.5 * dt * k1[i];
    const State k2 = deriv(tmp);
    for (size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + 0.5 * dt * k2[i];
    const State k3 = deriv(tmp);
    for (size_t i = 0; i < y.size(); ++i) tmp[i] = y[i] + dt * k3[i];
    const State k4 = deriv(tmp);
    State out = y;
    for (size_t i = 0; i < y.size(); ++i) {
        out[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        if (!std::isfinite(out[i])) throw std::runtime_error("rk4_step: non-finite state");
    }
    return out;
}

// First-order low-pass on the finite-difference derivative; unity DC gain.
struct DerivativeFilter {
    double estimate = 0.0;
    double prev_raw = 0.0;
    bool primed = false;

    double update(double raw, double dt, double cutoff);
    void reset();
};

struct MeasuredState {
    double theta = 0.0;
    double alpha = 0.0;
    double theta_dot = 0.0;
    double alpha_dot = 0.0;
};

struct ControllerOutput {
    double v_sat = 0.0;
    double v_cmd = 0.0;
};

// One sampled controller evaluation: feedback on the error state, voltage
// clamp, and the back-calculation integrator update
//   x0 += dt * ((theta - ref) + (v_sat - v_cmd) / T_reset).
ControllerOutput controller_update(const synthesis::GainVector& k, const MeasuredState& est,
                                   double theta_ref, const ControllerRuntimeConfig& cfg,
                                   double& integrator, double dt);

// Sum of the profile's steps active at t.
inline double inject_disturbance(const lti::DisturbanceProfile& profile, double t) {
    return profile.value_at(t);
}

Trace run_scenario(const Scenario& sc);

// Batch execution; scenarios are independent, results keep input order.
// The parallel variant distributes runs across OpenMP threads and is
// bit-identical to the serial one.
std::vector<Trace> run_batch(std::span<const Scenario> scenarios);
std::vector<Trace> run_batch_serial(std::span<const Scenario> scenarios);

}  // namespace rotpend::sim
