#include "rotpend/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numbers>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace rotpend::sim {

namespace {

double quantize(double angle, double grid) {
    if (grid <= 0.0) return angle;
    return std::floor(angle / grid) * grid;
}

const char* mode_name(PlantMode m) {
    return m == PlantMode::full_nonlinear ? "full" : "reduced";
}

}  // namespace

void ControllerRuntimeConfig::validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(sample_period) || !positive(v_sat) || !positive(filter_cutoff) ||
        !positive(antiwindup_reset) || !positive(catch_angle) || !positive(theta_limit)) {
        throw std::invalid_argument("runtime config fields must be > 0");
    }
    if (!(catch_angle < std::numbers::pi / 2.0)) {
        throw std::invalid_argument("catch_angle must be below pi/2");
    }
    if (quantization < 0.0 || !std::isfinite(quantization)) {
        throw std::invalid_argument("quantization must be >= 0");
    }
    // The digital derivative filter needs the loop to run faster than its cutoff.
    if (sample_period * filter_cutoff >= 2.0 * std::numbers::pi) {
        throw std::invalid_argument("sample_period too slow for the filter cutoff");
    }
    if (continuous && (rate_source != RateSource::exact || quantization != 0.0)) {
        throw std::invalid_argument("continuous mode requires exact rates and no quantization");
    }
}

double ReferenceSignal::value_at(double t) const {
    if (kind == Kind::constant || t < start_time) return offset;
    const double phase = std::fmod(t - start_time, period);
    return offset + (phase < period / 2.0 ? amplitude : -amplitude);
}

void ReferenceSignal::validate() const {
    if (!std::isfinite(amplitude) || !std::isfinite(offset) || !std::isfinite(start_time)) {
        throw std::invalid_argument("reference fields must be finite");
    }
    if (kind == Kind::square_pulse && !(period > 0.0)) {
        throw std::invalid_argument("square pulse needs period > 0");
    }
}

void Scenario::validate() const {
    if (!(duration > 0.0)) throw std::invalid_argument("duration must be > 0");
    if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
    if (dt > runtime.sample_period * (1.0 + 1e-12)) {
        throw std::invalid_argument("dt must not exceed sample_period");
    }
    const double ratio = runtime.sample_period / dt;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
        throw std::invalid_argument("sample_period must be an integer multiple of dt");
    }
    runtime.validate();
    reference.validate();
    disturbance.validate();
    if (plant_mode == PlantMode::full_nonlinear) params.validate();
    else reduced.validate();
    if (runtime.continuous) {
        if (plant_mode != PlantMode::small_angle_reduced) {
            throw std::invalid_argument("continuous mode runs on the reduced plant");
        }
        if (std::llround(ratio) != 1) {
            throw std::invalid_argument("continuous mode requires sample_period == dt");
        }
    }
    for (double v : {initial.x0, initial.x1, initial.x2, initial.x3, initial.x4}) {
        if (!std::isfinite(v)) throw std::invalid_argument("initial state must be finite");
    }
    for (double k : {gains.k0, gains.k1, gains.k2, gains.k3, gains.k4}) {
        if (!std::isfinite(k)) throw std::invalid_argument("gains must be finite");
    }
}

double DerivativeFilter::update(double raw, double dt, double cutoff) {
    if (!(dt > 0.0) || !(cutoff > 0.0)) {
        throw std::invalid_argument("filter needs dt > 0 and cutoff > 0");
    }
    if (!primed) {
        prev_raw = raw;
        primed = true;
    }
    estimate += dt * cutoff * ((raw - prev_raw) / dt - estimate);
    prev_raw = raw;
    return estimate;
}

void DerivativeFilter::reset() {
    estimate = 0.0;
    prev_raw = 0.0;
    primed = false;
}

ControllerOutput controller_update(const synthesis::GainVector& k, const MeasuredState& est,
                                   double theta_ref, const ControllerRuntimeConfig& cfg,
                                   double& integrator, double dt) {
    const double z_theta = est.theta - theta_ref;
    const double v_cmd = -(k.k0 * integrator + k.k1 * z_theta + k.k2 * est.alpha +
                           k.k3 * est.theta_dot + k.k4 * est.alpha_dot);
    const double v_sat = std::clamp(v_cmd, -cfg.v_sat, cfg.v_sat);
    integrator += dt * (z_theta + (v_sat - v_cmd) / cfg.antiwindup_reset);
    return {v_sat, v_cmd};
}

namespace {

// Shared bookkeeping for both plant modes.
struct Runner {
    const Scenario& sc;
    Trace trace;
    long long steps_per_sample;
    long long total_steps;

    explicit Runner(const Scenario& s) : sc(s) {
        steps_per_sample = std::llround(s.runtime.sample_period / s.dt);
        total_steps = std::llround(s.duration / s.dt);
        trace.meta.plant_mode = mode_name(s.plant_mode);
        trace.meta.dt = s.dt;
        trace.meta.config_hash = s.config_hash;
        trace.meta.rate_source =
            s.runtime.rate_source == RateSource::exact ? "exact" : "filtered";
        trace.meta.open_loop = s.open_loop;
        trace.meta.friction_free = s.params.B1 == 0.0 && s.params.B2 == 0.0;
        trace.samples.reserve(static_cast<size_t>(total_steps) + 1);
    }
};

Trace run_sampled(const Scenario& sc) {
    Runner run(sc);
    const ControllerRuntimeConfig& cfg = sc.runtime;

    std::array<double, 4> y = {sc.initial.x1, sc.initial.x2, sc.initial.x3, sc.initial.x4};
    double integrator = sc.initial.x0;
    double integrator_used = sc.initial.x0;  // value the held command was computed from
    DerivativeFilter filt_theta, filt_alpha;
    bool engaged = false;
    double v_held = 0.0, v_cmd_held = 0.0;
    double est_theta_dot = 0.0, est_alpha_dot = 0.0;

    const bool full = sc.plant_mode == PlantMode::full_nonlinear;
    const double ts = cfg.sample_period;

    for (long long i = 0; i <= run.total_steps; ++i) {
        const double t = static_cast<double>(i) * sc.dt;
        const double ref = sc.reference.value_at(t);

        const bool hit_limit = std::abs(y[0]) > cfg.theta_limit;
        if (!hit_limit && i % run.steps_per_sample == 0) {
            const double m_theta = quantize(y[0], cfg.quantization);
            const double m_alpha = quantize(y[1], cfg.quantization);
            if (cfg.rate_source == RateSource::filtered) {
                est_theta_dot = filt_theta.update(m_theta, ts, cfg.filter_cutoff);
                est_alpha_dot = filt_alpha.update(m_alpha, ts, cfg.filter_cutoff);
            } else {
                est_theta_dot = y[2];
                est_alpha_dot = y[3];
            }
            if (!engaged && !sc.open_loop && std::abs(m_alpha) <= cfg.catch_angle) {
                engaged = true;
            }
            if (engaged && !sc.open_loop) {
                integrator_used = integrator;
                MeasuredState ms{m_theta, m_alpha, est_theta_dot, est_alpha_dot};
                ControllerOutput out = controller_update(sc.gains, ms, ref, cfg, integrator, ts);
                v_held = out.v_sat;
                v_cmd_held = out.v_cmd;
            } else {
                v_held = 0.0;
                v_cmd_held = 0.0;
            }
        }

        if (cfg.rate_source == RateSource::exact) {
            est_theta_dot = y[2];
            est_alpha_dot = y[3];
        }
        run.trace.samples.push_back({t, ref, y[0], y[1], est_theta_dot, est_alpha_dot,
                                     integrator_used, v_cmd_held, v_held, engaged, hit_limit});
        if (hit_limit || i == run.total_steps) break;

        const double dist = inject_disturbance(sc.disturbance, t);
        try {
            if (full) {
                auto deriv = [&](const std::array<double, 4>& s) {
                    model::FullState fs{s[0], s[1], s[2], s[3]};
                    // Open loop means the motor is disconnected: no drive and
                    // no back-emf braking, only the injected torque.
                    const double tau =
                        (sc.open_loop ? 0.0 : motor_torque(sc.params, v_held, s[2])) + dist;
                    model::Accel acc = full_dynamics(sc.params, fs, tau);
                    return std::array<double, 4>{s[2], s[3], acc.theta_ddot, acc.alpha_ddot};
                };
                y = rk4_step(deriv, y, sc.dt);
            } else {
                auto deriv = [&](const std::array<double, 4>& s) {
                    model::PendulumState ps{0.0, s[0], s[1], s[2], s[3]};
                    auto d = nonlinear_reduced_dynamics(sc.reduced, ps, v_held);
                    return std::array<double, 4>{d[1], d[2],
                                                 d[3] + sc.reduced.Ainv(0, 0) * dist,
                                                 d[4] + sc.reduced.Ainv(1, 0) * dist};
                };
                y = rk4_step(deriv, y, sc.dt);
            }
        } catch (const std::runtime_error&) {
            run.trace.meta.diverged = true;
            break;
        }
    }
    return run.trace;
}

// Ideal closed loop: the integrator is part of the integrated state and the
// feedback law is evaluated at every integrator stage.
Trace run_continuous(const Scenario& sc) {
    Runner run(sc);
    const ControllerRuntimeConfig& cfg = sc.runtime;

    std::array<double, 5> y = {sc.initial.x0, sc.initial.x1, sc.initial.x2, sc.initial.x3,
                               sc.initial.x4};
    bool engaged = false;

    for (long long i = 0; i <= run.total_steps; ++i) {
        const double t = static_cast<double>(i) * sc.dt;
        const double ref = sc.reference.value_at(t);
        const bool hit_limit = std::abs(y[1]) > cfg.theta_limit;

        if (!hit_limit && !engaged && !sc.open_loop && std::abs(y[2]) <= cfg.catch_angle) {
            engaged = true;
        }
        const bool act = engaged && !sc.open_loop && !hit_limit;

        auto command = [&](const std::array<double, 5>& s) {
            MeasuredState ms{s[1], s[2], s[3], s[4]};
            const double z_theta = ms.theta - ref;
            const double v_cmd = -(sc.gains.k0 * s[0] + sc.gains.k1 * z_theta +
                                   sc.gains.k2 * ms.alpha + sc.gains.k3 * ms.theta_dot +
                                   sc.gains.k4 * ms.alpha_dot);
            return v_cmd;
        };
        const double v_cmd_now = act ? command(y) : 0.0;
        const double v_now = std::clamp(v_cmd_now, -cfg.v_sat, cfg.v_sat);

        run.trace.samples.push_back({t, ref, y[1], y[2], y[3], y[4], y[0], v_cmd_now, v_now,
                                     engaged, hit_limit});
        if (hit_limit || i == run.total_steps) break;

        const double dist = inject_disturbance(sc.disturbance, t);
        auto deriv = [&](const std::array<double, 5>& s) {
            double v = 0.0, x0_dot = 0.0;
            if (act) {
                const double v_cmd = command(s);
                v = std::clamp(v_cmd, -cfg.v_sat, cfg.v_sat);
                x0_dot = (s[1] - ref) + (v - v_cmd) / cfg.antiwindup_reset;
            }
            model::PendulumState ps{s[0], s[1], s[2], s[3], s[4]};
            auto d = nonlinear_reduced_dynamics(sc.reduced, ps, v);
            return std::array<double, 5>{x0_dot, d[1], d[2], d[3] + sc.reduced.Ainv(0, 0) * dist,
                                         d[4] + sc.reduced.Ainv(1, 0) * dist};
        };
        try {
            y = rk4_step(deriv, y, sc.dt);
        } catch (const std::runtime_error&) {
            run.trace.meta.diverged = true;
            break;
        }
    }
    return run.trace;
}

}  // namespace

Trace run_scenario(const Scenario& sc) {
    sc.validate();
    return sc.runtime.continuous ? run_continuous(sc) : run_sampled(sc);
}

std::vector<Trace> run_batch_serial(std::span<const Scenario> scenarios) {
    std::vector<Trace> traces(scenarios.size());
    for (size_t i = 0; i < scenarios.size(); ++i) {
        traces[i] = run_scenario(scenarios[i]);
    }
    return traces;
}

std::vector<Trace> run_batch(std::span<const Scenario> scenarios) {
    std::vector<Trace> traces(scenarios.size());
    std::exception_ptr first_error = nullptr;

#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
    for (long long i = 0; i < static_cast<long long>(scenarios.size()); ++i) {
        try {
            traces[static_cast<size_t>(i)] = run_scenario(scenarios[static_cast<size_t>(i)]);
        } catch (...) {
#ifdef _OPENMP
#pragma omp critical
#endif
            {
                if (!first_error) first_error = std::current_exception();
            }
        }
    }
    if (first_error) std::rethrow_exception(first_error);
    return traces;
}

}  // namespace rotpend::sim
