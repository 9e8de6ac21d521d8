#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <numbers>
#include <string>
#include <vector>

#include "rotpend/analysis.hpp"
#include "rotpend/config.hpp"
#include "rotpend/errors.hpp"
#include "rotpend/lti.hpp"
#include "rotpend/simulator.hpp"

// Exit codes: 0 success, 2 validation/config error, 3 numerical failure
// (divergence, defective matrices, failed placement), 4 I/O failure.

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

using rotpend::config::json;

void print_kv(const std::string& key, const std::string& value) {
    std::printf("%-28s %s\n", key.c_str(), value.c_str());
}

void print_kv(const std::string& key, double value) {
    std::printf("%-28s %.9g\n", key.c_str(), value);
}

std::string poles_to_string(std::span<const std::complex<double>> poles) {
    std::string out;
    char buf[64];
    for (const auto& p : poles) {
        std::snprintf(buf, sizeof(buf), "%.6g%+.6gi  ", p.real(), p.imag());
        out += buf;
    }
    return out;
}

int cmd_synthesize(const json& tree) {
    auto cfg = rotpend::config::parse_synthesize(tree);
    auto gains = rotpend::synthesis::place_poles(cfg.reduced, cfg.poles);
    auto cl = rotpend::synthesis::closed_loop_matrix(cfg.reduced, gains);

    auto [A1, U1] = rotpend::model::state_space(cfg.reduced);
    using rotpend::model::IntegralChannel;
    auto [A5, B5] = rotpend::model::augment_integral(A1, U1, {IntegralChannel::theta});
    auto [A6, B6] = rotpend::model::augment_integral(
        A1, U1, {IntegralChannel::theta, IntegralChannel::alpha});

    print_kv("requested_poles", poles_to_string(cfg.poles));
    print_kv("gain_k0", gains.k0);
    print_kv("gain_k1", gains.k1);
    print_kv("gain_k2", gains.k2);
    print_kv("gain_k3", gains.k3);
    print_kv("gain_k4", gains.k4);
    print_kv("closed_loop_eigenvalues", poles_to_string(cl.poles));
    print_kv("ctrb_rank_4state", static_cast<double>(rotpend::model::controllability_rank(A1, U1)));
    print_kv("ctrb_rank_5state_int_theta",
             static_cast<double>(rotpend::model::controllability_rank(A5, B5)));
    print_kv("ctrb_rank_6state_both_ints",
             static_cast<double>(rotpend::model::controllability_rank(A6, B6)));
    return kExitOk;
}

// Maximal constant-reference segments of the trace, as (start, end) indices.
std::vector<std::pair<size_t, size_t>> reference_segments(const rotpend::sim::Trace& tr) {
    std::vector<std::pair<size_t, size_t>> segs;
    const auto& s = tr.samples;
    size_t start = 0;
    for (size_t i = 1; i <= s.size(); ++i) {
        if (i == s.size() || s[i].theta_ref != s[start].theta_ref) {
            segs.emplace_back(start, i - 1);
            start = i;
        }
    }
    return segs;
}

int cmd_simulate(const json& tree, const std::string& out_override) {
    auto cfg = rotpend::config::parse_simulate(tree);
    const std::string out_path = out_override.empty() ? cfg.output : out_override;

    rotpend::sim::Trace trace = rotpend::sim::run_scenario(cfg.scenario);
    rotpend::sim::write_trace_csv(trace, out_path);

    print_kv("trace", out_path);
    print_kv("samples", static_cast<double>(trace.samples.size()));
    print_kv("plant_mode", trace.meta.plant_mode);
    print_kv("diverged", trace.meta.diverged ? "yes" : "no");

    bool terminated = !trace.samples.empty() && trace.samples.back().terminated;
    print_kv("terminated", terminated ? "yes" : "no");

    double engage_time = -1.0;
    double max_alpha = 0.0, max_v = 0.0;
    for (const auto& s : trace.samples) {
        if (s.engaged && engage_time < 0.0) engage_time = s.t;
        if (s.engaged) max_alpha = std::max(max_alpha, std::abs(s.alpha));
        max_v = std::max(max_v, std::abs(s.v_sat));
    }
    if (engage_time >= 0.0) {
        print_kv("engaged_at_s", engage_time);
        print_kv("max_abs_alpha_deg", max_alpha * kRadToDeg);
    } else {
        print_kv("engaged_at_s", "never");
    }
    print_kv("max_abs_voltage", max_v);

    // Steady-state theta error per constant-reference segment, taken over
    // the trailing 2 s of each segment. Segments too short to settle are
    // skipped (a reference edge can coincide with the final sample).
    for (const auto& [b, e] : reference_segments(trace)) {
        const double t_end = trace.samples[e].t;
        if (t_end - trace.samples[b].t < 0.1) continue;
        const double t_from = std::max(trace.samples[b].t, t_end - 2.0);
        double err = 0.0;
        for (size_t i = b; i <= e; ++i) {
            if (trace.samples[i].t < t_from) continue;
            err = std::max(err, std::abs(trace.samples[i].theta - trace.samples[i].theta_ref));
        }
        char key[64], val[64];
        std::snprintf(key, sizeof(key), "theta_err_deg[%.6g,%.6g]", trace.samples[b].t, t_end);
        std::snprintf(val, sizeof(val), "%.9g", err * kRadToDeg);
        print_kv(key, val);
    }

    if (trace.meta.diverged) {
        std::fprintf(stderr, "error: simulation diverged; partial trace written to %s\n",
                     out_path.c_str());
        return kExitNumerical;
    }
    return kExitOk;
}

int cmd_analyze(const json& tree, const std::string& trace_path) {
    auto cfg = rotpend::config::parse_analyze(tree);
    auto cl = rotpend::synthesis::closed_loop_matrix(cfg.reduced, cfg.gains);
    auto rep = rotpend::analysis::boundedness_constants(cl, cfg.reduced, cfg.z0_norm);

    print_kv("beta", rep.beta);
    print_kv("kappa", rep.kappa);
    print_kv("kappa_sign_safe", rep.kappa_abs);
    if (rep.kappa_abs > rep.kappa) {
        print_kv("kappa_note", "signed kappa below sign-safe variant; both reported");
    }
    print_kv("lambda1", rep.lambda1);
    print_kv("gamma_turn", rep.gamma_turn);
    print_kv("z0_max", rep.z0_max);
    if (rep.z0_norm) print_kv("z0_norm", *rep.z0_norm);
    if (rep.gamma_star) print_kv("gamma_star", *rep.gamma_star);
    else if (rep.z0_norm) print_kv("gamma_star", "infeasible for this z0_norm");

    if (!trace_path.empty()) {
        rotpend::sim::Trace trace = rotpend::sim::read_trace_csv(trace_path);
        std::optional<double> gamma = cfg.gamma;
        if (!gamma && rep.gamma_star) gamma = rep.gamma_star;
        if (gamma) {
            auto check = rotpend::analysis::verify_bounded(trace, *gamma);
            print_kv("bound_gamma", *gamma);
            print_kv("bounded", check.bounded ? "yes" : "no");
            if (check.first_violation_time) {
                print_kv("first_violation_s", *check.first_violation_time);
            }
        } else {
            print_kv("bounded", "skipped (no gamma available)");
        }
        auto d = rotpend::analysis::cauchy_check(trace, cfg.window, cfg.grid_points);
        bool nonincreasing = true;
        const double tol = 1e-9 + 0.01 * d.front().sup_diff;
        for (size_t i = 1; i < d.size(); ++i) {
            nonincreasing = nonincreasing && d[i].sup_diff <= d[i - 1].sup_diff + tol;
        }
        print_kv("cauchy_window_s", cfg.window);
        print_kv("cauchy_nonincreasing", nonincreasing ? "yes" : "no");
        print_kv("cauchy_initial", d.front().sup_diff);
        print_kv("cauchy_final", d.back().sup_diff);
        if (trace.meta.plant_mode == "full" && trace.meta.open_loop &&
            trace.meta.friction_free && trace.meta.rate_source == "exact") {
            print_kv("energy_drift_rel", rotpend::analysis::energy_drift(cfg.params, trace));
        }
        std::printf("%-14s %s\n", "cauchy_T", "sup_diff");
        const size_t rows = 10;
        for (size_t i = 0; i < rows; ++i) {
            const size_t idx = i * (d.size() - 1) / (rows - 1);
            std::printf("%-14.6g %.9g\n", d[idx].t, d[idx].sup_diff);
        }
    }
    return kExitOk;
}

int cmd_lti_demo(const json& tree, const std::string& out_override) {
    auto cfg = rotpend::config::parse_lti_demo(tree);
    const std::string out_path = out_override.empty() ? cfg.output : out_override;

    auto ctrl = rotpend::lti::synthesize_controller(cfg.plant, cfg.poles);
    if (cfg.disable_integral) ctrl.b0 = 0.0;

    auto trace = rotpend::lti::simulate_chain(cfg.plant, ctrl, cfg.x_d, cfg.disturbance,
                                              cfg.duration, cfg.dt, cfg.u_max);

    std::FILE* f = std::fopen(out_path.c_str(), "w");
    if (!f) throw rotpend::IoError("cannot open " + out_path + " for writing");
    std::fprintf(f, "t,integral");
    for (int i = 1; i <= cfg.plant.order; ++i) std::fprintf(f, ",x%d", i);
    std::fprintf(f, ",u,disturbance\n");
    for (const auto& s : trace.samples) {
        std::fprintf(f, "%.9g", s.t);
        for (double v : s.state) std::fprintf(f, ",%.9g", v);
        std::fprintf(f, ",%.9g,%.9g\n", s.u, s.disturbance);
    }
    std::fclose(f);

    print_kv("trace", out_path);
    print_kv("order", static_cast<double>(cfg.plant.order));
    print_kv("b0", ctrl.b0);
    for (size_t i = 0; i < ctrl.b.size(); ++i) {
        print_kv("b" + std::to_string(i + 1), ctrl.b[i]);
    }
    print_kv("x_d", cfg.x_d);
    if (trace.diverged) {
        std::fprintf(stderr, "error: chain simulation diverged at t=%.6g; partial trace on disk\n",
                     trace.divergence_time);
        return kExitNumerical;
    }
    const double final_err = std::abs(trace.final_output() - cfg.x_d);
    print_kv("final_output", trace.final_output());
    print_kv("final_abs_error", final_err);
    if (cfg.disable_integral) {
        print_kv("disturbance_rejected", "no (integral disabled)");
    } else {
        print_kv("disturbance_rejected", final_err < 1e-3 ? "yes" : "no");
        print_kv("steady_state_value",
                 rotpend::lti::steady_state_value(cfg.plant, ctrl, 0.0, cfg.x_d));
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Rotary inverted pendulum control toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_path, trace_path, plant_override;
    std::vector<std::string> overrides;

    auto add_common = [&](CLI::App* sub, bool with_out) {
        sub->add_option("--config", config_path, "config file (JSON)")->required();
        sub->add_option("--override", overrides, "dotted-path override, e.g. runtime.v_sat=10");
        sub->add_option("--plant", plant_override, "plant mode shortcut: full or reduced");
        if (with_out) sub->add_option("--out", out_path, "output path for the trace CSV");
    };

    CLI::App* synth = app.add_subcommand("synthesize", "place poles and report gains");
    add_common(synth, false);
    CLI::App* simulate = app.add_subcommand("simulate", "run a scenario and write its trace");
    add_common(simulate, true);
    CLI::App* analyze = app.add_subcommand("analyze", "boundedness constants and trace checks");
    add_common(analyze, false);
    analyze->add_option("--trace", trace_path, "existing trace CSV to verify");
    CLI::App* demo = app.add_subcommand("lti-demo", "chain-plant synthesis and rejection demo");
    add_common(demo, true);

    CLI11_PARSE(app, argc, argv);

    try {
        if (!plant_override.empty()) {
            overrides.push_back("plant.mode=" + plant_override);
        }
        const json tree = rotpend::config::load_config(config_path, overrides);
        if (synth->parsed()) return cmd_synthesize(tree);
        if (simulate->parsed()) return cmd_simulate(tree, out_path);
        if (analyze->parsed()) return cmd_analyze(tree, trace_path);
        if (demo->parsed()) return cmd_lti_demo(tree, out_path);
        return kExitValidation;
    } catch (const rotpend::IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return kExitIo;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "validation error: %s\n", e.what());
        return kExitValidation;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "numerical error: %s\n", e.what());
        return kExitNumerical;
    }
}
