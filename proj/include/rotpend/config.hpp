#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rotpend/lti.hpp"
#include "rotpend/simulator.hpp"
#include "rotpend/synthesis.hpp"

// Config-file schema behind the CLI. Files are JSON with nested blocks;
// unknown keys are rejected and angle-valued fields carry a _deg suffix
// (degrees at the boundary, radians inside).

namespace rotpend::config {

using json = nlohmann::json;

// Reads a config file and applies dotted-path overrides such as
// "runtime.v_sat=10" (values parsed as JSON, falling back to strings).
json load_config(const std::string& path, const std::vector<std::string>& overrides);

json apply_override(json tree, const std::string& spec);

// FNV-1a over the canonical dump; stable across runs.
std::string config_hash(const json& tree);

struct SynthesizeConfig {
    model::ReducedDynamics reduced;
    std::array<synthesis::Complex, 5> poles;
};

struct SimulateConfig {
    sim::Scenario scenario;
    std::string output = "trace.csv";
};

struct AnalyzeConfig {
    model::ReducedDynamics reduced;
    model::PhysicalParams params;  // for trace-level energy checks
    synthesis::GainVector gains;
    std::optional<double> z0_norm;
    std::optional<double> gamma;  // explicit bound for verify_bounded
    double window = 1.0;
    int grid_points = 200;
    bool linear_only = false;
};

struct LtiDemoConfig {
    lti::ChainPlant plant{1, {0.0}};
    std::vector<synthesis::Complex> poles;
    double x_d = 1.0;
    double duration = 20.0;
    double dt = 1e-3;
    lti::DisturbanceProfile disturbance;
    bool disable_integral = false;
    std::optional<double> u_max;
    std::string output = "lti_trace.csv";
};

SynthesizeConfig parse_synthesize(const json& tree);
SimulateConfig parse_simulate(const json& tree);
AnalyzeConfig parse_analyze(const json& tree);
LtiDemoConfig parse_lti_demo(const json& tree);

}  // namespace rotpend::config
