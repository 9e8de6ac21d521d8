#include "rotpend/config.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <sstream>

#include "rotpend/errors.hpp"

namespace rotpend::config {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

[[noreturn]] void fail(const std::string& ctx, const std::string& msg) {
    throw std::invalid_argument("config: " + ctx + ": " + msg);
}

void check_keys(const json& j, const std::string& ctx,
                std::initializer_list<const char*> allowed) {
    if (!j.is_object()) fail(ctx, "expected an object");
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (const char* a : allowed) known = known || key == a;
        if (!known) fail(ctx, "unknown key '" + key + "'");
    }
}

double get_num(const json& j, const std::string& ctx, const char* key) {
    if (!j.contains(key)) fail(ctx, std::string("missing key '") + key + "'");
    if (!j[key].is_number()) fail(ctx, std::string("'") + key + "' must be a number");
    return j[key].get<double>();
}

double get_num_or(const json& j, const std::string& ctx, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) fail(ctx, std::string("'") + key + "' must be a number");
    return j[key].get<double>();
}

bool get_bool_or(const json& j, const std::string& ctx, const char* key, bool fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_boolean()) fail(ctx, std::string("'") + key + "' must be a boolean");
    return j[key].get<bool>();
}

std::string get_str_or(const json& j, const std::string& ctx, const char* key,
                       const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_string()) fail(ctx, std::string("'") + key + "' must be a string");
    return j[key].get<std::string>();
}

std::vector<double> get_array(const json& j, const std::string& ctx, const char* key,
                              size_t size) {
    if (!j.contains(key) || !j[key].is_array() || j[key].size() != size) {
        fail(ctx, std::string("'") + key + "' must be an array of " + std::to_string(size));
    }
    std::vector<double> out;
    for (const auto& v : j[key]) {
        if (!v.is_number()) fail(ctx, std::string("'") + key + "' must hold numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

model::PhysicalParams parse_physical(const json& j, const std::string& ctx) {
    check_keys(j, ctx,
               {"M1", "M2", "L1", "L2", "J1", "J2", "B1", "B2", "g", "eta_g", "eta_m", "K_g",
                "K_t", "K_m", "R_m", "arm_com_ratio"});
    model::PhysicalParams p;
    p.M1 = get_num(j, ctx, "M1");
    p.M2 = get_num(j, ctx, "M2");
    p.L1 = get_num(j, ctx, "L1");
    p.L2 = get_num(j, ctx, "L2");
    p.J1 = get_num(j, ctx, "J1");
    p.J2 = get_num(j, ctx, "J2");
    p.B1 = get_num(j, ctx, "B1");
    p.B2 = get_num(j, ctx, "B2");
    p.g = get_num(j, ctx, "g");
    p.eta_g = get_num(j, ctx, "eta_g");
    p.eta_m = get_num(j, ctx, "eta_m");
    p.K_g = get_num(j, ctx, "K_g");
    p.K_t = get_num(j, ctx, "K_t");
    p.K_m = get_num(j, ctx, "K_m");
    p.R_m = get_num(j, ctx, "R_m");
    p.arm_com_ratio = get_num(j, ctx, "arm_com_ratio");
    p.validate();
    return p;
}

model::ReducedDynamics parse_identified(const json& j, const std::string& ctx) {
    check_keys(j, ctx, {"Ainv", "b", "c", "v", "a"});
    model::ReducedDynamics r;
    auto mat2 = [&](const char* key) {
        if (!j.contains(key) || !j[key].is_array() || j[key].size() != 2) {
            fail(ctx, std::string("'") + key + "' must be a 2x2 array");
        }
        Eigen::Matrix2d m;
        for (int row = 0; row < 2; ++row) {
            const auto& rj = j[key][static_cast<size_t>(row)];
            if (!rj.is_array() || rj.size() != 2) {
                fail(ctx, std::string("'") + key + "' rows must have 2 entries");
            }
            for (int col = 0; col < 2; ++col) {
                if (!rj[static_cast<size_t>(col)].is_number()) {
                    fail(ctx, std::string("'") + key + "' must hold numbers");
                }
                m(row, col) = rj[static_cast<size_t>(col)].get<double>();
            }
        }
        return m;
    };
    r.Ainv = mat2("Ainv");
    Eigen::Matrix2d b = mat2("b");
    r.b11 = b(0, 0);
    r.b12 = b(0, 1);
    r.b21 = b(1, 0);
    r.b22 = b(1, 1);
    auto c = get_array(j, ctx, "c", 2);
    r.c1 = c[0];
    r.c2 = c[1];
    auto v = get_array(j, ctx, "v", 2);
    r.v1 = v[0];
    r.v2 = v[1];
    auto a = get_array(j, ctx, "a", 6);
    r.a1 = a[0];
    r.a2 = a[1];
    r.a3 = a[2];
    r.a4 = a[3];
    r.a5 = a[4];
    r.a6 = a[5];
    r.validate();
    return r;
}

struct PlantBlock {
    sim::PlantMode mode = sim::PlantMode::small_angle_reduced;
    model::PhysicalParams params = model::PhysicalParams::calibrated();
    model::ReducedDynamics reduced = model::ReducedDynamics::identified();
};

PlantBlock parse_plant(const json& tree) {
    PlantBlock out;
    if (!tree.contains("plant")) return out;
    const json& j = tree["plant"];
    const std::string ctx = "plant";
    check_keys(j, ctx, {"mode", "source", "physical", "identified"});

    const std::string mode = get_str_or(j, ctx, "mode", "reduced");
    if (mode == "full") out.mode = sim::PlantMode::full_nonlinear;
    else if (mode == "reduced") out.mode = sim::PlantMode::small_angle_reduced;
    else fail(ctx, "mode must be 'full' or 'reduced'");

    if (j.contains("physical")) out.params = parse_physical(j["physical"], ctx + ".physical");

    const std::string source = get_str_or(j, ctx, "source", "identified");
    if (source == "identified") {
        if (j.contains("identified")) {
            out.reduced = parse_identified(j["identified"], ctx + ".identified");
        }
    } else if (source == "physical") {
        out.reduced = model::reduced_dynamics(model::small_angle_matrices(out.params), out.params);
    } else {
        fail(ctx, "source must be 'identified' or 'physical'");
    }
    return out;
}

std::vector<synthesis::Complex> parse_poles(const json& j, const std::string& ctx,
                                            size_t count) {
    if (!j.is_array() || j.size() != count) {
        fail(ctx, "poles must be an array of " + std::to_string(count) + " [re, im] pairs");
    }
    std::vector<synthesis::Complex> poles;
    for (const auto& p : j) {
        if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
            fail(ctx, "each pole must be an [re, im] pair");
        }
        poles.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    return poles;
}

// Resolves the controller block to a pole set (and optionally direct gains).
struct ControllerBlock {
    std::optional<synthesis::GainVector> gains;
    std::optional<std::array<synthesis::Complex, 5>> poles;
};

ControllerBlock parse_controller(const json& tree, bool allow_gains) {
    if (!tree.contains("controller")) fail("controller", "block is required");
    const json& j = tree["controller"];
    const std::string ctx = "controller";
    check_keys(j, ctx, {"gains", "poles", "dominant"});

    const int given = (j.contains("gains") ? 1 : 0) + (j.contains("poles") ? 1 : 0) +
                      (j.contains("dominant") ? 1 : 0);
    if (given != 1) fail(ctx, "exactly one of gains/poles/dominant is required");

    ControllerBlock out;
    if (j.contains("gains")) {
        if (!allow_gains) fail(ctx, "this command needs 'poles' or 'dominant', not raw gains");
        auto g = get_array(j, ctx, "gains", 5);
        out.gains = synthesis::GainVector{g[0], g[1], g[2], g[3], g[4]};
    } else if (j.contains("poles")) {
        auto p = parse_poles(j["poles"], ctx + ".poles", 5);
        std::array<synthesis::Complex, 5> arr;
        std::copy(p.begin(), p.end(), arr.begin());
        out.poles = arr;
    } else {
        const json& d = j["dominant"];
        const std::string dctx = ctx + ".dominant";
        check_keys(d, dctx,
                   {"percent_overshoot", "zeta", "omega_n", "zeta_omega_n",
                    "far_pole_multipliers"});
        synthesis::DominantSpec spec;
        if (d.contains("zeta") == d.contains("percent_overshoot")) {
            fail(dctx, "give exactly one of zeta / percent_overshoot");
        }
        if (d.contains("zeta")) {
            spec.zeta = get_num(d, dctx, "zeta");
            spec.percent_overshoot =
                100.0 * std::exp(-spec.zeta * std::numbers::pi /
                                 std::sqrt(1.0 - spec.zeta * spec.zeta));
        } else {
            spec.percent_overshoot = get_num(d, dctx, "percent_overshoot");
            spec.zeta = synthesis::zeta_from_overshoot(spec.percent_overshoot);
        }
        if (d.contains("omega_n") == d.contains("zeta_omega_n")) {
            fail(dctx, "give exactly one of omega_n / zeta_omega_n");
        }
        spec.omega_n = d.contains("omega_n")
                           ? get_num(d, dctx, "omega_n")
                           : get_num(d, dctx, "zeta_omega_n") / spec.zeta;
        auto mult = get_array(d, dctx, "far_pole_multipliers", 3);
        std::copy(mult.begin(), mult.end(), spec.far_pole_multipliers.begin());
        out.poles = synthesis::dominant_pole_design(spec);
    }
    return out;
}

lti::DisturbanceProfile parse_disturbance(const json& tree, const std::string& ctx) {
    lti::DisturbanceProfile profile;
    if (!tree.contains("disturbance")) return profile;
    const json& j = tree["disturbance"];
    check_keys(j, ctx, {"steps"});
    if (!j.contains("steps")) return profile;
    if (!j["steps"].is_array()) fail(ctx, "'steps' must be an array of [t, amplitude]");
    for (const auto& s : j["steps"]) {
        if (!s.is_array() || s.size() != 2 || !s[0].is_number() || !s[1].is_number()) {
            fail(ctx, "each step must be a [t, amplitude] pair");
        }
        profile.steps.push_back({s[0].get<double>(), s[1].get<double>()});
    }
    profile.validate();
    return profile;
}

sim::ControllerRuntimeConfig parse_runtime(const json& tree) {
    sim::ControllerRuntimeConfig cfg;
    if (!tree.contains("runtime")) return cfg;
    const json& j = tree["runtime"];
    const std::string ctx = "runtime";
    check_keys(j, ctx,
               {"sample_period", "v_sat", "filter_cutoff", "antiwindup_reset", "catch_angle_deg",
                "theta_limit_deg", "quantization_counts", "rate_source", "continuous"});
    cfg.sample_period = get_num_or(j, ctx, "sample_period", cfg.sample_period);
    cfg.v_sat = get_num_or(j, ctx, "v_sat", cfg.v_sat);
    cfg.filter_cutoff = get_num_or(j, ctx, "filter_cutoff", cfg.filter_cutoff);
    cfg.antiwindup_reset = get_num_or(j, ctx, "antiwindup_reset", cfg.antiwindup_reset);
    cfg.catch_angle = get_num_or(j, ctx, "catch_angle_deg", cfg.catch_angle / kDegToRad) * kDegToRad;
    cfg.theta_limit = get_num_or(j, ctx, "theta_limit_deg", cfg.theta_limit / kDegToRad) * kDegToRad;
    const double counts = get_num_or(j, ctx, "quantization_counts", 0.0);
    if (counts < 0.0) fail(ctx, "quantization_counts must be >= 0");
    cfg.quantization = counts > 0.0 ? 2.0 * std::numbers::pi / counts : 0.0;
    const std::string rate = get_str_or(j, ctx, "rate_source", "filtered");
    if (rate == "filtered") cfg.rate_source = sim::RateSource::filtered;
    else if (rate == "exact") cfg.rate_source = sim::RateSource::exact;
    else fail(ctx, "rate_source must be 'filtered' or 'exact'");
    cfg.continuous = get_bool_or(j, ctx, "continuous", false);
    return cfg;
}

sim::ReferenceSignal parse_reference(const json& tree) {
    sim::ReferenceSignal ref;
    if (!tree.contains("reference")) return ref;
    const json& j = tree["reference"];
    const std::string ctx = "reference";
    check_keys(j, ctx, {"kind", "amplitude_deg", "period", "start_time", "offset_deg"});
    const std::string kind = get_str_or(j, ctx, "kind", "constant");
    if (kind == "constant") ref.kind = sim::ReferenceSignal::Kind::constant;
    else if (kind == "square_pulse") ref.kind = sim::ReferenceSignal::Kind::square_pulse;
    else fail(ctx, "kind must be 'constant' or 'square_pulse'");
    ref.amplitude = get_num_or(j, ctx, "amplitude_deg", 0.0) * kDegToRad;
    ref.period = get_num_or(j, ctx, "period", 0.0);
    ref.start_time = get_num_or(j, ctx, "start_time", 0.0);
    ref.offset = get_num_or(j, ctx, "offset_deg", 0.0) * kDegToRad;
    return ref;
}

model::PendulumState parse_initial(const json& tree) {
    model::PendulumState s;
    if (!tree.contains("initial")) return s;
    const json& j = tree["initial"];
    const std::string ctx = "initial";
    check_keys(j, ctx, {"theta_deg", "alpha_deg", "theta_dot_deg_s", "alpha_dot_deg_s", "x0"});
    s.x1 = get_num_or(j, ctx, "theta_deg", 0.0) * kDegToRad;
    s.x2 = get_num_or(j, ctx, "alpha_deg", 0.0) * kDegToRad;
    s.x3 = get_num_or(j, ctx, "theta_dot_deg_s", 0.0) * kDegToRad;
    s.x4 = get_num_or(j, ctx, "alpha_dot_deg_s", 0.0) * kDegToRad;
    s.x0 = get_num_or(j, ctx, "x0", 0.0);
    return s;
}

}  // namespace

json load_config(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file " + path);
    json tree;
    try {
        tree = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument("config: " + path + ": " + e.what());
    }
    for (const std::string& o : overrides) tree = apply_override(std::move(tree), o);
    return tree;
}

json apply_override(json tree, const std::string& spec) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw std::invalid_argument("override must look like path.to.key=value: " + spec);
    }
    const std::string path = spec.substr(0, eq);
    const std::string raw = spec.substr(eq + 1);

    json value;
    try {
        value = json::parse(raw);
    } catch (const json::parse_error&) {
        value = raw;  // bare strings are allowed unquoted
    }

    json* node = &tree;
    std::istringstream ss(path);
    std::string part;
    std::vector<std::string> parts;
    while (std::getline(ss, part, '.')) {
        if (part.empty()) throw std::invalid_argument("empty path segment in override: " + spec);
        parts.push_back(part);
    }
    for (size_t i = 0; i + 1 < parts.size(); ++i) {
        node = &(*node)[parts[i]];
    }
    if (value.is_null()) {
        if (node->is_object()) node->erase(parts.back());  // null deletes the key
    } else {
        (*node)[parts.back()] = value;
    }
    return tree;
}

std::string config_hash(const json& tree) {
    const std::string dump = tree.dump();
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : dump) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

SynthesizeConfig parse_synthesize(const json& tree) {
    check_keys(tree, "root", {"plant", "controller"});
    PlantBlock plant = parse_plant(tree);
    ControllerBlock ctrl = parse_controller(tree, /*allow_gains=*/false);
    return {plant.reduced, *ctrl.poles};
}

SimulateConfig parse_simulate(const json& tree) {
    check_keys(tree, "root",
               {"plant", "controller", "runtime", "reference", "disturbance", "initial",
                "duration", "dt", "open_loop", "output"});
    PlantBlock plant = parse_plant(tree);

    SimulateConfig out;
    out.scenario.plant_mode = plant.mode;
    out.scenario.params = plant.params;
    out.scenario.reduced = plant.reduced;
    out.scenario.open_loop = get_bool_or(tree, "root", "open_loop", false);

    if (out.scenario.open_loop) {
        if (tree.contains("controller")) fail("root", "open_loop runs take no controller block");
    } else {
        ControllerBlock ctrl = parse_controller(tree, /*allow_gains=*/true);
        out.scenario.gains = ctrl.gains ? *ctrl.gains
                                        : synthesis::place_poles(plant.reduced, *ctrl.poles);
    }
    out.scenario.runtime = parse_runtime(tree);
    out.scenario.reference = parse_reference(tree);
    out.scenario.disturbance = parse_disturbance(tree, "disturbance");
    out.scenario.initial = parse_initial(tree);
    out.scenario.duration = get_num(tree, "root", "duration");
    out.scenario.dt = get_num_or(tree, "root", "dt", 1e-3);
    out.scenario.config_hash = config_hash(tree);
    out.output = get_str_or(tree, "root", "output", out.output);
    out.scenario.validate();
    return out;
}

AnalyzeConfig parse_analyze(const json& tree) {
    check_keys(tree, "root", {"plant", "controller", "analysis"});
    PlantBlock plant = parse_plant(tree);
    ControllerBlock ctrl = parse_controller(tree, /*allow_gains=*/true);

    AnalyzeConfig out;
    out.reduced = plant.reduced;
    out.params = plant.params;
    out.gains = ctrl.gains ? *ctrl.gains : synthesis::place_poles(plant.reduced, *ctrl.poles);
    if (tree.contains("analysis")) {
        const json& j = tree["analysis"];
        const std::string ctx = "analysis";
        check_keys(j, ctx, {"z0_norm", "gamma", "window", "grid_points", "linear_only"});
        if (j.contains("z0_norm")) out.z0_norm = get_num(j, ctx, "z0_norm");
        if (j.contains("gamma")) out.gamma = get_num(j, ctx, "gamma");
        out.window = get_num_or(j, ctx, "window", out.window);
        out.grid_points = static_cast<int>(get_num_or(j, ctx, "grid_points", out.grid_points));
        out.linear_only = get_bool_or(j, ctx, "linear_only", false);
    }
    if (out.linear_only) {
        out.reduced.a1 = out.reduced.a2 = out.reduced.a3 = 0.0;
        out.reduced.a4 = out.reduced.a5 = out.reduced.a6 = 0.0;
    }
    return out;
}

LtiDemoConfig parse_lti_demo(const json& tree) {
    check_keys(tree, "root",
               {"order", "a", "poles", "x_d", "duration", "dt", "disturbance",
                "disable_integral", "u_max", "output"});
    const int order = static_cast<int>(get_num(tree, "root", "order"));
    if (order < 1 || order > 6) throw std::invalid_argument("config: order must be in [1, 6]");

    LtiDemoConfig out;
    out.plant = lti::ChainPlant(order, get_array(tree, "root", "a", static_cast<size_t>(order)));
    out.poles = parse_poles(tree.contains("poles") ? tree["poles"] : json::array(), "poles",
                            static_cast<size_t>(order) + 1);
    out.x_d = get_num_or(tree, "root", "x_d", 1.0);
    out.duration = get_num_or(tree, "root", "duration", 20.0);
    out.dt = get_num_or(tree, "root", "dt", 1e-3);
    out.disturbance = parse_disturbance(tree, "disturbance");
    out.disable_integral = get_bool_or(tree, "root", "disable_integral", false);
    const double umax = get_num_or(tree, "root", "u_max", 0.0);
    if (umax < 0.0) throw std::invalid_argument("config: u_max must be >= 0");
    if (umax > 0.0) out.u_max = umax;
    out.output = get_str_or(tree, "root", "output", out.output);
    return out;
}

}  // namespace rotpend::config
