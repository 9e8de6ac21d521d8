#include "rotpend/trace.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rotpend::sim {

namespace {

constexpr const char* kHeader =
    "t,theta_ref,theta,alpha,theta_dot_est,alpha_dot_est,x0,v_cmd,v_sat,engaged,terminated";

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace

void write_trace_csv(const Trace& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");

    out << "# plant_mode=" << trace.meta.plant_mode << "\n";
    out << "# dt=" << fmt(trace.meta.dt) << "\n";
    out << "# config_hash=" << trace.meta.config_hash << "\n";
    out << "# rate_source=" << trace.meta.rate_source << "\n";
    out << "# open_loop=" << (trace.meta.open_loop ? 1 : 0) << "\n";
    out << "# friction_free=" << (trace.meta.friction_free ? 1 : 0) << "\n";
    out << "# diverged=" << (trace.meta.diverged ? 1 : 0) << "\n";
    out << kHeader << "\n";
    for (const TraceSample& s : trace.samples) {
        out << fmt(s.t) << ',' << fmt(s.theta_ref) << ',' << fmt(s.theta) << ','
            << fmt(s.alpha) << ',' << fmt(s.theta_dot_est) << ',' << fmt(s.alpha_dot_est)
            << ',' << fmt(s.x0) << ',' << fmt(s.v_cmd) << ',' << fmt(s.v_sat) << ','
            << (s.engaged ? 1 : 0) << ',' << (s.terminated ? 1 : 0) << "\n";
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

Trace read_trace_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);

    Trace trace;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            std::string key = line.substr(2, eq - 2);
            std::string val = line.substr(eq + 1);
            if (key == "plant_mode") trace.meta.plant_mode = val;
            else if (key == "dt") trace.meta.dt = std::stod(val);
            else if (key == "config_hash") trace.meta.config_hash = val;
            else if (key == "rate_source") trace.meta.rate_source = val;
            else if (key == "open_loop") trace.meta.open_loop = val == "1";
            else if (key == "friction_free") trace.meta.friction_free = val == "1";
            else if (key == "diverged") trace.meta.diverged = val == "1";
            continue;
        }
        if (!header_seen) {
            if (line != kHeader) throw std::runtime_error("unexpected trace header in " + path);
            header_seen = true;
            continue;
        }
        std::istringstream ss(line);
        TraceSample s;
        char comma;
        int engaged = 0, terminated = 0;
        ss >> s.t >> comma >> s.theta_ref >> comma >> s.theta >> comma >> s.alpha >> comma >>
            s.theta_dot_est >> comma >> s.alpha_dot_est >> comma >> s.x0 >> comma >> s.v_cmd >>
            comma >> s.v_sat >> comma >> engaged >> comma >> terminated;
        if (!ss) throw std::runtime_error("malformed trace row in " + path);
        s.engaged = engaged != 0;
        s.terminated = terminated != 0;
        trace.samples.push_back(s);
    }
    if (!header_seen) throw std::runtime_error("no trace header found in " + path);
    return trace;
}

}  // namespace rotpend::sim
