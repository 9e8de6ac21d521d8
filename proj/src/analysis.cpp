#include "rotpend/analysis.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rotpend::analysis {

namespace {

double sample_norm(const sim::TraceSample& s) {
    return std::sqrt(s.x0 * s.x0 + s.theta * s.theta + s.alpha * s.alpha +
                     s.theta_dot_est * s.theta_dot_est + s.alpha_dot_est * s.alpha_dot_est);
}

// Windowed sup of ||Z(t_j) - Z(t_i)|| per anchor, then a suffix maximum.
// The per-anchor loop is independent work, which is what the parallel
// variant distributes; the suffix pass stays serial either way.
std::vector<CauchyPoint> cauchy_impl(const sim::Trace& trace, double window, int grid_points,
                                     bool parallel) {
    if (trace.samples.size() < 2) throw std::invalid_argument("trace too short");
    if (!(window > 0.0)) throw std::invalid_argument("window must be > 0");
    if (trace.duration() < 3.0 * window) {
        throw std::invalid_argument("trace must cover at least 3x the window");
    }
    if (grid_points < 2) throw std::invalid_argument("grid_points must be >= 2");

    const auto& s = trace.samples;
    const long long n = static_cast<long long>(s.size());
    std::vector<double> anchor_sup(static_cast<size_t>(n), 0.0);
    const double eps = 1e-12;

#ifdef _OPENMP
#pragma omp parallel for schedule(static) if (parallel)
#else
    (void)parallel;
#endif
    for (long long i = 0; i < n; ++i) {
        double sup = 0.0;
        for (long long j = i + 1; j < n && s[static_cast<size_t>(j)].t - s[static_cast<size_t>(i)].t <= window + eps; ++j) {
            const auto& a = s[static_cast<size_t>(i)];
            const auto& b = s[static_cast<size_t>(j)];
            const double d0 = b.x0 - a.x0;
            const double d1 = b.theta - a.theta;
            const double d2 = b.alpha - a.alpha;
            const double d3 = b.theta_dot_est - a.theta_dot_est;
            const double d4 = b.alpha_dot_est - a.alpha_dot_est;
            const double dist = std::sqrt(d0 * d0 + d1 * d1 + d2 * d2 + d3 * d3 + d4 * d4);
            if (dist > sup) sup = dist;
        }
        anchor_sup[static_cast<size_t>(i)] = sup;
    }

    std::vector<double> suffix(static_cast<size_t>(n), 0.0);
    double running = 0.0;
    for (long long i = n - 1; i >= 0; --i) {
        running = std::max(running, anchor_sup[static_cast<size_t>(i)]);
        suffix[static_cast<size_t>(i)] = running;
    }

    const double t0 = s.front().t;
    const double t_last = s.back().t - window;
    std::vector<CauchyPoint> out;
    out.reserve(static_cast<size_t>(grid_points));
    size_t idx = 0;
    for (int g = 0; g < grid_points; ++g) {
        const double T = t0 + (t_last - t0) * static_cast<double>(g) /
                                  static_cast<double>(grid_points - 1);
        while (idx + 1 < s.size() && s[idx].t < T - eps) ++idx;
        out.push_back({s[idx].t, suffix[idx]});
    }
    return out;
}

}  // namespace

BoundednessReport boundedness_constants(const synthesis::ClosedLoop& cl,
                                        const model::ReducedDynamics& r,
                                        std::optional<double> z0_norm) {
    Eigen::EigenSolver<Eigen::Matrix<double, 5, 5>> es(cl.A_d);
    Eigen::Matrix<std::complex<double>, 5, 5> m = es.eigenvectors();
    for (int j = 0; j < 5; ++j) m.col(j) /= m.col(j).norm();

    Eigen::JacobiSVD<Eigen::Matrix<std::complex<double>, 5, 5>> svd(m);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(4);
    if (!(smin > 0.0) || smax / smin > 1e8) {
        throw std::runtime_error("A_d is defective or near-defective; eigenvector condition " +
                                 std::to_string(smax / std::max(smin, 1e-300)));
    }

    BoundednessReport rep;
    rep.beta = smax / smin;
    rep.kappa = std::sqrt(std::pow(r.a1 + r.a2 + r.a3, 2) + std::pow(r.a4 + r.a5 + r.a6, 2));
    rep.kappa_abs =
        std::sqrt(std::pow(std::abs(r.a1) + std::abs(r.a2) + std::abs(r.a3), 2) +
                  std::pow(std::abs(r.a4) + std::abs(r.a5) + std::abs(r.a6), 2));

    rep.lambda1 = es.eigenvalues()[0].real();
    for (int i = 1; i < 5; ++i) rep.lambda1 = std::max(rep.lambda1, es.eigenvalues()[i].real());
    if (!(rep.lambda1 < 0.0)) {
        throw std::invalid_argument("closed loop is not Hurwitz; boundedness undefined");
    }

    if (rep.kappa > 0.0) {
        rep.gamma_turn = std::sqrt(-rep.lambda1 / (3.0 * rep.beta * rep.kappa));
        // Feasibility boundary: beta*z0 + beta*kappa*g^3/|l1| <= g at g = gamma_turn
        // collapses to beta*z0 <= (2/3) gamma_turn.
        rep.z0_max = 2.0 / 3.0 * rep.gamma_turn / rep.beta;
    } else {
        rep.gamma_turn = std::numeric_limits<double>::infinity();
        rep.z0_max = std::numeric_limits<double>::infinity();
    }

    if (z0_norm) {
        if (!(*z0_norm >= 0.0)) throw std::invalid_argument("z0_norm must be >= 0");
        rep.z0_norm = z0_norm;
        if (rep.kappa == 0.0) {
            rep.gamma_star = rep.beta * *z0_norm;  // linear limit
        } else if (*z0_norm <= rep.z0_max) {
            // g(gamma) - gamma is strictly decreasing on [0, gamma_turn];
            // bisect to the unique crossing and return its upper bracket.
            const double q = rep.beta * rep.kappa / -rep.lambda1;
            auto overshoot = [&](double g) { return rep.beta * *z0_norm + q * g * g * g - g; };
            double lo = 0.0, hi = rep.gamma_turn;
            for (int it = 0; it < 200; ++it) {
                const double mid = 0.5 * (lo + hi);
                (overshoot(mid) > 0.0 ? lo : hi) = mid;
            }
            rep.gamma_star = hi;
        }
        // otherwise infeasible: gamma_star stays empty
    }
    return rep;
}

BoundCheck verify_bounded(const sim::Trace& trace, double gamma) {
    if (trace.samples.empty()) throw std::invalid_argument("empty trace");
    for (const auto& s : trace.samples) {
        if (sample_norm(s) > gamma) return {false, s.t};
    }
    return {true, std::nullopt};
}

std::vector<CauchyPoint> cauchy_check(const sim::Trace& trace, double window, int grid_points) {
    return cauchy_impl(trace, window, grid_points, true);
}

std::vector<CauchyPoint> cauchy_check_serial(const sim::Trace& trace, double window,
                                             int grid_points) {
    return cauchy_impl(trace, window, grid_points, false);
}

double energy_drift(const model::PhysicalParams& p, const sim::Trace& trace) {
    if (trace.samples.empty()) throw std::invalid_argument("empty trace");
    if (trace.meta.plant_mode != "full" || !trace.meta.open_loop ||
        !trace.meta.friction_free || trace.meta.rate_source != "exact") {
        throw std::invalid_argument(
            "energy_drift needs an open-loop friction-free full-model trace with exact rates");
    }
    auto energy = [&](const sim::TraceSample& s) {
        model::FullState fs{s.theta, s.alpha, s.theta_dot_est, s.alpha_dot_est};
        return model::total_energy(p, fs);
    };
    const double e0 = energy(trace.samples.front());
    const double scale = std::max(std::abs(e0), 1e-12);
    double drift = 0.0;
    for (const auto& s : trace.samples) {
        drift = std::max(drift, std::abs(energy(s) - e0) / scale);
    }
    return drift;
}

}  // namespace rotpend::analysis
