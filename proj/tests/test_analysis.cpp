#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "rotpend/analysis.hpp"
#include "rotpend/simulator.hpp"

using namespace rotpend;
using namespace rotpend::analysis;
using doctest::Approx;

namespace {

const synthesis::GainVector kLabGains{-7.302, -6.348, 27.681, -3.166, 3.829};

sim::Trace synthetic_trace(const std::vector<std::array<double, 5>>& states, double dt) {
    sim::Trace tr;
    tr.meta.plant_mode = "reduced";
    tr.meta.dt = dt;
    tr.meta.rate_source = "exact";
    for (size_t i = 0; i < states.size(); ++i) {
        sim::TraceSample s;
        s.t = static_cast<double>(i) * dt;
        s.x0 = states[i][0];
        s.theta = states[i][1];
        s.alpha = states[i][2];
        s.theta_dot_est = states[i][3];
        s.alpha_dot_est = states[i][4];
        tr.samples.push_back(s);
    }
    return tr;
}

}  // namespace

TEST_CASE("boundedness constants for the identified loop") {
    auto r = model::ReducedDynamics::identified();
    auto cl = synthesis::closed_loop_matrix(r, kLabGains);
    auto rep = boundedness_constants(cl, r, 3e-7);

    CHECK(rep.kappa == Approx(2.8873).epsilon(1e-4));
    CHECK(rep.kappa_abs == Approx(6.6810).epsilon(1e-4));
    CHECK(rep.lambda1 == Approx(-1.99901).epsilon(1e-4));
    CHECK(rep.beta == Approx(6497.7).epsilon(1e-3));
    CHECK(rep.beta >= 1.0);
    CHECK(rep.gamma_turn == Approx(5.9597e-3).epsilon(1e-3));
    CHECK(rep.z0_max == Approx(6.1146e-7).epsilon(1e-3));

    REQUIRE(rep.gamma_star.has_value());
    // Substituting gamma* back satisfies the self-consistency with tiny slack
    const double q = rep.beta * rep.kappa / -rep.lambda1;
    const double g = *rep.gamma_star;
    CHECK(rep.beta * 3e-7 + q * g * g * g - g <= 1e-9);
    // while anything measurably below gamma* violates it.
    const double lower = g - 1e-6;
    CHECK(rep.beta * 3e-7 + q * lower * lower * lower - lower > 0.0);
}

TEST_CASE("kappa is independent of summation order") {
    auto r = model::ReducedDynamics::identified();
    auto cl = synthesis::closed_loop_matrix(r, kLabGains);
    auto rep = boundedness_constants(cl, r);
    const double s1 = (r.a1 + r.a2) + r.a3;
    const double s2 = r.a4 + (r.a5 + r.a6);
    CHECK(rep.kappa == Approx(std::hypot(s1, s2)).epsilon(1e-12));
}

TEST_CASE("orthogonal eigenvectors give beta of one") {
    synthesis::ClosedLoop cl;
    cl.A_d = Eigen::Matrix<double, 5, 5>::Zero();
    for (int i = 0; i < 5; ++i) cl.A_d(i, i) = -1.0 - i;
    auto r = model::ReducedDynamics::identified();
    auto rep = boundedness_constants(cl, r);
    CHECK(rep.beta == Approx(1.0).epsilon(1e-9));
    CHECK(rep.lambda1 == Approx(-1.0));
}

TEST_CASE("linear limit collapses gamma* to beta z0") {
    auto r = model::ReducedDynamics::identified();
    r.a1 = r.a2 = r.a3 = r.a4 = r.a5 = r.a6 = 0.0;
    auto cl = synthesis::closed_loop_matrix(r, kLabGains);
    auto rep = boundedness_constants(cl, r, 0.01);
    CHECK(rep.kappa == 0.0);
    REQUIRE(rep.gamma_star.has_value());
    CHECK(*rep.gamma_star == Approx(rep.beta * 0.01).epsilon(1e-12));
    CHECK(std::isinf(rep.z0_max));
}

TEST_CASE("infeasible initial norms yield no gamma") {
    auto r = model::ReducedDynamics::identified();
    auto cl = synthesis::closed_loop_matrix(r, kLabGains);
    auto rep = boundedness_constants(cl, r, 1.0);  // far beyond z0_max
    CHECK_FALSE(rep.gamma_star.has_value());
}

TEST_CASE("defective closed loops are rejected") {
    synthesis::ClosedLoop cl;
    // Companion matrix of (s+1)^5: one eigenvector for a 5-fold eigenvalue.
    cl.A_d = Eigen::Matrix<double, 5, 5>::Zero();
    for (int i = 1; i < 5; ++i) cl.A_d(i, i - 1) = 1.0;
    const double binom[5] = {1.0, 5.0, 10.0, 10.0, 5.0};
    for (int i = 0; i < 5; ++i) cl.A_d(i, 4) = -binom[i];
    auto r = model::ReducedDynamics::identified();
    CHECK_THROWS_AS(boundedness_constants(cl, r), std::runtime_error);
}

TEST_CASE("unstable loops are rejected") {
    // Diagonal with one eigenvalue in the right half plane: diagonalizable,
    // so the defectiveness gate passes and the sign check must fire.
    synthesis::ClosedLoop cl;
    cl.A_d = Eigen::Matrix<double, 5, 5>::Zero();
    const double eigs[5] = {0.5, -1.0, -2.0, -3.0, -4.0};
    for (int i = 0; i < 5; ++i) cl.A_d(i, i) = eigs[i];
    auto r = model::ReducedDynamics::identified();
    CHECK_THROWS_AS(boundedness_constants(cl, r), std::invalid_argument);

    // The open loop (zero gains) is both singular and defective through the
    // integrator chain; it is rejected on the eigenvector condition.
    auto open = synthesis::closed_loop_matrix(r, synthesis::GainVector{});
    CHECK_THROWS(boundedness_constants(open, r));
}

TEST_CASE("verify_bounded") {
    std::vector<std::array<double, 5>> zeros(100, {0.0, 0.0, 0.0, 0.0, 0.0});
    auto tr = synthetic_trace(zeros, 0.01);
    auto ok = verify_bounded(tr, 1e-9);
    CHECK(ok.bounded);
    CHECK_FALSE(ok.first_violation_time.has_value());

    std::vector<std::array<double, 5>> growing;
    for (int i = 0; i < 100; ++i) {
        const double v = 0.01 * std::exp(0.1 * i);
        growing.push_back({v, 0.0, 0.0, 0.0, 0.0});
    }
    auto bad = verify_bounded(synthetic_trace(growing, 0.01), 0.5);
    CHECK_FALSE(bad.bounded);
    REQUIRE(bad.first_violation_time.has_value());
    CHECK(*bad.first_violation_time > 0.0);

    CHECK_THROWS_AS(verify_bounded(sim::Trace{}, 1.0), std::invalid_argument);
}

TEST_CASE("cauchy check on a constant trace is identically zero") {
    std::vector<std::array<double, 5>> c(4000, {0.3, 0.1, -0.2, 0.0, 0.0});
    auto d = cauchy_check(synthetic_trace(c, 1e-3), 0.5, 50);
    for (const auto& pt : d) CHECK(pt.sup_diff == 0.0);
}

TEST_CASE("cauchy check matches the decaying exponential closed form") {
    const double dt = 1e-3, window = 0.5, z0 = 2.0;
    std::vector<std::array<double, 5>> states;
    for (int i = 0; i <= 6000; ++i) {
        const double v = z0 * std::exp(-static_cast<double>(i) * dt);
        states.push_back({v, 0.0, 0.0, 0.0, 0.0});
    }
    auto d = cauchy_check(synthetic_trace(states, dt), window, 100);
    for (const auto& pt : d) {
        const double expect = std::exp(-pt.t) * (1.0 - std::exp(-window)) * z0;
        CHECK(pt.sup_diff == Approx(expect).epsilon(1e-6));
    }
    // suffix construction makes d(T) nonincreasing without tolerance
    for (size_t i = 1; i < d.size(); ++i) CHECK(d[i].sup_diff <= d[i - 1].sup_diff);
}

TEST_CASE("cauchy check validates its window") {
    std::vector<std::array<double, 5>> c(100, {0.0, 0.0, 0.0, 0.0, 0.0});
    auto tr = synthetic_trace(c, 1e-3);  // 0.1 s long
    CHECK_THROWS_AS(cauchy_check(tr, 0.05), std::invalid_argument);
}

TEST_CASE("linear loop obeys the spectral envelope") {
    auto r = model::ReducedDynamics::identified();
    r.a1 = r.a2 = r.a3 = r.a4 = r.a5 = r.a6 = 0.0;
    auto cl = synthesis::closed_loop_matrix(r, kLabGains);
    auto rep = boundedness_constants(cl, r);

    sim::Scenario sc;
    sc.reduced = r;
    sc.gains = kLabGains;
    sc.runtime.continuous = true;
    sc.runtime.rate_source = sim::RateSource::exact;
    sc.duration = 4.0;
    sc.dt = 1e-3;

    std::mt19937 rng(3);
    std::normal_distribution<double> dir;
    for (int trial = 0; trial < 5; ++trial) {
        std::array<double, 5> z;
        double norm = 0.0;
        for (double& v : z) {
            v = dir(rng);
            norm += v * v;
        }
        norm = std::sqrt(norm);
        const double scale = 1e-4 / norm;
        sc.initial = {z[0] * scale, z[1] * scale, z[2] * scale, z[3] * scale, z[4] * scale};

        auto tr = sim::run_scenario(sc);
        REQUIRE_FALSE(tr.meta.diverged);
        for (const auto& s : tr.samples) {
            const double zn = std::sqrt(s.x0 * s.x0 + s.theta * s.theta + s.alpha * s.alpha +
                                        s.theta_dot_est * s.theta_dot_est +
                                        s.alpha_dot_est * s.alpha_dot_est);
            const double envelope = rep.beta * std::exp(rep.lambda1 * s.t) * 1e-4;
            CHECK(zn <= envelope * 1.01 + 1e-15);
        }
    }
}

TEST_CASE("energy drift provenance checks") {
    sim::Scenario sc;
    sc.plant_mode = sim::PlantMode::full_nonlinear;
    sc.params = model::PhysicalParams::calibrated();
    sc.params.B1 = sc.params.B2 = 0.0;
    sc.open_loop = true;
    sc.runtime.rate_source = sim::RateSource::exact;
    sc.initial.x2 = 0.0;  // upright equilibrium
    sc.duration = 0.5;
    sc.dt = 1e-3;
    auto tr = sim::run_scenario(sc);
    CHECK(energy_drift(sc.params, tr) == 0.0);

    SUBCASE("friction invalidates the trace") {
        sc.params.B1 = 0.01;
        auto bad = sim::run_scenario(sc);
        CHECK_THROWS_AS(energy_drift(sc.params, bad), std::invalid_argument);
    }
    SUBCASE("closed-loop traces are rejected") {
        sc.open_loop = false;
        sc.gains = kLabGains;
        auto bad = sim::run_scenario(sc);
        CHECK_THROWS_AS(energy_drift(sc.params, bad), std::invalid_argument);
    }
}
