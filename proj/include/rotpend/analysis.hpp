#pragma once

#include <optional>
#include <vector>

#include "rotpend/pendulum.hpp"
#include "rotpend/synthesis.hpp"
#include "rotpend/trace.hpp"

// Boundedness constants of the closed nonlinear loop, trajectory bound
// verification, Cauchy-style convergence checks and energy-drift measurement.

namespace rotpend::analysis {

struct BoundednessReport {
    double beta = 0.0;        // ||M|| ||M^-1|| with unit-norm eigenvector columns
    double kappa = 0.0;       // sqrt((a1+a2+a3)^2 + (a4+a5+a6)^2)
    double kappa_abs = 0.0;   // sign-safe variant using |a_i|
    double lambda1 = 0.0;     // largest eigenvalue real part (least negative)
    double gamma_turn = 0.0;  // stationary point sqrt(|lambda1|/(3 beta kappa))
    double z0_max = 0.0;      // largest initial norm with a feasible bound
    std::optional<double> z0_norm;      // input echo, when supplied
    std::optional<double> gamma_star;   // smallest self-consistent bound for z0_norm
};

// Requires A_d diagonalizable with well-separated eigenvalues and all
// eigenvalue real parts negative. gamma_star is computed when an initial
// norm is supplied and the fixed point exists for it.
BoundednessReport boundedness_constants(const synthesis::ClosedLoop& cl,
                                        const model::ReducedDynamics& r,
                                        std::optional<double> z0_norm = std::nullopt);

struct BoundCheck {
    bool bounded = true;
    std::optional<double> first_violation_time;
};

// ||(x0, theta, alpha, theta_dot_est, alpha_dot_est)|| <= gamma at every sample.
BoundCheck verify_bounded(const sim::Trace& trace, double gamma);

struct CauchyPoint {
    double t = 0.0;
    double sup_diff = 0.0;
};

// d(T) = sup over t1, t2 >= T with |t1 - t2| <= window of ||Z(t1) - Z(t2)||,
// evaluated on the trace grid and reported on up to grid_points T values.
// Nonincreasing in T by construction. OpenMP-parallel inner kernel;
// cauchy_check_serial is the bit-identical reference.
std::vector<CauchyPoint> cauchy_check(const sim::Trace& trace, double window,
                                      int grid_points = 200);
std::vector<CauchyPoint> cauchy_check_serial(const sim::Trace& trace, double window,
                                             int grid_points = 200);

// Max relative drift of the total mechanical energy over the trace.
// The trace must come from an unforced, friction-free full-model run with
// exact rates recorded.
double energy_drift(const model::PhysicalParams& p, const sim::Trace& trace);

}  // namespace rotpend::analysis
