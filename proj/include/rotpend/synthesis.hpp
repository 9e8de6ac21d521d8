#pragma once

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <span>

#include "rotpend/pendulum.hpp"

// Pole placement for the integral-augmented pendulum loop.

namespace rotpend::synthesis {

using Complex = std::complex<double>;

// Feedback gains for V_m = -(k0 x0 + k1 th + k2 al + k3 thd + k4 ald).
struct GainVector {
    double k0 = 0.0, k1 = 0.0, k2 = 0.0, k3 = 0.0, k4 = 0.0;

    Eigen::Matrix<double, 1, 5> row() const {
        Eigen::Matrix<double, 1, 5> k;
        k << k0, k1, k2, k3, k4;
        return k;
    }
    static GainVector from(const Eigen::Matrix<double, 1, 5>& k) {
        return {k(0), k(1), k(2), k(3), k(4)};
    }
};

struct ClosedLoop {
    Eigen::Matrix<double, 5, 5> A_d;
    GainVector gains;
    std::array<Complex, 5> poles;  // eigenvalues of A_d
};

// Dominant second-order pair plus three faster real poles.
struct DominantSpec {
    double percent_overshoot = 0.0;
    double zeta = 0.0;
    double omega_n = 0.0;
    std::array<double, 3> far_pole_multipliers{};

    void validate() const;
};

// Damping ratio giving the requested percent overshoot.
double zeta_from_overshoot(double percent);

// A_d assembled from the reduced dynamics and the feedback gains; the last
// two rows are -v_i k0, -v_i k1, -(v_i k2 + c_i), -(v_i k3 + b_i1),
// -(v_i k4 + b_i2).
ClosedLoop closed_loop_matrix(const model::ReducedDynamics& r, const GainVector& k);

// Single-input placement via the controllable-canonical (Ackermann) form.
// The augmented pair must be controllable and the poles conjugate-closed
// with negative real parts; the achieved eigenvalues are verified against
// the request to 1e-6 relative.
GainVector place_poles(const model::ReducedDynamics& r, std::span<const Complex> poles);

// Dominant pair -zeta omega_n +- j omega_n sqrt(1-zeta^2) and far poles at
// multiplier * (-zeta omega_n).
std::array<Complex, 5> dominant_pole_design(const DominantSpec& spec);

}  // namespace rotpend::synthesis
