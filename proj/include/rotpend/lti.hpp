#pragma once

#include <complex>
#include <optional>
#include <span>
#include <utility>
#include <vector>

// Chain-form LTI plants, the integral + derivative-feedback controller
// scheme, Hurwitz tests and step-sequence disturbance modelling.

namespace rotpend::lti {

using Complex = std::complex<double>;

// Real polynomial, coefficients stored in ascending degree order.
struct Polynomial {
    std::vector<double> coeffs;

    Polynomial() = default;
    explicit Polynomial(std::vector<double> c);

    int degree() const { return static_cast<int>(coeffs.size()) - 1; }
    double leading() const { return coeffs.back(); }

    // Monic polynomial with the given roots. The root set must be closed
    // under conjugation; the imaginary residue is checked and dropped.
    static Polynomial from_roots(std::span<const Complex> roots);

    Complex eval(Complex s) const;
};

// Plant d^n x/dt^n + sum_{i=1..n} a_i d^(i-1)x/dt^(i-1) = u + T_d.
// a[i-1] multiplies the (i-1)th derivative of x.
struct ChainPlant {
    int order = 0;
    std::vector<double> a;

    ChainPlant(int n, std::vector<double> coeffs);
};

// Control law u = b0 * integral(z) + sum_{i=1..n} b_i z^(i-1), z = x_d - x.
struct GeneralController {
    double b0 = 0.0;
    std::vector<double> b;
};

struct DisturbanceStep {
    double time = 0.0;
    double amplitude = 0.0;
};

// Superposition of unit steps: T_d(t) = sum_i amplitude_i * r(t - time_i).
struct DisturbanceProfile {
    std::vector<DisturbanceStep> steps;

    double value_at(double t) const;
    void validate() const;
};

struct ChainSample {
    double t = 0.0;
    std::vector<double> state;  // integral state first, then x, x', ...
    double u = 0.0;
    double disturbance = 0.0;
};

struct ChainTrace {
    std::vector<ChainSample> samples;
    bool diverged = false;
    double divergence_time = 0.0;

    double final_output() const;
};

// Matches s^{n+1} + sum (a_i + b_i) s^i + b_0 to the monic polynomial with
// the requested n+1 roots. Roots must be conjugate-closed with strictly
// negative real parts.
GeneralController synthesize_controller(const ChainPlant& plant,
                                        std::span<const Complex> desired_poles);

// Closed-loop denominator of the plant/controller pair, ascending coefficients.
Polynomial closed_loop_denominator(const ChainPlant& plant,
                                   const GeneralController& ctrl);

// True iff every root has strictly negative real part. Companion-matrix
// eigenvalues; routh_stable() is the independent cross-check.
bool is_hurwitz(const Polynomial& p);

// Routh-table stability test on the same polynomial.
bool routh_stable(const Polynomial& p);

// Piecewise-constant reconstruction of time-ordered samples. A new step is
// emitted whenever the running level drifts from the sample by more than
// tolerance; consecutive equal values merge.
DisturbanceProfile approximate_disturbance(
    std::span<const std::pair<double, double>> samples, double tolerance);

// Fixed-step RK4 integration of the augmented (n+1)-state closed loop.
// Divergence is reported through the trace flags, not an exception.
ChainTrace simulate_chain(const ChainPlant& plant, const GeneralController& ctrl,
                          double x_d, const DisturbanceProfile& dist,
                          double duration, double dt,
                          std::optional<double> u_max = std::nullopt);

// Final value of the closed loop under a step disturbance: equals x_d for
// any step amplitude because the integral pole cancels the disturbance.
// Rejects non-Hurwitz closed loops.
double steady_state_value(const ChainPlant& plant, const GeneralController& ctrl,
                          double step_amplitude, double x_d);

}  // namespace rotpend::lti
