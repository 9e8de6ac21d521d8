#pragma once

#include <Eigen/Dense>

#include <array>
#include <initializer_list>
#include <utility>

// Rotary inverted pendulum physics: energies, full nonlinear equations of
// motion, motor torque, the small-angle matrices and the reduced coefficient
// form used by the controller design.

namespace rotpend::model {

struct PhysicalParams {
    double M1 = 0.0;  // rotary arm mass [kg]
    double M2 = 0.0;  // pendulum mass [kg]
    double L1 = 0.0;  // rotary arm length [m]
    double L2 = 0.0;  // pendulum length [m]
    double J1 = 0.0;  // arm inertia about its COM [kg m^2]
    double J2 = 0.0;  // pendulum inertia about its COM [kg m^2]
    double B1 = 0.0;  // yaw viscous friction [N m s/rad]
    double B2 = 0.0;  // pitch viscous friction [N m s/rad]
    double g = 9.81;  // gravity [m/s^2]
    double eta_g = 1.0;   // gearbox efficiency (0,1]
    double eta_m = 1.0;   // motor efficiency (0,1]
    double K_g = 1.0;     // total gear ratio
    double K_t = 0.0;     // torque constant [N m/A]
    double K_m = 0.0;     // back-emf constant [V s/rad]
    double R_m = 1.0;     // armature resistance [ohm]
    double arm_com_ratio = 2.0 / 7.0;  // arm COM position / L1

    void validate() const;

    // Voltage-to-torque gain and back-emf damping of the servo.
    double u1() const { return eta_g * K_g * eta_m * K_t / R_m; }
    double u2() const { return u1() * K_g * K_m; }

    // Parameter set fitted so that the derived reduced coefficients
    // reproduce the identified set within 0.1%.
    static PhysicalParams calibrated();
};

// theta: rotary arm angle, alpha: pendulum angle from upright, CCW positive.
struct FullState {
    double theta = 0.0;
    double alpha = 0.0;
    double theta_dot = 0.0;
    double alpha_dot = 0.0;
};

// Augmented controller state (integral of theta first).
struct PendulumState {
    double x0 = 0.0;  // integral of theta [rad s]
    double x1 = 0.0;  // theta [rad]
    double x2 = 0.0;  // alpha [rad]
    double x3 = 0.0;  // theta_dot [rad/s]
    double x4 = 0.0;  // alpha_dot [rad/s]
};

// Constant matrices of A*X2' + B*X2 + C*X1 = U*Vm + N.
struct SmallAngleMatrices {
    Eigen::Matrix2d mass;       // symmetric positive definite
    Eigen::Matrix2d damping;    // diag(B1 + u2, B2)
    Eigen::Matrix2d stiffness;  // single entry -(1/2) M2 g L2 at (1,1)
    Eigen::Vector2d input;      // (u1, 0)
};

// Coefficients of the mass-normalized small-angle model with cubic
// nonlinear terms:
//   thdd = v1 Vm - b11 thd - b12 ald - c1 al + a1 al thd ald + a2 al ald^2 + a3 al thd^2
//   aldd = v2 Vm - b21 thd - b22 ald - c2 al + a4 al thd ald + a5 al ald^2 + a6 al thd^2
struct ReducedDynamics {
    Eigen::Matrix2d Ainv;
    double b11 = 0.0, b12 = 0.0, b21 = 0.0, b22 = 0.0;
    double c1 = 0.0, c2 = 0.0;
    double v1 = 0.0, v2 = 0.0;
    double a1 = 0.0, a2 = 0.0, a3 = 0.0, a4 = 0.0, a5 = 0.0, a6 = 0.0;

    void validate() const;

    // The identified coefficient set of the lab plant, used verbatim.
    static ReducedDynamics identified();
};

struct Accel {
    double theta_ddot = 0.0;
    double alpha_ddot = 0.0;
};

// Alpha-dependent part of the potential energy only.
double potential_energy(const PhysicalParams& p, double alpha);

// Rotational plus translational kinetic energy, including the
// -(1/2) M2 L1 L2 cos(alpha) coupling and the sin^2(alpha) term.
double kinetic_energy(const PhysicalParams& p, const FullState& s);

double lagrangian(const PhysicalParams& p, const FullState& s);

// Total mechanical energy (KE + PE), used by the conservation checks.
double total_energy(const PhysicalParams& p, const FullState& s);

// Solves the coupled Euler-Lagrange equations for both accelerations with
// every trigonometric term retained.
Accel full_dynamics(const PhysicalParams& p, const FullState& s, double tau);

// tau = u1 Vm - u2 theta_dot.
double motor_torque(const PhysicalParams& p, double v_m, double theta_dot);

SmallAngleMatrices small_angle_matrices(const PhysicalParams& p);

// Left-multiplies the small-angle model by mass^-1, dropping the
// alpha^2 inertia corrections.
ReducedDynamics reduced_dynamics(const SmallAngleMatrices& m, const PhysicalParams& p);

// Right-hand side of the augmented five-state model.
std::array<double, 5> nonlinear_reduced_dynamics(const ReducedDynamics& r,
                                                 const PendulumState& s, double v_m);

// Linear state-space pair for states (theta, alpha, theta_dot, alpha_dot).
std::pair<Eigen::Matrix4d, Eigen::Vector4d> state_space(const ReducedDynamics& r);

// Numeric rank of [B, AB, ..., A^{n-1}B]; singular values above
// max_sv * 1e-9 * n count.
int controllability_rank(const Eigen::MatrixXd& A, const Eigen::VectorXd& B);

enum class IntegralChannel { theta, alpha };

// Prepends integral states (theta first when both are selected).
std::pair<Eigen::MatrixXd, Eigen::VectorXd> augment_integral(
    const Eigen::Matrix4d& A1, const Eigen::Vector4d& U1,
    std::initializer_list<IntegralChannel> channels);

}  // namespace rotpend::model
