#include "rotpend/pendulum.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace rotpend::model {

void PhysicalParams::validate() const {
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(M1) || !positive(M2) || !positive(L1) || !positive(L2) ||
        !positive(J1) || !positive(J2) || !positive(g) || !positive(R_m) ||
        !positive(K_g) || !positive(K_t) || !positive(K_m)) {
        throw std::invalid_argument("masses, lengths, inertias and motor constants must be > 0");
    }
    if (B1 < 0.0 || B2 < 0.0 || !std::isfinite(B1) || !std::isfinite(B2)) {
        throw std::invalid_argument("friction coefficients must be >= 0");
    }
    if (!(eta_g > 0.0 && eta_g <= 1.0) || !(eta_m > 0.0 && eta_m <= 1.0)) {
        throw std::invalid_argument("efficiencies must lie in (0, 1]");
    }
    if (!(arm_com_ratio > 0.0 && arm_com_ratio < 1.0)) {
        throw std::invalid_argument("arm_com_ratio must lie in (0, 1)");
    }
}

PhysicalParams PhysicalParams::calibrated() {
    PhysicalParams p;
    p.M1 = 0.257;
    p.M2 = 0.127;
    p.L1 = 0.216;
    p.L2 = 0.337;
    p.J1 = 0.001;
    p.J2 = 0.0012;
    p.B1 = 0.00249;
    p.B2 = 0.0024;
    p.g = 9.81;
    p.eta_g = 0.9;
    p.eta_m = 0.6909;
    p.K_g = 70.0;
    p.K_t = 0.00767;
    p.K_m = 0.00767;
    p.R_m = 2.6;
    p.arm_com_ratio = 2.0 / 7.0;
    return p;
}

void ReducedDynamics::validate() const {
    for (double v : {b11, b12, b21, b22, c1, c2, v1, v2, a1, a2, a3, a4, a5, a6,
                     Ainv(0, 0), Ainv(0, 1), Ainv(1, 0), Ainv(1, 1)}) {
        if (!std::isfinite(v)) throw std::invalid_argument("reduced dynamics must be finite");
    }
    if (std::abs(Ainv(0, 1) - Ainv(1, 0)) > 1e-6 * std::abs(Ainv(0, 1))) {
        throw std::invalid_argument("Ainv must be symmetric");
    }
    if (Ainv(0, 0) <= 0.0 || Ainv.determinant() <= 0.0) {
        throw std::invalid_argument("Ainv must be positive definite");
    }
}

ReducedDynamics ReducedDynamics::identified() {
    ReducedDynamics r;
    r.Ainv << 289.1545, 278.1123, 278.1123, 475.5730;
    r.b11 = 20.6543;
    r.b12 = 0.6675;
    r.b21 = 19.8655;
    r.b22 = 1.1414;
    r.c1 = -58.3839;
    r.c2 = -99.8366;
    r.v1 = 37.1285;
    r.v2 = 35.7106;
    r.a1 = -2.0852;
    r.a2 = -1.3366;
    r.a3 = 1.0028;
    r.a4 = -2.0056;
    r.a5 = -1.2855;
    r.a6 = 1.7148;
    return r;
}

double potential_energy(const PhysicalParams& p, double alpha) {
    return p.M2 * p.g * (p.L2 / 2.0) * std::cos(alpha);
}

double kinetic_energy(const PhysicalParams& p, const FullState& s) {
    const double rho = p.arm_com_ratio;
    const double sa = std::sin(s.alpha);
    const double ca = std::cos(s.alpha);
    const double thd2 = s.theta_dot * s.theta_dot;
    const double ald2 = s.alpha_dot * s.alpha_dot;

    const double rotational = 0.5 * p.J1 * thd2 + 0.5 * p.J2 * ald2;
    const double arm = 0.5 * p.M1 * rho * rho * p.L1 * p.L1 * thd2;
    const double pend = p.M2 * p.L2 * p.L2 / 8.0 * (ald2 + sa * sa * thd2) -
                        0.5 * p.M2 * p.L1 * p.L2 * ca * s.alpha_dot * s.theta_dot +
                        0.5 * p.M2 * p.L1 * p.L1 * thd2;
    return rotational + arm + pend;
}

double lagrangian(const PhysicalParams& p, const FullState& s) {
    return kinetic_energy(p, s) - potential_energy(p, s.alpha);
}

double total_energy(const PhysicalParams& p, const FullState& s) {
    return kinetic_energy(p, s) + potential_energy(p, s.alpha);
}

Accel full_dynamics(const PhysicalParams& p, const FullState& s, double tau) {
    const double rho = p.arm_com_ratio;
    const double sa = std::sin(s.alpha);
    const double ca = std::cos(s.alpha);
    const double s2a = std::sin(2.0 * s.alpha);
    const double thd = s.theta_dot;
    const double ald = s.alpha_dot;

    const double m11 = p.J1 + p.M1 * rho * rho * p.L1 * p.L1 + p.M2 * p.L1 * p.L1 +
                       0.25 * p.M2 * p.L2 * p.L2 * sa * sa;
    const double m12 = -0.5 * p.M2 * p.L1 * p.L2 * ca;
    const double m22 = p.J2 + 0.25 * p.M2 * p.L2 * p.L2;

    const double f1 = tau - 0.25 * p.M2 * p.L2 * p.L2 * s2a * ald * thd -
                      0.5 * p.M2 * p.L1 * p.L2 * sa * ald * ald - p.B1 * thd;
    const double f2 = 0.125 * p.M2 * p.L2 * p.L2 * s2a * thd * thd - p.B2 * ald +
                      0.5 * p.M2 * p.g * p.L2 * sa;

    const double det = m11 * m22 - m12 * m12;  // > 0 for valid parameters
    return {(m22 * f1 - m12 * f2) / det, (m11 * f2 - m12 * f1) / det};
}

double motor_torque(const PhysicalParams& p, double v_m, double theta_dot) {
    return p.u1() * v_m - p.u2() * theta_dot;
}

SmallAngleMatrices small_angle_matrices(const PhysicalParams& p) {
    p.validate();
    const double rho = p.arm_com_ratio;
    SmallAngleMatrices m;
    m.mass << p.J1 + p.M1 * rho * rho * p.L1 * p.L1 + p.M2 * p.L1 * p.L1,
        -0.5 * p.M2 * p.L1 * p.L2, -0.5 * p.M2 * p.L1 * p.L2,
        p.J2 + 0.25 * p.M2 * p.L2 * p.L2;
    m.damping << p.B1 + p.u2(), 0.0, 0.0, p.B2;
    m.stiffness << 0.0, 0.0, 0.0, -0.5 * p.M2 * p.g * p.L2;
    m.input << p.u1(), 0.0;

    if (m.mass.determinant() <= 0.0) {
        throw std::invalid_argument("mass matrix is not positive definite");
    }
    return m;
}

ReducedDynamics reduced_dynamics(const SmallAngleMatrices& m, const PhysicalParams& p) {
    const double det = m.mass.determinant();
    if (det <= 0.0 || !std::isfinite(det)) {
        throw std::invalid_argument("singular mass matrix");
    }
    const Eigen::Matrix2d Ainv = m.mass.inverse();

    ReducedDynamics r;
    r.Ainv = Ainv;
    const Eigen::Matrix2d bd = Ainv * m.damping;
    r.b11 = bd(0, 0);
    r.b12 = bd(0, 1);
    r.b21 = bd(1, 0);
    r.b22 = bd(1, 1);
    const Eigen::Matrix2d cs = Ainv * m.stiffness;
    r.c1 = cs(0, 1);
    r.c2 = cs(1, 1);
    const Eigen::Vector2d v = Ainv * m.input;
    r.v1 = v(0);
    r.v2 = v(1);

    // Cubic couplings: theta row carries -(1/2)M2 L2^2 al ald thd and
    // -(1/2)M2 L1 L2 al ald^2; alpha row carries +(1/4)M2 L2^2 al thd^2.
    const double n1 = -0.5 * p.M2 * p.L2 * p.L2;
    const double n2 = -0.5 * p.M2 * p.L1 * p.L2;
    const double n3 = 0.25 * p.M2 * p.L2 * p.L2;
    r.a1 = Ainv(0, 0) * n1;
    r.a2 = Ainv(0, 0) * n2;
    r.a3 = Ainv(0, 1) * n3;
    r.a4 = Ainv(1, 0) * n1;
    r.a5 = Ainv(1, 0) * n2;
    r.a6 = Ainv(1, 1) * n3;
    r.validate();
    return r;
}

std::array<double, 5> nonlinear_reduced_dynamics(const ReducedDynamics& r,
                                                 const PendulumState& s, double v_m) {
    const double al = s.x2, thd = s.x3, ald = s.x4;
    std::array<double, 5> d;
    d[0] = s.x1;
    d[1] = thd;
    d[2] = ald;
    d[3] = r.v1 * v_m - r.b11 * thd - r.b12 * ald - r.c1 * al + r.a1 * al * thd * ald +
           r.a2 * al * ald * ald + r.a3 * al * thd * thd;
    d[4] = r.v2 * v_m - r.b21 * thd - r.b22 * ald - r.c2 * al + r.a4 * al * thd * ald +
           r.a5 * al * ald * ald + r.a6 * al * thd * thd;
    return d;
}

std::pair<Eigen::Matrix4d, Eigen::Vector4d> state_space(const ReducedDynamics& r) {
    Eigen::Matrix4d A = Eigen::Matrix4d::Zero();
    A(0, 2) = 1.0;
    A(1, 3) = 1.0;
    A(2, 1) = -r.c1;
    A(2, 2) = -r.b11;
    A(2, 3) = -r.b12;
    A(3, 1) = -r.c2;
    A(3, 2) = -r.b21;
    A(3, 3) = -r.b22;
    Eigen::Vector4d B(0.0, 0.0, r.v1, r.v2);
    return {A, B};
}

int controllability_rank(const Eigen::MatrixXd& A, const Eigen::VectorXd& B) {
    const auto n = A.rows();
    if (A.cols() != n || B.size() != n) {
        throw std::invalid_argument("controllability_rank: inconsistent dimensions");
    }
    Eigen::MatrixXd ctrb(n, n);
    Eigen::VectorXd col = B;
    for (Eigen::Index j = 0; j < n; ++j) {
        ctrb.col(j) = col;
        col = A * col;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(ctrb);
    const auto& sv = svd.singularValues();
    const double thresh = sv(0) * 1e-9 * static_cast<double>(n);
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > thresh) ++rank;
    }
    return rank;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> augment_integral(
    const Eigen::Matrix4d& A1, const Eigen::Vector4d& U1,
    std::initializer_list<IntegralChannel> channels) {
    if (channels.size() == 0) throw std::invalid_argument("at least one integral channel required");

    std::vector<IntegralChannel> ch(channels);
    std::sort(ch.begin(), ch.end(), [](IntegralChannel a, IntegralChannel b) {
        return static_cast<int>(a) < static_cast<int>(b);
    });
    if (std::unique(ch.begin(), ch.end()) != ch.end()) {
        throw std::invalid_argument("duplicate integral channel");
    }

    const Eigen::Index m = static_cast<Eigen::Index>(ch.size());
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(4 + m, 4 + m);
    Eigen::VectorXd B = Eigen::VectorXd::Zero(4 + m);
    for (Eigen::Index i = 0; i < m; ++i) {
        // d(integral)/dt = theta or alpha, located after the integral block
        A(i, m + (ch[static_cast<size_t>(i)] == IntegralChannel::theta ? 0 : 1)) = 1.0;
    }
    A.bottomRightCorner(4, 4) = A1;
    B.tail(4) = U1;
    return {A, B};
}

}  // namespace rotpend::model
