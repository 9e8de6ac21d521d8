#include "rotpend/synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "rotpend/lti.hpp"

namespace rotpend::synthesis {

namespace {

using Matrix5 = Eigen::Matrix<double, 5, 5>;
using Vector5 = Eigen::Matrix<double, 5, 1>;

std::pair<Matrix5, Vector5> augmented_pair(const model::ReducedDynamics& r) {
    auto [A1, U1] = model::state_space(r);
    auto [A, B] = model::augment_integral(A1, U1, {model::IntegralChannel::theta});
    return {Matrix5(A), Vector5(B)};
}

// Greedy nearest matching of achieved eigenvalues against requested poles;
// returns the largest relative mismatch.
double match_error(std::span<const Complex> requested, const Eigen::VectorXcd& achieved) {
    std::vector<Complex> pool(achieved.data(), achieved.data() + achieved.size());
    double worst = 0.0;
    for (const Complex& p : requested) {
        size_t best = 0;
        double bestd = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < pool.size(); ++i) {
            double d = std::abs(pool[i] - p);
            if (d < bestd) {
                bestd = d;
                best = i;
            }
        }
        worst = std::max(worst, bestd / std::max(std::abs(p), 1e-12));
        pool.erase(pool.begin() + static_cast<long>(best));
    }
    return worst;
}

}  // namespace

void DominantSpec::validate() const {
    if (!(zeta > 0.0 && zeta < 1.0)) throw std::invalid_argument("zeta must lie in (0, 1)");
    if (!(omega_n > 0.0)) throw std::invalid_argument("omega_n must be > 0");
    for (double m : far_pole_multipliers) {
        if (!(m > 1.0)) throw std::invalid_argument("far pole multipliers must be > 1");
    }
}

double zeta_from_overshoot(double percent) {
    if (!(percent > 0.0 && percent < 100.0)) {
        throw std::invalid_argument("overshoot must lie in (0, 100)%");
    }
    const double l = std::log(percent / 100.0);
    return -l / std::sqrt(std::numbers::pi * std::numbers::pi + l * l);
}

ClosedLoop closed_loop_matrix(const model::ReducedDynamics& r, const GainVector& k) {
    auto [A, B] = augmented_pair(r);
    ClosedLoop cl;
    cl.A_d = A - B * k.row();
    cl.gains = k;

    Eigen::EigenSolver<Matrix5> es(cl.A_d);
    for (int i = 0; i < 5; ++i) cl.poles[static_cast<size_t>(i)] = es.eigenvalues()[i];
    std::sort(cl.poles.begin(), cl.poles.end(), [](const Complex& a, const Complex& b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    return cl;
}

GainVector place_poles(const model::ReducedDynamics& r, std::span<const Complex> poles) {
    if (poles.size() != 5) throw std::invalid_argument("expected 5 poles");
    for (const Complex& p : poles) {
        if (!(p.real() < 0.0)) {
            throw std::invalid_argument("desired poles must have negative real part");
        }
    }

    auto [A, B] = augmented_pair(r);
    if (model::controllability_rank(A, B) != 5) {
        throw std::invalid_argument("augmented pair is uncontrollable; cannot place poles");
    }

    // Monic target polynomial; from_roots enforces conjugate closure.
    lti::Polynomial target = lti::Polynomial::from_roots(poles);

    // phi(A) by Horner on the descending coefficients.
    Matrix5 phi = Matrix5::Identity();
    for (int i = 4; i >= 0; --i) {
        phi = phi * A + target.coeffs[static_cast<size_t>(i)] * Matrix5::Identity();
    }

    Matrix5 ctrb;
    Vector5 col = B;
    for (int j = 0; j < 5; ++j) {
        ctrb.col(j) = col;
        col = A * col;
    }

    Eigen::FullPivLU<Matrix5> lu(ctrb);
    Eigen::Matrix<double, 1, 5> en = Eigen::Matrix<double, 1, 5>::Zero();
    en(4) = 1.0;
    Eigen::Matrix<double, 1, 5> krow = en * lu.solve(phi);
    GainVector k = GainVector::from(krow);

    // Mandatory round trip: achieved eigenvalues must reproduce the request.
    Eigen::EigenSolver<Matrix5> es(A - B * krow, false);
    const double err = match_error(poles, es.eigenvalues());
    if (err > 1e-6) {
        Eigen::JacobiSVD<Matrix5> svd(ctrb);
        const double cond = svd.singularValues()(0) / svd.singularValues()(4);
        std::ostringstream msg;
        msg << "pole placement round trip failed: relative eigenvalue error " << err
            << " (controllability matrix condition " << cond << ")";
        throw std::runtime_error(msg.str());
    }
    return k;
}

std::array<Complex, 5> dominant_pole_design(const DominantSpec& spec) {
    spec.validate();
    const double sigma = spec.zeta * spec.omega_n;
    const double omega_d = spec.omega_n * std::sqrt(1.0 - spec.zeta * spec.zeta);
    std::array<Complex, 5> poles;
    poles[0] = Complex(-sigma, omega_d);
    poles[1] = Complex(-sigma, -omega_d);
    for (size_t i = 0; i < 3; ++i) {
        poles[2 + i] = Complex(-sigma * spec.far_pole_multipliers[i], 0.0);
    }
    return poles;
}

}  // namespace rotpend::synthesis
