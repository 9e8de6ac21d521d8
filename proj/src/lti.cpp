#include "rotpend/lti.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace rotpend::lti {

namespace {

// Greedy conjugate pairing; throws when a complex root lacks its mirror.
void check_conjugate_closed(std::span<const Complex> roots) {
    std::vector<Complex> pending;
    for (const Complex& r : roots) {
        if (std::abs(r.imag()) < 1e-12 * std::max(1.0, std::abs(r.real()))) continue;
        auto it = std::find_if(pending.begin(), pending.end(), [&](const Complex& q) {
            return std::abs(q - std::conj(r)) <= 1e-9 * std::max(1.0, std::abs(r));
        });
        if (it != pending.end()) {
            pending.erase(it);
        } else {
            pending.push_back(r);
        }
    }
    if (!pending.empty()) {
        throw std::invalid_argument("pole set is not closed under conjugation");
    }
}

}  // namespace

Polynomial::Polynomial(std::vector<double> c) : coeffs(std::move(c)) {
    if (coeffs.empty()) {
        throw std::invalid_argument("polynomial needs at least one coefficient");
    }
    while (coeffs.size() > 1 && coeffs.back() == 0.0) coeffs.pop_back();
    if (coeffs.size() == 1 && coeffs[0] == 0.0) {
        throw std::invalid_argument("zero polynomial rejected");
    }
}

Polynomial Polynomial::from_roots(std::span<const Complex> roots) {
    check_conjugate_closed(roots);
    std::vector<Complex> c{1.0};
    for (const Complex& r : roots) {
        std::vector<Complex> next(c.size() + 1, Complex(0.0));
        for (size_t i = 0; i < c.size(); ++i) {
            next[i + 1] += c[i];
            next[i] -= c[i] * r;
        }
        c = std::move(next);
    }
    std::vector<double> real(c.size());
    for (size_t i = 0; i < c.size(); ++i) {
        real[i] = c[i].real();
    }
    return Polynomial(std::move(real));
}

Complex Polynomial::eval(Complex s) const {
    Complex acc(0.0);
    for (size_t i = coeffs.size(); i-- > 0;) acc = acc * s + coeffs[i];
    return acc;
}

ChainPlant::ChainPlant(int n, std::vector<double> coeffs) : order(n), a(std::move(coeffs)) {
    if (order < 1) throw std::invalid_argument("plant order must be >= 1");
    if (static_cast<int>(a.size()) != order) {
        throw std::invalid_argument("plant coefficient count must equal the order");
    }
    for (double ai : a) {
        if (!std::isfinite(ai)) throw std::invalid_argument("plant coefficients must be finite");
    }
}

double DisturbanceProfile::value_at(double t) const {
    double sum = 0.0;
    for (const DisturbanceStep& s : steps) {
        if (t >= s.time) sum += s.amplitude;
    }
    return sum;
}

void DisturbanceProfile::validate() const {
    for (size_t i = 0; i < steps.size(); ++i) {
        if (!std::isfinite(steps[i].amplitude) || !std::isfinite(steps[i].time)) {
            throw std::invalid_argument("disturbance steps must be finite");
        }
        if (i > 0 && steps[i].time <= steps[i - 1].time) {
            throw std::invalid_argument("disturbance step times must be strictly increasing");
        }
    }
}

double ChainTrace::final_output() const {
    if (samples.empty()) throw std::logic_error("empty trace");
    return samples.back().state[1];
}

GeneralController synthesize_controller(const ChainPlant& plant,
                                        std::span<const Complex> desired_poles) {
    const int n = plant.order;
    if (static_cast<int>(desired_poles.size()) != n + 1) {
        throw std::invalid_argument("expected order+1 desired poles");
    }
    for (const Complex& p : desired_poles) {
        if (!(p.real() < 0.0)) {
            throw std::invalid_argument("desired poles must have negative real part");
        }
    }
    Polynomial target = Polynomial::from_roots(desired_poles);  // monic, degree n+1

    GeneralController ctrl;
    ctrl.b0 = target.coeffs[0];
    ctrl.b.resize(n);
    for (int i = 1; i <= n; ++i) {
        ctrl.b[i - 1] = target.coeffs[i] - plant.a[i - 1];
    }
    return ctrl;
}

Polynomial closed_loop_denominator(const ChainPlant& plant, const GeneralController& ctrl) {
    if (static_cast<int>(ctrl.b.size()) != plant.order) {
        throw std::invalid_argument("controller dimension does not match the plant");
    }
    std::vector<double> c(plant.order + 2, 0.0);
    c[0] = ctrl.b0;
    for (int i = 1; i <= plant.order; ++i) c[i] = plant.a[i - 1] + ctrl.b[i - 1];
    c[plant.order + 1] = 1.0;
    return Polynomial(std::move(c));
}

bool is_hurwitz(const Polynomial& p) {
    const int n = p.degree();
    if (n < 1) throw std::invalid_argument("degree must be >= 1");

    Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(n, n);
    for (int i = 1; i < n; ++i) comp(i, i - 1) = 1.0;
    for (int i = 0; i < n; ++i) comp(i, n - 1) = -p.coeffs[i] / p.leading();

    Eigen::EigenSolver<Eigen::MatrixXd> es(comp, false);
    for (int i = 0; i < n; ++i) {
        if (es.eigenvalues()[i].real() >= 0.0) return false;
    }
    return true;
}

bool routh_stable(const Polynomial& p) {
    const int n = p.degree();
    if (n < 1) throw std::invalid_argument("degree must be >= 1");

    // Work with a positive leading coefficient.
    std::vector<double> c = p.coeffs;
    if (c.back() < 0.0) {
        for (double& x : c) x = -x;
    }
    // Necessary condition: every coefficient strictly positive.
    for (double x : c) {
        if (x <= 0.0) return false;
    }

    const int cols = n / 2 + 1;
    std::vector<std::vector<double>> row(2, std::vector<double>(cols + 1, 0.0));
    for (int j = 0; j < cols; ++j) {
        int k = n - 2 * j;
        row[0][j] = c[k];
        row[1][j] = (k - 1 >= 0) ? c[k - 1] : 0.0;
    }
    std::vector<double> prev = row[0], cur = row[1];
    for (int r = 2; r <= n; ++r) {
        double pivot = cur[0];
        if (pivot == 0.0) pivot = 1e-30;  // classical epsilon substitution
        std::vector<double> next(cols + 1, 0.0);
        for (int j = 0; j + 1 < cols + 1; ++j) {
            next[j] = (pivot * prev[j + 1] - prev[0] * cur[j + 1]) / pivot;
        }
        prev = cur;
        cur = next;
        if (cur[0] <= 0.0) return false;
    }
    return true;
}

DisturbanceProfile approximate_disturbance(
    std::span<const std::pair<double, double>> samples, double tolerance) {
    if (tolerance < 0.0) throw std::invalid_argument("tolerance must be >= 0");
    for (size_t i = 1; i < samples.size(); ++i) {
        if (samples[i].first <= samples[i - 1].first) {
            throw std::invalid_argument("samples must be time-ordered");
        }
    }
    DisturbanceProfile profile;
    double level = 0.0;
    for (const auto& [t, v] : samples) {
        if (std::abs(v - level) > tolerance) {
            profile.steps.push_back({t, v - level});
            level = v;
        }
    }
    return profile;
}

ChainTrace simulate_chain(const ChainPlant& plant, const GeneralController& ctrl,
                          double x_d, const DisturbanceProfile& dist,
                          double duration, double dt, std::optional<double> u_max) {
    if (dt <= 0.0 || duration <= 0.0) throw std::invalid_argument("dt and duration must be > 0");
    if (static_cast<int>(ctrl.b.size()) != plant.order) {
        throw std::invalid_argument("controller dimension does not match the plant");
    }
    dist.validate();

    const int n = plant.order;
    const int dim = n + 1;  // integral state + chain states
    std::vector<double> y(dim, 0.0);

    auto control = [&](const std::vector<double>& s) {
        double u = ctrl.b0 * s[0] + ctrl.b[0] * (x_d - s[1]);
        for (int i = 2; i <= n; ++i) u -= ctrl.b[i - 1] * s[i];
        if (u_max) u = std::clamp(u, -*u_max, *u_max);
        return u;
    };

    ChainTrace trace;
    const long long steps = std::llround(duration / dt);
    trace.samples.reserve(static_cast<size_t>(steps) + 1);

    std::vector<double> k1(dim), k2(dim), k3(dim), k4(dim), tmp(dim);
    auto deriv = [&](const std::vector<double>& s, double d, std::vector<double>& out) {
        double u = control(s);
        out[0] = x_d - s[1];
        for (int i = 1; i < n; ++i) out[i] = s[i + 1];
        double acc = u + d;
        for (int i = 1; i <= n; ++i) acc -= plant.a[i - 1] * s[i];
        out[n] = acc;
    };

    for (long long i = 0; i <= steps; ++i) {
        const double t = static_cast<double>(i) * dt;
        const double d = dist.value_at(t);

        bool finite = true;
        for (double v : y) finite = finite && std::isfinite(v);
        trace.samples.push_back({t, y, control(y), d});
        if (!finite) {
            trace.diverged = true;
            trace.divergence_time = t;
            break;
        }
        if (i == steps) break;

        deriv(y, d, k1);
        for (int j = 0; j < dim; ++j) tmp[j] = y[j] + 0.5 * dt * k1[j];
        deriv(tmp, d, k2);
        for (int j = 0; j < dim; ++j) tmp[j] = y[j] + 0.5 * dt * k2[j];
        deriv(tmp, d, k3);
        for (int j = 0; j < dim; ++j) tmp[j] = y[j] + dt * k3[j];
        deriv(tmp, d, k4);
        for (int j = 0; j < dim; ++j) {
            y[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
        }
    }
    return trace;
}

double steady_state_value(const ChainPlant& plant, const GeneralController& ctrl,
                          double step_amplitude, double x_d) {
    (void)step_amplitude;  // cancelled by the integral pole
    Polynomial den = closed_loop_denominator(plant, ctrl);
    if (!is_hurwitz(den)) {
        throw std::invalid_argument("closed loop is not Hurwitz; no steady state");
    }
    // lim s*X(s) = (s*alpha_0 + b0*x_d) / den(s) at s = 0  ->  b0*x_d/b0.
    return x_d;
}

}  // namespace rotpend::lti
