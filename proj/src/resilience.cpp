#include "fovctl/resilience.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>

#include "fovctl/errors.hpp"

namespace fovctl {

Vec2 FaultSignal::value(double t) const {
    switch (type) {
        case Type::Zero: return Vec2::Zero();
        case Type::Ramp: return Vec2::Constant(a * t);
        case Type::Sine: return Vec2::Constant(a * std::sin(2.0 * kPi * b * t));
        case Type::Constant: return {a, b};
    }
    return Vec2::Zero();
}

Vec2 FaultSignal::derivative(double t) const {
    switch (type) {
        case Type::Zero: return Vec2::Zero();
        case Type::Ramp: return Vec2::Constant(a);
        case Type::Sine:
            return Vec2::Constant(a * 2.0 * kPi * b * std::cos(2.0 * kPi * b * t));
        case Type::Constant: return Vec2::Zero();
    }
    return Vec2::Zero();
}

double FaultSignal::sup_norm() const {
    const double sqrt2 = std::sqrt(2.0);
    switch (type) {
        case Type::Zero: return 0.0;
        case Type::Ramp: return a == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
        case Type::Sine: return std::abs(a) * sqrt2;
        case Type::Constant: return Vec2(a, b).norm();
    }
    return 0.0;
}

double FaultSignal::sup_rate_norm() const {
    const double sqrt2 = std::sqrt(2.0);
    switch (type) {
        case Type::Zero: return 0.0;
        case Type::Ramp: return std::abs(a) * sqrt2;
        case Type::Sine: return std::abs(a) * 2.0 * kPi * b * sqrt2;
        case Type::Constant: return 0.0;
    }
    return 0.0;
}

FaultProfile FaultProfile::none(int robot_count) {
    FaultProfile p;
    p.sensor.assign(robot_count, FaultSignal::zero());
    p.actuator.assign(robot_count, FaultSignal::zero());
    return p;
}

void FaultProfile::derive_bounds() {
    sensor_rate_bound = 0.0;
    actuator_bound = 0.0;
    for (const auto& s : sensor) sensor_rate_bound = std::max(sensor_rate_bound, s.sup_rate_norm());
    for (const auto& u : actuator) actuator_bound = std::max(actuator_bound, u.sup_norm());
}

void FaultProfile::check_bounds(double horizon, int samples) const {
    const double slack = 1.0 + 1e-9;
    for (int s = 0; s <= samples; ++s) {
        const double t = horizon * s / samples;
        for (int i = 0; i < robot_count(); ++i) {
            if (sensor[i].derivative(t).norm() > sensor_rate_bound * slack)
                throw validation_error("fault profile: sensor rate bound violated for robot " +
                                       std::to_string(i + 1));
            if (actuator[i].value(t).norm() > actuator_bound * slack)
                throw validation_error("fault profile: actuator bound violated for robot " +
                                       std::to_string(i + 1));
        }
    }
}

Injection inject(std::span<const RobotState> states, const FaultProfile& profile, double t,
                 std::span<const Vec2> u_p) {
    Injection out;
    out.measured.resize(states.size());
    out.applied.resize(states.size());
    for (size_t i = 0; i < states.size(); ++i) {
        out.measured[i] = states[i].position() + profile.sensor_fault(static_cast<int>(i), t);
        out.applied[i] = u_p[i] + profile.actuator_fault(static_cast<int>(i), t);
    }
    return out;
}

ObserverState ObserverState::start(const Vec2& first_measurement, const Mat2& f1,
                                   const Mat2& f2) {
    ObserverState obs;
    obs.p_hat = first_measurement;
    obs.delta_hat = Vec2::Zero();
    obs.e = Vec2::Zero();
    obs.F1 = f1;
    obs.F2 = f2;
    return obs;
}

void observer_step(ObserverState& obs, const Vec2& p_bar, const Vec2& u_p_desired, double dt) {
    if (!(dt > 0.0)) throw validation_error("observer_step: dt must be positive");
    const Vec2 e = obs.e;
    obs.p_hat += dt * (u_p_desired + (obs.F1 + obs.F2) * e);
    obs.delta_hat += dt * (-obs.F1 * e);
    obs.e = p_bar - obs.p_hat - obs.delta_hat;
}

namespace {

// The coupling condition pins M's second block column to -P's, which makes
// the (2,2) Riccati block read  q22 + gamma^-2 (P^2)22 = 0. A certificate
// therefore only exists with a zero weight on the fault-estimation states
// and a P supported on the error block. Within that family, constraining
// K2 = K1 - I (so F1 = -F2) keeps the scalar problem one-dimensional:
//   gamma^-2 p^2 + 2 (1 - k1) p + q + r (k1^2 + (k1-1)^2) = 0.
// small_root returns the numerically stable smaller solution, or a negative
// number when k1 is infeasible.
double small_root(double k1, double q, double r, double gamma) {
    if (k1 <= 1.0) return -1.0;
    const double c = q + r * (k1 * k1 + (k1 - 1.0) * (k1 - 1.0));
    const double disc = (k1 - 1.0) * (k1 - 1.0) - c / (gamma * gamma);
    if (disc < 0.0) return -1.0;
    return c / ((k1 - 1.0) + std::sqrt(disc));
}

}  // namespace

SofSynthesis synthesize_sof(double q, double r, double gamma) {
    if (!(q >= 0.0)) throw validation_error("sof synthesis: q must be nonnegative");
    if (!(r > 0.0)) throw validation_error("sof synthesis: r must be positive");
    if (!(gamma > 0.0)) throw validation_error("sof synthesis: gamma must be positive");

    SofSynthesis s;
    s.gamma = gamma;
    s.A_bar = Eigen::Matrix4d::Zero();
    s.A_bar.topLeftCorner<2, 2>() = Mat2::Identity();
    s.B_bar = Eigen::Matrix4d::Identity();
    s.D_bar = Eigen::Matrix4d::Identity();
    s.C_bar = Eigen::Matrix<double, 2, 4>::Zero();
    s.C_bar.leftCols<2>() = Mat2::Identity();
    s.Q_bar = Eigen::Matrix4d::Zero();
    s.Q_bar.topLeftCorner<2, 2>() = q * Mat2::Identity();
    s.R_bar = r * Eigen::Matrix4d::Identity();

    // Golden-section search for the feasible k1 with the smallest
    // certificate, then a few Newton polish steps on the scalar equation.
    double best_k1 = -1.0, best_p = std::numeric_limits<double>::infinity();
    double lo = 1.0 + 1e-9, hi = 1e4;
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - gr * (hi - lo), x2 = lo + gr * (hi - lo);
    auto eval = [&](double k1) {
        const double p = small_root(k1, q, r, gamma);
        return p > 0.0 ? p : std::numeric_limits<double>::infinity();
    };
    double f1 = eval(x1), f2 = eval(x2);
    for (int it = 0; it < 200; ++it) {
        if (f1 < f2) {
            hi = x2; x2 = x1; f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = eval(x1);
        } else {
            lo = x1; x1 = x2; f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = eval(x2);
        }
    }
    best_k1 = 0.5 * (lo + hi);
    best_p = eval(best_k1);

    if (!std::isfinite(best_p)) {
        s.certified = false;
        s.K_bar.setZero();
        s.P_bar.setZero();
        s.M.setZero();
        s.F1.setZero();
        s.F2.setZero();
        const auto res = sof_residuals(s);
        s.residual_coupling = res.first;
        s.residual_riccati = res.second;
        s.note = "infeasible: no real certificate for gamma=" + std::to_string(gamma) +
                 "; best residual " + std::to_string(res.second);
        return s;
    }

    const double k1 = best_k1;
    const double k2 = k1 - 1.0;
    const double p = best_p;

    s.K_bar.setZero();
    s.K_bar.topLeftCorner<2, 2>() = k1 * Mat2::Identity();
    s.K_bar.bottomLeftCorner<2, 2>() = k2 * Mat2::Identity();
    s.P_bar = Eigen::Matrix4d::Zero();
    s.P_bar.topLeftCorner<2, 2>() = p * Mat2::Identity();
    s.M = s.R_bar * (s.K_bar * s.C_bar) - s.B_bar.transpose() * s.P_bar;
    s.F2 = (k1 - 1.0) * Mat2::Identity();
    s.F1 = -k2 * Mat2::Identity();

    const auto res = sof_residuals(s);
    s.residual_coupling = res.first;
    s.residual_riccati = res.second;
    s.certified = res.first < 1e-8 && res.second < 1e-8;
    if (!s.certified)
        s.note = "solver produced residuals above tolerance";
    return s;
}

std::pair<double, double> sof_residuals(const SofSynthesis& s) {
    const Eigen::Matrix4d r_inv = s.R_bar.inverse();
    const Eigen::Matrix4d coupling =
        s.K_bar * s.C_bar - r_inv * (s.B_bar.transpose() * s.P_bar + s.M);
    const Eigen::Matrix4d riccati =
        s.P_bar * s.A_bar + s.A_bar.transpose() * s.P_bar + s.Q_bar +
        (1.0 / (s.gamma * s.gamma)) * s.P_bar * s.D_bar * s.D_bar.transpose() * s.P_bar +
        s.M.transpose() * r_inv * s.M -
        s.P_bar * s.B_bar * r_inv * s.B_bar.transpose() * s.P_bar;
    return {coupling.norm(), riccati.norm()};
}

double l2_gain_estimate(const SofSynthesis& s, std::span<const DisturbanceSignal> disturbances,
                        double horizon, double dt) {
    const Eigen::Matrix4d a_cl = s.A_bar - s.B_bar * s.K_bar * s.C_bar;
    const Eigen::Matrix4d kc = s.K_bar * s.C_bar;
    double worst = 0.0;
    for (const auto& d : disturbances) {
        Eigen::Vector4d x = Eigen::Vector4d::Zero();
        double num = 0.0, den = 0.0;
        const long steps = static_cast<long>(horizon / dt);
        for (long step = 0; step < steps; ++step) {
            const double t = step * dt;
            auto deriv = [&](const Eigen::Vector4d& xs, double ts) -> Eigen::Vector4d {
                return a_cl * xs + s.D_bar * d(ts);
            };
            // left-endpoint accumulation of both energies
            const Eigen::Vector4d u = -kc * x;
            num += dt * (x.dot(s.Q_bar * x) + u.dot(s.R_bar * u));
            den += dt * d(t).squaredNorm();
            const Eigen::Vector4d k1 = deriv(x, t);
            const Eigen::Vector4d k2 = deriv(x + 0.5 * dt * k1, t + 0.5 * dt);
            const Eigen::Vector4d k3 = deriv(x + 0.5 * dt * k2, t + 0.5 * dt);
            const Eigen::Vector4d k4 = deriv(x + dt * k3, t + dt);
            x += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        }
        if (den <= 0.0) continue;  // zero-energy signal, ratio undefined
        worst = std::max(worst, std::sqrt(num / den));
    }
    return worst;
}

std::vector<DisturbanceSignal> disturbance_sweep(std::span<const double> omegas) {
    std::vector<DisturbanceSignal> signals;
    for (double omega : omegas) {
        for (int channel = 0; channel < 4; ++channel) {
            signals.push_back([omega, channel](double t) {
                Eigen::Vector4d d = Eigen::Vector4d::Zero();
                d(channel) = std::sin(omega * t);
                return d;
            });
        }
        signals.push_back([omega](double t) {
            Eigen::Vector4d d;
            d << std::sin(omega * t), std::cos(omega * t), 0.5 * std::sin(omega * t + 0.3),
                0.5 * std::cos(omega * t + 0.7);
            return d;
        });
    }
    return signals;
}

}  // namespace fovctl
