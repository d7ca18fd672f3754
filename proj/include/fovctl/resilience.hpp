#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fovctl/fov.hpp"

namespace fovctl {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

/// Typed time signal used for fault channels. Ramp and sine act on both
/// axes; constant takes an explicit vector.
struct FaultSignal {
    enum class Type { Zero, Ramp, Sine, Constant };

    Type type = Type::Zero;
    double a = 0.0;  // ramp: rate, sine: amplitude, constant: x component
    double b = 0.0;  // sine: frequency in Hz, constant: y component

    static FaultSignal zero() { return {}; }
    static FaultSignal ramp(double rate) { return {Type::Ramp, rate, 0.0}; }
    static FaultSignal sine(double amp, double freq_hz) { return {Type::Sine, amp, freq_hz}; }
    static FaultSignal constant(double vx, double vy) { return {Type::Constant, vx, vy}; }

    Vec2 value(double t) const;
    Vec2 derivative(double t) const;
    /// Worst-case |value| / |derivative| over any horizon.
    double sup_norm() const;       // infinity for an unbounded ramp
    double sup_rate_norm() const;
};

/// Per-robot sensor and actuator fault assignment with declared bounds.
struct FaultProfile {
    std::vector<FaultSignal> sensor;    // additive on measured position
    std::vector<FaultSignal> actuator;  // additive on applied velocity
    double sensor_rate_bound = 0.0;     // bound on |d/dt sensor fault|
    double actuator_bound = 0.0;        // bound on |actuator fault|

    static FaultProfile none(int robot_count);

    int robot_count() const { return static_cast<int>(sensor.size()); }
    Vec2 sensor_fault(int robot, double t) const { return sensor[robot].value(t); }
    Vec2 sensor_fault_rate(int robot, double t) const { return sensor[robot].derivative(t); }
    Vec2 actuator_fault(int robot, double t) const { return actuator[robot].value(t); }

    /// Recompute the declared bounds from the signal types.
    void derive_bounds();
    /// Sample the horizon and check the declared bounds hold; throws
    /// validation_error naming the robot and channel otherwise.
    void check_bounds(double horizon, int samples = 2000) const;
};

/// Measured positions and applied controls after fault injection.
struct Injection {
    std::vector<Vec2> measured;  // p + sensor fault
    std::vector<Vec2> applied;   // u + actuator fault
};

Injection inject(std::span<const RobotState> states, const FaultProfile& profile, double t,
                 std::span<const Vec2> u_p);

/// Per-robot observer: position estimate, sensor-fault estimate, error, and
/// the two gain matrices. The error is recomputed from the measurement
/// after every update, never integrated.
struct ObserverState {
    Vec2 p_hat = Vec2::Zero();
    Vec2 delta_hat = Vec2::Zero();
    Vec2 e = Vec2::Zero();
    Mat2 F1 = Mat2::Zero();
    Mat2 F2 = Mat2::Zero();

    static ObserverState start(const Vec2& first_measurement, const Mat2& f1, const Mat2& f2);
};

/// One forward-Euler observer update against a measurement:
///   p_hat  += dt (u + (F1+F2) e),  delta_hat += dt (-F1 e),
/// then e is recomputed against the same measurement.
void observer_step(ObserverState& obs, const Vec2& p_bar, const Vec2& u_p_desired, double dt);

/// Static output feedback synthesis result for the 2-D error channel
/// (4 states: error, fault-estimation error). Gains replicate per robot.
struct SofSynthesis {
    Eigen::Matrix4d A_bar, B_bar, D_bar;
    Eigen::Matrix<double, 2, 4> C_bar;
    Eigen::Matrix4d Q_bar, R_bar;
    double gamma = 0.0;
    Eigen::Matrix<double, 4, 2> K_bar;
    Eigen::Matrix4d P_bar, M;
    Mat2 F1, F2;
    bool certified = false;
    double residual_coupling = 0.0;  // |K C - R^-1 (B^T P + M)|_F
    double residual_riccati = 0.0;
    std::string note;
};

/// Synthesize observer gains with output-feedback certificate: returns
/// (K, P, M) satisfying the coupling and Riccati-like conditions, with
/// F2 = K1 - I and F1 = -K2. q and r weight the error and control channels
/// of the performance output. Reports infeasibility (with the best residual
/// found) instead of certifying when gamma is too small.
SofSynthesis synthesize_sof(double q, double r, double gamma);

/// Residuals of the two certificate conditions for any candidate tuple.
std::pair<double, double> sof_residuals(const SofSynthesis& s);

/// Disturbance signal on the 4-dim channel (velocity fault, sensor-fault
/// rate), as a function of time.
using DisturbanceSignal = std::function<Eigen::Vector4d(double)>;

/// Empirical attenuation: max over the test signals of
/// sqrt(int |w|^2 / int |d|^2) with |w|^2 = x^T Q x + u^T R u, integrating
/// the closed-loop error system from rest. Zero-energy signals are skipped.
double l2_gain_estimate(const SofSynthesis& s, std::span<const DisturbanceSignal> disturbances,
                        double horizon, double dt = 1e-3);

/// Standard sweep: per-channel sinusoids at the given angular frequencies.
std::vector<DisturbanceSignal> disturbance_sweep(std::span<const double> omegas);

}  // namespace fovctl
