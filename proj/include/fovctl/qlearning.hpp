#pragma once

#include <deque>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fovctl/adaptive.hpp"

namespace fovctl {

/// Recursive least squares with exponential forgetting over one robot's
/// out-edge gains. Covariance is kept symmetric and reset (with an event
/// count) if it loses positive definiteness.
struct RlsEstimator {
    VecX theta_hat;
    MatX P_cov;
    double forgetting = 0.99;
    long residual_count = 0;
    long covariance_resets = 0;

    static RlsEstimator start(const VecX& theta0, double p0, double forgetting);

    /// One scalar regression row; returns the pre-update residual
    /// c - phi . theta_hat.
    double update(const VecX& phi, double c);
};

/// Sliding window of regressor matrices for the persistence-of-excitation
/// statistic.
struct PeWindow {
    std::deque<MatX> window;  // each dim x 2
    size_t capacity = 50;
    double eps0 = 0.7;
    double eps1 = 11.0;

    void push(MatX phi);
    bool full() const { return window.size() >= capacity; }
    void clear() { window.clear(); }
};

struct PeResult {
    bool satisfied = false;
    double lambda_min = 0.0;
    double lambda_max = 0.0;
};

/// Eigen-bounds of the window-averaged regressor outer product against the
/// two-sided excitation thresholds. Requires a full window.
PeResult pe_check(const PeWindow& window);

/// Policy-iteration bookkeeping: q counts policy changes, l steps since the
/// last one.
struct PolicySchedule {
    int q = 0;
    int l = 0;
    double gamma_discount = 0.9;
    double dt = 0.01;
    int t_in = 50;
};

/// Forward-Euler update of all robots under the gain-weighted law (gains
/// held fixed). extra_vel adds exogenous velocity per robot.
void discretize_step(std::vector<RobotState>& states, const GainState& gains,
                     const Topology& topology, std::span<const FovTriangle> fovs, double dt,
                     std::span<const Vec2> extra_vel = {}, Diagnostics* diag = nullptr);

/// Regression sample for one edge between two consecutive time slices:
/// phi rows span the starting robot's out-edge gains, the target is the
/// single-edge model at the earlier slice. discount_pow is the discount
/// raised to the steps since the last policy change.
struct Regressor {
    MatX phi;  // out_degree x 2
    Vec2 c;
};

Regressor build_regressor(int edge, const SystemEval& eval_t, const SystemEval& eval_t1,
                          const Topology& topology, double discount_pow);

/// Per-robot estimator bank over out-edge gains.
struct EstimatorBank {
    std::vector<RlsEstimator> estimator;  // indexed by robot; empty for leaf robots
    std::vector<PeWindow> pe;
    double p0 = 100.0;

    static EstimatorBank start(const Topology& topology, const GainState& gains, double p0,
                               double forgetting, int t_in, double eps0, double eps1);
};

/// Apply converged estimates as the new policy: every robot with a full,
/// persistently excited window writes its theta into its out-edge gains;
/// robots failing the excitation check keep their gains (frozen policy).
/// Returns per-robot application flags; advances q and resets l and the
/// covariances.
std::vector<bool> policy_iterate(PolicySchedule& schedule, EstimatorBank& bank,
                                 const Topology& topology, GainState& gains);

}  // namespace fovctl
