#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "fovctl/digraph.hpp"
#include "fovctl/fov.hpp"

namespace fovctl {

using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

inline constexpr double kEpsLineOfSight = 1e-6;  // collision guard on |p_ij|
inline constexpr double kEpsAlpha = 1e-9;        // degeneracy guard on alpha_ij

/// Per-edge interaction gains, ordered by the topology edge index.
struct GainState {
    VecX k;

    static GainState unit(int edge_count) { return {VecX::Ones(edge_count)}; }
};

/// Stacked starting-vertex gradients in the edge-space layout used by the
/// stability certificate: xi_xy (2 per edge), xi_theta (1 per edge), and
/// the gain-weighted variant xi_k over both blocks.
struct StackedGradient {
    VecX xi_xy;
    VecX xi_theta;
    VecX xi_k;  // 3|E| vector, [xy block; theta block]

    VecX full() const;  // unit-gain 3|E| stack
};

/// Per-edge deviation machinery in explicit matrix form: the line-of-sight
/// projection A, the gradient-column matrix B of the starting robot
/// (|E| columns, zeros off its out-edges), the single-edge model m, and the
/// cost 0.5 |A B k - m|^2.
struct DeviationTerms {
    Mat2 A_ij;
    MatX B_i;  // 2 x |E|
    Vec2 m_ij;
    double F_ij = 0.0;

    double cost(const VecX& k) const;  // matrix-form evaluation
};

/// Run diagnostics that are logged rather than thrown.
struct Diagnostics {
    long alpha_degeneracies = 0;  // w set to zero because alpha ~ 0
    long gain_sign_flips = 0;     // a gain crossed zero during integration
};

/// One full evaluation of the coupled interaction state: every pairwise
/// potential with first and second derivatives, the gain-weighted controls,
/// the deviation costs with their gain/position gradients, and the
/// Lyapunov-enforcing terms w. All downstream operations read from this.
struct SystemEval {
    struct Edge {
        int i, j;
        double value;   // pairwise potential
        Vec2 b;         // anti-gradient of the potential wrt p_i
        double eta;     // potential gradient wrt theta_i
        Mat2 db_dpj;    // Jacobian of b wrt p_j (wrt p_i is the negative)
        Vec2 db_dth;    // derivative of b wrt theta_i
        Vec2 r;         // line of sight p_j - p_i
        double rlen;
        Mat2 A;         // projection onto the line of sight
        Vec2 residual;  // A u_bar_i - m_ij
    };

    std::vector<Edge> edge;
    std::vector<Vec2> u_bar;       // per robot: gain-weighted position pull
    std::vector<double> theta_dot; // per robot: heading flow
    VecX F_edge;
    double F_total = 0.0;
    VecX Vbar;                     // per-edge potential values (= dV/dk entries)
    VecX grad_k_F;
    std::vector<Vec2> grad_p_F;    // full position gradient of F, per robot
    VecX grad_th_F;                // heading gradient of F, per robot
    VecX w;                        // per-edge Lyapunov-enforcing terms
};

/// Evaluate the full interaction state. Throws topology_violation (with the
/// offending edge) if any observed robot left its observer's triangle, and
/// singularity_error if a line of sight collapsed.
SystemEval evaluate_system(std::span<const RobotState> states, const GainState& gains,
                           const Topology& topology, std::span<const FovTriangle> fovs,
                           Diagnostics* diag = nullptr);

/// Control of one robot under unit gains: the summed anti-gradient over its
/// out-edges, (x, y, theta).
Eigen::Vector3d nominal_control(int robot, std::span<const RobotState> states,
                                const Topology& topology, std::span<const FovTriangle> fovs);

/// Gain-weighted control of one robot.
Eigen::Vector3d weighted_control(int robot, std::span<const RobotState> states,
                                 const GainState& gains, const Topology& topology,
                                 std::span<const FovTriangle> fovs);

/// Single-edge model: the anti-gradient of the pairwise potential as if the
/// starting robot served only this edge with unit gain.
Vec2 desired_model(int edge, std::span<const RobotState> states, const Topology& topology,
                   std::span<const FovTriangle> fovs);

/// Projection of a control vector onto the line of sight of an edge.
Vec2 project_onto_los(int edge, const Vec2& u_p, std::span<const RobotState> states,
                      const Topology& topology);

/// Deviation cost of one edge, direct form: 0.5 |P(u_bar_i) - m_ij|^2 with
/// the projection applied to the assembled gain-weighted control.
double deviation_cost(int edge, std::span<const RobotState> states, const GainState& gains,
                      const Topology& topology, std::span<const FovTriangle> fovs);

/// Explicit matrix form of the same machinery (projection matrix and
/// gradient-column matrix); DeviationTerms::cost gives the second route to
/// the deviation cost.
DeviationTerms deviation_terms(int edge, std::span<const RobotState> states,
                               const Topology& topology, std::span<const FovTriangle> fovs);

/// Gradient of the total deviation cost with respect to every gain.
VecX grad_k_f(const Topology& topology, std::span<const RobotState> states,
              const GainState& gains, std::span<const FovTriangle> fovs);

/// Gain Hessian of one edge's deviation cost: (A B)^T (A B), rank <= 1.
MatX hessian_k_f(int edge, std::span<const RobotState> states, const Topology& topology,
                 std::span<const FovTriangle> fovs);

/// Lyapunov-enforcing term for one edge. Returns 0 (and counts a
/// degeneracy) when the denominator is below the guard.
double lyapunov_term_w(int edge, std::span<const RobotState> states, const GainState& gains,
                       const Topology& topology, std::span<const FovTriangle> fovs,
                       Diagnostics* diag = nullptr);

/// Stacked starting-vertex gradient vectors for a given evaluation.
StackedGradient build_stacked_gradient(const SystemEval& eval, const GainState& gains);

/// Generalized potential: gain-weighted pairwise potentials plus the total
/// deviation cost.
double lyapunov_value(std::span<const RobotState> states, const GainState& gains,
                      const Topology& topology, std::span<const FovTriangle> fovs);

/// Time derivative of the coupled (states, gains) flow.
struct Flow {
    std::vector<Eigen::Vector3d> s_dot;
    VecX k_dot;
};

/// Assemble the coupled flow from an evaluation: robots follow the
/// starting-vertex anti-gradients, gains follow -grad_k F + w. extra_vel
/// adds a per-robot exogenous velocity (leader input), empty for none.
Flow compute_flow(const SystemEval& eval, int robot_count,
                  std::span<const Vec2> extra_vel = {});

enum class Integrator { Euler, RungeKutta4 };

/// Advance the coupled (states, gains) system one step. Headings are
/// wrapped after the step. Throws on mid-step topology violation.
void step(std::vector<RobotState>& states, GainState& gains, double dt, Integrator integrator,
          const Topology& topology, std::span<const FovTriangle> fovs,
          std::span<const Vec2> extra_vel = {}, Diagnostics* diag = nullptr);

}  // namespace fovctl
