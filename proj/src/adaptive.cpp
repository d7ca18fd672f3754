#include "fovctl/adaptive.hpp"

#include <cmath>
#include <string>

#include "fovctl/errors.hpp"

namespace fovctl {

namespace {

std::string edge_label(int i, int j) {
    return "(" + std::to_string(i + 1) + "->" + std::to_string(j + 1) + ")";
}

}  // namespace

VecX StackedGradient::full() const {
    VecX out(xi_xy.size() + xi_theta.size());
    out << xi_xy, xi_theta;
    return out;
}

double DeviationTerms::cost(const VecX& k) const {
    return 0.5 * (A_ij * (B_i * k) - m_ij).squaredNorm();
}

SystemEval evaluate_system(std::span<const RobotState> states, const GainState& gains,
                           const Topology& topology, std::span<const FovTriangle> fovs,
                           Diagnostics* diag) {
    const int n = topology.node_count();
    const int m = topology.edge_count();
    SystemEval eval;
    eval.edge.resize(m);
    eval.u_bar.assign(n, Vec2::Zero());
    eval.theta_dot.assign(n, 0.0);
    eval.F_edge = VecX::Zero(m);
    eval.Vbar = VecX::Zero(m);
    eval.grad_k_F = VecX::Zero(m);
    eval.grad_p_F.assign(n, Vec2::Zero());
    eval.grad_th_F = VecX::Zero(n);
    eval.w = VecX::Zero(m);

    // Pairwise potentials, first pass: values, gradients, Jacobians, lines
    // of sight, gain-weighted pulls.
    for (int e = 0; e < m; ++e) {
        const auto [i, j] = topology.edge(e);
        auto& ed = eval.edge[e];
        ed.i = i;
        ed.j = j;
        if (!contains(states[i], fovs[i], states[j].position()))
            throw topology_violation("robot " + std::to_string(j + 1) +
                                         " left the sensing triangle of robot " +
                                         std::to_string(i + 1) + " on edge " + edge_label(i, j),
                                     i, j);
        const EdgeSecondOrder so = edge_second_order(states[i], states[j].position(), fovs[i]);
        ed.value = so.value;
        ed.b = so.b;
        ed.eta = so.eta;
        ed.db_dpj = so.db_dpj;
        ed.db_dth = so.db_dtheta;
        ed.r = states[j].position() - states[i].position();
        ed.rlen = ed.r.norm();
        if (ed.rlen <= kEpsLineOfSight)
            throw singularity_error("robots " + std::to_string(i + 1) + " and " +
                                    std::to_string(j + 1) + " are coincident");
        const Vec2 u = ed.r / ed.rlen;
        ed.A = u * u.transpose();
        eval.Vbar(e) = so.value;
        eval.u_bar[i] += gains.k(e) * so.b;
        eval.theta_dot[i] -= gains.k(e) * so.eta;
    }

    // Deviation costs, gain gradient, residual bookkeeping.
    for (int e = 0; e < m; ++e) {
        auto& ed = eval.edge[e];
        ed.residual = ed.A * eval.u_bar[ed.i] - ed.b;  // m_ij = b_ij
        eval.F_edge(e) = 0.5 * ed.residual.squaredNorm();
    }
    eval.F_total = eval.F_edge.sum();

    // grad_k F: edges couple only through a shared starting vertex. With
    // S_i = sum over i's edges of A^T residual, the entry for edge (i,h) is
    // S_i . b_ih.
    std::vector<Vec2> S(n, Vec2::Zero());
    for (const auto& ed : eval.edge) S[ed.i] += ed.A * ed.residual;
    for (int e = 0; e < m; ++e) {
        const auto& ed = eval.edge[e];
        eval.grad_k_F(e) = S[ed.i].dot(ed.b);
    }

    // Position and heading gradients of F. Three contributions per edge
    // (i,j): the projection matrix moves with both endpoints, the assembled
    // control moves with robot i's pose and with each observed robot, and
    // the single-edge model moves with the pair.
    for (int e = 0; e < m; ++e) {
        const auto& ed = eval.edge[e];
        const int i = ed.i, j = ed.j;
        const Vec2 Ar = ed.A * ed.residual;  // A^T residual

        // Projection variation: dA in direction v has action
        // ((P v) u^T + u v^T P)/|r| with P = I - u u^T.
        const Vec2 u = ed.r / ed.rlen;
        const Mat2 P = Mat2::Identity() - ed.A;
        const Vec2 gA =
            ((u.dot(eval.u_bar[i])) * (P * ed.residual) + (ed.residual.dot(u)) * (P * eval.u_bar[i])) /
            ed.rlen;
        eval.grad_p_F[j] += gA;
        eval.grad_p_F[i] -= gA;

        // Model variation: -residual^T db_ij/dp.
        eval.grad_p_F[j] -= ed.db_dpj * ed.residual;  // Jacobian symmetric
        eval.grad_p_F[i] += ed.db_dpj * ed.residual;
        eval.grad_th_F(i) -= ed.residual.dot(ed.db_dth);
    }
    // Control variation: every edge h out of robot i moves u_bar_i, which
    // enters every residual of robot i through the projection.
    for (int i = 0; i < n; ++i) {
        if (topology.out_degree(i) == 0) continue;
        Vec2 t_theta = Vec2::Zero();
        for (int h : topology.out_edges(i)) {
            const auto& eh = eval.edge[h];
            const Vec2 contrib = gains.k(h) * (eh.db_dpj * S[i]);  // Jacobian symmetric
            eval.grad_p_F[eh.j] += contrib;
            eval.grad_p_F[i] -= contrib;
            t_theta += gains.k(h) * eh.db_dth;
        }
        eval.grad_th_F(i) += S[i].dot(t_theta);
    }

    // Lyapunov-enforcing terms, one per edge.
    for (int e = 0; e < m; ++e) {
        const auto& ed = eval.edge[e];
        const double alpha = eval.Vbar(e) + eval.grad_k_F(e);
        if (std::abs(alpha) < kEpsAlpha) {
            if (diag) ++diag->alpha_degeneracies;
            eval.w(e) = 0.0;
            continue;
        }
        const double gamma = eval.Vbar(e) * eval.grad_k_F(e);
        const double beta_i = eval.grad_p_F[ed.i].dot(-eval.u_bar[ed.i]);
        const double beta_j = eval.grad_p_F[ed.j].dot(-eval.u_bar[ed.j]);
        eval.w(e) = (gamma + beta_i / topology.degree(ed.i) + beta_j / topology.degree(ed.j)) / alpha;
    }
    return eval;
}

Eigen::Vector3d nominal_control(int robot, std::span<const RobotState> states,
                                const Topology& topology, std::span<const FovTriangle> fovs) {
    GainState unit = GainState::unit(topology.edge_count());
    return weighted_control(robot, states, unit, topology, fovs);
}

Eigen::Vector3d weighted_control(int robot, std::span<const RobotState> states,
                                 const GainState& gains, const Topology& topology,
                                 std::span<const FovTriangle> fovs) {
    Eigen::Vector3d u = Eigen::Vector3d::Zero();
    for (int e : topology.out_edges(robot)) {
        const auto [i, j] = topology.edge(e);
        if (!contains(states[i], fovs[i], states[j].position()))
            throw topology_violation("robot " + std::to_string(j + 1) +
                                         " is outside the sensing triangle of robot " +
                                         std::to_string(i + 1),
                                     i, j);
        const PairGradient g = pair_gradient(states[i], states[j], fovs[i]);
        u.head<2>() -= gains.k(e) * g.d_pi;
        u.z() -= gains.k(e) * g.d_thetai;
    }
    return u;
}

Vec2 desired_model(int edge, std::span<const RobotState> states, const Topology& topology,
                   std::span<const FovTriangle> fovs) {
    const auto [i, j] = topology.edge(edge);
    const PairGradient g = pair_gradient(states[i], states[j], fovs[i]);
    return -g.d_pi;
}

Vec2 project_onto_los(int edge, const Vec2& u_p, std::span<const RobotState> states,
                      const Topology& topology) {
    const auto [i, j] = topology.edge(edge);
    const Vec2 r = states[j].position() - states[i].position();
    const double len2 = r.squaredNorm();
    if (len2 <= kEpsLineOfSight * kEpsLineOfSight)
        throw singularity_error("line of sight " + edge_label(i, j) + " collapsed");
    return (r.dot(u_p) / len2) * r;
}

double deviation_cost(int edge, std::span<const RobotState> states, const GainState& gains,
                      const Topology& topology, std::span<const FovTriangle> fovs) {
    const auto [i, j] = topology.edge(edge);
    Vec2 u_bar = Vec2::Zero();
    for (int e : topology.out_edges(i)) {
        const auto [a, b] = topology.edge(e);
        const PairGradient g = pair_gradient(states[a], states[b], fovs[a]);
        u_bar -= gains.k(e) * g.d_pi;
    }
    const Vec2 m = desired_model(edge, states, topology, fovs);
    return 0.5 * (project_onto_los(edge, u_bar, states, topology) - m).squaredNorm();
}

DeviationTerms deviation_terms(int edge, std::span<const RobotState> states,
                               const Topology& topology, std::span<const FovTriangle> fovs) {
    const auto [i, j] = topology.edge(edge);
    DeviationTerms out;
    const Vec2 r = states[j].position() - states[i].position();
    const double len2 = r.squaredNorm();
    if (len2 <= kEpsLineOfSight * kEpsLineOfSight)
        throw singularity_error("line of sight " + edge_label(i, j) + " collapsed");
    out.A_ij = (r * r.transpose()) / len2;
    out.B_i = MatX::Zero(2, topology.edge_count());
    for (int e : topology.out_edges(i)) {
        const auto [a, b] = topology.edge(e);
        const PairGradient g = pair_gradient(states[a], states[b], fovs[a]);
        out.B_i.col(e) = -g.d_pi;
    }
    out.m_ij = out.B_i.col(edge);
    return out;
}

VecX grad_k_f(const Topology& topology, std::span<const RobotState> states,
              const GainState& gains, std::span<const FovTriangle> fovs) {
    return evaluate_system(states, gains, topology, fovs).grad_k_F;
}

MatX hessian_k_f(int edge, std::span<const RobotState> states, const Topology& topology,
                 std::span<const FovTriangle> fovs) {
    const DeviationTerms terms = deviation_terms(edge, states, topology, fovs);
    const MatX ab = terms.A_ij * terms.B_i;
    return ab.transpose() * ab;
}

double lyapunov_term_w(int edge, std::span<const RobotState> states, const GainState& gains,
                       const Topology& topology, std::span<const FovTriangle> fovs,
                       Diagnostics* diag) {
    return evaluate_system(states, gains, topology, fovs, diag).w(edge);
}

StackedGradient build_stacked_gradient(const SystemEval& eval, const GainState& gains) {
    const int m = static_cast<int>(eval.edge.size());
    StackedGradient out;
    out.xi_xy = VecX::Zero(2 * m);
    out.xi_theta = VecX::Zero(m);
    out.xi_k = VecX::Zero(3 * m);
    for (int e = 0; e < m; ++e) {
        const Vec2 zeta = -eval.edge[e].b;  // gradient wrt the starting vertex
        out.xi_xy.segment<2>(2 * e) = zeta;
        out.xi_theta(e) = eval.edge[e].eta;
        out.xi_k.segment<2>(2 * e) = gains.k(e) * zeta;
        out.xi_k(2 * m + e) = gains.k(e) * eval.edge[e].eta;
    }
    return out;
}

double lyapunov_value(std::span<const RobotState> states, const GainState& gains,
                      const Topology& topology, std::span<const FovTriangle> fovs) {
    const SystemEval eval = evaluate_system(states, gains, topology, fovs);
    return gains.k.dot(eval.Vbar) + eval.F_total;
}

Flow compute_flow(const SystemEval& eval, int robot_count, std::span<const Vec2> extra_vel) {
    Flow flow;
    flow.s_dot.assign(robot_count, Eigen::Vector3d::Zero());
    for (int i = 0; i < robot_count; ++i) {
        flow.s_dot[i].head<2>() = eval.u_bar[i];
        flow.s_dot[i].z() = eval.theta_dot[i];
        if (!extra_vel.empty()) flow.s_dot[i].head<2>() += extra_vel[i];
    }
    flow.k_dot = -eval.grad_k_F + eval.w;
    return flow;
}

namespace {

// Flattened coupled state for the integrators: (x, y, theta) per robot,
// then the gains.
VecX pack(std::span<const RobotState> states, const GainState& gains) {
    VecX z(3 * states.size() + gains.k.size());
    for (size_t i = 0; i < states.size(); ++i)
        z.segment<3>(3 * i) << states[i].x, states[i].y, states[i].theta;
    z.tail(gains.k.size()) = gains.k;
    return z;
}

void unpack(const VecX& z, std::vector<RobotState>& states, GainState& gains) {
    for (size_t i = 0; i < states.size(); ++i) {
        states[i].x = z(3 * i);
        states[i].y = z(3 * i + 1);
        states[i].theta = z(3 * i + 2);
    }
    gains.k = z.tail(gains.k.size());
}

}  // namespace

void step(std::vector<RobotState>& states, GainState& gains, double dt, Integrator integrator,
          const Topology& topology, std::span<const FovTriangle> fovs,
          std::span<const Vec2> extra_vel, Diagnostics* diag) {
    if (!(dt > 0.0)) throw validation_error("step: dt must be positive");
    const int n = topology.node_count();
    std::vector<RobotState> scratch = states;
    GainState kscratch = gains;

    auto field = [&](const VecX& z) {
        unpack(z, scratch, kscratch);
        const SystemEval eval = evaluate_system(scratch, kscratch, topology, fovs, diag);
        const Flow flow = compute_flow(eval, n, extra_vel);
        VecX dz(z.size());
        for (int i = 0; i < n; ++i) dz.segment<3>(3 * i) = flow.s_dot[i];
        dz.tail(flow.k_dot.size()) = flow.k_dot;
        return dz;
    };

    const VecX z0 = pack(states, gains);
    VecX z1;
    if (integrator == Integrator::Euler) {
        z1 = z0 + dt * field(z0);
    } else {
        const VecX k1 = field(z0);
        const VecX k2 = field(z0 + 0.5 * dt * k1);
        const VecX k3 = field(z0 + 0.5 * dt * k2);
        const VecX k4 = field(z0 + dt * k3);
        z1 = z0 + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    if (diag) {
        const int m = topology.edge_count();
        for (int e = 0; e < m; ++e) {
            const double before = z0(3 * n + e), after = z1(3 * n + e);
            if ((before > 0.0 && after <= 0.0) || (before < 0.0 && after >= 0.0))
                ++diag->gain_sign_flips;
        }
    }
    unpack(z1, states, gains);
    for (auto& s : states) s.theta = wrap_angle(s.theta);
}

}  // namespace fovctl
