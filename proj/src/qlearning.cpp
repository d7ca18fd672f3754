#include "fovctl/qlearning.hpp"

#include <Eigen/Eigenvalues>

#include "fovctl/errors.hpp"

namespace fovctl {

RlsEstimator RlsEstimator::start(const VecX& theta0, double p0, double forgetting) {
    RlsEstimator est;
    est.theta_hat = theta0;
    est.P_cov = p0 * MatX::Identity(theta0.size(), theta0.size());
    est.forgetting = forgetting;
    return est;
}

double RlsEstimator::update(const VecX& phi, double c) {
    const double residual = c - phi.dot(theta_hat);
    ++residual_count;
    const double denom = forgetting + phi.dot(P_cov * phi);
    const VecX gain = (P_cov * phi) / denom;
    theta_hat += gain * residual;
    P_cov = (P_cov - gain * (phi.transpose() * P_cov)) / forgetting;
    P_cov = 0.5 * (P_cov + P_cov.transpose());
    // Positive definiteness can erode under forgetting; reset rather than
    // propagate a broken covariance.
    Eigen::SelfAdjointEigenSolver<MatX> es(P_cov, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success || es.eigenvalues().minCoeff() <= 0.0) {
        P_cov = MatX::Identity(theta_hat.size(), theta_hat.size());
        ++covariance_resets;
    }
    return residual;
}

void PeWindow::push(MatX phi) {
    window.push_back(std::move(phi));
    while (window.size() > capacity) window.pop_front();
}

PeResult pe_check(const PeWindow& window) {
    PeResult out;
    if (window.window.empty()) return out;
    const auto dim = window.window.front().rows();
    MatX sum = MatX::Zero(dim, dim);
    for (const auto& phi : window.window) sum += phi * phi.transpose();
    sum /= static_cast<double>(window.window.size());
    Eigen::SelfAdjointEigenSolver<MatX> es(sum, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw solver_error("pe_check: eigen decomposition failed");
    out.lambda_min = es.eigenvalues().minCoeff();
    out.lambda_max = es.eigenvalues().maxCoeff();
    out.satisfied = window.full() && out.lambda_min >= window.eps0 && out.lambda_max <= window.eps1;
    return out;
}

void discretize_step(std::vector<RobotState>& states, const GainState& gains,
                     const Topology& topology, std::span<const FovTriangle> fovs, double dt,
                     std::span<const Vec2> extra_vel, Diagnostics* diag) {
    if (!(dt > 0.0)) throw validation_error("discretize_step: dt must be positive");
    const SystemEval eval = evaluate_system(states, gains, topology, fovs, diag);
    const Flow flow = compute_flow(eval, topology.node_count(), extra_vel);
    for (int i = 0; i < topology.node_count(); ++i) {
        states[i].x += dt * flow.s_dot[i].x();
        states[i].y += dt * flow.s_dot[i].y();
        states[i].theta = wrap_angle(states[i].theta + dt * flow.s_dot[i].z());
    }
}

Regressor build_regressor(int edge, const SystemEval& eval_t, const SystemEval& eval_t1,
                          const Topology& topology, double discount_pow) {
    const auto [i, j] = topology.edge(edge);
    const auto& out = topology.out_edges(i);
    Regressor reg;
    reg.phi = MatX::Zero(static_cast<long>(out.size()), 2);
    for (size_t slot = 0; slot < out.size(); ++slot) {
        const int h = out[slot];
        const Vec2 col_t = eval_t.edge[edge].A * eval_t.edge[h].b;
        const Vec2 col_t1 = eval_t1.edge[edge].A * eval_t1.edge[h].b;
        reg.phi.row(static_cast<long>(slot)) = (col_t - discount_pow * col_t1).transpose();
    }
    reg.c = eval_t.edge[edge].b;  // single-edge model at the earlier slice
    return reg;
}

EstimatorBank EstimatorBank::start(const Topology& topology, const GainState& gains, double p0,
                                   double forgetting, int t_in, double eps0, double eps1) {
    EstimatorBank bank;
    bank.p0 = p0;
    bank.estimator.resize(topology.node_count());
    bank.pe.resize(topology.node_count());
    for (int i = 0; i < topology.node_count(); ++i) {
        const auto& out = topology.out_edges(i);
        if (out.empty()) continue;
        VecX theta0(out.size());
        for (size_t s = 0; s < out.size(); ++s) theta0(s) = gains.k(out[s]);
        bank.estimator[i] = RlsEstimator::start(theta0, p0, forgetting);
        bank.pe[i].capacity = static_cast<size_t>(t_in);
        bank.pe[i].eps0 = eps0;
        bank.pe[i].eps1 = eps1;
    }
    return bank;
}

std::vector<bool> policy_iterate(PolicySchedule& schedule, EstimatorBank& bank,
                                 const Topology& topology, GainState& gains) {
    std::vector<bool> applied(topology.node_count(), false);
    for (int i = 0; i < topology.node_count(); ++i) {
        const auto& out = topology.out_edges(i);
        if (out.empty()) continue;
        auto& est = bank.estimator[i];
        const PeResult pe = pe_check(bank.pe[i]);
        if (pe.satisfied) {
            for (size_t s = 0; s < out.size(); ++s) gains.k(out[s]) = est.theta_hat(s);
            applied[i] = true;
        } else {
            // Policy frozen: re-anchor the estimate on the active gains.
            for (size_t s = 0; s < out.size(); ++s) est.theta_hat(s) = gains.k(out[s]);
        }
        // Fresh covariance for the next evaluation window.
        est.P_cov = bank.p0 * MatX::Identity(est.theta_hat.size(), est.theta_hat.size());
        bank.pe[i].clear();
    }
    ++schedule.q;
    schedule.l = 0;
    return applied;
}

}  // namespace fovctl
