#include "fovctl/runner.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>

#include "fovctl/errors.hpp"
#include "fovctl/qlearning.hpp"

namespace fovctl {

namespace {

std::string edge_name(const Topology& topo, int e) {
    const auto [i, j] = topo.edge(e);
    return std::to_string(i + 1) + "to" + std::to_string(j + 1);
}

// Column layouts shared by all modes.
Table make_states_table(int n) {
    Table t;
    t.columns.push_back("t");
    for (int i = 0; i < n; ++i) {
        const std::string id = std::to_string(i + 1);
        t.columns.push_back("x_" + id);
        t.columns.push_back("y_" + id);
        t.columns.push_back("theta_" + id);
    }
    return t;
}

Table make_gains_table(const Topology& topo) {
    Table t;
    t.columns.push_back("t");
    for (int e = 0; e < topo.edge_count(); ++e) t.columns.push_back("k_" + edge_name(topo, e));
    return t;
}

Table make_costs_table(const Topology& topo) {
    Table t;
    t.columns.push_back("t");
    t.columns.push_back("F_total");
    for (int i = 0; i < topo.node_count(); ++i)
        t.columns.push_back("F_" + std::to_string(i + 1));
    t.columns.push_back("V");
    return t;
}

Table make_distances_table(int n) {
    Table t;
    t.columns.push_back("t");
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            t.columns.push_back("d_" + std::to_string(i + 1) + "_" + std::to_string(j + 1));
    return t;
}

Table make_observer_table(int n) {
    Table t;
    t.columns.push_back("t");
    for (int i = 0; i < n; ++i) {
        const std::string id = std::to_string(i + 1);
        t.columns.push_back("e_norm_" + id);
        t.columns.push_back("ex_" + id);
        t.columns.push_back("ey_" + id);
        t.columns.push_back("dhatx_" + id);
        t.columns.push_back("dhaty_" + id);
    }
    return t;
}

Table make_learning_table() {
    Table t;
    t.columns = {"t", "q", "robot", "pe_lambda_min", "pe_lambda_max", "pe_ok", "applied",
                 "rls_res_first10", "rls_res_last10"};
    return t;
}

Table make_pe_series_table(int n) {
    Table t;
    t.columns.push_back("t");
    for (int i = 0; i < n; ++i) {
        t.columns.push_back("pe_min_" + std::to_string(i + 1));
        t.columns.push_back("pe_max_" + std::to_string(i + 1));
    }
    return t;
}

void append_states_row(Table& t, double time, const std::vector<RobotState>& states) {
    std::vector<double> row{time};
    for (const auto& s : states) {
        row.push_back(s.x);
        row.push_back(s.y);
        row.push_back(s.theta);
    }
    t.rows.push_back(std::move(row));
}

void append_gains_row(Table& t, double time, const GainState& gains) {
    std::vector<double> row{time};
    for (int e = 0; e < gains.k.size(); ++e) row.push_back(gains.k(e));
    t.rows.push_back(std::move(row));
}

void append_costs_row(Table& t, double time, const SystemEval& eval, const Topology& topo,
                      double lyapunov) {
    std::vector<double> row{time, eval.F_total};
    for (int i = 0; i < topo.node_count(); ++i) {
        double fi = 0.0;
        for (int e : topo.out_edges(i)) fi += eval.F_edge(e);
        row.push_back(fi);
    }
    row.push_back(lyapunov);
    t.rows.push_back(std::move(row));
}

void append_distances_row(Table& t, double time, const std::vector<RobotState>& states) {
    std::vector<double> row{time};
    const int n = static_cast<int>(states.size());
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            row.push_back((states[i].position() - states[j].position()).norm());
    t.rows.push_back(std::move(row));
}

double containment_margin(const std::vector<RobotState>& states, const Topology& topo,
                          std::span<const FovTriangle> fovs) {
    double margin = std::numeric_limits<double>::infinity();
    for (int e = 0; e < topo.edge_count(); ++e) {
        const auto [i, j] = topo.edge(e);
        const Vec2 q = states[i].rotation().transpose() *
                       (states[j].position() - states[i].position());
        const auto d = side_distances(fovs[i], q);
        margin = std::min({margin, d[0], d[1], d[2]});
    }
    return margin;
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const size_t mid = v.size() / 2;
    return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

// Continuous-time modes (nominal / adaptive / resilient) share one RK4
// loop over the flattened coupled state. Layout: robot poses, gains, then
// in resilient mode the observer states (p_hat, delta_hat per robot).
struct ContinuousRun {
    const Scenario& sc;
    RunMode mode;
    bool with_observers;
    bool adapt_gains;
    Mat2 F1 = Mat2::Zero(), F2 = Mat2::Zero();

    int n, m;
    VecX z;  // flattened state

    ContinuousRun(const Scenario& scenario, RunMode run_mode, const Mat2& f1, const Mat2& f2)
        : sc(scenario), mode(run_mode), with_observers(run_mode == RunMode::Resilient),
          adapt_gains(run_mode != RunMode::Nominal), F1(f1), F2(f2),
          n(scenario.topology.node_count()), m(scenario.topology.edge_count()) {
        const int dim = 3 * n + m + (with_observers ? 4 * n : 0);
        z = VecX::Zero(dim);
        for (int i = 0; i < n; ++i)
            z.segment<3>(3 * i) << sc.initial_states[i].x, sc.initial_states[i].y,
                sc.initial_states[i].theta;
        z.segment(3 * n, m).setOnes();  // unit initial gains
        if (with_observers) {
            for (int i = 0; i < n; ++i) {
                // p_hat starts at the first measurement, fault estimate at zero
                const Vec2 pbar = sc.initial_states[i].position() + sc.faults.sensor_fault(i, 0.0);
                z.segment<2>(3 * n + m + 4 * i) = pbar;
                z.segment<2>(3 * n + m + 4 * i + 2).setZero();
            }
        }
    }

    void unpack(const VecX& state, std::vector<RobotState>& robots, GainState& gains) const {
        robots.resize(n);
        for (int i = 0; i < n; ++i)
            robots[i] = {state(3 * i), state(3 * i + 1), state(3 * i + 2)};
        gains.k = state.segment(3 * n, m);
    }

    // Controller states: estimated positions under observers, true poses
    // otherwise. Headings are never faulted.
    std::vector<RobotState> controller_states(const VecX& state) const {
        std::vector<RobotState> robots(n);
        for (int i = 0; i < n; ++i) {
            robots[i] = {state(3 * i), state(3 * i + 1), state(3 * i + 2)};
            if (with_observers) {
                robots[i].x = state(3 * n + m + 4 * i);
                robots[i].y = state(3 * n + m + 4 * i + 1);
            }
        }
        return robots;
    }

    VecX field(double t, const VecX& state, Diagnostics* diag) const {
        std::vector<RobotState> ctrl = controller_states(state);
        GainState gains{state.segment(3 * n, m)};
        const SystemEval eval = evaluate_system(ctrl, gains, sc.topology, sc.fovs, diag);

        std::vector<Vec2> extra(n, Vec2::Zero());
        extra[sc.leader] = sc.leader_velocity(t);
        const Flow flow = compute_flow(eval, n, extra);

        VecX dz = VecX::Zero(state.size());
        for (int i = 0; i < n; ++i) {
            Vec2 u_p = flow.s_dot[i].head<2>();
            Vec2 p_dot = u_p;
            if (with_observers) p_dot += sc.faults.actuator_fault(i, t);
            dz(3 * i) = p_dot.x();
            dz(3 * i + 1) = p_dot.y();
            dz(3 * i + 2) = flow.s_dot[i].z();
            if (with_observers) {
                const Vec2 p_true(state(3 * i), state(3 * i + 1));
                const Vec2 p_bar = p_true + sc.faults.sensor_fault(i, t);
                const Vec2 p_hat = state.segment<2>(3 * n + m + 4 * i);
                const Vec2 d_hat = state.segment<2>(3 * n + m + 4 * i + 2);
                const Vec2 e = p_bar - p_hat - d_hat;
                dz.segment<2>(3 * n + m + 4 * i) = u_p + (F1 + F2) * e;
                dz.segment<2>(3 * n + m + 4 * i + 2) = -F1 * e;
            }
        }
        if (adapt_gains) dz.segment(3 * n, m) = flow.k_dot;
        return dz;
    }

    void rk4_step(double t, double dt, Diagnostics* diag) {
        const VecX k1 = field(t, z, diag);
        const VecX k2 = field(t + 0.5 * dt, z + 0.5 * dt * k1, diag);
        const VecX k3 = field(t + 0.5 * dt, z + 0.5 * dt * k2, diag);
        const VecX k4 = field(t + dt, z + dt * k3, diag);
        const VecX z1 = z + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (diag) {
            for (int e = 0; e < m; ++e) {
                const double before = z(3 * n + e), after = z1(3 * n + e);
                if ((before > 0.0 && after <= 0.0) || (before < 0.0 && after >= 0.0))
                    ++diag->gain_sign_flips;
            }
        }
        z = z1;
        for (int i = 0; i < n; ++i) z(3 * i + 2) = wrap_angle(z(3 * i + 2));
    }
};

RunLog run_continuous(const Scenario& sc) {
    RunLog log;
    log.scenario_name = sc.name;
    log.scenario_hash = sc.content_hash;
    log.mode = sc.mode;
    log.seed = sc.seed;
    log.dt = sc.dt;

    Mat2 f1 = Mat2::Zero(), f2 = Mat2::Zero();
    if (sc.mode == RunMode::Resilient) {
        const SofSynthesis sof = synthesize_sof(sc.observer.q, sc.observer.r, sc.observer.gamma);
        if (!sof.certified)
            throw validation_error("observer synthesis failed: " + sof.note);
        f1 = sof.F1;
        f2 = sof.F2;
        Eigen::SelfAdjointEigenSolver<Mat2> es(0.5 * (f2 + f2.transpose()));
        log.summary.lambda_min_F2 = es.eigenvalues().minCoeff();
        log.summary.error_bound = sc.faults.actuator_bound / log.summary.lambda_min_F2;
    }

    ContinuousRun run(sc, sc.mode, f1, f2);
    const int n = run.n;

    log.groups["states"] = make_states_table(n);
    log.groups["gains"] = make_gains_table(sc.topology);
    log.groups["costs"] = make_costs_table(sc.topology);
    log.groups["distances"] = make_distances_table(n);
    if (run.with_observers) log.groups["observer"] = make_observer_table(n);

    log.summary.sup_e.assign(n, 0.0);

    const long total_steps = static_cast<long>(std::llround(sc.horizon / sc.dt));
    const auto changes = sc.change_times();
    const double last_change = changes.empty() ? 0.0 : changes.back();
    size_t next_change = 0;
    double prev_V = 0.0;
    bool have_prev_V = false;

    auto log_row = [&](double t, const VecX& state) {
        std::vector<RobotState> robots;
        GainState gains{VecX()};
        run.unpack(state, robots, gains);
        append_states_row(log.groups["states"], t, robots);
        append_gains_row(log.groups["gains"], t, gains);
        const auto ctrl = run.controller_states(state);
        const SystemEval eval = evaluate_system(ctrl, gains, sc.topology, sc.fovs);
        const double V = gains.k.dot(eval.Vbar) + eval.F_total;
        append_costs_row(log.groups["costs"], t, eval, sc.topology, V);
        append_distances_row(log.groups["distances"], t, robots);
        log.summary.min_side_margin =
            std::min(log.summary.min_side_margin, containment_margin(robots, sc.topology, sc.fovs));
        if (run.with_observers) {
            std::vector<double> row{t};
            for (int i = 0; i < n; ++i) {
                const Vec2 p_true(state(3 * i), state(3 * i + 1));
                const Vec2 p_bar = p_true + sc.faults.sensor_fault(i, t);
                const Vec2 p_hat = state.segment<2>(3 * n + run.m + 4 * i);
                const Vec2 d_hat = state.segment<2>(3 * n + run.m + 4 * i + 2);
                const Vec2 e = p_bar - p_hat - d_hat;
                row.insert(row.end(), {e.norm(), e.x(), e.y(), d_hat.x(), d_hat.y()});
            }
            log.groups["observer"].rows.push_back(std::move(row));
        }
    };

    try {
        log_row(0.0, run.z);
        for (long step = 0; step < total_steps; ++step) {
            const double t = step * sc.dt;

            // total F just before each leader actuation change
            if (next_change < changes.size() &&
                t + sc.dt >= changes[next_change] - 1e-12) {
                std::vector<RobotState> robots;
                GainState gains{VecX()};
                run.unpack(run.z, robots, gains);
                const SystemEval eval =
                    evaluate_system(run.controller_states(run.z), gains, sc.topology, sc.fovs);
                log.summary.segment_end_F.emplace_back(t, eval.F_total);
                ++next_change;
            }

            run.rk4_step(t, sc.dt, &log.summary.diag);
            ++log.summary.steps;

            // full-rate error tracking and final-segment V monotonicity
            if (run.with_observers) {
                for (int i = 0; i < n; ++i) {
                    const double tt = t + sc.dt;
                    const Vec2 p_true(run.z(3 * i), run.z(3 * i + 1));
                    const Vec2 p_bar = p_true + sc.faults.sensor_fault(i, tt);
                    const Vec2 p_hat = run.z.segment<2>(3 * n + run.m + 4 * i);
                    const Vec2 d_hat = run.z.segment<2>(3 * n + run.m + 4 * i + 2);
                    log.summary.sup_e[i] =
                        std::max(log.summary.sup_e[i], (p_bar - p_hat - d_hat).norm());
                }
            }
            if (t + sc.dt >= last_change) {
                std::vector<RobotState> robots;
                GainState gains{VecX()};
                run.unpack(run.z, robots, gains);
                const SystemEval eval =
                    evaluate_system(run.controller_states(run.z), gains, sc.topology, sc.fovs);
                const double V = gains.k.dot(eval.Vbar) + eval.F_total;
                if (have_prev_V)
                    log.summary.max_step_dV_final_segment =
                        std::max(log.summary.max_step_dV_final_segment, V - prev_V);
                prev_V = V;
                have_prev_V = true;
                log.summary.final_V = V;
            }

            if ((step + 1) % sc.log_stride == 0 || step + 1 == total_steps)
                log_row((step + 1) * sc.dt, run.z);
        }
        // F at the end of the horizon closes the last segment.
        {
            std::vector<RobotState> robots;
            GainState gains{VecX()};
            run.unpack(run.z, robots, gains);
            const SystemEval eval =
                evaluate_system(run.controller_states(run.z), gains, sc.topology, sc.fovs);
            log.summary.segment_end_F.emplace_back(sc.horizon, eval.F_total);
            log.summary.final_gains = gains.k;
        }
        log.summary.completed = true;
    } catch (const topology_violation& err) {
        log.summary.completed = false;
        log.summary.containment_ok = false;
        log.summary.abort_reason = err.what();
    } catch (const singularity_error& err) {
        log.summary.completed = false;
        log.summary.abort_reason = err.what();
    }
    return log;
}

RunLog run_qlearning(const Scenario& sc) {
    RunLog log;
    log.scenario_name = sc.name;
    log.scenario_hash = sc.content_hash;
    log.mode = RunMode::QLearning;
    log.seed = sc.seed;
    log.dt = sc.learning.dt;

    const Topology& topo = sc.topology;
    const int n = topo.node_count();
    std::vector<RobotState> states = sc.initial_states;
    GainState gains = GainState::unit(topo.edge_count());

    PolicySchedule schedule;
    schedule.gamma_discount = sc.learning.discount;
    schedule.dt = sc.learning.dt;
    schedule.t_in = sc.learning.t_in;
    EstimatorBank bank = EstimatorBank::start(topo, gains, sc.learning.p0, sc.learning.forgetting,
                                              sc.learning.t_in, sc.learning.eps0, sc.learning.eps1);

    log.groups["states"] = make_states_table(n);
    log.groups["gains"] = make_gains_table(topo);
    log.groups["costs"] = make_costs_table(topo);
    log.groups["distances"] = make_distances_table(n);
    log.groups["learning"] = make_learning_table();
    log.groups["pe"] = make_pe_series_table(n);

    const long total_steps = static_cast<long>(std::llround(sc.horizon / sc.learning.dt));
    std::vector<std::vector<double>> window_residuals(n);  // per robot, per step in window

    auto log_row = [&](double t) {
        append_states_row(log.groups["states"], t, states);
        append_gains_row(log.groups["gains"], t, gains);
        const SystemEval eval = evaluate_system(states, gains, topo, sc.fovs);
        const double V = gains.k.dot(eval.Vbar) + eval.F_total;
        append_costs_row(log.groups["costs"], t, eval, topo, V);
        append_distances_row(log.groups["distances"], t, states);
        log.summary.min_side_margin =
            std::min(log.summary.min_side_margin, containment_margin(states, topo, sc.fovs));
    };

    try {
        log_row(0.0);
        for (long step = 0; step < total_steps; ++step) {
            const double t = step * sc.learning.dt;
            std::vector<Vec2> extra(n, Vec2::Zero());
            extra[sc.leader] = sc.leader_velocity(t);

            const SystemEval eval_t = evaluate_system(states, gains, topo, sc.fovs,
                                                      &log.summary.diag);
            const Flow flow = compute_flow(eval_t, n, extra);
            for (int i = 0; i < n; ++i) {
                states[i].x += sc.learning.dt * flow.s_dot[i].x();
                states[i].y += sc.learning.dt * flow.s_dot[i].y();
                states[i].theta = wrap_angle(states[i].theta + sc.learning.dt * flow.s_dot[i].z());
            }
            ++log.summary.steps;
            const SystemEval eval_t1 = evaluate_system(states, gains, topo, sc.fovs);

            ++schedule.l;
            const double discount_pow = std::pow(schedule.gamma_discount, schedule.l);
            for (int i = 0; i < n; ++i) {
                const auto& out = topo.out_edges(i);
                if (out.empty()) continue;
                MatX phi_step(static_cast<long>(out.size()), 2L * static_cast<long>(out.size()));
                double res_sq = 0.0;
                for (size_t s = 0; s < out.size(); ++s) {
                    const Regressor reg =
                        build_regressor(out[s], eval_t, eval_t1, topo, discount_pow);
                    for (int row = 0; row < 2; ++row) {
                        const double r =
                            bank.estimator[i].update(reg.phi.col(row), reg.c(row));
                        res_sq += r * r;
                    }
                    phi_step.middleCols(2 * static_cast<long>(s), 2) = reg.phi;
                }
                bank.pe[i].push(std::move(phi_step));
                window_residuals[i].push_back(std::sqrt(res_sq));
            }

            if (schedule.l >= schedule.t_in) {
                std::vector<double> pe_row{t + sc.learning.dt};
                std::vector<PeResult> pe(n);
                for (int i = 0; i < n; ++i) {
                    if (topo.out_edges(i).empty()) {
                        pe_row.insert(pe_row.end(), {0.0, 0.0});
                        continue;
                    }
                    pe[i] = pe_check(bank.pe[i]);
                    pe_row.insert(pe_row.end(), {pe[i].lambda_min, pe[i].lambda_max});
                }
                log.groups["pe"].rows.push_back(std::move(pe_row));

                const int q_before = schedule.q;
                const auto applied = policy_iterate(schedule, bank, topo, gains);
                for (int i = 0; i < n; ++i) {
                    if (topo.out_edges(i).empty()) continue;
                    LearningWindowStat stat;
                    stat.t_end = t + sc.learning.dt;
                    stat.robot = i;
                    stat.lambda_min = pe[i].lambda_min;
                    stat.lambda_max = pe[i].lambda_max;
                    stat.pe_ok = pe[i].satisfied;
                    stat.applied = applied[i];
                    auto& res = window_residuals[i];
                    const long take = static_cast<long>(std::min<size_t>(10, res.size()));
                    stat.residual_first_median =
                        median(std::vector<double>(res.begin(), res.begin() + take));
                    stat.residual_last_median =
                        median(std::vector<double>(res.end() - take, res.end()));
                    log.summary.windows.push_back(stat);
                    log.groups["learning"].rows.push_back(
                        {stat.t_end, static_cast<double>(q_before), static_cast<double>(i + 1),
                         stat.lambda_min, stat.lambda_max, stat.pe_ok ? 1.0 : 0.0,
                         stat.applied ? 1.0 : 0.0, stat.residual_first_median,
                         stat.residual_last_median});
                    res.clear();
                }
            }

            if ((step + 1) % sc.log_stride == 0 || step + 1 == total_steps)
                log_row((step + 1) * sc.learning.dt);
        }
        log.summary.final_gains = gains.k;
        log.summary.completed = true;
    } catch (const topology_violation& err) {
        log.summary.completed = false;
        log.summary.containment_ok = false;
        log.summary.abort_reason = err.what();
    } catch (const singularity_error& err) {
        log.summary.completed = false;
        log.summary.abort_reason = err.what();
    }
    return log;
}

}  // namespace

RunLog run(const Scenario& scenario) {
    if (scenario.mode == RunMode::QLearning) return run_qlearning(scenario);
    return run_continuous(scenario);
}

CertifyReport certify(const Scenario& scenario, double tol) {
    CertifyReport report;
    const IncidencePair pair = build_incidence(scenario.topology);
    const BigLaplacian lap = build_big_laplacian(pair);
    if (lap.L_bar_sym.rows() > 0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lap.L_bar_sym, Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success) throw solver_error("certify: eigen decomposition failed");
        report.eigenvalues = es.eigenvalues();
    } else {
        report.eigenvalues = Eigen::VectorXd();
    }
    report.certified = is_stability_certified(lap, tol);
    report.spanning_tree = has_spanning_tree(scenario.topology, scenario.leader);
    return report;
}

}  // namespace fovctl
