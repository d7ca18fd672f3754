#pragma once

#include <string>
#include <vector>

#include "fovctl/adaptive.hpp"
#include "fovctl/digraph.hpp"
#include "fovctl/fov.hpp"
#include "fovctl/resilience.hpp"

namespace fovctl {

enum class RunMode { Nominal, Adaptive, Resilient, QLearning };

std::string to_string(RunMode mode);
RunMode parse_mode(const std::string& name);

/// Piecewise-constant exogenous velocity segment for the leader.
struct LeaderSegment {
    double t_start = 0.0;
    Vec2 velocity = Vec2::Zero();
};

struct LearningParams {
    double dt = 0.01;
    double discount = 0.9;
    int t_in = 50;
    double forgetting = 0.99;
    double eps0 = 0.7;
    double eps1 = 11.0;
    double p0 = 100.0;
};

struct ObserverParams {
    double q = 1.0;
    double r = 1.0;
    double gamma = 10.0;
};

/// Fully validated experiment description.
struct Scenario {
    int version = 1;
    std::string name;
    Topology topology{0, {}};
    std::vector<RobotState> initial_states;
    std::vector<FovTriangle> fovs;
    int leader = 0;  // 0-based
    std::vector<LeaderSegment> schedule;
    RunMode mode = RunMode::Adaptive;
    FaultProfile faults{};
    LearningParams learning;
    ObserverParams observer;
    double horizon = 350.0;
    double dt = 1e-3;
    int log_stride = 100;  // integrator steps per logged row
    unsigned long long seed = 0;
    std::string content_hash;  // of the scenario file bytes

    /// Leader velocity at a given time.
    Vec2 leader_velocity(double t) const;
    /// Segment boundaries inside (0, horizon): the leader actuation changes.
    std::vector<double> change_times() const;
};

/// Parse and validate a scenario file. Parse problems raise
/// validation_error with the parser's location message; invariant
/// violations name the failed invariant (and edge, where applicable).
Scenario load_scenario(const std::string& path);

/// Parse a scenario from a JSON string (used by load_scenario and tests).
Scenario parse_scenario(const std::string& text, const std::string& origin = "<memory>");

}  // namespace fovctl
