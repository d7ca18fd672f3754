#pragma once

#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fovctl/adaptive.hpp"
#include "fovctl/scenario.hpp"

namespace fovctl {

/// Column-named time series; first column is always "t".
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    int column_index(const std::string& name) const;
    std::vector<double> column(const std::string& name) const;
};

/// Per policy-window learning statistics.
struct LearningWindowStat {
    double t_end = 0.0;
    int robot = 0;  // 0-based
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    bool pe_ok = false;
    bool applied = false;
    double residual_first_median = 0.0;
    double residual_last_median = 0.0;
};

struct RunSummary {
    bool completed = false;
    std::string abort_reason;
    long steps = 0;

    // potential / cost monitoring
    std::vector<std::pair<double, double>> segment_end_F;  // (t, total F) just before each change
    double max_step_dV_final_segment = -std::numeric_limits<double>::infinity();
    double final_V = 0.0;
    VecX final_gains;

    // topology maintenance
    bool containment_ok = true;
    double min_side_margin = std::numeric_limits<double>::infinity();

    // resilient mode
    std::vector<double> sup_e;  // per robot, sup_t |e_i(t)|
    double error_bound = 0.0;   // |e(0)| + actuator bound / lambda_min(F2)
    double lambda_min_F2 = 0.0;

    // learning mode
    std::vector<LearningWindowStat> windows;

    Diagnostics diag;
};

/// Deterministic record of one run: sampled time-series tables plus
/// full-rate summary statistics.
struct RunLog {
    std::string scenario_name;
    std::string scenario_hash;
    RunMode mode = RunMode::Adaptive;
    unsigned long long seed = 0;
    double dt = 0.0;
    std::map<std::string, Table> groups;
    RunSummary summary;
};

/// Write one CSV per signal group (plus meta.json) into out_dir; with
/// plots, also an SVG per group. Returns the list of written files.
std::vector<std::string> emit_outputs(const RunLog& log, const std::string& out_dir,
                                      bool plots = false);

/// Parse a CSV written by emit_outputs (used by round-trip checks).
Table read_csv(const std::string& path);

}  // namespace fovctl
