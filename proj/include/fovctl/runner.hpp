#pragma once

#include "fovctl/runlog.hpp"
#include "fovctl/scenario.hpp"

namespace fovctl {

/// Execute a scenario in its configured mode and return the deterministic
/// run record. A mid-run topology violation or solver failure flushes a
/// partial log: summary.completed is false and abort_reason is set.
RunLog run(const Scenario& scenario);

/// Certificate report for a scenario's topology.
struct CertifyReport {
    Eigen::VectorXd eigenvalues;  // of the symmetric part, ascending
    bool certified = false;
    bool spanning_tree = false;
};

CertifyReport certify(const Scenario& scenario, double tol = 1e-9);

}  // namespace fovctl
