#pragma once

#include <stdexcept>
#include <string>

namespace fovctl {

/// A robot left the sensing triangle of one of its observers (or sits on
/// its boundary, where the barrier potential is undefined).
class topology_violation : public std::domain_error {
public:
    explicit topology_violation(const std::string& what, int from = -1, int to = -1)
        : std::domain_error(what), from_robot(from), to_robot(to) {}

    int from_robot;  // observer (1-based in messages, -1 if unknown)
    int to_robot;    // observed
};

/// Two robots are (numerically) coincident: the line-of-sight projection
/// is undefined.
class singularity_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An eigen/linear solver failed to converge; distinct from a negative
/// verdict so callers can tell "not certified" from "could not decide".
class solver_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class validation_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace fovctl
