#pragma once

#include <array>

#include <Eigen/Dense>

namespace fovctl {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

inline constexpr double kPi = 3.14159265358979323846;

/// Wrap an angle into (-pi, pi].
double wrap_angle(double theta);

/// Planar pose of one robot: position in meters, heading in radians,
/// heading kept in (-pi, pi].
struct RobotState {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;

    Vec2 position() const { return {x, y}; }
    Mat2 rotation() const;
};

/// Robot-fixed sensing triangle plus the Gaussian interaction-quality map
/// defined over it. The apex sits apex_offset ahead of the robot along its
/// heading; the two far vertices sit at distance depth along the rays at
/// +-half_angle. quality_mean/quality_sigma parameterize the quality map in
/// the robot body frame.
struct FovTriangle {
    double apex_offset = 0.0;
    double half_angle = kPi / 6.0;
    double depth = 2.0;
    Vec2 quality_mean = Vec2::Zero();
    Vec2 quality_sigma = Vec2::Zero();
    double amplitude = 1.0;

    /// Default geometry: mean at the triangle centroid, sigma = depth/4.
    static FovTriangle standard(double half_angle = kPi / 6.0, double depth = 2.0,
                                double apex_offset = 0.0);

    /// Vertices in the body frame: apex, then the +angle and -angle far corners.
    std::array<Vec2, 3> body_vertices() const;

    /// Centroid of the body-frame triangle.
    Vec2 body_centroid() const;

    /// Throws validation_error if the shape or quality map is ill-formed
    /// (aperture, depth, sigma positivity, mean strictly inside).
    void validate() const;
};

/// Gradients of one pairwise potential with respect to the observer
/// position, the observed position, and the observer heading. The position
/// parts are exact negatives of each other.
struct PairGradient {
    Vec2 d_pi = Vec2::Zero();
    Vec2 d_pj = Vec2::Zero();
    double d_thetai = 0.0;
};

/// Everything the gain machinery needs about one directed pair, evaluated
/// once: potential value, anti-gradient b = -d(phi+psi)/d p_i, its heading
/// sensitivity, and the Jacobian of b with respect to p_j (the Jacobian
/// with respect to p_i is the exact negative).
struct EdgeSecondOrder {
    double value = 0.0;
    Vec2 b = Vec2::Zero();
    double eta = 0.0;  // d(phi+psi)/d theta_i
    Mat2 db_dpj = Mat2::Zero();
    Vec2 db_dtheta = Vec2::Zero();
};

/// World-frame triangle vertices for a posed robot.
std::array<Vec2, 3> triangle_vertices(const RobotState& state, const FovTriangle& fov);

/// Strict interior test; boundary points count as outside.
bool contains(const RobotState& state, const FovTriangle& fov, const Vec2& point);

/// Barrier potential: sum over the three sides of 1/(2 d^2), d the
/// perpendicular distance of p_j to the side's supporting line. Diverges on
/// the boundary; throws topology_violation if p_j is outside or on it.
double phi(const RobotState& state_i, const FovTriangle& fov, const Vec2& p_j);

/// Interaction-quality potential: inverted Gaussian in the body frame,
/// zero exactly at the quality mean, saturating at the amplitude. Defined
/// everywhere.
double psi(const RobotState& state_i, const FovTriangle& fov, const Vec2& p_j);

/// Analytic gradients of phi + psi. Requires p_j strictly inside.
PairGradient pair_gradient(const RobotState& state_i, const RobotState& state_j,
                           const FovTriangle& fov);

/// phi + psi.
double pair_potential(const RobotState& state_i, const RobotState& state_j,
                      const FovTriangle& fov);

/// Second-order pair evaluation (see EdgeSecondOrder).
EdgeSecondOrder edge_second_order(const RobotState& state_i, const Vec2& p_j,
                                  const FovTriangle& fov);

/// Signed distances of a body-frame point to the three sides (positive
/// inside). Exposed for containment-margin reporting.
std::array<double, 3> side_distances(const FovTriangle& fov, const Vec2& body_point);

}  // namespace fovctl
