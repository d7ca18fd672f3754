#include "fovctl/fov.hpp"

#include <cmath>
#include <string>

#include "fovctl/errors.hpp"

namespace fovctl {

double wrap_angle(double theta) {
    theta = std::fmod(theta + kPi, 2.0 * kPi);
    if (theta <= 0.0) theta += 2.0 * kPi;
    return theta - kPi;
}

Mat2 RobotState::rotation() const {
    const double c = std::cos(theta), s = std::sin(theta);
    Mat2 r;
    r << c, -s, s, c;
    return r;
}

FovTriangle FovTriangle::standard(double half_angle, double depth, double apex_offset) {
    FovTriangle fov;
    fov.half_angle = half_angle;
    fov.depth = depth;
    fov.apex_offset = apex_offset;
    fov.quality_mean = fov.body_centroid();
    fov.quality_sigma = Vec2::Constant(depth / 4.0);
    return fov;
}

std::array<Vec2, 3> FovTriangle::body_vertices() const {
    const Vec2 apex(apex_offset, 0.0);
    const double c = std::cos(half_angle), s = std::sin(half_angle);
    return {apex, apex + depth * Vec2(c, s), apex + depth * Vec2(c, -s)};
}

Vec2 FovTriangle::body_centroid() const {
    const auto v = body_vertices();
    return (v[0] + v[1] + v[2]) / 3.0;
}

namespace {

struct Side {
    Vec2 normal;    // unit, pointing inward
    double offset;  // signed distance = normal . q - offset
};

std::array<Side, 3> body_sides(const FovTriangle& fov) {
    const auto v = fov.body_vertices();
    const Vec2 centroid = (v[0] + v[1] + v[2]) / 3.0;
    std::array<Side, 3> sides;
    for (int l = 0; l < 3; ++l) {
        const Vec2 a = v[l];
        const Vec2 b = v[(l + 1) % 3];
        const Vec2 edge = b - a;
        Vec2 n(-edge.y(), edge.x());
        n.normalize();
        if (n.dot(centroid - a) < 0.0) n = -n;
        sides[l] = {n, n.dot(a)};
    }
    return sides;
}

}  // namespace

std::array<double, 3> side_distances(const FovTriangle& fov, const Vec2& body_point) {
    const auto sides = body_sides(fov);
    return {sides[0].normal.dot(body_point) - sides[0].offset,
            sides[1].normal.dot(body_point) - sides[1].offset,
            sides[2].normal.dot(body_point) - sides[2].offset};
}

void FovTriangle::validate() const {
    if (!(half_angle > 0.0 && half_angle < kPi / 2.0))
        throw validation_error("fov: half_angle must lie in (0, pi/2)");
    if (!(depth > 0.0)) throw validation_error("fov: depth must be positive");
    if (!(apex_offset >= 0.0)) throw validation_error("fov: apex_offset must be nonnegative");
    if (!(quality_sigma.x() > 0.0 && quality_sigma.y() > 0.0))
        throw validation_error("fov: quality_sigma must be positive");
    if (!(amplitude > 0.0)) throw validation_error("fov: amplitude must be positive");
    const auto d = side_distances(*this, quality_mean);
    if (!(d[0] > 0.0 && d[1] > 0.0 && d[2] > 0.0))
        throw validation_error("fov: quality_mean must lie strictly inside the triangle");
}

std::array<Vec2, 3> triangle_vertices(const RobotState& state, const FovTriangle& fov) {
    const Mat2 rot = state.rotation();
    const Vec2 p = state.position();
    const auto body = fov.body_vertices();
    return {p + rot * body[0], p + rot * body[1], p + rot * body[2]};
}

bool contains(const RobotState& state, const FovTriangle& fov, const Vec2& point) {
    const Vec2 q = state.rotation().transpose() * (point - state.position());
    const auto d = side_distances(fov, q);
    return d[0] > 0.0 && d[1] > 0.0 && d[2] > 0.0;
}

namespace {

// Body-frame value/gradient/Hessian of the barrier term.
struct BarrierEval {
    double value;
    Vec2 grad;
    Mat2 hess;
};

BarrierEval barrier_eval(const FovTriangle& fov, const Vec2& q) {
    const auto sides = body_sides(fov);
    BarrierEval out{0.0, Vec2::Zero(), Mat2::Zero()};
    for (const Side& s : sides) {
        const double d = s.normal.dot(q) - s.offset;
        if (d <= 0.0)
            throw topology_violation("barrier potential evaluated outside the sensing triangle");
        const double inv2 = 1.0 / (d * d);
        out.value += 0.5 * inv2;
        out.grad -= (inv2 / d) * s.normal;
        out.hess += (3.0 * inv2 * inv2) * (s.normal * s.normal.transpose());
    }
    return out;
}

// Body-frame value/gradient/Hessian of the quality term.
struct QualityEval {
    double value;
    Vec2 grad;
    Mat2 hess;
};

QualityEval quality_eval(const FovTriangle& fov, const Vec2& q) {
    const Vec2 d = q - fov.quality_mean;
    const Vec2 inv_var(1.0 / (fov.quality_sigma.x() * fov.quality_sigma.x()),
                       1.0 / (fov.quality_sigma.y() * fov.quality_sigma.y()));
    const double e = std::exp(-0.5 * (d.x() * d.x() * inv_var.x() + d.y() * d.y() * inv_var.y()));
    const Vec2 u(d.x() * inv_var.x(), d.y() * inv_var.y());
    QualityEval out;
    out.value = fov.amplitude * (1.0 - e);
    out.grad = fov.amplitude * e * u;
    out.hess = fov.amplitude * e * (Mat2(inv_var.asDiagonal()) - u * u.transpose());
    return out;
}

Vec2 to_body(const RobotState& state_i, const Vec2& p_j) {
    return state_i.rotation().transpose() * (p_j - state_i.position());
}

}  // namespace

double phi(const RobotState& state_i, const FovTriangle& fov, const Vec2& p_j) {
    return barrier_eval(fov, to_body(state_i, p_j)).value;
}

double psi(const RobotState& state_i, const FovTriangle& fov, const Vec2& p_j) {
    return quality_eval(fov, to_body(state_i, p_j)).value;
}

PairGradient pair_gradient(const RobotState& state_i, const RobotState& state_j,
                           const FovTriangle& fov) {
    const Vec2 q = to_body(state_i, state_j.position());
    const auto barrier = barrier_eval(fov, q);
    const auto quality = quality_eval(fov, q);
    const Vec2 g = barrier.grad + quality.grad;
    const Mat2 rot = state_i.rotation();
    PairGradient out;
    out.d_pj = rot * g;
    out.d_pi = -out.d_pj;
    // dq/dtheta = (q_y, -q_x): the body point slews opposite the heading.
    out.d_thetai = g.x() * q.y() - g.y() * q.x();
    return out;
}

double pair_potential(const RobotState& state_i, const RobotState& state_j,
                      const FovTriangle& fov) {
    const Vec2 q = to_body(state_i, state_j.position());
    return barrier_eval(fov, q).value + quality_eval(fov, q).value;
}

EdgeSecondOrder edge_second_order(const RobotState& state_i, const Vec2& p_j,
                                  const FovTriangle& fov) {
    const Vec2 q = to_body(state_i, p_j);
    const auto barrier = barrier_eval(fov, q);
    const auto quality = quality_eval(fov, q);
    const Vec2 g = barrier.grad + quality.grad;
    const Mat2 h = barrier.hess + quality.hess;
    const Mat2 rot = state_i.rotation();

    EdgeSecondOrder out;
    out.value = barrier.value + quality.value;
    out.b = rot * g;  // anti-gradient wrt p_i equals +gradient wrt p_j
    out.eta = g.x() * q.y() - g.y() * q.x();
    out.db_dpj = rot * h * rot.transpose();
    const Vec2 dq_dtheta(q.y(), -q.x());
    Mat2 jrot;  // d/dtheta of the rotation = J * R
    jrot << -rot(1, 0), -rot(1, 1), rot(0, 0), rot(0, 1);
    out.db_dtheta = jrot * g + rot * (h * dq_dtheta);
    return out;
}

}  // namespace fovctl
