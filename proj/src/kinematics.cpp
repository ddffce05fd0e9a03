#include "whipple/kinematics.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Geometry>
#include <Eigen/LU>

#include "whipple/error.hpp"
#include "whipple/jet.hpp"

namespace whipple {
namespace {

using JVec = std::array<Jet, 3>;
using JMat = std::array<JVec, 3>;  // row major

JVec constant(const Eigen::Vector3d& v) { return {Jet(v.x()), Jet(v.y()), Jet(v.z())}; }

JVec operator+(const JVec& a, const JVec& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
JVec operator-(const JVec& a, const JVec& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
JVec operator*(const Jet& s, const JVec& a) { return {s * a[0], s * a[1], s * a[2]}; }

JVec operator*(const JMat& m, const JVec& v) {
  JVec r;
  for (int i = 0; i < 3; ++i) r[i] = m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2];
  return r;
}

JMat operator*(const JMat& a, const JMat& b) {
  JMat r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
  return r;
}

JMat rot_x(const Jet& a) {
  const Jet c = cos(a), s = sin(a);
  return {{{1.0, 0.0, 0.0}, {0.0, c, -s}, {0.0, s, c}}};
}
JMat rot_y(const Jet& a) {
  const Jet c = cos(a), s = sin(a);
  return {{{c, 0.0, s}, {0.0, 1.0, 0.0}, {-s, 0.0, c}}};
}
JMat rot_z(const Jet& a) {
  const Jet c = cos(a), s = sin(a);
  return {{{c, -s, 0.0}, {s, c, 0.0}, {0.0, 0.0, 1.0}}};
}

// Rodrigues rotation about a constant unit axis.
JMat rot_axis(const Eigen::Vector3d& u, const Jet& a) {
  const Jet c = cos(a), s = sin(a);
  const Jet k = 1.0 - c;
  JMat r;
  const Eigen::Matrix3d uu = u * u.transpose();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r[i][j] = c * (i == j ? 1.0 : 0.0) + k * uu(i, j);
  r[0][1] -= s * u.z();
  r[0][2] += s * u.y();
  r[1][0] += s * u.z();
  r[1][2] -= s * u.x();
  r[2][0] -= s * u.y();
  r[2][1] += s * u.x();
  return r;
}

Eigen::Vector3d order(const JVec& v, int k) {
  auto pick = [k](const Jet& j) { return k == 0 ? j.v : (k == 1 ? j.d1 : j.d2); };
  return {pick(v[0]), pick(v[1]), pick(v[2])};
}

Eigen::Matrix3d order(const JMat& m, int k) {
  Eigen::Matrix3d r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = k == 0 ? m[i][j].v : (k == 1 ? m[i][j].d1 : m[i][j].d2);
  return r;
}

Eigen::Vector3d vee(const Eigen::Matrix3d& s) {
  return {0.5 * (s(2, 1) - s(1, 2)), 0.5 * (s(0, 2) - s(2, 0)), 0.5 * (s(1, 0) - s(0, 1))};
}

struct JetPose {
  std::array<JMat, kBodyCount> rotation;
  std::array<JVec, kBodyCount> com;
  std::array<JVec, 2> wheel_center;  // rear, front
  std::array<JVec, 2> contact;
};

JetPose pose(const BicycleParams& p, const ReferenceGeometry& ref, const std::array<Jet, 9>& q) {
  JetPose out;
  const JMat rb = rot_z(q[kPsi]) * rot_x(q[kTheta]) * rot_y(q[kPitch]);
  const JMat rh = rb * rot_axis(ref.steer_axis, q[kDelta]);
  const JVec d{q[kX], q[kY], q[kZ]};

  const auto idx = [](Body b) { return static_cast<std::size_t>(b); };
  out.rotation[idx(Body::RearFrame)] = rb;
  out.rotation[idx(Body::FrontFrame)] = rh;
  out.rotation[idx(Body::RearWheel)] = rb * rot_y(q[kPhiR]);
  out.rotation[idx(Body::FrontWheel)] = rh * rot_y(q[kPhiF]);

  out.wheel_center[0] = d + rb * constant(ref.rear_center - ref.steer_point);
  out.wheel_center[1] = d + rh * constant(ref.front_center - ref.steer_point);
  out.com[idx(Body::RearWheel)] = out.wheel_center[0];
  out.com[idx(Body::FrontWheel)] = out.wheel_center[1];
  out.com[idx(Body::RearFrame)] = d + rb * constant(ref.rear_frame_com - ref.steer_point);
  out.com[idx(Body::FrontFrame)] = d + rh * constant(ref.front_frame_com - ref.steer_point);

  // Lowest point of a knife-edge wheel: center + R * unit in-plane downward.
  const std::array<double, 2> radius{p.rear_wheel.R, p.front_wheel.R};
  const std::array<const JMat*, 2> frames{&rb, &rh};
  for (std::size_t w = 0; w < 2; ++w) {
    const JMat& r = *frames[w];
    const JVec axle{r[0][1], r[1][1], r[2][1]};
    const Jet az = axle[2];
    const Jet norm = sqrt(1.0 - az * az);
    JVec down = az * axle;
    down[2] -= 1.0;
    out.contact[w] = out.wheel_center[w] + (radius[w] / norm) * down;
  }
  return out;
}

std::array<Jet, 9> lift(const Vector9d& q, const Vector9d& qd, const Vector9d& qdd) {
  std::array<Jet, 9> j;
  for (int i = 0; i < 9; ++i) j[i] = Jet(q(i), qd(i), 0.5 * qdd(i));
  return j;
}

std::array<Jet, 9> lift(const Vector9d& q) {
  std::array<Jet, 9> j;
  for (int i = 0; i < 9; ++i) j[i] = Jet(q(i));
  return j;
}

// Front-minus-rear lowest point height; independent of z.
Jet height_mismatch(const BicycleParams& p, const ReferenceGeometry& ref, ShapeCoords s,
                    const Jet& pitch) {
  std::array<Jet, 9> q{};
  q[kTheta] = s.theta;
  q[kDelta] = s.delta;
  q[kPitch] = pitch;
  const JetPose ps = pose(p, ref, q);
  return ps.contact[1][2] - ps.contact[0][2];
}

double rear_lowest_point_offset(const BicycleParams& p, const ReferenceGeometry& ref, ShapeCoords s,
                                double pitch) {
  std::array<Jet, 9> q{};
  q[kTheta] = s.theta;
  q[kDelta] = s.delta;
  q[kPitch] = pitch;
  return pose(p, ref, q).contact[0][2].v;
}

}  // namespace

Vector9d Config::vector() const {
  Vector9d q;
  q << x, y, z, psi, theta, pitch, delta, phi_r, phi_f;
  return q;
}

Config Config::from_vector(const Vector9d& q) {
  return {q(kX), q(kY), q(kZ), q(kPsi), q(kTheta), q(kPitch), q(kDelta), q(kPhiR), q(kPhiF)};
}

void check_domain(ShapeCoords shape, double margin) {
  const double limit = std::numbers::pi / 2.0 - margin;
  if (!(std::abs(shape.theta) < limit) || !(std::abs(shape.delta) < limit)) {
    std::ostringstream msg;
    msg << "shape (theta=" << shape.theta << ", delta=" << shape.delta
        << ") outside domain |.| < " << limit;
    throw Error(ErrorKind::DomainError, msg.str());
  }
}

ReferenceGeometry reference_geometry(const BicycleParams& p) {
  ReferenceGeometry g;
  const double sl = std::sin(p.lambda);
  const double cl = std::cos(p.lambda);
  g.rear_center = {0.0, 0.0, p.rear_wheel.R};
  g.front_center = {p.w, 0.0, p.front_wheel.R};
  g.rear_frame_com = {p.rear_frame.x, 0.0, p.rear_frame.z};
  g.front_frame_com = {p.front_frame.x, 0.0, p.front_frame.z};
  g.steer_axis = {-sl, 0.0, cl};
  g.steer_point = {p.w + p.c - p.front_wheel.R * sl / cl, 0.0, p.front_wheel.R};
  return g;
}

double body_mass(const BicycleParams& p, Body body) {
  switch (body) {
    case Body::RearWheel: return p.rear_wheel.m;
    case Body::RearFrame: return p.rear_frame.m;
    case Body::FrontFrame: return p.front_frame.m;
    case Body::FrontWheel: return p.front_wheel.m;
  }
  return 0.0;
}

Eigen::Matrix3d world_inertia(const BicycleParams& p, Body body, const Eigen::Matrix3d& rotation) {
  Eigen::Matrix3d local = Eigen::Matrix3d::Zero();
  auto wheel = [&](const WheelParams& w) { local.diagonal() << w.Ixx, w.Iyy, w.Ixx; };
  auto frame = [&](const FrameParams& f) {
    local << f.Ixx, 0.0, f.Ixz, 0.0, f.Iyy, 0.0, f.Ixz, 0.0, f.Izz;
  };
  switch (body) {
    case Body::RearWheel: wheel(p.rear_wheel); break;
    case Body::FrontWheel: wheel(p.front_wheel); break;
    case Body::RearFrame: frame(p.rear_frame); break;
    case Body::FrontFrame: frame(p.front_frame); break;
  }
  return rotation * local * rotation.transpose();
}

HolonomicSolution solve_holonomic(const BicycleParams& p, ShapeCoords shape, double pitch_guess,
                                  double margin) {
  check_domain(shape, margin);
  const ReferenceGeometry ref = reference_geometry(p);
  constexpr double kTol = 1e-12;
  constexpr int kMaxIter = 50;
  constexpr double kBracket = 1.2;

  double pitch = pitch_guess;
  bool converged = false;
  for (int it = 0; it < kMaxIter; ++it) {
    const Jet f = height_mismatch(p, ref, shape, Jet(pitch, 1.0, 0.0));
    if (!std::isfinite(f.v) || f.d1 == 0.0) break;
    const double step = f.v / f.d1;
    pitch -= step;
    if (!(std::abs(pitch) <= kBracket)) break;
    if (std::abs(step) < kTol && std::abs(f.v) < kTol) {
      converged = true;
      break;
    }
  }

  if (!converged) {
    double lo = -kBracket, hi = kBracket;
    double flo = height_mismatch(p, ref, shape, lo).v;
    const double fhi = height_mismatch(p, ref, shape, hi).v;
    if (!(flo * fhi < 0.0)) {
      std::ostringstream msg;
      msg << "no pitch in [-" << kBracket << ", " << kBracket << "] puts both wheels on the ground at theta=" << shape.theta
          << ", delta=" << shape.delta;
      throw Error(ErrorKind::NoContactSolution, msg.str());
    }
    while (hi - lo > kTol) {
      const double mid = 0.5 * (lo + hi);
      const double fm = height_mismatch(p, ref, shape, mid).v;
      if ((fm < 0.0) == (flo < 0.0)) {
        lo = mid;
        flo = fm;
      } else {
        hi = mid;
      }
    }
    pitch = 0.5 * (lo + hi);
  }

  return {-rear_lowest_point_offset(p, ref, shape, pitch), pitch};
}

HolonomicPartials holonomic_partials(const BicycleParams& p, ShapeCoords shape) {
  const HolonomicSolution sol = solve_holonomic(p, shape);
  const ReferenceGeometry ref = reference_geometry(p);
  Vector9d q = Vector9d::Zero();
  q(kZ) = sol.z;
  q(kTheta) = shape.theta;
  q(kDelta) = shape.delta;
  q(kPitch) = sol.pitch;

  // Height derivatives of both lowest points along each coordinate direction.
  auto heights_along = [&](int coord) {
    Vector9d dir = Vector9d::Zero();
    dir(coord) = 1.0;
    const JetPose ps = pose(p, ref, lift(q, dir, Vector9d::Zero()));
    return Eigen::Vector2d(ps.contact[0][2].d1, ps.contact[1][2].d1);
  };
  Eigen::Matrix2d jac;
  jac.col(0) = heights_along(kZ);
  jac.col(1) = heights_along(kPitch);
  Eigen::Matrix2d rhs;
  rhs.col(0) = -heights_along(kTheta);
  rhs.col(1) = -heights_along(kDelta);

  const double det = jac.determinant();
  if (!(std::abs(det) > 1e-12 * jac.cwiseAbs().maxCoeff() * jac.cwiseAbs().maxCoeff())) {
    throw Error(ErrorKind::SingularConstraintJacobian,
                "contact height Jacobian with respect to (z, pitch) is singular");
  }
  const Eigen::Matrix2d sol2 = jac.inverse() * rhs;
  return {sol2(0, 0), sol2(0, 1), sol2(1, 0), sol2(1, 1)};
}

Config constrained_config(const BicycleParams& p, ShapeCoords shape, double x, double y, double psi,
                          double phi_r, double phi_f) {
  const HolonomicSolution sol = solve_holonomic(p, shape);
  Config c;
  c.x = x;
  c.y = y;
  c.z = sol.z;
  c.psi = psi;
  c.theta = shape.theta;
  c.pitch = sol.pitch;
  c.delta = shape.delta;
  c.phi_r = phi_r;
  c.phi_f = phi_f;
  return c;
}

Eigen::Vector2d contact_heights(const BicycleParams& p, const Config& config) {
  const JetPose ps = pose(p, reference_geometry(p), lift(config.vector()));
  return {ps.contact[0][2].v, ps.contact[1][2].v};
}

MotionSample evaluate_motion(const BicycleParams& p, const Vector9d& q, const Vector9d& qd,
                             const Vector9d& qdd) {
  const JetPose ps = pose(p, reference_geometry(p), lift(q, qd, qdd));
  MotionSample out;
  for (std::size_t b = 0; b < kBodyCount; ++b) {
    BodyMotion& m = out.bodies[b];
    const Eigen::Matrix3d r0 = order(ps.rotation[b], 0);
    const Eigen::Matrix3d r1 = order(ps.rotation[b], 1);
    const Eigen::Matrix3d r2 = order(ps.rotation[b], 2);
    m.rotation = r0;
    m.position = order(ps.com[b], 0);
    m.velocity = order(ps.com[b], 1);
    m.acceleration = 2.0 * order(ps.com[b], 2);
    m.omega = vee(r1 * r0.transpose());
    m.alpha = vee(2.0 * r2 * r0.transpose());
  }
  const std::array<std::size_t, 2> wheel{static_cast<std::size_t>(Body::RearWheel),
                                         static_cast<std::size_t>(Body::FrontWheel)};
  for (std::size_t w = 0; w < 2; ++w) {
    const BodyMotion& body = out.bodies[wheel[w]];
    const JVec r = ps.contact[w] - ps.wheel_center[w];
    const Eigen::Vector3d r0 = order(r, 0);
    const Eigen::Vector3d r1 = order(r, 1);
    ContactMotion& c = out.contacts[w];
    c.point = order(ps.contact[w], 0);
    c.slip = body.velocity + body.omega.cross(r0);
    c.slip_rate = body.acceleration + body.alpha.cross(r0) + body.omega.cross(r1);
  }
  return out;
}

ConstraintMatrix constraint_matrix(const BicycleParams& p, const Vector9d& q) {
  ConstraintMatrix a;
  const Vector9d zero = Vector9d::Zero();
  for (int i = 0; i < 9; ++i) {
    Vector9d e = zero;
    e(i) = 1.0;
    const MotionSample s = evaluate_motion(p, q, e, zero);
    a.col(i).head<3>() = s.contacts[0].slip;
    a.col(i).tail<3>() = s.contacts[1].slip;
  }
  return a;
}

ConstrainedKinematics::ConstrainedKinematics(const BicycleParams& p, const Config& config)
    : params_(&p), q_(config.vector()) {
  const Eigen::Vector2d h = contact_heights(p, config);
  if (!(h.cwiseAbs().maxCoeff() < 1e-9)) {
    std::ostringstream msg;
    msg << "configuration violates ground contact (heights " << h.x() << ", " << h.y() << ")";
    throw Error(ErrorKind::DomainError, msg.str());
  }
  a_ = constraint_matrix(p, q_);
  Eigen::Matrix<double, 6, 6> dep;
  Eigen::Matrix<double, 6, 3> ind;
  for (int k = 0; k < 6; ++k) dep.col(k) = a_.col(kDependentCoords[k]);
  for (int k = 0; k < 3; ++k) ind.col(k) = a_.col(kQuasiCoords[k]);
  const Eigen::PartialPivLU<Eigen::Matrix<double, 6, 6>> lu(dep);
  if (!(lu.rcond() > 1e-12)) {
    throw Error(ErrorKind::SingularContact, "rolling constraint system is rank deficient");
  }
  dependent_inverse_ = lu.inverse();
  const Eigen::Matrix<double, 6, 3> hd = -dependent_inverse_ * ind;
  h_.setZero();
  for (int k = 0; k < 6; ++k) h_.row(kDependentCoords[k]) = hd.row(k);
  for (int k = 0; k < 3; ++k) h_(kQuasiCoords[k], k) = 1.0;
}

Vector9d ConstrainedKinematics::transfer_rate(const Eigen::Vector3d& sigma_dot) const {
  const Vector9d qd = h_ * sigma_dot;
  const MotionSample s = evaluate_motion(*params_, q_, qd, Vector9d::Zero());
  Eigen::Matrix<double, 6, 1> bias;
  bias << s.contacts[0].slip_rate, s.contacts[1].slip_rate;
  const Eigen::Matrix<double, 6, 1> dep = -dependent_inverse_ * bias;
  Vector9d qdd = Vector9d::Zero();
  for (int k = 0; k < 6; ++k) qdd(kDependentCoords[k]) = dep(k);
  return qdd;
}

TransferMatrix transfer_matrix(const BicycleParams& p, const Config& config) {
  return ConstrainedKinematics(p, config).transfer();
}

Vector9d transfer_rate(const BicycleParams& p, const Config& config,
                       const Eigen::Vector3d& sigma_dot) {
  return ConstrainedKinematics(p, config).transfer_rate(sigma_dot);
}

ContactPoints contact_points(const BicycleParams& p, const Config& config) {
  const JetPose ps = pose(p, reference_geometry(p), lift(config.vector()));
  return {{ps.contact[0][0].v, ps.contact[0][1].v}, {ps.contact[1][0].v, ps.contact[1][1].v}};
}

}  // namespace whipple
