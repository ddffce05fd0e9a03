#include "whipple/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <Eigen/LU>

#include "whipple/error.hpp"

namespace whipple {
namespace {

struct BodyJacobians {
  std::array<Eigen::Matrix<double, 3, 9>, kBodyCount> linear;
  std::array<Eigen::Matrix<double, 3, 9>, kBodyCount> angular;
};

BodyJacobians body_jacobians(const BicycleParams& p, const Vector9d& q) {
  BodyJacobians j;
  const Vector9d zero = Vector9d::Zero();
  for (int i = 0; i < 9; ++i) {
    Vector9d e = zero;
    e(i) = 1.0;
    const MotionSample s = evaluate_motion(p, q, e, zero);
    for (std::size_t b = 0; b < kBodyCount; ++b) {
      j.linear[b].col(i) = s.bodies[b].velocity;
      j.angular[b].col(i) = s.bodies[b].omega;
    }
  }
  return j;
}

Matrix9d assemble_mass(const BicycleParams& p, const BodyJacobians& j, const MotionSample& at) {
  Matrix9d m = Matrix9d::Zero();
  for (std::size_t b = 0; b < kBodyCount; ++b) {
    const Body body = static_cast<Body>(b);
    const Eigen::Matrix3d inertia = world_inertia(p, body, at.bodies[b].rotation);
    m.noalias() += body_mass(p, body) * j.linear[b].transpose() * j.linear[b];
    m.noalias() += j.angular[b].transpose() * inertia * j.angular[b];
  }
  return m;
}

// Generalized inertial force sum_k Jv' m a + Jw' (I alpha + w x I w), with the
// accelerations of `at` shifted by the extra qddot term.
Vector9d inertial_force(const BicycleParams& p, const BodyJacobians& j, const MotionSample& at,
                        const Vector9d& extra_qdd) {
  Vector9d f = Vector9d::Zero();
  for (std::size_t b = 0; b < kBodyCount; ++b) {
    const Body body = static_cast<Body>(b);
    const BodyMotion& bm = at.bodies[b];
    const Eigen::Matrix3d inertia = world_inertia(p, body, bm.rotation);
    const Eigen::Vector3d acc = bm.acceleration + j.linear[b] * extra_qdd;
    const Eigen::Vector3d alpha = bm.alpha + j.angular[b] * extra_qdd;
    f.noalias() += body_mass(p, body) * j.linear[b].transpose() * acc;
    f.noalias() += j.angular[b].transpose() * (inertia * alpha + bm.omega.cross(inertia * bm.omega));
  }
  return f;
}

Vector9d gravity_force(const BicycleParams& p, const BodyJacobians& j) {
  Vector9d f = Vector9d::Zero();
  for (std::size_t b = 0; b < kBodyCount; ++b) {
    f -= body_mass(p, static_cast<Body>(b)) * p.g * j.linear[b].row(2).transpose();
  }
  return f;
}

Config config_at(const BicycleParams& p, ShapeCoords shape, double margin) {
  const HolonomicSolution sol = solve_holonomic(p, shape, 0.0, margin);
  Config c;
  c.z = sol.z;
  c.theta = shape.theta;
  c.pitch = sol.pitch;
  c.delta = shape.delta;
  return c;
}

// Everything the reduction needs at one constrained configuration.
class Reduction {
 public:
  Reduction(const BicycleParams& p, ShapeCoords shape, double margin = kDefaultDomainMargin)
      : p_(p),
        config_(config_at(p, shape, margin)),
        kin_(p, config_),
        jac_(body_jacobians(p, kin_.q())) {
    const MotionSample rest = evaluate_motion(p, kin_.q(), Vector9d::Zero(), Vector9d::Zero());
    const Matrix9d full = assemble_mass(p, jac_, rest);
    const TransferMatrix& h = kin_.transfer();
    m_ = h.transpose() * full * h;
    m_ = 0.5 * (m_ + m_.transpose()).eval();
    P_ = h.transpose() * gravity_force(p, jac_);
  }

  [[nodiscard]] const Eigen::Matrix3d& m() const { return m_; }
  [[nodiscard]] const Eigen::Vector3d& P() const { return P_; }

  // b(sigma_dot) = H' (M Hdot sigma_dot + bias(H sigma_dot)).
  [[nodiscard]] Eigen::Vector3d quadratic(const Eigen::Vector3d& sigma_dot) const {
    const TransferMatrix& h = kin_.transfer();
    const Vector9d qd = h * sigma_dot;
    const Vector9d qdd = kin_.transfer_rate(sigma_dot);
    const MotionSample s = evaluate_motion(p_, kin_.q(), qd, Vector9d::Zero());
    return h.transpose() * inertial_force(p_, jac_, s, qdd);
  }

 private:
  const BicycleParams& p_;
  Config config_;
  ConstrainedKinematics kin_;
  BodyJacobians jac_;
  Eigen::Matrix3d m_;
  Eigen::Vector3d P_;
};

}  // namespace

FullDynamics full_dynamics(const BicycleParams& p, const Config& config, const Vector9d& qdot) {
  const Vector9d q = config.vector();
  const BodyJacobians j = body_jacobians(p, q);
  const MotionSample s = evaluate_motion(p, q, qdot, Vector9d::Zero());
  FullDynamics out;
  out.mass = assemble_mass(p, j, s);
  out.bias = inertial_force(p, j, s, Vector9d::Zero());
  out.gravity = gravity_force(p, j);
  return out;
}

Matrix9d full_mass_matrix(const BicycleParams& p, const Config& config) {
  return full_dynamics(p, config, Vector9d::Zero()).mass;
}

double potential_energy(const BicycleParams& p, const Config& config) {
  const MotionSample s =
      evaluate_motion(p, config.vector(), Vector9d::Zero(), Vector9d::Zero());
  double v = 0.0;
  for (std::size_t b = 0; b < kBodyCount; ++b) {
    v += body_mass(p, static_cast<Body>(b)) * p.g * s.bodies[b].position.z();
  }
  return v;
}

Eigen::Vector3d ReducedCoefficients::quadratic(const Eigen::Vector3d& sigma_dot) const {
  Eigen::Vector3d out;
  for (int i = 0; i < 3; ++i) out(i) = sigma_dot.dot(c[i] * sigma_dot);
  return out;
}

ReducedCoefficients reduced_coeffs(const BicycleParams& p, ShapeCoords shape) {
  const Reduction red(p, shape);
  ReducedCoefficients out;
  out.m = red.m();
  out.P = red.P();

  // Polarization of the quadratic form b_i(s) = c_ijk s^j s^k.
  std::array<Eigen::Vector3d, 3> diag;
  for (int j = 0; j < 3; ++j) diag[j] = red.quadratic(Eigen::Vector3d::Unit(j));
  for (int i = 0; i < 3; ++i) {
    out.c[i].setZero();
    for (int j = 0; j < 3; ++j) out.c[i](j, j) = diag[j](i);
  }
  for (int j = 0; j < 3; ++j) {
    for (int k = j + 1; k < 3; ++k) {
      const Eigen::Vector3d both = red.quadratic(Eigen::Vector3d::Unit(j) + Eigen::Vector3d::Unit(k));
      for (int i = 0; i < 3; ++i) {
        const double off = 0.5 * (both(i) - diag[j](i) - diag[k](i));
        out.c[i](j, k) = off;
        out.c[i](k, j) = off;
      }
    }
  }
  return out;
}

ReducedTerms reduced_terms(const BicycleParams& p, ShapeCoords shape,
                           const Eigen::Vector3d& sigma_dot, double margin) {
  const Reduction red(p, shape, margin);
  return {red.m(), red.quadratic(sigma_dot), red.P()};
}

double total_energy(const BicycleParams& p, ShapeCoords shape, const Eigen::Vector3d& sigma_dot) {
  const Reduction red(p, shape);
  return 0.5 * sigma_dot.dot(red.m() * sigma_dot) + potential_energy(p, constrained_config(p, shape));
}

CoefficientPartials coefficient_partials(const BicycleParams& p, ShapeCoords shape) {
  check_domain(shape, kDefaultDomainMargin + 2.0 * kPartialsStep);
  const double h = kPartialsStep;

  struct Lean {
    double c133;
    double P1;
  };
  auto lean = [&](double dt, double dd) {
    const ReducedTerms rt =
        reduced_terms(p, {shape.theta + dt, shape.delta + dd}, Eigen::Vector3d::UnitZ());
    return Lean{rt.quadratic(0), rt.P(0)};
  };

  CoefficientPartials out;
  bool consistent = true;
  auto differentiate = [&](double ut, double ud, double& dc, double& dp) {
    const Lean p2 = lean(2 * h * ut, 2 * h * ud), p1 = lean(h * ut, h * ud);
    const Lean m1 = lean(-h * ut, -h * ud), m2 = lean(-2 * h * ut, -2 * h * ud);
    dc = (-p2.c133 + 8 * p1.c133 - 8 * m1.c133 + m2.c133) / (12 * h);
    dp = (-p2.P1 + 8 * p1.P1 - 8 * m1.P1 + m2.P1) / (12 * h);
    const double dc2 = (p1.c133 - m1.c133) / (2 * h);
    const double dp2 = (p1.P1 - m1.P1) / (2 * h);
    auto agree = [](double a, double b) {
      return std::abs(a - b) <= 1e-4 * std::max(std::abs(a), std::abs(b)) + 1e-8;
    };
    consistent = consistent && agree(dc, dc2) && agree(dp, dp2);
  };
  differentiate(1.0, 0.0, out.dc133_dtheta, out.dP1_dtheta);
  differentiate(0.0, 1.0, out.dc133_ddelta, out.dP1_ddelta);

  const ReducedCoefficients rc = reduced_coeffs(p, shape);
  out.c123_plus_c132 = 2.0 * rc.c[0](1, 2);
  out.c113_plus_c131 = 2.0 * rc.c[0](0, 2);
  out.richardson_consistent = consistent;
  return out;
}

LinearizedFreeModel linearize_free(const BicycleParams& p) {
  const double h = kPartialsStep;
  const ReducedCoefficients origin = reduced_coeffs(p, {0.0, 0.0});
  LinearizedFreeModel out;
  out.mass = origin.m.topLeftCorner<2, 2>();
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) out.damping(i, j) = 2.0 * origin.c[i](j, 2);

  for (int j = 0; j < 2; ++j) {
    std::array<ReducedCoefficients, 4> rc;
    const std::array<double, 4> offsets{2 * h, h, -h, -2 * h};
    for (int k = 0; k < 4; ++k) {
      const ShapeCoords s = j == 0 ? ShapeCoords{offsets[k], 0.0} : ShapeCoords{0.0, offsets[k]};
      rc[k] = reduced_coeffs(p, s);
    }
    for (int i = 0; i < 2; ++i) {
      auto d = [&](auto get) {
        return (-get(rc[0]) + 8 * get(rc[1]) - 8 * get(rc[2]) + get(rc[3])) / (12 * h);
      };
      out.stiffness_gravity(i, j) = -d([i](const ReducedCoefficients& r) { return r.P(i); });
      out.stiffness_speed(i, j) = d([i](const ReducedCoefficients& r) { return r.c[i](2, 2); });
    }
  }
  return out;
}

std::vector<std::complex<double>> free_eigenvalues(const LinearizedFreeModel& model, double omega) {
  const Eigen::Matrix2d minv = model.mass.inverse();
  const Eigen::Matrix2d k = model.stiffness_gravity + omega * omega * model.stiffness_speed;
  Eigen::Matrix4d a = Eigen::Matrix4d::Zero();
  a.topRightCorner<2, 2>().setIdentity();
  a.bottomLeftCorner<2, 2>() = -minv * k;
  a.bottomRightCorner<2, 2>() = -omega * minv * model.damping;
  const Eigen::EigenSolver<Eigen::Matrix4d> es(a, false);
  std::vector<std::complex<double>> out(es.eigenvalues().data(), es.eigenvalues().data() + 4);
  std::sort(out.begin(), out.end(), [](auto a, auto b) {
    return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
  });
  return out;
}

double IdentityReport::worst() const {
  double w = 0.0;
  for (const auto& r : residuals) w = std::max(w, r.max_residual);
  return w;
}

IdentityReport verify_structural_identities(const BicycleParams& p) {
  IdentityReport report;
  const ReducedCoefficients origin = reduced_coeffs(p, {0.0, 0.0});
  report.residuals.push_back({"c133(0,0)", std::abs(origin.c[0](2, 2))});
  report.residuals.push_back({"c233(0,0)", std::abs(origin.c[1](2, 2))});
  report.residuals.push_back({"P1(0,0)", std::abs(origin.P(0))});
  report.residuals.push_back({"P2(0,0)", std::abs(origin.P(1))});

  constexpr int kGrid = 15;
  constexpr double kTheta = 0.5, kDelta = 0.5;
  double c333 = 0.0, p3 = 0.0;
  for (int a = 0; a < kGrid; ++a) {
    for (int b = 0; b < kGrid; ++b) {
      const ShapeCoords s{-kTheta + 2 * kTheta * a / (kGrid - 1), -kDelta + 2 * kDelta * b / (kGrid - 1)};
      const ReducedCoefficients rc = reduced_coeffs(p, s);
      c333 = std::max(c333, std::abs(rc.c[2](2, 2)));
      p3 = std::max(p3, std::abs(rc.P(2)));
    }
  }
  report.residuals.push_back({"c333 (grid)", c333});
  report.residuals.push_back({"P3 (grid)", p3});

  const CoefficientPartials cp = coefficient_partials(p, {0.0, 0.0});
  report.residuals.push_back({"c113+c131 (0,0)", std::abs(cp.c113_plus_c131)});
  report.residuals.push_back({"dc133/dtheta (0,0)", std::abs(cp.dc133_dtheta)});
  return report;
}

}  // namespace whipple
