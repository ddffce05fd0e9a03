#pragma once

// Multiplier-free reduced equations of motion
//
//   m(theta, delta) * sigma_ddot + c_ijk sigma_dot^j sigma_dot^k = P + tau
//
// for the quasi-velocities sigma_dot = (theta_dot, delta_dot, phi_r_dot),
// obtained by projecting the 9-coordinate rigid-body dynamics through the
// transfer matrix H.

#include <array>
#include <complex>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "whipple/kinematics.hpp"
#include "whipple/params.hpp"

namespace whipple {

struct FullDynamics {
  Matrix9d mass;      // symmetric positive semidefinite
  Vector9d bias;      // velocity-dependent inertial force at the given qdot
  Vector9d gravity;   // generalized gravity force, -dV/dq
};

/// Block assembly over the four bodies at (q, qdot).
FullDynamics full_dynamics(const BicycleParams& p, const Config& config, const Vector9d& qdot);

Matrix9d full_mass_matrix(const BicycleParams& p, const Config& config);

/// V = sum_k m_k g h_k over the body mass centers.
double potential_energy(const BicycleParams& p, const Config& config);

struct ReducedCoefficients {
  Eigen::Matrix3d m;
  /// c[i](j, k), symmetric in (j, k).
  std::array<Eigen::Matrix3d, 3> c;
  Eigen::Vector3d P;

  /// c_ijk sigma_dot^j sigma_dot^k for each i.
  [[nodiscard]] Eigen::Vector3d quadratic(const Eigen::Vector3d& sigma_dot) const;
};

ReducedCoefficients reduced_coeffs(const BicycleParams& p, ShapeCoords shape);

/// m, the quadratic term evaluated at one sigma_dot, and P. Cheaper than
/// reduced_coeffs when only one velocity is needed.
struct ReducedTerms {
  Eigen::Matrix3d m;
  Eigen::Vector3d quadratic;
  Eigen::Vector3d P;
};

/// `margin` narrows or widens the accepted shape domain (see check_domain).
ReducedTerms reduced_terms(const BicycleParams& p, ShapeCoords shape,
                           const Eigen::Vector3d& sigma_dot,
                           double margin = kDefaultDomainMargin);

/// 1/2 sigma_dot' m sigma_dot + V.
double total_energy(const BicycleParams& p, ShapeCoords shape, const Eigen::Vector3d& sigma_dot);

struct CoefficientPartials {
  double dc133_dtheta = 0.0;
  double dc133_ddelta = 0.0;
  double dP1_dtheta = 0.0;
  double dP1_ddelta = 0.0;
  double c123_plus_c132 = 0.0;
  double c113_plus_c131 = 0.0;
  /// Fourth-order and second-order stencils agreed to relative 1e-4.
  bool richardson_consistent = true;
};

/// Shape derivatives of the lean-row coefficients by central differences.
CoefficientPartials coefficient_partials(const BicycleParams& p, ShapeCoords shape);

/// Step used by coefficient_partials; shapes must lie this far inside the domain (times 2).
inline constexpr double kPartialsStep = 1e-4;

/// Shape derivatives of all of P and c_i33, used to build the uncontrolled
/// linearized model.
struct LinearizedFreeModel {
  Eigen::Matrix2d mass;       // lean/steer block of m at the origin
  Eigen::Matrix2d damping;    // per unit rear wheel rate
  Eigen::Matrix2d stiffness_gravity;  // -dP/d(theta, delta)
  Eigen::Matrix2d stiffness_speed;    // dc_i33/d(theta, delta), per unit rate squared
};

LinearizedFreeModel linearize_free(const BicycleParams& p);

/// Eigenvalues of the uncontrolled upright motion at rear wheel rate omega.
std::vector<std::complex<double>> free_eigenvalues(const LinearizedFreeModel& model, double omega);

struct IdentityResidual {
  std::string name;
  double max_residual = 0.0;
};

struct IdentityReport {
  std::vector<IdentityResidual> residuals;
  [[nodiscard]] double worst() const;
  [[nodiscard]] bool passed(double tolerance = 1e-8) const { return worst() < tolerance; }
};

/// Residuals of c_i33(0,0) = 0, P_i(0,0) = 0 (i = 1, 2), c333 = P3 = 0 on a
/// 15x15 shape grid, and c113 + c131 = dc133/dtheta = 0 at the origin.
IdentityReport verify_structural_identities(const BicycleParams& p);

}  // namespace whipple
