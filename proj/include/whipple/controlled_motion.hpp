#pragma once

// Lean dynamics under the steer law delta = c1 * theta, phi_r_dot = omega0,
// the torques that enforce the law, the free 3-DOF dynamics and planar path
// reconstruction.

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "whipple/integrator.hpp"
#include "whipple/kinematics.hpp"
#include "whipple/params.hpp"

namespace whipple {

struct ControlLaw {
  double c1 = -4.0;
  double omega0 = 0.0;
};

/// Throws Error(ValidationError) for omega0 < 0 or non-finite values.
void validate(const ControlLaw& law);

struct LeanState {
  double theta = 0.0;
  double theta_dot = 0.0;

  [[nodiscard]] LeanState mirrored() const { return {-theta, -theta_dot}; }
};

struct TorqueSample {
  double tau_delta = 0.0;
  double tau_phir = 0.0;
};

/// Rows of the reduced equations with the law substituted:
/// M_i * theta_ddot + h_i = tau_i, tau = (0, tau_delta, tau_phir).
struct ControlledTerms {
  Eigen::Vector3d M;
  Eigen::Vector3d h;
};

ControlledTerms controlled_terms(const BicycleParams& p, const ControlLaw& law, LeanState s,
                                 double margin = kDefaultDomainMargin);

/// theta_ddot = -h1 / M1. Throws Error(SingularMass) if |M1| < 1e-10.
double lean_acceleration(const BicycleParams& p, const ControlLaw& law, LeanState s);

TorqueSample control_torques(const BicycleParams& p, const ControlLaw& law, LeanState s,
                             double theta_ddot);

inline constexpr double kSingularMassTolerance = 1e-10;

struct SimulationOptions {
  double rtol = 1e-9;
  double atol = 1e-12;
  /// A fall is declared when |theta| or |delta| reaches pi/2 - fall_margin.
  double fall_margin = kDefaultDomainMargin;
  /// Accepted plus rejected steps before IntegratorFailure.
  long max_steps = 50'000;
};

struct Trajectory {
  ControlLaw law;
  std::vector<double> t;
  std::vector<LeanState> state;
  std::vector<TorqueSample> torque;
  /// Time of the fall, if one happened; the last sample is taken there.
  std::optional<double> domain_exit;
  ode::Stats stats;
};

/// RHS of the lean ODE on y = (theta, theta_dot), evaluated with the given
/// domain margin.
ode::Rhs lean_rhs(const BicycleParams& p, const ControlLaw& law,
                  double margin = kDefaultDomainMargin);

Trajectory simulate(const BicycleParams& p, const ControlLaw& law, LeanState s0, double t_max,
                    double dt_out, const SimulationOptions& opt = {});

/// Uncontrolled reduced dynamics, tau = 0.
struct FreeTrajectory {
  std::vector<double> t;
  std::vector<Eigen::Vector3d> sigma;      // theta, delta, phi_r
  std::vector<Eigen::Vector3d> sigma_dot;  // their rates
  std::optional<double> domain_exit;
  ode::Stats stats;
};

/// sigma_ddot = m^{-1} (P - c sigma_dot sigma_dot).
Eigen::Vector3d free_acceleration(const BicycleParams& p, ShapeCoords shape,
                                  const Eigen::Vector3d& sigma_dot,
                                  double margin = kDefaultDomainMargin);

FreeTrajectory simulate_free(const BicycleParams& p, const Eigen::Vector3d& sigma0,
                             const Eigen::Vector3d& sigma_dot0, double t_max, double dt_out,
                             const SimulationOptions& opt = {});

/// Path of the steer-axis reference point D on the ground plane.
struct PlanarPath {
  std::vector<double> t;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> psi;
};

/// Integrates the (x, y, psi) rows of qdot = H sigma_dot along the motion of
/// `traj`, starting from the pose (0, 0, 0), and samples at traj.t.
PlanarPath reconstruct_path(const BicycleParams& p, const Trajectory& traj,
                            const SimulationOptions& opt = {});

/// Planar velocity of D in heading axes and the yaw rate, per unit quasi-velocity.
struct PlanarRates {
  double forward = 0.0;
  double lateral = 0.0;
  double yaw = 0.0;
};

PlanarRates planar_rates(const BicycleParams& p, ShapeCoords shape,
                         const Eigen::Vector3d& sigma_dot,
                         double margin = kDefaultDomainMargin);

}  // namespace whipple
