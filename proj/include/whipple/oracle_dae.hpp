#pragma once

// Full-coordinate Whipple bicycle with explicit contact multipliers. Used to
// cross-check the reduced equations; not a production path.

#include <functional>
#include <vector>

#include <Eigen/Core>

#include "whipple/controlled_motion.hpp"
#include "whipple/kinematics.hpp"
#include "whipple/params.hpp"

namespace whipple {

struct FullState {
  Config config;
  Vector9d qdot = Vector9d::Zero();
};

/// Constrained state with the given shape and quasi-velocities, planar pose
/// and wheel angles zero.
FullState full_state(const BicycleParams& p, ShapeCoords shape, const Eigen::Vector3d& sigma_dot);

struct ConstraintResiduals {
  double position = 0.0;  // max |contact height|
  double velocity = 0.0;  // max |contact slip|
};

ConstraintResiduals constraint_residuals(const BicycleParams& p, const FullState& fs);

/// Projects onto the contact manifold (heights) and then onto the rolling
/// constraints (slip). Throws Error(ProjectionFailure) if residuals stay above tol.
FullState project(const BicycleParams& p, const FullState& fs, double tol = 1e-12);

struct KktSolution {
  Vector9d qddot;
  /// Contact forces on the wheels: rear (x, y, z), front (x, y, z).
  Eigen::Matrix<double, 6, 1> lambda;
};

/// Solves [M A'; A 0] for accelerations and multipliers with the steer and
/// rear wheel torques applied. Throws Error(SingularKKT).
KktSolution dae_accelerations(const BicycleParams& p, const FullState& fs, TorqueSample tau);

using TorqueSchedule = std::function<TorqueSample(double t)>;

/// Local cubic (four-point Lagrange) interpolation of recorded torques.
TorqueSchedule interpolate_torques(const Trajectory& traj);

struct DaeOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double projection_tol = 1e-12;
};

struct DaeTrajectory {
  std::vector<double> t;
  std::vector<FullState> states;
  std::vector<Eigen::Vector2d> normal_forces;  // rear, front
  ConstraintResiduals worst;                   // over the output samples
};

DaeTrajectory simulate_dae(const BicycleParams& p, const FullState& fs0,
                           const TorqueSchedule& torques, double t_max, double dt_out,
                           const DaeOptions& opt = {});

}  // namespace whipple
