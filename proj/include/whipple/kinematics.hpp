#pragma once

// Configuration space, holonomic ground contact and the velocity transfer
// matrix of the Whipple bicycle.
//
// Axes: inertial x forward, y left, z up. The rear frame orientation is
// Rz(psi) * Rx(theta) * Ry(pitch) (312 sequence); theta > 0 leans right and
// delta > 0 steers left. Generalized coordinates are ordered
// q = (x, y, z, psi, theta, pitch, delta, phi_r, phi_f), where (x, y, z) is
// the reference point D on the steer axis, level with the front wheel center
// in the upright reference configuration.

#include <array>
#include <cstddef>

#include <Eigen/Core>

#include "whipple/params.hpp"

namespace whipple {

using Vector9d = Eigen::Matrix<double, 9, 1>;
using Matrix9d = Eigen::Matrix<double, 9, 9>;
using TransferMatrix = Eigen::Matrix<double, 9, 3>;
using ConstraintMatrix = Eigen::Matrix<double, 6, 9>;

enum Coord : int {
  kX = 0,
  kY = 1,
  kZ = 2,
  kPsi = 3,
  kTheta = 4,
  kPitch = 5,
  kDelta = 6,
  kPhiR = 7,
  kPhiF = 8,
};

/// Coordinates solved from the contact constraints, then the free ones.
inline constexpr std::array<int, 6> kDependentCoords{kX, kY, kZ, kPsi, kPitch, kPhiF};
inline constexpr std::array<int, 3> kQuasiCoords{kTheta, kDelta, kPhiR};

inline constexpr double kDefaultDomainMargin = 0.05;

struct ShapeCoords {
  double theta = 0.0;
  double delta = 0.0;

  [[nodiscard]] ShapeCoords mirrored() const { return {-theta, -delta}; }
};

/// Throws Error(DomainError) unless |theta|, |delta| < pi/2 - margin.
void check_domain(ShapeCoords shape, double margin = kDefaultDomainMargin);

struct QuasiVelocities {
  double theta_dot = 0.0;
  double delta_dot = 0.0;
  double phi_r_dot = 0.0;

  [[nodiscard]] Eigen::Vector3d vector() const { return {theta_dot, delta_dot, phi_r_dot}; }
};

struct Config {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
  double psi = 0.0;
  double theta = 0.0;
  double pitch = 0.0;
  double delta = 0.0;
  double phi_r = 0.0;
  double phi_f = 0.0;

  [[nodiscard]] Vector9d vector() const;
  static Config from_vector(const Vector9d& q);
  [[nodiscard]] ShapeCoords shape() const { return {theta, delta}; }
};

/// Points of the upright reference configuration, rear contact at the origin.
struct ReferenceGeometry {
  Eigen::Vector3d rear_center;
  Eigen::Vector3d front_center;
  Eigen::Vector3d rear_frame_com;
  Eigen::Vector3d front_frame_com;
  Eigen::Vector3d steer_point;  // D
  Eigen::Vector3d steer_axis;   // unit, pointing up
};

ReferenceGeometry reference_geometry(const BicycleParams& p);

struct HolonomicSolution {
  double z = 0.0;      // height of D
  double pitch = 0.0;  // rear frame pitch
};

/// Solves both contact conditions for (z, pitch) at the given lean and steer.
/// Newton on the front-wheel height with bisection fallback on [-1.2, 1.2].
/// `pitch_guess` warm-starts Newton, e.g. from a neighbouring shape.
HolonomicSolution solve_holonomic(const BicycleParams& p, ShapeCoords shape,
                                  double pitch_guess = 0.0,
                                  double margin = kDefaultDomainMargin);

struct HolonomicPartials {
  double dz_dtheta = 0.0;
  double dz_ddelta = 0.0;
  double dpitch_dtheta = 0.0;
  double dpitch_ddelta = 0.0;
};

HolonomicPartials holonomic_partials(const BicycleParams& p, ShapeCoords shape);

/// The constrained configuration with the given shape and planar pose.
Config constrained_config(const BicycleParams& p, ShapeCoords shape, double x = 0.0,
                          double y = 0.0, double psi = 0.0, double phi_r = 0.0,
                          double phi_f = 0.0);

/// Residual heights of the rear and front wheel lowest points.
Eigen::Vector2d contact_heights(const BicycleParams& p, const Config& config);

/// Velocity of both wheels' material contact points, rear then front, as a
/// linear map of qdot: slip = A(q) * qdot. The vertical rows are the time
/// derivatives of the holonomic constraints.
ConstraintMatrix constraint_matrix(const BicycleParams& p, const Vector9d& q);

/// qdot = H(q) * sigma_dot, with sigma = (theta, delta, phi_r).
TransferMatrix transfer_matrix(const BicycleParams& p, const Config& config);

/// Second-order kinematics: the qddot of the dependent coordinates when the
/// quasi-accelerations vanish, i.e. Hdot * sigma_dot.
Vector9d transfer_rate(const BicycleParams& p, const Config& config,
                       const Eigen::Vector3d& sigma_dot);

/// Velocity- and acceleration-level constraint data at one configuration,
/// factorized once for repeated use.
class ConstrainedKinematics {
 public:
  /// Throws DomainError if `config` violates the contact conditions by more
  /// than 1e-9 m, SingularContact if the rolling constraints are degenerate.
  ConstrainedKinematics(const BicycleParams& p, const Config& config);

  [[nodiscard]] const Vector9d& q() const { return q_; }
  [[nodiscard]] const ConstraintMatrix& constraint() const { return a_; }
  [[nodiscard]] const TransferMatrix& transfer() const { return h_; }

  /// Full qddot for sigma_ddot = 0, i.e. Hdot * sigma_dot.
  [[nodiscard]] Vector9d transfer_rate(const Eigen::Vector3d& sigma_dot) const;

 private:
  const BicycleParams* params_;
  Vector9d q_;
  ConstraintMatrix a_;
  Eigen::Matrix<double, 6, 6> dependent_inverse_;
  TransferMatrix h_;
};

struct ContactPoints {
  Eigen::Vector2d rear;
  Eigen::Vector2d front;
};

ContactPoints contact_points(const BicycleParams& p, const Config& config);

enum class Body : std::size_t { RearWheel = 0, RearFrame = 1, FrontFrame = 2, FrontWheel = 3 };
inline constexpr std::size_t kBodyCount = 4;

struct BodyMotion {
  Eigen::Matrix3d rotation;
  Eigen::Vector3d position;  // mass center
  Eigen::Vector3d velocity;
  Eigen::Vector3d acceleration;
  Eigen::Vector3d omega;
  Eigen::Vector3d alpha;
};

struct ContactMotion {
  Eigen::Vector3d point;      // geometric contact point
  Eigen::Vector3d slip;       // velocity of the wheel material at the contact
  Eigen::Vector3d slip_rate;  // its time derivative
};

struct MotionSample {
  std::array<BodyMotion, kBodyCount> bodies;
  std::array<ContactMotion, 2> contacts;  // rear, front
};

/// Positions, velocities and accelerations of all bodies and contacts along
/// the motion q(t) with q(0) = q, qdot(0) = qd, qddot(0) = qdd. The contact
/// points are the lowest points of each wheel whether or not they touch.
MotionSample evaluate_motion(const BicycleParams& p, const Vector9d& q, const Vector9d& qd,
                             const Vector9d& qdd);

/// Body inertia tensor in the inertial frame, for the given body rotation.
Eigen::Matrix3d world_inertia(const BicycleParams& p, Body body, const Eigen::Matrix3d& rotation);

double body_mass(const BicycleParams& p, Body body);

}  // namespace whipple
