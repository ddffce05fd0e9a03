#include "whipple/oracle_dae.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <Eigen/LU>

#include "whipple/dynamics.hpp"
#include "whipple/error.hpp"
#include "whipple/integrator.hpp"

namespace whipple {

FullState full_state(const BicycleParams& p, ShapeCoords shape, const Eigen::Vector3d& sigma_dot) {
  FullState fs;
  fs.config = constrained_config(p, shape);
  fs.qdot = transfer_matrix(p, fs.config) * sigma_dot;
  return fs;
}

ConstraintResiduals constraint_residuals(const BicycleParams& p, const FullState& fs) {
  const Eigen::Vector2d h = contact_heights(p, fs.config);
  const Eigen::Matrix<double, 6, 1> slip = constraint_matrix(p, fs.config.vector()) * fs.qdot;
  return {h.cwiseAbs().maxCoeff(), slip.cwiseAbs().maxCoeff()};
}

FullState project(const BicycleParams& p, const FullState& fs, double tol) {
  constexpr int kMaxIter = 20;
  Vector9d q = fs.config.vector();
  Vector9d qd = fs.qdot;

  // Heights: Newton on (z, pitch) with lean and steer held.
  bool ok = false;
  for (int it = 0; it < kMaxIter; ++it) {
    const Eigen::Vector2d h = contact_heights(p, Config::from_vector(q));
    if (h.cwiseAbs().maxCoeff() <= tol) {
      ok = true;
      break;
    }
    const ConstraintMatrix a = constraint_matrix(p, q);
    Eigen::Matrix2d g;
    g << a(2, kZ), a(2, kPitch), a(5, kZ), a(5, kPitch);
    const Eigen::Vector2d dz = g.fullPivLu().solve(h);
    if (!dz.allFinite()) break;
    q(kZ) -= dz(0);
    q(kPitch) -= dz(1);
  }
  if (!ok) {
    throw Error(ErrorKind::ProjectionFailure, "contact heights did not converge");
  }

  // Slip: minimum-norm velocity correction, repeated once for roundoff.
  const ConstraintMatrix a = constraint_matrix(p, q);
  const Eigen::FullPivLU<Eigen::Matrix<double, 6, 6>> lu(a * a.transpose());
  if (!lu.isInvertible()) throw Error(ErrorKind::ProjectionFailure, "constraint Gram matrix singular");
  for (int it = 0; it < 2; ++it) qd -= a.transpose() * lu.solve(a * qd);
  const double slip = (a * qd).cwiseAbs().maxCoeff();
  if (!(slip <= std::max(tol, 1e-14 * std::max(1.0, qd.cwiseAbs().maxCoeff())))) {
    std::ostringstream msg;
    msg << "slip residual " << slip << " after projection";
    throw Error(ErrorKind::ProjectionFailure, msg.str());
  }
  return {Config::from_vector(q), qd};
}

KktSolution dae_accelerations(const BicycleParams& p, const FullState& fs, TorqueSample tau) {
  const Vector9d q = fs.config.vector();
  const FullDynamics fd = full_dynamics(p, fs.config, fs.qdot);
  const ConstraintMatrix a = constraint_matrix(p, q);
  const MotionSample s = evaluate_motion(p, q, fs.qdot, Vector9d::Zero());
  Eigen::Matrix<double, 6, 1> adot_qd;
  adot_qd << s.contacts[0].slip_rate, s.contacts[1].slip_rate;

  Vector9d force = fd.gravity - fd.bias;
  force(kDelta) += tau.tau_delta;
  force(kPhiR) += tau.tau_phir;

  // M qdd - A' lambda = force, A qdd = -Adot qd.
  Eigen::Matrix<double, 15, 15> k = Eigen::Matrix<double, 15, 15>::Zero();
  k.topLeftCorner<9, 9>() = fd.mass;
  k.topRightCorner<9, 6>() = -a.transpose();
  k.bottomLeftCorner<6, 9>() = a;
  Eigen::Matrix<double, 15, 1> rhs;
  rhs << force, -adot_qd;
  const Eigen::FullPivLU<Eigen::Matrix<double, 15, 15>> lu(k);
  if (!(lu.rcond() > 1e-13)) {
    throw Error(ErrorKind::SingularKKT, "KKT matrix is singular");
  }
  const Eigen::Matrix<double, 15, 1> x = lu.solve(rhs);
  return {x.head<9>(), x.tail<6>()};
}

TorqueSchedule interpolate_torques(const Trajectory& traj) {
  if (traj.t.empty()) throw Error(ErrorKind::ValidationError, "empty trajectory");
  return [t = traj.t, tq = traj.torque](double at) {
    const std::size_t n = t.size();
    if (n < 4) {
      const auto i = std::min<std::size_t>(
          n - 1, static_cast<std::size_t>(std::lower_bound(t.begin(), t.end(), at) - t.begin()));
      return tq[i];
    }
    const std::size_t hi = static_cast<std::size_t>(std::upper_bound(t.begin(), t.end(), at) - t.begin());
    const std::size_t start = std::min(n - 4, hi < 2 ? std::size_t{0} : hi - 2);
    TorqueSample out;
    for (std::size_t j = start; j < start + 4; ++j) {
      double w = 1.0;
      for (std::size_t m = start; m < start + 4; ++m) {
        if (m != j) w *= (at - t[m]) / (t[j] - t[m]);
      }
      out.tau_delta += w * tq[j].tau_delta;
      out.tau_phir += w * tq[j].tau_phir;
    }
    return out;
  };
}

DaeTrajectory simulate_dae(const BicycleParams& p, const FullState& fs0,
                           const TorqueSchedule& torques, double t_max, double dt_out,
                           const DaeOptions& opt) {
  if (!(t_max > 0.0) || !(dt_out > 0.0)) {
    throw Error(ErrorKind::ValidationError, "t_max and dt_out must be positive");
  }
  auto unpack = [](const ode::Vector& y) {
    return FullState{Config::from_vector(y.head<9>()), y.tail<9>()};
  };
  auto pack = [](const FullState& fs) {
    ode::Vector y(18);
    y << fs.config.vector(), fs.qdot;
    return y;
  };

  ode::Rhs rhs = [&](double t, const ode::Vector& y, ode::Vector& dy) {
    const FullState fs = unpack(y);
    const KktSolution sol = dae_accelerations(p, fs, torques(t));
    dy.resize(18);
    dy << fs.qdot, sol.qddot;
  };

  DaeTrajectory out;
  auto record = [&](double t, const FullState& raw) {
    const FullState fs = project(p, raw, opt.projection_tol);
    const KktSolution sol = dae_accelerations(p, fs, torques(t));
    const ConstraintResiduals r = constraint_residuals(p, fs);
    out.worst.position = std::max(out.worst.position, r.position);
    out.worst.velocity = std::max(out.worst.velocity, r.velocity);
    out.t.push_back(t);
    out.states.push_back(fs);
    out.normal_forces.emplace_back(sol.lambda(2), sol.lambda(5));
  };

  const FullState start = project(p, fs0, opt.projection_tol);
  record(0.0, start);

  const long count = static_cast<long>(std::floor(t_max / dt_out * (1.0 + 1e-12)));
  long next = 1;
  ode::Options o;
  o.rtol = opt.rtol;
  o.atol = opt.atol;
  ode::integrate(
      rhs, 0.0, pack(start), t_max, o,
      [&](const ode::DenseSegment& seg) {
        while (next <= count) {
          const double ts = std::min(static_cast<double>(next) * dt_out, t_max);
          if (ts > seg.t1()) break;
          record(ts, unpack(seg(ts)));
          ++next;
        }
        return true;
      },
      [&](double, ode::Vector& y) { y = pack(project(p, unpack(y), opt.projection_tol)); });
  return out;
}

}  // namespace whipple
