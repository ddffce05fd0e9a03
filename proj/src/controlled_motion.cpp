#include "whipple/controlled_motion.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <Eigen/Cholesky>

#include "whipple/dynamics.hpp"
#include "whipple/error.hpp"

namespace whipple {
namespace {

double fall_limit(const SimulationOptions& opt) { return std::numbers::pi / 2.0 - opt.fall_margin; }

// The RHS keeps working a little past the fall threshold so trial stages
// straddling it do not fail.
double rhs_margin(const SimulationOptions& opt) { return 0.5 * opt.fall_margin; }

void check_times(double t_max, double dt_out) {
  if (!(t_max > 0.0) || !(dt_out > 0.0) || !std::isfinite(t_max) || !std::isfinite(dt_out)) {
    throw Error(ErrorKind::ValidationError, "t_max and dt_out must be positive");
  }
}

// Drives output sampling at k * dt_out from the accepted dense segments.
class Sampler {
 public:
  Sampler(double t_max, double dt_out) : t_max_(t_max), dt_(dt_out) {
    count_ = static_cast<long>(std::floor(t_max / dt_out * (1.0 + 1e-12))) + 1;
  }

  // Calls emit(t, y) for every pending sample time in (t0, t_stop].
  template <class Emit>
  void drain(const ode::DenseSegment& seg, double t_stop, Emit&& emit) {
    while (next_ < count_) {
      const double ts = std::min(static_cast<double>(next_) * dt_, t_max_);
      if (ts > t_stop) break;
      emit(ts, seg(ts));
      ++next_;
    }
  }

  void skip_first() { next_ = 1; }

 private:
  double t_max_;
  double dt_;
  long count_ = 0;
  long next_ = 0;
};

}  // namespace

void validate(const ControlLaw& law) {
  if (!std::isfinite(law.c1)) throw Error(ErrorKind::ValidationError, "c1 must be finite");
  if (!std::isfinite(law.omega0) || law.omega0 < 0.0) {
    throw Error(ErrorKind::ValidationError, "omega0 must be finite and non-negative");
  }
}

ControlledTerms controlled_terms(const BicycleParams& p, const ControlLaw& law, LeanState s,
                                 double margin) {
  const ShapeCoords shape{s.theta, law.c1 * s.theta};
  const Eigen::Vector3d sd(s.theta_dot, law.c1 * s.theta_dot, law.omega0);
  const ReducedTerms rt = reduced_terms(p, shape, sd, margin);
  ControlledTerms out;
  out.M = rt.m.col(0) + law.c1 * rt.m.col(1);
  out.h = rt.quadratic - rt.P;
  return out;
}

namespace {

double solve_lean(const ControlledTerms& ct, LeanState s) {
  if (!(std::abs(ct.M(0)) >= kSingularMassTolerance)) {
    std::ostringstream msg;
    msg << "lean inertia m11 + c1*m12 = " << ct.M(0) << " vanishes at theta=" << s.theta;
    throw Error(ErrorKind::SingularMass, msg.str());
  }
  return -ct.h(0) / ct.M(0);
}

}  // namespace

double lean_acceleration(const BicycleParams& p, const ControlLaw& law, LeanState s) {
  return solve_lean(controlled_terms(p, law, s), s);
}

TorqueSample control_torques(const BicycleParams& p, const ControlLaw& law, LeanState s,
                             double theta_ddot) {
  const ControlledTerms ct = controlled_terms(p, law, s);
  return {ct.M(1) * theta_ddot + ct.h(1), ct.M(2) * theta_ddot + ct.h(2)};
}

ode::Rhs lean_rhs(const BicycleParams& p, const ControlLaw& law, double margin) {
  return [p, law, margin](double, const ode::Vector& y, ode::Vector& dy) {
    const LeanState s{y(0), y(1)};
    dy.resize(2);
    dy(0) = s.theta_dot;
    dy(1) = solve_lean(controlled_terms(p, law, s, margin), s);
  };
}

Trajectory simulate(const BicycleParams& p, const ControlLaw& law, LeanState s0, double t_max,
                    double dt_out, const SimulationOptions& opt) {
  validate(law);
  check_times(t_max, dt_out);
  const double limit = fall_limit(opt);
  const double slope = std::max(1.0, std::abs(law.c1));
  if (!(std::abs(s0.theta) * slope < limit)) {
    throw Error(ErrorKind::DomainError, "initial lean outside the domain");
  }

  Trajectory traj;
  traj.law = law;
  auto record = [&](double t, LeanState s) {
    const ControlledTerms ct = controlled_terms(p, law, s, rhs_margin(opt));
    const double acc = solve_lean(ct, s);
    traj.t.push_back(t);
    traj.state.push_back(s);
    traj.torque.push_back({ct.M(1) * acc + ct.h(1), ct.M(2) * acc + ct.h(2)});
  };
  record(0.0, s0);

  auto fall = [&](double, const ode::Vector& y) { return limit - std::abs(y(0)) * slope; };

  Sampler sampler(t_max, dt_out);
  sampler.skip_first();
  auto emit = [&](double t, const ode::Vector& y) { record(t, {y(0), y(1)}); };

  ode::Options o;
  o.rtol = opt.rtol;
  o.atol = opt.atol;
  o.max_steps = opt.max_steps;
  ode::Vector y0(2);
  y0 << s0.theta, s0.theta_dot;
  LeanState last = s0;
  try {
    const ode::Result res = ode::integrate(
        lean_rhs(p, law, rhs_margin(opt)), 0.0, y0, t_max, o, [&](const ode::DenseSegment& seg) {
          const ode::Vector end = seg(seg.t1());
          last = {end(0), end(1)};
          if (auto te = ode::locate_event(seg, fall)) {
            sampler.drain(seg, *te, emit);
            if (*te > traj.t.back()) emit(*te, seg(*te));
            traj.domain_exit = *te;
            return false;
          }
          sampler.drain(seg, seg.t1(), emit);
          return true;
        });
    traj.stats = res.stats;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::IntegratorFailure) throw;
    // Usually the lean inertia m11 + c1*m12 passing through zero.
    std::ostringstream msg;
    msg << e.what() << " (theta=" << last.theta << ", theta_dot=" << last.theta_dot;
    try {
      msg << ", m11 + c1*m12=" << controlled_terms(p, law, last, rhs_margin(opt)).M(0);
    } catch (const Error&) {
    }
    msg << ")";
    throw Error(ErrorKind::IntegratorFailure, msg.str());
  }
  return traj;
}

Eigen::Vector3d free_acceleration(const BicycleParams& p, ShapeCoords shape,
                                  const Eigen::Vector3d& sigma_dot, double margin) {
  const ReducedTerms rt = reduced_terms(p, shape, sigma_dot, margin);
  const Eigen::LDLT<Eigen::Matrix3d> ldlt(rt.m);
  if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().minCoeff() > 0.0)) {
    throw Error(ErrorKind::SingularMass, "reduced mass matrix is not positive definite");
  }
  return ldlt.solve(rt.P - rt.quadratic);
}

FreeTrajectory simulate_free(const BicycleParams& p, const Eigen::Vector3d& sigma0,
                             const Eigen::Vector3d& sigma_dot0, double t_max, double dt_out,
                             const SimulationOptions& opt) {
  check_times(t_max, dt_out);
  const double limit = fall_limit(opt);
  if (!(std::abs(sigma0(0)) < limit && std::abs(sigma0(1)) < limit)) {
    throw Error(ErrorKind::DomainError, "initial shape outside the domain");
  }
  const double margin = rhs_margin(opt);
  ode::Rhs rhs = [&p, margin](double, const ode::Vector& y, ode::Vector& dy) {
    dy.resize(6);
    const Eigen::Vector3d sd = y.tail<3>();
    dy.head<3>() = sd;
    dy.tail<3>() = free_acceleration(p, {y(0), y(1)}, sd, margin);
  };

  FreeTrajectory traj;
  auto emit = [&](double t, const ode::Vector& y) {
    traj.t.push_back(t);
    traj.sigma.push_back(y.head<3>());
    traj.sigma_dot.push_back(y.tail<3>());
  };
  ode::Vector y0(6);
  y0 << sigma0, sigma_dot0;
  emit(0.0, y0);

  auto fall = [&](double, const ode::Vector& y) {
    return limit - std::max(std::abs(y(0)), std::abs(y(1)));
  };
  Sampler sampler(t_max, dt_out);
  sampler.skip_first();
  ode::Options o;
  o.rtol = opt.rtol;
  o.atol = opt.atol;
  o.max_steps = opt.max_steps;
  const ode::Result res = ode::integrate(rhs, 0.0, y0, t_max, o, [&](const ode::DenseSegment& seg) {
    if (auto te = ode::locate_event(seg, fall)) {
      sampler.drain(seg, *te, emit);
      if (*te > traj.t.back()) emit(*te, seg(*te));
      traj.domain_exit = *te;
      return false;
    }
    sampler.drain(seg, seg.t1(), emit);
    return true;
  });
  traj.stats = res.stats;
  return traj;
}

PlanarRates planar_rates(const BicycleParams& p, ShapeCoords shape,
                         const Eigen::Vector3d& sigma_dot, double margin) {
  const HolonomicSolution sol = solve_holonomic(p, shape, 0.0, margin);
  Config c;
  c.z = sol.z;
  c.theta = shape.theta;
  c.pitch = sol.pitch;
  c.delta = shape.delta;
  const Vector9d qd = transfer_matrix(p, c) * sigma_dot;
  return {qd(kX), qd(kY), qd(kPsi)};
}

PlanarPath reconstruct_path(const BicycleParams& p, const Trajectory& traj,
                            const SimulationOptions& opt) {
  if (traj.t.empty()) return {};
  const ControlLaw law = traj.law;
  const double margin = rhs_margin(opt);
  const ode::Rhs lean = lean_rhs(p, law, margin);

  // y = (theta, theta_dot, x, y, psi); the lean rows repeat simulate's ODE.
  ode::Rhs rhs = [&](double t, const ode::Vector& y, ode::Vector& dy) {
    ode::Vector lean_y = y.head<2>();
    ode::Vector lean_dy(2);
    lean(t, lean_y, lean_dy);
    const Eigen::Vector3d sd(y(1), law.c1 * y(1), law.omega0);
    const PlanarRates r = planar_rates(p, {y(0), law.c1 * y(0)}, sd, margin);
    const double cp = std::cos(y(4)), sp = std::sin(y(4));
    dy.resize(5);
    dy.head<2>() = lean_dy;
    dy(2) = cp * r.forward - sp * r.lateral;
    dy(3) = sp * r.forward + cp * r.lateral;
    dy(4) = r.yaw;
  };

  PlanarPath path;
  auto emit = [&](double t, const ode::Vector& y) {
    path.t.push_back(t);
    path.x.push_back(y(2));
    path.y.push_back(y(3));
    path.psi.push_back(y(4));
  };
  ode::Vector y0 = ode::Vector::Zero(5);
  y0(0) = traj.state.front().theta;
  y0(1) = traj.state.front().theta_dot;
  emit(traj.t.front(), y0);
  if (traj.t.size() == 1) return path;

  std::size_t next = 1;
  ode::Options o;
  o.rtol = opt.rtol;
  o.atol = opt.atol;
  o.max_steps = opt.max_steps;
  ode::integrate(rhs, traj.t.front(), y0, traj.t.back(), o, [&](const ode::DenseSegment& seg) {
    while (next < traj.t.size() && traj.t[next] <= seg.t1()) {
      emit(traj.t[next], seg(traj.t[next]));
      ++next;
    }
    return true;
  });
  return path;
}

}  // namespace whipple
