// Acceptance checks. One PASS/FAIL line per criterion; exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "whipple/whipple.hpp"

using namespace whipple;

namespace {

const BicycleParams kP = BicycleParams::paper_table1();

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

std::string str(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void report(int id, const char* name, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("[%s] %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
  std::fflush(stdout);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Closed forms of the three partials that set the critical speed.
struct ClosedForm {
  double c133_delta, P1_theta, P1_delta;
};

ClosedForm closed_form(const BicycleParams& p) {
  const double rr = p.rear_wheel.R, rf = p.front_wheel.R;
  const double cl = std::cos(p.lambda), sl = std::sin(p.lambda);
  const double mr = p.rear_wheel.m, mf = p.front_wheel.m;
  const double mb = p.rear_frame.m, mh = p.front_frame.m;
  const double xb = p.rear_frame.x, zb = p.rear_frame.z;
  const double xh = p.front_frame.x, zh = p.front_frame.z;
  return {-rr * cl / (rf * p.w) *
              (p.front_wheel.Iyy * rr + p.rear_wheel.Iyy * rf + mf * rr * rf * rf +
               mr * rr * rr * rf + mb * zb * rr * rf + mh * zh * rr * rf),
          (mr * rr + mf * rf + mb * zb + mh * zh) * p.g,
          -p.g * p.c * cl / p.w * (mb * xb + mh * xh) - mf * p.g * rf * sl +
              mh * p.g * ((p.w + p.c - xh) * cl - zh * sl)};
}

Outcome critical_speed_check() {
  const auto t0 = std::chrono::steady_clock::now();
  const double wc = critical_speed(kP, -4.0);
  const double dt = seconds_since(t0);
  return {std::abs(wc - 6.26) <= 0.01 && dt < 1.0,
          str("omega_c = %.6f rad/s (6.26 +/- 0.01), %.3f s (< 1 s)", wc, dt)};
}

Outcome fold_and_flip() {
  std::vector<double> grid(600);
  for (int i = 0; i < 600; ++i) grid[static_cast<std::size_t>(i)] = 1.0 + 8.0 * i / 599.0;
  BifurcationOptions opt;
  opt.threads = 1;
  const auto t0 = std::chrono::steady_clock::now();
  const BifurcationDiagram d = bifurcation_diagram(kP, -4.0, grid, opt);
  const double dt = seconds_since(t0);
  const double wp = d.speeds.omega_c_prime.value_or(NAN);
  const double wpp = d.speeds.omega_c_double_prime.value_or(NAN);
  const bool ok = std::abs(wp - 3.73) <= 0.01 && std::abs(wpp - 3.84) <= 0.02 && dt < 60.0;
  return {ok, str("omega_c' = %.5f (3.73 +/- 0.01), omega_c'' = %.5f (3.84 +/- 0.02), "
                  "600 points single-threaded in %.2f s (< 60 s)",
                  wp, wpp, dt)};
}

Outcome steady_turn_roots() {
  const auto eq = find_equilibria(kP, {-4.0, 6.0});
  std::vector<double> stable;
  for (const auto& e : eq) {
    if (e.theta0 != 0.0 && e.stability == Stability::Stable) stable.push_back(e.theta0);
  }
  if (stable.size() != 2) return {false, str("%zu stable nontrivial roots, expected 2", stable.size())};
  const bool ok = std::abs(stable[0] + 0.0938) <= 0.0005 && std::abs(stable[1] - 0.0938) <= 0.0005;
  return {ok, str("stable roots %.6f, %.6f rad (+/-0.0938 +/- 0.0005)", stable[0], stable[1])};
}

Outcome upright_recovery() {
  const Trajectory tr = simulate(kP, {-4.0, 7.0}, {0.0, 0.2}, 30.0, 0.01);
  if (tr.domain_exit) return {false, "fell"};
  auto settled = [&](std::size_t i) {
    return std::abs(tr.state[i].theta) < 1e-3 && std::abs(tr.torque[i].tau_delta) < 1e-3 &&
           std::abs(tr.torque[i].tau_phir) < 1e-3;
  };
  std::size_t first = tr.t.size();
  for (std::size_t i = tr.t.size(); i-- > 0;) {
    if (!settled(i)) break;
    first = i;
  }
  const bool ok = first < tr.t.size() && tr.t[first] < 30.0;
  return {ok, str("|theta|, |tau_delta|, |tau_phir| < 1e-3 from t = %.2f s on (< 30 s); "
                  "at 30 s: theta = %.2e, tau_delta = %.2e, tau_phir = %.2e",
                  ok ? tr.t[first] : NAN, tr.state.back().theta, tr.torque.back().tau_delta,
                  tr.torque.back().tau_phir)};
}

Outcome steady_turn_convergence() {
  const Trajectory tr = simulate(kP, {-4.0, 6.0}, {0.0, 0.2}, 30.0, 0.01);
  if (tr.domain_exit) return {false, "fell"};
  const double th = tr.state.back().theta;
  const TorqueSample tq = tr.torque.back();
  const bool ok = std::abs(th - 0.0938) <= 0.001 && std::abs(tq.tau_phir) < 1e-3 &&
                  std::abs(tq.tau_delta) > 1e-3;
  return {ok, str("theta(30) = %.6f (0.0938 +/- 0.001), tau_phir = %.2e (< 1e-3), "
                  "tau_delta = %.4f (> 1e-3)",
                  th, tq.tau_phir, tq.tau_delta)};
}

Outcome structural_identities() {
  const IdentityReport r = verify_structural_identities(kP);
  return {r.passed(1e-8), str("worst residual %.2e over %zu identities (< 1e-8)", r.worst(),
                              r.residuals.size())};
}

Outcome closed_forms() {
  const ClosedForm f = closed_form(kP);
  const CoefficientPartials cp = coefficient_partials(kP, {0.0, 0.0});
  auto rel = [](double a, double b) { return std::abs(a - b) / std::abs(b); };
  const double e1 = rel(cp.dc133_ddelta, f.c133_delta);
  const double e2 = rel(cp.dP1_dtheta, f.P1_theta);
  const double e3 = rel(cp.dP1_ddelta, f.P1_delta);
  const double worst = std::max({e1, e2, e3});
  return {worst < 1e-6, str("relative errors c133_delta %.1e, P1_theta %.1e, P1_delta %.1e (< 1e-6)",
                            e1, e2, e3)};
}

Outcome inertia_independence() {
  const double base = critical_speed(kP, -4.0);
  std::vector<std::function<double&(BicycleParams&)>> fields = {
      [](BicycleParams& q) -> double& { return q.rear_wheel.Ixx; },
      [](BicycleParams& q) -> double& { return q.front_wheel.Ixx; },
      [](BicycleParams& q) -> double& { return q.rear_frame.Ixx; },
      [](BicycleParams& q) -> double& { return q.rear_frame.Iyy; },
      [](BicycleParams& q) -> double& { return q.rear_frame.Izz; },
      [](BicycleParams& q) -> double& { return q.rear_frame.Ixz; },
      [](BicycleParams& q) -> double& { return q.front_frame.Ixx; },
      [](BicycleParams& q) -> double& { return q.front_frame.Iyy; },
      [](BicycleParams& q) -> double& { return q.front_frame.Izz; },
      [](BicycleParams& q) -> double& { return q.front_frame.Ixz; },
  };
  double worst = 0.0;
  int runs = 0;
  for (double f : {0.5, 1.5}) {
    BicycleParams all = kP;
    for (const auto& fld : fields) {
      BicycleParams q = kP;
      fld(q) *= f;
      fld(all) *= f;
      worst = std::max(worst, std::abs(critical_speed(q, -4.0) / base - 1.0));
      ++runs;
    }
    worst = std::max(worst, std::abs(critical_speed(all, -4.0) / base - 1.0));
    ++runs;
  }
  return {worst < 1e-9, str("max relative change %.1e over %d perturbations of +/-50%% (< 1e-9)",
                            worst, runs)};
}

Outcome monotone_critical_speed() {
  double prev = 0.0;
  int violations = 0;
  for (int i = 0; i <= 95; ++i) {
    const double wc = critical_speed(kP, -10.0 + 0.1 * i);
    if (i > 0 && !(wc > prev)) ++violations;
    prev = wc;
  }
  const ClosedForm f = closed_form(kP);
  const double limit = std::sqrt(f.P1_delta / f.c133_delta);
  const double big = critical_speed(kP, -1e6);
  const double rel = std::abs(big / limit - 1.0);
  return {violations == 0 && rel < 1e-4,
          str("%d monotonicity violations over c1 in [-10, -0.5]; omega_c(c1 = -1e6) = %.6f vs "
              "limit %.6f, relative %.1e (< 1e-4)",
              violations, big, limit, rel)};
}

Outcome oracle_equivalence() {
  std::mt19937 rng(20240611);
  std::uniform_real_distribution<double> c1d(-6.0, -3.0), wd(5.0, 9.0), thd(-0.1, 0.1), tdd(-0.3, 0.3);
  SimulationOptions opt;
  opt.rtol = 1e-11;
  opt.atol = 1e-13;
  double worst = 0.0;
  for (int k = 0; k < 5; ++k) {
    const ControlLaw law{c1d(rng), wd(rng)};
    const LeanState s0{thd(rng), tdd(rng)};
    const Trajectory tr = simulate(kP, law, s0, 1.0, 1e-3, opt);
    const FullState fs0 = full_state(kP, {s0.theta, law.c1 * s0.theta},
                                     {s0.theta_dot, law.c1 * s0.theta_dot, law.omega0});
    const DaeTrajectory dae = simulate_dae(kP, fs0, interpolate_torques(tr), 1.0, 1e-2);
    for (std::size_t i = 0; i < dae.t.size(); ++i) {
      worst = std::max(worst, std::abs(dae.states[i].config.theta - tr.state[i * 10].theta));
    }
  }

  // Free motion at a self-stable rate if there is one, else at the rate
  // where the upright motion grows slowest.
  const LinearizedFreeModel lin = linearize_free(kP);
  double rate = 0.0, best = 1e300;
  for (double w = 1.0; w <= 40.0; w += 0.25) {
    double m = -1e300;
    for (const auto& e : free_eigenvalues(lin, w)) m = std::max(m, e.real());
    if (m < best) {
      best = m;
      rate = w;
    }
  }
  SimulationOptions fopt;
  fopt.rtol = 1e-12;
  fopt.atol = 1e-14;
  const Eigen::Vector3d s0(0.01, 0.0, 0.0), sd0(0.0, 0.0, rate);
  const FreeTrajectory fr = simulate_free(kP, s0, sd0, 10.0, 0.01, fopt);
  const double e0 = total_energy(kP, {s0(0), s0(1)}, sd0);
  double drift = 0.0;
  for (std::size_t i = 0; i < fr.t.size(); ++i) {
    drift = std::max(drift, std::abs(total_energy(kP, {fr.sigma[i](0), fr.sigma[i](1)},
                                                  fr.sigma_dot[i]) / e0 - 1.0));
  }
  const bool ok = worst < 1e-6 && drift < 1e-8 && !fr.domain_exit;
  return {ok, str("max |theta_reduced - theta_dae| = %.1e over 5 runs x 1 s (< 1e-6); "
                  "energy drift %.1e over 10 s at %.2f rad/s (< 1e-8)",
                  worst, drift, rate)};
}

Outcome symmetry() {
  double worst = 0.0;
  int cases = 0;
  for (double c1 : {-2.0, -4.0, -8.0}) {
    for (double w : {0.4, 0.8, 1.1}) {
      const ControlLaw law{c1, w * critical_speed(kP, c1)};
      const auto eq = find_equilibria(kP, law);
      for (std::size_t i = 0; i < eq.size(); ++i) {
        const auto& m = eq[eq.size() - 1 - i];
        worst = std::max(worst, std::abs(eq[i].theta0 + m.theta0));
        if (eq[i].stability != m.stability) worst = 1.0;
      }
      // A run that ends in a singular lean inertia must do so on both sides.
      auto run = [&](LeanState s) -> std::optional<Trajectory> {
        try {
          return simulate(kP, law, s, 2.0, 0.02);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::IntegratorFailure) throw;
          return std::nullopt;
        }
      };
      const LeanState s0{0.005, 0.05};
      const auto ra = run(s0);
      const auto rb = run(s0.mirrored());
      ++cases;
      if (ra.has_value() != rb.has_value()) worst = 1.0;
      if (!ra || !rb) continue;
      const Trajectory& a = *ra;
      const Trajectory& b = *rb;
      if (a.t.size() != b.t.size()) worst = 1.0;
      for (std::size_t i = 0; i < std::min(a.t.size(), b.t.size()); ++i) {
        worst = std::max({worst, std::abs(a.state[i].theta + b.state[i].theta),
                          std::abs(a.state[i].theta_dot + b.state[i].theta_dot),
                          std::abs(a.torque[i].tau_delta + b.torque[i].tau_delta),
                          std::abs(a.torque[i].tau_phir - b.torque[i].tau_phir)});
      }
      const PlanarPath pa = reconstruct_path(kP, a);
      const PlanarPath pb = reconstruct_path(kP, b);
      for (std::size_t i = 0; i < std::min(pa.t.size(), pb.t.size()); ++i) {
        worst = std::max({worst, std::abs(pa.x[i] - pb.x[i]), std::abs(pa.y[i] + pb.y[i]),
                          std::abs(pa.psi[i] + pb.psi[i])});
      }
    }
  }
  return {worst < 1e-8, str("max mirror mismatch %.1e over %d (c1, omega0) cases (< 1e-8)", worst, cases)};
}

Outcome circular_path() {
  const ControlLaw law{-4.0, 6.0};
  double th0 = 0.0;
  for (const auto& e : find_equilibria(kP, law)) {
    if (e.theta0 > 0.0 && e.stability == Stability::Stable) th0 = e.theta0;
  }
  const PlanarRates r = planar_rates(kP, {th0, law.c1 * th0}, {0.0, 0.0, law.omega0});
  const double speed = std::hypot(r.forward, r.lateral);
  const double expected = speed / std::abs(r.yaw);
  const double period = 2.0 * std::numbers::pi / std::abs(r.yaw);
  const Trajectory tr = simulate(kP, law, {th0, 0.0}, period, period / 400.0);
  const PlanarPath path = reconstruct_path(kP, tr);

  // Algebraic circle fit: x^2 + y^2 + D x + E y + F = 0.
  const auto n = static_cast<Eigen::Index>(path.t.size());
  Eigen::MatrixXd a(n, 3);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = path.x[static_cast<std::size_t>(i)], y = path.y[static_cast<std::size_t>(i)];
    a.row(i) << x, y, 1.0;
    b(i) = -(x * x + y * y);
  }
  const Eigen::Vector3d c = a.colPivHouseholderQr().solve(b);
  const double cx = -c(0) / 2, cy = -c(1) / 2;
  const double fitted = std::sqrt(cx * cx + cy * cy - c(2));
  const double rel = std::abs(fitted / expected - 1.0);
  const double closure = std::hypot(path.x.back(), path.y.back()) / expected;
  return {rel < 1e-4 && closure < 1e-4,
          str("fitted radius %.6f m vs speed/yaw rate %.6f m, relative %.1e (< 1e-4); "
              "closure after one turn %.1e radii",
              fitted, expected, rel, closure)};
}

}  // namespace

int main() {
  report(1, "critical speed", critical_speed_check);
  report(2, "fold and flip points", fold_and_flip);
  report(3, "steady-turn equilibrium", steady_turn_roots);
  report(4, "recovery above critical speed", upright_recovery);
  report(5, "convergence to steady turn", steady_turn_convergence);
  report(6, "structural identities", structural_identities);
  report(7, "closed-form partials", closed_forms);
  report(8, "critical speed inertia independence", inertia_independence);
  report(9, "critical speed monotone in c1", monotone_critical_speed);
  report(10, "oracle equivalence", oracle_equivalence);
  report(11, "mirror symmetry", symmetry);
  report(12, "circular path", circular_path);
  std::printf("%d of 12 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
