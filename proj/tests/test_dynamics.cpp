#include <cmath>
#include <complex>
#include <functional>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "whipple/controlled_motion.hpp"
#include "whipple/dynamics.hpp"
#include "whipple/oracle_dae.hpp"

using namespace whipple;

namespace {

const BicycleParams kP = BicycleParams::paper_table1();

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
  ClosedForm f;
  f.c133_delta = -rr * cl / (rf * p.w) *
                 (p.front_wheel.Iyy * rr + p.rear_wheel.Iyy * rf + mf * rr * rf * rf +
                  mr * rr * rr * rf + mb * zb * rr * rf + mh * zh * rr * rf);
  f.P1_theta = (mr * rr + mf * rf + mb * zb + mh * zh) * p.g;
  f.P1_delta = -p.g * p.c * cl / p.w * (mb * xb + mh * xh) - mf * p.g * rf * sl +
               mh * p.g * ((p.w + p.c - xh) * cl - zh * sl);
  return f;
}

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); }

double max_real(const std::vector<std::complex<double>>& ev, bool oscillatory) {
  double m = -1e300;
  for (const auto& e : ev) {
    if ((std::abs(e.imag()) > 1e-9) == oscillatory) m = std::max(m, e.real());
  }
  return m;
}

double bisect(double a, double b, const std::function<bool(double)>& unstable_at_a) {
  const bool sa = unstable_at_a(a);
  for (int i = 0; i < 80; ++i) {
    const double m = 0.5 * (a + b);
    if (unstable_at_a(m) == sa) {
      a = m;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

}  // namespace

TEST(Dynamics, StructuralIdentities) {
  const IdentityReport r = verify_structural_identities(kP);
  EXPECT_FALSE(r.residuals.empty());
  for (const auto& x : r.residuals) EXPECT_LT(x.max_residual, 1e-8) << x.name;
  EXPECT_TRUE(r.passed());
}

TEST(Dynamics, ClosedFormPartialsDefaultBike) {
  const ClosedForm f = closed_form(kP);
  const CoefficientPartials cp = coefficient_partials(kP, {0.0, 0.0});
  EXPECT_LT(rel(cp.dc133_ddelta, f.c133_delta), 1e-6);
  EXPECT_LT(rel(cp.dP1_dtheta, f.P1_theta), 1e-6);
  EXPECT_LT(rel(cp.dP1_ddelta, f.P1_delta), 1e-6);
  EXPECT_TRUE(cp.richardson_consistent);
}

TEST(Dynamics, ClosedFormPartialsOtherGeometry) {
  const BicycleParams b = BicycleParams::benchmark();
  const ClosedForm f = closed_form(b);
  const CoefficientPartials cp = coefficient_partials(b, {0.0, 0.0});
  EXPECT_LT(rel(cp.dc133_ddelta, f.c133_delta), 1e-6);
  EXPECT_LT(rel(cp.dP1_dtheta, f.P1_theta), 1e-6);
  EXPECT_LT(rel(cp.dP1_ddelta, f.P1_delta), 1e-6);
}

TEST(Dynamics, SignsAtOrigin) {
  const CoefficientPartials cp = coefficient_partials(kP, {0.0, 0.0});
  EXPECT_LT(cp.dc133_ddelta, 0.0);
  EXPECT_GT(cp.dP1_dtheta, 0.0);
  EXPECT_LT(cp.dP1_ddelta, 0.0);
  EXPECT_LT(cp.c123_plus_c132, 0.0);
  EXPECT_NEAR(cp.c113_plus_c131, 0.0, 1e-10);
  EXPECT_NEAR(cp.dc133_dtheta, 0.0, 1e-8);
  const ReducedCoefficients rc = reduced_coeffs(kP, {0.0, 0.0});
  EXPECT_DOUBLE_EQ(rc.c[0](1, 2), rc.c[0](2, 1));
}

TEST(Dynamics, MassMatrixPositiveDefinite) {
  for (double th = -0.8; th <= 0.8; th += 0.2) {
    for (double de = -0.8; de <= 0.8; de += 0.2) {
      const ReducedCoefficients rc = reduced_coeffs(kP, {th, de});
      EXPECT_LT((rc.m - rc.m.transpose()).cwiseAbs().maxCoeff(), 1e-12);
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(rc.m);
      EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
      for (int i = 0; i < 3; ++i) {
        EXPECT_LT((rc.c[i] - rc.c[i].transpose()).cwiseAbs().maxCoeff(), 1e-12);
      }
    }
  }
}

TEST(Dynamics, ReducedTermsAgreeWithCoefficients) {
  const ShapeCoords s{0.2, -0.6};
  const Eigen::Vector3d sd(0.3, -1.1, 4.0);
  const ReducedCoefficients rc = reduced_coeffs(kP, s);
  const ReducedTerms rt = reduced_terms(kP, s, sd);
  EXPECT_LT((rc.m - rt.m).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((rc.P - rt.P).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((rc.quadratic(sd) - rt.quadratic).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Dynamics, GravityIsPotentialGradient) {
  const double h = 1e-5;
  auto v = [&](double th, double de) { return potential_energy(kP, constrained_config(kP, {th, de})); };
  for (auto [th, de] : {std::pair{0.1, -0.4}, {0.3, 0.5}, {-0.2, 0.1}}) {
    const ReducedCoefficients rc = reduced_coeffs(kP, {th, de});
    const double dth = (v(th + h, de) - v(th - h, de)) / (2 * h);
    const double dde = (v(th, de + h) - v(th, de - h)) / (2 * h);
    EXPECT_NEAR(rc.P(0), -dth, 1e-7);
    EXPECT_NEAR(rc.P(1), -dde, 1e-7);
    EXPECT_NEAR(rc.P(2), 0.0, 1e-12);
  }
}

TEST(Dynamics, KineticEnergyFromBodies) {
  const ShapeCoords s{0.25, -0.45};
  const Eigen::Vector3d sd(0.7, -0.2, 5.0);
  const FullState fs = full_state(kP, s, sd);
  const MotionSample m = evaluate_motion(kP, fs.config.vector(), fs.qdot, Vector9d::Zero());
  double t = 0.0;
  for (std::size_t b = 0; b < kBodyCount; ++b) {
    const auto& bm = m.bodies[b];
    const Eigen::Matrix3d inertia = world_inertia(kP, static_cast<Body>(b), bm.rotation);
    t += 0.5 * body_mass(kP, static_cast<Body>(b)) * bm.velocity.squaredNorm() +
         0.5 * bm.omega.dot(inertia * bm.omega);
  }
  const ReducedCoefficients rc = reduced_coeffs(kP, s);
  EXPECT_NEAR(0.5 * sd.dot(rc.m * sd), t, 1e-10 * t);
}

// The reduced equations must reproduce the accelerations of the multiplier
// formulation for arbitrary states.
TEST(Dynamics, ReducedMatchesKkt) {
  std::mt19937 rng(11);
  std::uniform_real_distribution<double> shape(-0.6, 0.6), rate(-2.0, 2.0), wheel(0.0, 8.0);
  for (int k = 0; k < 20; ++k) {
    const ShapeCoords s{shape(rng), shape(rng)};
    const Eigen::Vector3d sd(rate(rng), rate(rng), wheel(rng));
    const Eigen::Vector3d acc = free_acceleration(kP, s, sd);
    const KktSolution kkt = dae_accelerations(kP, full_state(kP, s, sd), {});
    EXPECT_NEAR(acc(0), kkt.qddot(kTheta), 1e-9 * std::max(1.0, std::abs(acc(0))));
    EXPECT_NEAR(acc(1), kkt.qddot(kDelta), 1e-9 * std::max(1.0, std::abs(acc(1))));
    EXPECT_NEAR(acc(2), kkt.qddot(kPhiR), 1e-9 * std::max(1.0, std::abs(acc(2))));
  }
}

TEST(Dynamics, ControlTorquesEnforceLaw) {
  const ControlLaw law{-4.0, 5.0};
  const LeanState st{0.12, -0.3};
  const double acc = lean_acceleration(kP, law, st);
  const TorqueSample tq = control_torques(kP, law, st, acc);
  const FullState fs =
      full_state(kP, {st.theta, law.c1 * st.theta}, {st.theta_dot, law.c1 * st.theta_dot, law.omega0});
  const KktSolution kkt = dae_accelerations(kP, fs, tq);
  EXPECT_NEAR(kkt.qddot(kTheta), acc, 1e-9);
  EXPECT_NEAR(kkt.qddot(kDelta), law.c1 * acc, 1e-9);
  EXPECT_NEAR(kkt.qddot(kPhiR), 0.0, 1e-9);
}

TEST(Dynamics, BenchmarkEigenvalueSpeeds) {
  const BicycleParams b = BicycleParams::benchmark();
  const LinearizedFreeModel model = linearize_free(b);
  const double r = b.rear_wheel.R;
  const double weave = bisect(3.0, 5.0, [&](double v) {
    return max_real(free_eigenvalues(model, v / r), true) > 0.0;
  });
  const double capsize = bisect(5.0, 7.0, [&](double v) {
    return max_real(free_eigenvalues(model, v / r), false) > 0.0;
  });
  EXPECT_NEAR(weave, 4.29238, 1e-4);
  EXPECT_NEAR(capsize, 6.02426, 1e-4);
}

TEST(Dynamics, BenchmarkEigenvaluesAtFiveMetresPerSecond) {
  // Published values at v = 5 m/s: weave -0.77534188 +/- 4.46486771i,
  // capsize -0.32286642, castering -14.07838969.
  const BicycleParams b = BicycleParams::benchmark();
  const auto ev = free_eigenvalues(linearize_free(b), 5.0 / b.rear_wheel.R);
  ASSERT_EQ(ev.size(), 4u);
  auto has = [&](std::complex<double> z) {
    for (const auto& e : ev) {
      if (std::abs(e - z) < 1e-6) return true;
    }
    return false;
  };
  EXPECT_TRUE(has({-0.77534188, 4.46486771}));
  EXPECT_TRUE(has({-0.77534188, -4.46486771}));
  EXPECT_TRUE(has({-0.32286642, 0.0}));
  EXPECT_TRUE(has({-14.07838969, 0.0}));
}

TEST(Dynamics, EnergyConservedFreeMotion) {
  SimulationOptions opt;
  opt.rtol = 1e-11;
  opt.atol = 1e-13;
  const Eigen::Vector3d s0(0.02, 0.0, 0.0), sd0(0.0, 0.0, 6.0);
  const FreeTrajectory tr = simulate_free(kP, s0, sd0, 0.6, 0.05, opt);
  const double e0 = total_energy(kP, {s0(0), s0(1)}, sd0);
  for (std::size_t i = 0; i < tr.t.size(); ++i) {
    const double e = total_energy(kP, {tr.sigma[i](0), tr.sigma[i](1)}, tr.sigma_dot[i]);
    EXPECT_NEAR(e, e0, 1e-9 * std::abs(e0)) << "t=" << tr.t[i];
  }
}
