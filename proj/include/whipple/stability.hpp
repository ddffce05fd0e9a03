#pragma once

// Equilibria of the controlled lean dynamics, their linear stability, and
// continuation over the commanded rear wheel rate.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "whipple/controlled_motion.hpp"
#include "whipple/params.hpp"

namespace whipple {

enum class Stability { Stable, Unstable, Marginal };

std::string_view to_string(Stability s);

/// x2 * ddx + x1 * dx + x0 * x = 0 (a-coefficients at the upright motion,
/// b-coefficients elsewhere).
struct LinearCoeffs {
  double x2 = 0.0;
  double x1 = 0.0;
  double x0 = 0.0;
};

inline constexpr double kMarginalTolerance = 1e-12;

/// Strict-sign Hurwitz test for a second-order equation.
Stability hurwitz_stable(const LinearCoeffs& lc);

LinearCoeffs linearize_trivial(const BicycleParams& p, const ControlLaw& law);

/// Rear wheel rate above which upright straight running is stable.
/// Throws Error(NoCriticalSpeed) when no positive rate exists.
double critical_speed(const BicycleParams& p, double c1);

/// sqrt(P1_delta / c133_delta) at the origin, the c1 -> -inf limit.
double critical_speed_limit(const BicycleParams& p);

struct ThetaRange {
  double lo = -0.5;
  double hi = 0.5;
};

inline constexpr double kScanStep = 1e-3;

struct EquilibriumPoint {
  double theta0 = 0.0;
  Stability stability = Stability::Marginal;
  LinearCoeffs coeffs;
  double residual = 0.0;  // c133 * omega0^2 - P1 at theta0
};

/// All equilibria in `range` (clipped to the shape domain), sorted by theta0;
/// theta0 = 0 is always included.
std::vector<EquilibriumPoint> find_equilibria(const BicycleParams& p, const ControlLaw& law,
                                              ThetaRange range = {});

/// Throws Error(NotAnEquilibrium) if |c133 omega0^2 - P1| > 1e-8 at theta0.
LinearCoeffs linearize_at(const BicycleParams& p, const ControlLaw& law, double theta0);

struct CriticalSpeeds {
  double omega_c = 0.0;
  std::optional<double> omega_c_prime;
  std::optional<double> omega_c_double_prime;
};

struct BranchPoint {
  double omega0 = 0.0;
  double theta0 = 0.0;
  Stability stability = Stability::Marginal;
};

struct Branch {
  bool trivial = false;
  std::vector<BranchPoint> points;
};

struct BifurcationDiagram {
  double c1 = 0.0;
  std::vector<double> omega_grid;
  /// Equilibria at each grid rate, in grid order.
  std::vector<std::vector<EquilibriumPoint>> equilibria;
  std::vector<Branch> branches;
  CriticalSpeeds speeds;
  std::vector<std::string> warnings;
};

struct BifurcationOptions {
  ThetaRange range;
  /// Worker threads; 0 reads BIKE_NUM_THREADS and falls back to all cores.
  unsigned threads = 0;
};

/// Worker count from BIKE_NUM_THREADS (0 or unset means all cores).
unsigned default_thread_count();

BifurcationDiagram bifurcation_diagram(const BicycleParams& p, double c1,
                                       const std::vector<double>& omega_grid,
                                       const BifurcationOptions& opt = {});

/// |theta0| of the nearest unstable nontrivial equilibrium, or nullopt.
/// Throws Error(TrivialUnstable) if the upright motion is not stable.
std::optional<double> basin_radius_estimate(const BicycleParams& p, const ControlLaw& law,
                                            ThetaRange range = {});

}  // namespace whipple
