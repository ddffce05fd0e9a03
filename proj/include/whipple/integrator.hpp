#pragma once

// Dormand-Prince 5(4) with Hairer's continuous extension and scalar event
// location on the dense output.

#include <array>
#include <functional>
#include <optional>

#include <Eigen/Core>

namespace whipple::ode {

using Vector = Eigen::VectorXd;

/// dydt = f(t, y). May throw whipple::Error; the trial step is then rejected.
using Rhs = std::function<void(double t, const Vector& y, Vector& dydt)>;

struct Options {
  double rtol = 1e-9;
  double atol = 1e-12;
  double initial_step = 0.0;  // 0 picks one from the RHS scale
  double max_step = 0.0;      // 0 means unbounded
  long max_steps = 10'000'000;
};

/// Interpolant over one accepted step [t0, t0 + h].
class DenseSegment {
 public:
  DenseSegment() = default;
  DenseSegment(double t0, double h, std::array<Vector, 5> coeffs)
      : t0_(t0), h_(h), r_(std::move(coeffs)) {}

  [[nodiscard]] double t0() const { return t0_; }
  [[nodiscard]] double t1() const { return t0_ + h_; }
  [[nodiscard]] double h() const { return h_; }

  [[nodiscard]] Vector operator()(double t) const;
  [[nodiscard]] Vector derivative(double t) const;

 private:
  double t0_ = 0.0;
  double h_ = 0.0;
  std::array<Vector, 5> r_;
};

struct Stats {
  long accepted = 0;
  long rejected = 0;
  long evaluations = 0;
};

/// Called after each accepted step; return false to stop.
using StepObserver = std::function<bool(const DenseSegment& seg)>;

struct Result {
  double t = 0.0;
  Vector y;
  bool stopped = false;  // observer asked to stop before reaching t_end
  Stats stats;
};

/// Maps an accepted state back onto a manifold; runs after the observer.
using Projector = std::function<void(double t, Vector& y)>;

/// Integrates from (t0, y0) to t_end. Throws Error(IntegratorFailure) when
/// the step size collapses or the step budget runs out.
Result integrate(const Rhs& f, double t0, const Vector& y0, double t_end, const Options& opt,
                 const StepObserver& observer = {}, const Projector& project = {});

/// First root of g on the segment where g changes sign between the ends,
/// refined by bisection on the interpolant to `tol` in time.
std::optional<double> locate_event(const DenseSegment& seg,
                                   const std::function<double(double, const Vector&)>& g,
                                   double tol = 1e-13);

}  // namespace whipple::ode
