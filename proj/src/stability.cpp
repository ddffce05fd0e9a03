#include "whipple/stability.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include "whipple/dynamics.hpp"
#include "whipple/error.hpp"

namespace whipple {
namespace {

constexpr double kEquilibriumTolerance = 1e-8;

struct LeanRow {
  double c133 = 0.0;
  double P1 = 0.0;
};

LeanRow lean_row(const BicycleParams& p, double c1, double theta) {
  const ReducedTerms rt = reduced_terms(p, {theta, c1 * theta}, Eigen::Vector3d::UnitZ());
  return {rt.quadratic(0), rt.P(0)};
}

bool same_sign(double a, double b) { return (a < 0.0) == (b < 0.0); }

// Brent's method on a bracketed sign change of f, run to machine precision.
template <class F>
double brent(F&& f, double a, double b, double fa, double fb) {
  double c = a, fc = fa, d = b - a, e = d;
  for (int it = 0; it < 200; ++it) {
    if ((fb > 0.0 && fc > 0.0) || (fb < 0.0 && fc < 0.0)) {
      c = a;
      fc = fa;
      d = e = b - a;
    }
    if (std::abs(fc) < std::abs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    const double tol = 2.0 * std::numeric_limits<double>::epsilon() * std::abs(b) + 1e-300;
    const double m = 0.5 * (c - b);
    if (std::abs(m) <= tol || fb == 0.0) return b;
    if (std::abs(e) >= tol && std::abs(fa) > std::abs(fb)) {
      double s = fb / fa, pp, q;
      if (a == c) {
        pp = 2.0 * m * s;
        q = 1.0 - s;
      } else {
        const double qa = fa / fc, r = fb / fc;
        pp = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
        q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (pp > 0.0) q = -q; else pp = -pp;
      if (2.0 * pp < std::min(3.0 * m * q - std::abs(tol * q), std::abs(e * q))) {
        e = d;
        d = pp / q;
      } else {
        d = m;
        e = m;
      }
    } else {
      d = m;
      e = m;
    }
    a = b;
    fa = fb;
    b += std::abs(d) > tol ? d : (m > 0.0 ? tol : -tol);
    fb = f(b);
  }
  return b;
}

// c133 and P1 on the lean scan grid, independent of omega0. The scan
// function is q(theta) = (c133 omega0^2 - P1) / theta, whose value at 0 is
// the trivial stiffness a0.
class Profile {
 public:
  Profile(const BicycleParams& p, double c1, ThetaRange range, unsigned threads = 1)
      : p_(p), c1_(c1) {
    const double limit = (std::numbers::pi / 2.0 - kDefaultDomainMargin - 2.0 * kPartialsStep -
                          1e-6) / std::max(1.0, std::abs(c1));
    lo_ = std::max(range.lo, -limit);
    hi_ = std::min(range.hi, limit);
    kmin_ = static_cast<long>(std::ceil(lo_ / kScanStep - 1e-9));
    kmax_ = static_cast<long>(std::floor(hi_ / kScanStep + 1e-9));
    const CoefficientPartials cp = coefficient_partials(p, {0.0, 0.0});
    dc0_ = cp.dc133_dtheta + c1 * cp.dc133_ddelta;
    dp0_ = cp.dP1_dtheta + c1 * cp.dP1_ddelta;

    const std::size_t n = kmax_ >= kmin_ ? static_cast<std::size_t>(kmax_ - kmin_ + 1) : 0;
    rows_.assign(n, LeanRow{std::numeric_limits<double>::quiet_NaN(),
                            std::numeric_limits<double>::quiet_NaN()});
    auto fill = [&](std::size_t i) {
      const long k = kmin_ + static_cast<long>(i);
      if (k == 0) return;
      try {
        rows_[i] = lean_row(p, c1, theta_of(k));
      } catch (const Error&) {
        // Left as NaN: no contact solution at this grid point.
      }
    };
    parallel_for(n, threads, fill);
  }

  [[nodiscard]] double c1() const { return c1_; }
  [[nodiscard]] double lo() const { return lo_; }
  [[nodiscard]] double hi() const { return hi_; }
  [[nodiscard]] long kmin() const { return kmin_; }
  [[nodiscard]] long kmax() const { return kmax_; }
  [[nodiscard]] static double theta_of(long k) { return static_cast<double>(k) * kScanStep; }

  [[nodiscard]] double q_grid(long k, double omega) const {
    if (k == 0) return dc0_ * omega * omega - dp0_;
    const LeanRow& r = rows_[static_cast<std::size_t>(k - kmin_)];
    return (r.c133 * omega * omega - r.P1) / theta_of(k);
  }

  [[nodiscard]] double q_exact(double theta, double omega) const {
    if (theta == 0.0) return dc0_ * omega * omega - dp0_;
    const LeanRow r = lean_row(p_, c1_, theta);
    return (r.c133 * omega * omega - r.P1) / theta;
  }

  // Grid cells [k, k+1] with a sign change of q at omega, within [klo, khi).
  template <class Visit>
  void scan(double omega, long klo, long khi, Visit&& visit) const {
    klo = std::max(klo, kmin_);
    khi = std::min(khi, kmax_);
    for (long k = klo; k < khi; ++k) {
      const double qa = q_grid(k, omega);
      const double qb = q_grid(k + 1, omega);
      if (!std::isfinite(qa) || !std::isfinite(qb)) continue;
      if (qa == 0.0) {
        visit(k, qa, qb);
      } else if (qb != 0.0 && !same_sign(qa, qb)) {
        visit(k, qa, qb);
      }
    }
  }

  [[nodiscard]] double polish(long k, double omega, double qa, double qb) const {
    const double a = theta_of(k), b = theta_of(k + 1);
    if (qa == 0.0) return a;
    return brent([&](double th) { return q_exact(th, omega); }, a, b, qa, qb);
  }

  template <class Body>
  static void parallel_for(std::size_t n, unsigned threads, Body&& body) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (threads == 1) {
      for (std::size_t i = 0; i < n; ++i) body(i);
      return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n && !failed; i = next++) {
          try {
            body(i);
          } catch (...) {
            if (!failed.exchange(true)) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (failure) std::rethrow_exception(failure);
  }

 private:
  const BicycleParams& p_;
  double c1_;
  double lo_ = 0.0, hi_ = 0.0;
  long kmin_ = 0, kmax_ = -1;
  double dc0_ = 0.0, dp0_ = 0.0;
  std::vector<LeanRow> rows_;
};

EquilibriumPoint classify(const BicycleParams& p, const ControlLaw& law, double theta0) {
  EquilibriumPoint e;
  e.theta0 = theta0;
  if (theta0 == 0.0) {
    e.coeffs = linearize_trivial(p, law);
    e.residual = 0.0;
  } else {
    const LeanRow r = lean_row(p, law.c1, theta0);
    e.residual = r.c133 * law.omega0 * law.omega0 - r.P1;
    e.coeffs = linearize_at(p, law, theta0);
  }
  e.stability = hurwitz_stable(e.coeffs);
  return e;
}

std::vector<EquilibriumPoint> equilibria_from(const BicycleParams& p, const Profile& prof,
                                              double omega0) {
  const ControlLaw law{prof.c1(), omega0};
  std::vector<double> roots{0.0};
  prof.scan(omega0, prof.kmin(), prof.kmax(), [&](long k, double qa, double qb) {
    roots.push_back(prof.polish(k, omega0, qa, qb));
  });
  std::sort(roots.begin(), roots.end());
  roots.erase(std::unique(roots.begin(), roots.end()), roots.end());
  std::vector<EquilibriumPoint> out;
  out.reserve(roots.size());
  for (double r : roots) out.push_back(classify(p, law, r));
  return out;
}

bool has_nontrivial(const Profile& prof, double omega0) {
  bool any = false;
  prof.scan(omega0, prof.kmin(), prof.kmax(), [&](long, double, double) { any = true; });
  return any;
}

}  // namespace

std::string_view to_string(Stability s) {
  switch (s) {
    case Stability::Stable: return "stable";
    case Stability::Unstable: return "unstable";
    case Stability::Marginal: return "marginal";
  }
  return "marginal";
}

Stability hurwitz_stable(const LinearCoeffs& lc) {
  const double c[3] = {lc.x2, lc.x1, lc.x0};
  for (double v : c) {
    if (!(std::abs(v) >= kMarginalTolerance)) return Stability::Marginal;
  }
  const bool pos = c[0] > 0.0;
  for (double v : c) {
    if ((v > 0.0) != pos) return Stability::Unstable;
  }
  return Stability::Stable;
}

LinearCoeffs linearize_trivial(const BicycleParams& p, const ControlLaw& law) {
  validate(law);
  const ReducedCoefficients rc = reduced_coeffs(p, {0.0, 0.0});
  const CoefficientPartials cp = coefficient_partials(p, {0.0, 0.0});
  const double w = law.omega0, c1 = law.c1;
  LinearCoeffs lc;
  lc.x2 = rc.m(0, 0) + c1 * rc.m(0, 1);
  lc.x1 = c1 * w * cp.c123_plus_c132;
  lc.x0 = c1 * cp.dc133_ddelta * w * w - cp.dP1_dtheta - c1 * cp.dP1_ddelta;
  return lc;
}

double critical_speed(const BicycleParams& p, double c1) {
  const CoefficientPartials cp = coefficient_partials(p, {0.0, 0.0});
  const double num = cp.dP1_dtheta + c1 * cp.dP1_ddelta;
  const double den = c1 * cp.dc133_ddelta;
  const double radicand = num / den;
  if (!std::isfinite(c1) || den == 0.0 || !std::isfinite(radicand) || !(radicand > 0.0)) {
    std::ostringstream msg;
    msg << "no critical speed for c1=" << c1 << " (radicand " << radicand << ")";
    throw Error(ErrorKind::NoCriticalSpeed, msg.str());
  }
  return std::sqrt(radicand);
}

double critical_speed_limit(const BicycleParams& p) {
  const CoefficientPartials cp = coefficient_partials(p, {0.0, 0.0});
  const double radicand = cp.dP1_ddelta / cp.dc133_ddelta;
  if (!(radicand > 0.0)) throw Error(ErrorKind::NoCriticalSpeed, "limit radicand not positive");
  return std::sqrt(radicand);
}

LinearCoeffs linearize_at(const BicycleParams& p, const ControlLaw& law, double theta0) {
  validate(law);
  const double c1 = law.c1, w = law.omega0;
  const ShapeCoords shape{theta0, c1 * theta0};
  const ReducedCoefficients rc = reduced_coeffs(p, shape);
  const double residual = rc.c[0](2, 2) * w * w - rc.P(0);
  if (!(std::abs(residual) <= kEquilibriumTolerance)) {
    std::ostringstream msg;
    msg << "theta0=" << theta0 << " is not an equilibrium (residual " << residual << ")";
    throw Error(ErrorKind::NotAnEquilibrium, msg.str());
  }
  const CoefficientPartials cp = coefficient_partials(p, shape);
  LinearCoeffs lc;
  lc.x2 = rc.m(0, 0) + c1 * rc.m(0, 1);
  lc.x1 = c1 * w * cp.c123_plus_c132 + cp.c113_plus_c131 * w;
  lc.x0 = (cp.dc133_dtheta + c1 * cp.dc133_ddelta) * w * w - cp.dP1_dtheta - c1 * cp.dP1_ddelta;
  return lc;
}

std::vector<EquilibriumPoint> find_equilibria(const BicycleParams& p, const ControlLaw& law,
                                              ThetaRange range) {
  validate(law);
  const Profile prof(p, law.c1, range, default_thread_count());
  return equilibria_from(p, prof, law.omega0);
}

unsigned default_thread_count() {
  if (const char* env = std::getenv("BIKE_NUM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

// Greedy nearest-neighbour continuation of the nontrivial roots, one sign of
// theta0 at a time so mirrored branches stay separate.
std::vector<Branch> assemble_branches(const BifurcationDiagram& d) {
  std::vector<Branch> done;
  Branch trivial;
  trivial.trivial = true;
  for (std::size_t i = 0; i < d.omega_grid.size(); ++i) {
    for (const auto& e : d.equilibria[i]) {
      if (e.theta0 == 0.0) trivial.points.push_back({d.omega_grid[i], 0.0, e.stability});
    }
  }
  done.push_back(std::move(trivial));

  for (int side : {1, -1}) {
    std::vector<Branch> active;
    for (std::size_t i = 0; i < d.omega_grid.size(); ++i) {
      std::vector<const EquilibriumPoint*> roots;
      for (const auto& e : d.equilibria[i]) {
        if (e.theta0 * side > 0.0) roots.push_back(&e);
      }
      struct Pair {
        double dist;
        std::size_t b, r;
      };
      std::vector<Pair> pairs;
      for (std::size_t b = 0; b < active.size(); ++b) {
        for (std::size_t r = 0; r < roots.size(); ++r) {
          pairs.push_back({std::abs(active[b].points.back().theta0 - roots[r]->theta0), b, r});
        }
      }
      std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
        return a.dist != b.dist ? a.dist < b.dist : (a.b != b.b ? a.b < b.b : a.r < b.r);
      });
      std::vector<bool> b_used(active.size(), false), r_used(roots.size(), false);
      for (const Pair& pr : pairs) {
        if (b_used[pr.b] || r_used[pr.r]) continue;
        b_used[pr.b] = r_used[pr.r] = true;
        active[pr.b].points.push_back({d.omega_grid[i], roots[pr.r]->theta0, roots[pr.r]->stability});
      }
      std::vector<Branch> next;
      for (std::size_t b = 0; b < active.size(); ++b) {
        if (b_used[b]) next.push_back(std::move(active[b]));
        else done.push_back(std::move(active[b]));
      }
      for (std::size_t r = 0; r < roots.size(); ++r) {
        if (r_used[r]) continue;
        Branch nb;
        nb.points.push_back({d.omega_grid[i], roots[r]->theta0, roots[r]->stability});
        next.push_back(std::move(nb));
      }
      active = std::move(next);
    }
    for (auto& b : active) done.push_back(std::move(b));
  }
  return done;
}

// The root continuing a branch at omega, searched near the bracketing thetas.
std::optional<double> root_near(const Profile& prof, double omega, double th_a, double th_b) {
  const long klo = static_cast<long>(std::floor(std::min(th_a, th_b) / kScanStep)) - 3;
  const long khi = static_cast<long>(std::ceil(std::max(th_a, th_b) / kScanStep)) + 3;
  const double target = 0.5 * (th_a + th_b);
  std::optional<double> best;
  prof.scan(omega, klo, khi, [&](long k, double qa, double qb) {
    const double r = prof.polish(k, omega, qa, qb);
    if (r == 0.0) return;
    if (!best || std::abs(r - target) < std::abs(*best - target)) best = r;
  });
  return best;
}

}  // namespace

BifurcationDiagram bifurcation_diagram(const BicycleParams& p, double c1,
                                       const std::vector<double>& omega_grid,
                                       const BifurcationOptions& opt) {
  for (std::size_t i = 0; i < omega_grid.size(); ++i) {
    if (!(omega_grid[i] > 0.0) || (i > 0 && !(omega_grid[i] > omega_grid[i - 1]))) {
      throw Error(ErrorKind::ValidationError, "omega grid must be positive and increasing");
    }
  }
  const unsigned threads = opt.threads > 0 ? opt.threads : default_thread_count();

  BifurcationDiagram d;
  d.c1 = c1;
  d.omega_grid = omega_grid;
  d.speeds.omega_c = critical_speed(p, c1);

  const Profile prof(p, c1, opt.range, threads);
  d.equilibria.resize(omega_grid.size());
  Profile::parallel_for(omega_grid.size(), threads, [&](std::size_t i) {
    d.equilibria[i] = equilibria_from(p, prof, omega_grid[i]);
  });
  d.branches = assemble_branches(d);

  // Fold: the lowest rate at which nontrivial roots exist.
  std::optional<std::size_t> first;
  for (std::size_t i = 0; i < omega_grid.size(); ++i) {
    if (d.equilibria[i].size() > 1) {
      first = i;
      break;
    }
  }
  const double grid_step =
      omega_grid.size() > 1 ? (omega_grid.back() - omega_grid.front()) /
                                  static_cast<double>(omega_grid.size() - 1)
                            : 0.0;
  if (first && *first > 0) {
    double lo = omega_grid[*first - 1], hi = omega_grid[*first];
    while (hi - lo > 1e-6) {
      const double mid = 0.5 * (lo + hi);
      (has_nontrivial(prof, mid) ? hi : lo) = mid;
    }
    d.speeds.omega_c_prime = hi;
  } else if (first) {
    d.warnings.push_back("nontrivial equilibria already exist at the lowest grid rate; fold not bracketed");
  }

  // Stability flips along the positive nontrivial branches.
  std::vector<double> flips;
  for (const Branch& b : d.branches) {
    if (b.trivial || b.points.empty() || b.points.front().theta0 < 0.0) continue;
    for (std::size_t j = 1; j < b.points.size(); ++j) {
      const BranchPoint& pa = b.points[j - 1];
      const BranchPoint& pb = b.points[j];
      if (pa.stability == pb.stability) continue;
      double lo = pa.omega0, hi = pb.omega0;
      double th_lo = pa.theta0, th_hi = pb.theta0;
      bool ok = true;
      while (hi - lo > 1e-6) {
        const double mid = 0.5 * (lo + hi);
        const auto r = root_near(prof, mid, th_lo, th_hi);
        if (!r) {
          ok = false;
          break;
        }
        const Stability s = classify(p, {c1, mid}, *r).stability;
        if (s == pa.stability) {
          lo = mid;
          th_lo = *r;
        } else {
          hi = mid;
          th_hi = *r;
        }
      }
      if (ok) flips.push_back(0.5 * (lo + hi));
      else d.warnings.push_back("GridTooCoarse: lost the branch while refining a stability change");
    }
  }
  std::sort(flips.begin(), flips.end());
  const double fold = d.speeds.omega_c_prime.value_or(-std::numeric_limits<double>::infinity());
  for (double f : flips) {
    if (f >= fold && f < d.speeds.omega_c) {
      d.speeds.omega_c_double_prime = f;
      break;
    }
  }

  // Branch ends must be explained by the fold, the pitchfork, the grid ends
  // or the theta range.
  auto explained = [&](const BranchPoint& bp, std::size_t idx) {
    if (idx == 0 || idx + 1 == omega_grid.size()) return true;
    const double tol = 10.0 * grid_step;
    if (d.speeds.omega_c_prime && std::abs(bp.omega0 - *d.speeds.omega_c_prime) <= tol) return true;
    if (std::abs(bp.omega0 - d.speeds.omega_c) <= tol) return true;
    const double edge = 10.0 * kScanStep;
    return bp.theta0 >= prof.hi() - edge || bp.theta0 <= prof.lo() + edge;
  };
  auto index_of = [&](double w) {
    return static_cast<std::size_t>(
        std::lower_bound(omega_grid.begin(), omega_grid.end(), w) - omega_grid.begin());
  };
  for (const Branch& b : d.branches) {
    if (b.trivial || b.points.empty()) continue;
    for (const BranchPoint* bp : {&b.points.front(), &b.points.back()}) {
      if (!explained(*bp, index_of(bp->omega0))) {
        std::ostringstream msg;
        msg << "GridTooCoarse: branch appears or ends at omega0=" << bp->omega0
            << ", theta0=" << bp->theta0 << " without a resolved bifurcation";
        d.warnings.push_back(msg.str());
      }
    }
  }
  return d;
}

std::optional<double> basin_radius_estimate(const BicycleParams& p, const ControlLaw& law,
                                            ThetaRange range) {
  const auto eq = find_equilibria(p, law, range);
  std::optional<double> best;
  for (const auto& e : eq) {
    if (e.theta0 == 0.0) {
      if (e.stability != Stability::Stable) {
        throw Error(ErrorKind::TrivialUnstable, "upright straight motion is not stable");
      }
      continue;
    }
    if (e.stability == Stability::Unstable && (!best || std::abs(e.theta0) < *best)) {
      best = std::abs(e.theta0);
    }
  }
  return best;
}

}  // namespace whipple
