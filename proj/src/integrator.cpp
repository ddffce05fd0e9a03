#include "whipple/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "whipple/error.hpp"

namespace whipple::ode {
namespace {

// Dormand-Prince tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                 a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

double error_norm(const Vector& err, const Vector& y0, const Vector& y1, const Options& opt) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double sc = opt.atol + opt.rtol * std::max(std::abs(y0(i)), std::abs(y1(i)));
    const double r = err(i) / sc;
    sum += r * r;
  }
  return std::sqrt(sum / static_cast<double>(err.size()));
}

double initial_step(const Rhs& f, double t0, const Vector& y0, const Vector& k1, double span,
                    const Options& opt, Stats& stats) {
  Vector sc = (opt.atol + opt.rtol * y0.cwiseAbs().array()).matrix();
  const double d0 = std::sqrt((y0.array() / sc.array()).square().mean());
  const double d1n = std::sqrt((k1.array() / sc.array()).square().mean());
  double h0 = (d0 < 1e-5 || d1n < 1e-5) ? 1e-6 : 0.01 * d0 / d1n;
  h0 = std::min(h0, span);
  Vector y1 = y0 + h0 * k1;
  Vector k2(y0.size());
  try {
    f(t0 + h0, y1, k2);
    ++stats.evaluations;
  } catch (const Error&) {
    return std::min(h0, 1e-6 * span);
  }
  const double d2 = std::sqrt((((k2 - k1).array() / sc.array()).square()).mean()) / h0;
  const double dm = std::max(d1n, d2);
  const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 1.0 / 5.0);
  return std::min({100.0 * h0, h1, span});
}

}  // namespace

Vector DenseSegment::operator()(double t) const {
  const double s = (t - t0_) / h_;
  const double s1 = 1.0 - s;
  return r_[0] + s * (r_[1] + s1 * (r_[2] + s * (r_[3] + s1 * r_[4])));
}

Vector DenseSegment::derivative(double t) const {
  // d/ds of r0 + s r1 + s s1 r2 + s^2 s1 r3 + s^2 s1^2 r4.
  const double s = (t - t0_) / h_;
  const double s1 = 1.0 - s;
  const Vector d = r_[1] + (1.0 - 2.0 * s) * r_[2] + s * (2.0 - 3.0 * s) * r_[3] +
                   2.0 * s * s1 * (1.0 - 2.0 * s) * r_[4];
  return d / h_;
}

Result integrate(const Rhs& f, double t0, const Vector& y0, double t_end, const Options& opt,
                 const StepObserver& observer, const Projector& project) {
  Result res;
  res.t = t0;
  res.y = y0;
  const double span = t_end - t0;
  if (!(span > 0.0)) return res;

  const Eigen::Index n = y0.size();
  Vector k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), ytmp(n), ynew(n), err(n);
  Stats& st = res.stats;

  f(t0, y0, k1);
  ++st.evaluations;

  double t = t0;
  Vector y = y0;
  double h = opt.initial_step > 0.0 ? opt.initial_step : initial_step(f, t0, y0, k1, span, opt, st);
  const double h_cap = opt.max_step > 0.0 ? opt.max_step : span;
  h = std::min(h, h_cap);

  constexpr double kSafety = 0.9, kMinFactor = 0.2, kMaxFactor = 10.0, kBeta = 0.04;
  constexpr double kExpo = 0.2 - kBeta * 0.75;
  double err_old = 1e-4;
  bool last_rejected = false;

  while (t < t_end) {
    if (st.accepted + st.rejected >= opt.max_steps) {
      throw Error(ErrorKind::IntegratorFailure, "step budget exhausted");
    }
    const double h_min = 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(t));
    if (h < h_min) {
      std::ostringstream msg;
      msg << "step size collapsed to " << h << " at t=" << t;
      throw Error(ErrorKind::IntegratorFailure, msg.str());
    }
    bool final_step = false;
    if (t + h >= t_end) {
      h = t_end - t;
      final_step = true;
    }

    bool stage_failed = false;
    try {
      ytmp = y + h * a21 * k1;
      f(t + c2 * h, ytmp, k2);
      ytmp = y + h * (a31 * k1 + a32 * k2);
      f(t + c3 * h, ytmp, k3);
      ytmp = y + h * (a41 * k1 + a42 * k2 + a43 * k3);
      f(t + c4 * h, ytmp, k4);
      ytmp = y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
      f(t + c5 * h, ytmp, k5);
      ytmp = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
      f(t + h, ytmp, k6);
      ynew = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
      f(t + h, ynew, k7);
      st.evaluations += 6;
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::IntegratorFailure) throw;
      stage_failed = true;
    }

    if (stage_failed || !ynew.allFinite()) {
      ++st.rejected;
      h *= 0.25;
      last_rejected = true;
      continue;
    }

    err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    const double en = error_norm(err, y, ynew, opt);

    if (en <= 1.0) {
      std::array<Vector, 5> r;
      const Vector ydiff = ynew - y;
      const Vector bspl = h * k1 - ydiff;
      r[0] = y;
      r[1] = ydiff;
      r[2] = bspl;
      r[3] = ydiff - h * k7 - bspl;
      r[4] = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
      const DenseSegment seg(t, h, std::move(r));

      ++st.accepted;
      t = final_step ? t_end : t + h;
      y = ynew;
      k1 = k7;

      double fac = en == 0.0 ? kMaxFactor
                             : kSafety * std::pow(en, -kExpo) * std::pow(err_old, kBeta);
      fac = std::clamp(fac, kMinFactor, kMaxFactor);
      if (last_rejected) fac = std::min(fac, 1.0);
      err_old = std::max(en, 1e-4);
      last_rejected = false;

      if (observer && !observer(seg)) {
        res.t = t;
        res.y = y;
        res.stopped = true;
        return res;
      }
      if (project) {
        project(t, y);
        f(t, y, k1);
        ++st.evaluations;
      }
      h = std::min(h * fac, h_cap);
    } else {
      ++st.rejected;
      h *= std::max(kMinFactor, kSafety * std::pow(en, -kExpo));
      last_rejected = true;
    }
  }

  res.t = t;
  res.y = y;
  return res;
}

std::optional<double> locate_event(const DenseSegment& seg,
                                   const std::function<double(double, const Vector&)>& g,
                                   double tol) {
  double lo = seg.t0();
  double hi = seg.t1();
  const double glo0 = g(lo, seg(lo));
  const double ghi = g(hi, seg(hi));
  if (glo0 == 0.0) return std::nullopt;  // counted on the previous segment
  if ((glo0 < 0.0) == (ghi < 0.0) && ghi != 0.0) return std::nullopt;
  double glo = glo0;
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    const double gm = g(mid, seg(mid));
    if (gm == 0.0) return mid;
    if ((gm < 0.0) == (glo < 0.0)) {
      lo = mid;
      glo = gm;
    } else {
      hi = mid;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::abs(hi)) break;
  }
  return hi;
}

}  // namespace whipple::ode
