#include "whipple/params.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

#include <toml.hpp>

#include "whipple/error.hpp"

namespace whipple {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DomainError: return "DomainError";
    case ErrorKind::NoContactSolution: return "NoContactSolution";
    case ErrorKind::SingularConstraintJacobian: return "SingularConstraintJacobian";
    case ErrorKind::SingularContact: return "SingularContact";
    case ErrorKind::SingularMass: return "SingularMass";
    case ErrorKind::IntegratorFailure: return "IntegratorFailure";
    case ErrorKind::NoCriticalSpeed: return "NoCriticalSpeed";
    case ErrorKind::NotAnEquilibrium: return "NotAnEquilibrium";
    case ErrorKind::TrivialUnstable: return "TrivialUnstable";
    case ErrorKind::SingularKKT: return "SingularKKT";
    case ErrorKind::ProjectionFailure: return "ProjectionFailure";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
  }
  return "Unknown";
}

BicycleParams BicycleParams::paper_table1() {
  BicycleParams p;
  p.w = 0.935;
  p.c = 0.046;
  p.lambda = 0.175;
  p.g = 9.81;
  p.rear_wheel = {1.0865, 0.260, 0.0293, 0.0584};
  p.rear_frame = {13.2490, 0.424, 0.402, 0.2513, 0.5147, 0.3320, 0.1215};
  p.front_frame = {2.8315, 0.865, 0.554, 0.0365, 0.0445, 0.0132, -0.0157};
  p.front_wheel = {1.0865, 0.260, 0.0293, 0.0584};
  return p;
}

BicycleParams BicycleParams::benchmark() {
  BicycleParams p;
  p.w = 1.02;
  p.c = 0.08;
  p.lambda = std::numbers::pi / 10.0;
  p.g = 9.81;
  p.rear_wheel = {2.0, 0.3, 0.0603, 0.12};
  // Published Ixz values are for z-down axes; negated here for z-up axes.
  p.rear_frame = {85.0, 0.3, 0.9, 9.2, 11.0, 2.8, -2.4};
  p.front_frame = {4.0, 0.9, 0.7, 0.05892, 0.06, 0.00708, 0.00756};
  p.front_wheel = {3.0, 0.35, 0.1405, 0.28};
  return p;
}

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::ValidationError, what);
}

void validate_wheel(const WheelParams& w, const std::string& name) {
  require(std::isfinite(w.m) && w.m > 0.0, name + ".m must be positive");
  require(std::isfinite(w.R) && w.R > 0.0, name + ".R must be positive");
  require(std::isfinite(w.Ixx) && w.Ixx > 0.0, name + ".Ixx must be positive");
  require(std::isfinite(w.Iyy) && w.Iyy > 0.0, name + ".Iyy must be positive");
}

void validate_frame(const FrameParams& f, const std::string& name) {
  require(std::isfinite(f.m) && f.m > 0.0, name + ".m must be positive");
  require(std::isfinite(f.x) && std::isfinite(f.z), name + " mass center must be finite");
  require(std::isfinite(f.Ixx) && std::isfinite(f.Iyy) && std::isfinite(f.Izz) &&
              std::isfinite(f.Ixz),
          name + " inertia must be finite");
  require(f.Iyy > 0.0 && f.Ixx > 0.0 && f.Ixx * f.Izz - f.Ixz * f.Ixz > 0.0,
          name + " inertia must be positive definite");
}

}  // namespace

void validate(const BicycleParams& p) {
  require(std::isfinite(p.w) && p.w > 0.0, "w must be positive");
  require(std::isfinite(p.c), "c must be finite");
  require(std::isfinite(p.lambda) && p.lambda >= 0.0 && p.lambda < std::numbers::pi / 2.0,
          "lambda must lie in [0, pi/2)");
  require(std::isfinite(p.g) && p.g > 0.0, "g must be positive");
  validate_wheel(p.rear_wheel, "rear_wheel");
  validate_frame(p.rear_frame, "rear_frame");
  validate_frame(p.front_frame, "front_frame");
  validate_wheel(p.front_wheel, "front_wheel");
}

namespace {

std::string where(const toml::source_region& src, const std::string& source) {
  std::ostringstream os;
  os << source << ":" << src.begin.line << ":" << src.begin.column;
  return os.str();
}

class Reader {
 public:
  explicit Reader(std::string source) : source_(std::move(source)) {}

  double number(const toml::table& t, std::string_view key, const std::string& context) {
    const toml::node* n = t.get(key);
    const std::string name = context.empty() ? std::string(key) : context + "." + std::string(key);
    if (n == nullptr) {
      throw Error(ErrorKind::ParseError,
                  source_ + ": missing key '" + name + "'" +
                      (context.empty() ? "" : " (in table [" + context + "])"));
    }
    if (auto v = n->value<double>()) return *v;
    throw Error(ErrorKind::ParseError,
                where(n->source(), source_) + ": key '" + name + "' must be a number");
  }

  void reject_unknown(const toml::table& t, const std::set<std::string>& allowed,
                      const std::string& context) {
    for (const auto& [k, v] : t) {
      if (!allowed.contains(std::string(k.str()))) {
        const std::string name = context.empty() ? std::string(k.str()) : context + "." + std::string(k.str());
        throw Error(ErrorKind::ParseError, where(v.source(), source_) + ": unknown key '" + name + "'");
      }
    }
  }

  const toml::table& table(const toml::table& root, std::string_view key) {
    const toml::node* n = root.get(key);
    if (n == nullptr || !n->is_table()) {
      throw Error(ErrorKind::ParseError, source_ + ": missing table [" + std::string(key) + "]");
    }
    return *n->as_table();
  }

 private:
  std::string source_;
};

}  // namespace

BicycleParams parse_params(std::string_view toml_text, const std::string& source) {
  toml::table root;
  try {
    root = toml::parse(toml_text, source);
  } catch (const toml::parse_error& e) {
    throw Error(ErrorKind::ParseError,
                where(e.source(), source) + ": " + std::string(e.description()));
  }

  Reader r(source);
  r.reject_unknown(root, {"w", "c", "lambda", "g", "rear_wheel", "rear_frame", "front_frame", "front_wheel"},
                   "");
  BicycleParams p;
  p.w = r.number(root, "w", "");
  p.c = r.number(root, "c", "");
  p.lambda = r.number(root, "lambda", "");
  p.g = root.contains("g") ? r.number(root, "g", "") : 9.81;

  auto wheel = [&](std::string_view name) {
    const toml::table& t = r.table(root, name);
    const std::string ctx(name);
    r.reject_unknown(t, {"m", "R", "Ixx", "Iyy"}, ctx);
    return WheelParams{r.number(t, "m", ctx), r.number(t, "R", ctx), r.number(t, "Ixx", ctx),
                       r.number(t, "Iyy", ctx)};
  };
  auto frame = [&](std::string_view name) {
    const toml::table& t = r.table(root, name);
    const std::string ctx(name);
    r.reject_unknown(t, {"m", "x", "z", "Ixx", "Iyy", "Izz", "Ixz"}, ctx);
    return FrameParams{r.number(t, "m", ctx),   r.number(t, "x", ctx),   r.number(t, "z", ctx),
                       r.number(t, "Ixx", ctx), r.number(t, "Iyy", ctx), r.number(t, "Izz", ctx),
                       r.number(t, "Ixz", ctx)};
  };
  p.rear_wheel = wheel("rear_wheel");
  p.rear_frame = frame("rear_frame");
  p.front_frame = frame("front_frame");
  p.front_wheel = wheel("front_wheel");

  validate(p);
  return p;
}

BicycleParams load_params(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ParseError, path + ": cannot open parameter file");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_params(text.str(), path);
}

std::string to_toml(const BicycleParams& p) {
  // Shortest decimal that reads back to the same double.
  auto num = [](double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, res.ptr);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
  };
  std::ostringstream os;
  os << "w = " << num(p.w) << "\nc = " << num(p.c) << "\nlambda = " << num(p.lambda)
     << "\ng = " << num(p.g) << "\n";
  auto wheel = [&](const char* name, const WheelParams& w) {
    os << "\n[" << name << "]\nm = " << num(w.m) << "\nR = " << num(w.R) << "\nIxx = " << num(w.Ixx)
       << "\nIyy = " << num(w.Iyy) << "\n";
  };
  auto frame = [&](const char* name, const FrameParams& f) {
    os << "\n[" << name << "]\nm = " << num(f.m) << "\nx = " << num(f.x) << "\nz = " << num(f.z)
       << "\nIxx = " << num(f.Ixx) << "\nIyy = " << num(f.Iyy) << "\nIzz = " << num(f.Izz)
       << "\nIxz = " << num(f.Ixz) << "\n";
  };
  wheel("rear_wheel", p.rear_wheel);
  frame("rear_frame", p.rear_frame);
  frame("front_frame", p.front_frame);
  wheel("front_wheel", p.front_wheel);
  return os.str();
}

}  // namespace whipple
