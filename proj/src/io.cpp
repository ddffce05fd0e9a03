#include "whipple/io.hpp"

#include <cstdio>

namespace whipple::io {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
  os << "t,theta,thetadot,tau_delta,tau_phir\n";
  for (std::size_t i = 0; i < traj.t.size(); ++i) {
    os << fmt(traj.t[i]) << ',' << fmt(traj.state[i].theta) << ','
       << fmt(traj.state[i].theta_dot) << ',' << fmt(traj.torque[i].tau_delta) << ','
       << fmt(traj.torque[i].tau_phir) << '\n';
  }
}

void write_path_csv(std::ostream& os, const PlanarPath& path) {
  os << "t,x,y,psi\n";
  for (std::size_t i = 0; i < path.t.size(); ++i) {
    os << fmt(path.t[i]) << ',' << fmt(path.x[i]) << ',' << fmt(path.y[i]) << ','
       << fmt(path.psi[i]) << '\n';
  }
}

void write_bifurcation_csv(std::ostream& os, const BifurcationDiagram& d) {
  os << "omega0,theta0,stability\n";
  for (std::size_t i = 0; i < d.omega_grid.size(); ++i) {
    for (const auto& e : d.equilibria[i]) {
      os << fmt(d.omega_grid[i]) << ',' << fmt(e.theta0) << ',' << to_string(e.stability) << '\n';
    }
  }
}

void write_oracle_csv(std::ostream& os, const DaeTrajectory& traj) {
  os << "t,theta,thetadot,delta,phi_r_dot\n";
  for (std::size_t i = 0; i < traj.t.size(); ++i) {
    const FullState& s = traj.states[i];
    os << fmt(traj.t[i]) << ',' << fmt(s.config.theta) << ',' << fmt(s.qdot(kTheta)) << ','
       << fmt(s.config.delta) << ',' << fmt(s.qdot(kPhiR)) << '\n';
  }
}

nlohmann::ordered_json to_json(const BicycleParams& p) {
  auto wheel = [](const WheelParams& w) {
    return nlohmann::ordered_json{{"m", w.m}, {"R", w.R}, {"Ixx", w.Ixx}, {"Iyy", w.Iyy}};
  };
  auto frame = [](const FrameParams& f) {
    return nlohmann::ordered_json{{"m", f.m},     {"x", f.x},     {"z", f.z},    {"Ixx", f.Ixx},
                                  {"Iyy", f.Iyy}, {"Izz", f.Izz}, {"Ixz", f.Ixz}};
  };
  return {{"w", p.w},
          {"c", p.c},
          {"lambda", p.lambda},
          {"g", p.g},
          {"rear_wheel", wheel(p.rear_wheel)},
          {"rear_frame", frame(p.rear_frame)},
          {"front_frame", frame(p.front_frame)},
          {"front_wheel", wheel(p.front_wheel)}};
}

nlohmann::ordered_json to_json(const CriticalSpeeds& s) {
  nlohmann::ordered_json j;
  j["omega_c"] = s.omega_c;
  j["omega_c_prime"] = s.omega_c_prime ? nlohmann::ordered_json(*s.omega_c_prime) : nullptr;
  j["omega_c_double_prime"] =
      s.omega_c_double_prime ? nlohmann::ordered_json(*s.omega_c_double_prime) : nullptr;
  return j;
}

nlohmann::ordered_json to_json(const LinearCoeffs& lc) {
  return {{"x2", lc.x2}, {"x1", lc.x1}, {"x0", lc.x0}};
}

nlohmann::ordered_json to_json(const std::vector<EquilibriumPoint>& eq) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& e : eq) {
    arr.push_back({{"theta0", e.theta0},
                   {"stability", std::string(to_string(e.stability))},
                   {"coeffs", to_json(e.coeffs)},
                   {"residual", e.residual}});
  }
  return arr;
}

nlohmann::ordered_json to_json(const IdentityReport& r) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& x : r.residuals) arr.push_back({{"identity", x.name}, {"max_residual", x.max_residual}});
  return {{"residuals", arr}, {"worst", r.worst()}, {"passed", r.passed()}};
}

nlohmann::ordered_json coeffs_json(ShapeCoords shape, const ReducedCoefficients& rc,
                                   const CoefficientPartials& cp) {
  auto mat = [](const Eigen::Matrix3d& m) {
    auto rows = nlohmann::ordered_json::array();
    for (int i = 0; i < 3; ++i) rows.push_back({m(i, 0), m(i, 1), m(i, 2)});
    return rows;
  };
  auto c = nlohmann::ordered_json::array();
  for (const auto& ci : rc.c) c.push_back(mat(ci));
  return {{"theta", shape.theta},
          {"delta", shape.delta},
          {"m", mat(rc.m)},
          {"c", c},
          {"P", {rc.P(0), rc.P(1), rc.P(2)}},
          {"partials",
           {{"dc133_dtheta", cp.dc133_dtheta},
            {"dc133_ddelta", cp.dc133_ddelta},
            {"dP1_dtheta", cp.dP1_dtheta},
            {"dP1_ddelta", cp.dP1_ddelta},
            {"c123_plus_c132", cp.c123_plus_c132},
            {"c113_plus_c131", cp.c113_plus_c131},
            {"richardson_consistent", cp.richardson_consistent}}}};
}

nlohmann::ordered_json error_json(const Error& e) {
  return {{"error", std::string(to_string(e.kind()))}, {"message", e.what()}};
}

}  // namespace whipple::io
