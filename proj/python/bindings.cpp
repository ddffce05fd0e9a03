#include <string>
#include <utility>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "whipple/whipple.hpp"

namespace py = pybind11;
using namespace whipple;

namespace {

using Range = std::pair<double, double>;

ThetaRange to_range(const Range& r) { return {r.first, r.second}; }

py::array_t<double> array(const std::vector<double>& v) {
  py::array_t<double> a(py::array::ShapeContainer{static_cast<py::ssize_t>(v.size())});
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

template <class T, class F>
py::array_t<double> column(const std::vector<T>& v, F get) {
  py::array_t<double> a(py::array::ShapeContainer{static_cast<py::ssize_t>(v.size())});
  double* out = a.mutable_data();
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = get(v[i]);
  return a;
}

py::dict coeffs_dict(const LinearCoeffs& lc) {
  py::dict d;
  d["x2"] = lc.x2;
  d["x1"] = lc.x1;
  d["x0"] = lc.x0;
  return d;
}

py::dict speeds_dict(const CriticalSpeeds& s) {
  py::dict d;
  d["omega_c"] = s.omega_c;
  d["omega_c_prime"] = s.omega_c_prime;
  d["omega_c_double_prime"] = s.omega_c_double_prime;
  return d;
}

py::list equilibria_list(const std::vector<EquilibriumPoint>& eq) {
  py::list out;
  for (const auto& e : eq) {
    py::dict d;
    d["theta0"] = e.theta0;
    d["stability"] = std::string(to_string(e.stability));
    d["coeffs"] = coeffs_dict(e.coeffs);
    d["residual"] = e.residual;
    out.append(d);
  }
  return out;
}

py::dict bifurcation(const BicycleParams& p, double c1, double omega_min, double omega_max,
                     int steps, const Range& range, unsigned threads) {
  if (!(omega_max > omega_min) || steps < 2) {
    throw Error(ErrorKind::ValidationError, "need omega_max > omega_min and steps >= 2");
  }
  std::vector<double> grid(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    grid[static_cast<std::size_t>(i)] = omega_min + (omega_max - omega_min) * i / (steps - 1);
  }
  BifurcationOptions opt;
  opt.range = to_range(range);
  opt.threads = threads;
  BifurcationDiagram d;
  {
    py::gil_scoped_release release;
    d = bifurcation_diagram(p, c1, grid, opt);
  }

  std::vector<double> w, th;
  py::list stab;
  for (std::size_t i = 0; i < d.omega_grid.size(); ++i) {
    for (const auto& e : d.equilibria[i]) {
      w.push_back(d.omega_grid[i]);
      th.push_back(e.theta0);
      stab.append(std::string(to_string(e.stability)));
    }
  }
  py::list branches;
  for (const auto& b : d.branches) {
    py::dict bd;
    bd["trivial"] = b.trivial;
    bd["omega0"] = column(b.points, [](const BranchPoint& q) { return q.omega0; });
    bd["theta0"] = column(b.points, [](const BranchPoint& q) { return q.theta0; });
    py::list s;
    for (const auto& q : b.points) s.append(std::string(to_string(q.stability)));
    bd["stability"] = s;
    branches.append(bd);
  }

  py::dict out;
  out["c1"] = d.c1;
  out["omega0"] = array(w);
  out["theta0"] = array(th);
  out["stability"] = stab;
  out["branches"] = branches;
  out["speeds"] = speeds_dict(d.speeds);
  out["warnings"] = d.warnings;
  return out;
}

Trajectory run_simulation(const BicycleParams& p, double c1, double omega0, double theta0,
                          double thetadot0, double t_max, double dt_out, double rtol,
                          double atol) {
  SimulationOptions opt;
  opt.rtol = rtol;
  opt.atol = atol;
  py::gil_scoped_release release;
  return simulate(p, {c1, omega0}, {theta0, thetadot0}, t_max, dt_out, opt);
}

py::dict path_dict(const PlanarPath& path) {
  py::dict d;
  d["t"] = array(path.t);
  d["x"] = array(path.x);
  d["y"] = array(path.y);
  d["psi"] = array(path.psi);
  return d;
}

py::dict reduced_dict(const BicycleParams& p, double theta, double delta) {
  const ReducedCoefficients rc = reduced_coeffs(p, {theta, delta});
  py::array_t<double> c({3, 3, 3});
  auto cv = c.mutable_unchecked<3>();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) cv(i, j, k) = rc.c[i](j, k);
  py::dict d;
  d["m"] = Eigen::Matrix3d(rc.m);
  d["c"] = c;
  d["P"] = Eigen::Vector3d(rc.P);
  return d;
}

py::dict partials_dict(const BicycleParams& p, double theta, double delta) {
  const CoefficientPartials cp = coefficient_partials(p, {theta, delta});
  py::dict d;
  d["dc133_dtheta"] = cp.dc133_dtheta;
  d["dc133_ddelta"] = cp.dc133_ddelta;
  d["dP1_dtheta"] = cp.dP1_dtheta;
  d["dP1_ddelta"] = cp.dP1_ddelta;
  d["c123_plus_c132"] = cp.c123_plus_c132;
  d["c113_plus_c131"] = cp.c113_plus_c131;
  d["richardson_consistent"] = cp.richardson_consistent;
  return d;
}

py::dict verify_dict(const BicycleParams& p, double tolerance) {
  const IdentityReport r = verify_structural_identities(p);
  py::dict res;
  for (const auto& x : r.residuals) res[py::str(x.name)] = x.max_residual;
  py::dict d;
  d["residuals"] = res;
  d["worst"] = r.worst();
  d["passed"] = r.passed(tolerance);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Whipple bicycle with a lean-proportional steer law";
  m.attr("__version__") = io::kVersion;

  static py::exception<Error> exc(m, "WhippleError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr ep) {
    try {
      if (ep) std::rethrow_exception(ep);
    } catch (const Error& e) {
      py::object inst = py::reinterpret_borrow<py::object>(exc)(py::str(e.what()));
      inst.attr("kind") = std::string(to_string(e.kind()));
      PyErr_SetObject(exc.ptr(), inst.ptr());
    }
  });

  py::class_<WheelParams>(m, "WheelParams")
      .def(py::init<>())
      .def_readwrite("m", &WheelParams::m)
      .def_readwrite("R", &WheelParams::R)
      .def_readwrite("Ixx", &WheelParams::Ixx)
      .def_readwrite("Iyy", &WheelParams::Iyy);

  py::class_<FrameParams>(m, "FrameParams")
      .def(py::init<>())
      .def_readwrite("m", &FrameParams::m)
      .def_readwrite("x", &FrameParams::x)
      .def_readwrite("z", &FrameParams::z)
      .def_readwrite("Ixx", &FrameParams::Ixx)
      .def_readwrite("Iyy", &FrameParams::Iyy)
      .def_readwrite("Izz", &FrameParams::Izz)
      .def_readwrite("Ixz", &FrameParams::Ixz);

  py::class_<BicycleParams>(m, "BicycleParams")
      .def(py::init<>())
      .def_readwrite("w", &BicycleParams::w)
      .def_readwrite("c", &BicycleParams::c)
      .def_readwrite("lambda_", &BicycleParams::lambda)
      .def_readwrite("g", &BicycleParams::g)
      .def_readwrite("rear_wheel", &BicycleParams::rear_wheel)
      .def_readwrite("rear_frame", &BicycleParams::rear_frame)
      .def_readwrite("front_frame", &BicycleParams::front_frame)
      .def_readwrite("front_wheel", &BicycleParams::front_wheel)
      .def("total_mass", &BicycleParams::total_mass)
      .def("validate", [](const BicycleParams& p) { validate(p); })
      .def("to_toml", [](const BicycleParams& p) { return to_toml(p); })
      .def_static("table1", &BicycleParams::paper_table1)
      .def_static("benchmark", &BicycleParams::benchmark);

  m.def("load_params", &load_params, py::arg("path"));
  m.def("parse_params", &parse_params, py::arg("text"), py::arg("source") = "<string>");

  m.def("critical_speed", &critical_speed, py::arg("params"), py::arg("c1") = -4.0);
  m.def("critical_speed_limit", &critical_speed_limit, py::arg("params"));

  m.def(
      "find_equilibria",
      [](const BicycleParams& p, double c1, double omega0, const Range& range) {
        return equilibria_list(find_equilibria(p, {c1, omega0}, to_range(range)));
      },
      py::arg("params"), py::arg("c1"), py::arg("omega0"),
      py::arg("theta_range") = Range{-0.5, 0.5});

  m.def(
      "basin_radius",
      [](const BicycleParams& p, double c1, double omega0, const Range& range) {
        return basin_radius_estimate(p, {c1, omega0}, to_range(range));
      },
      py::arg("params"), py::arg("c1"), py::arg("omega0"),
      py::arg("theta_range") = Range{-0.5, 0.5});

  m.def("bifurcation", &bifurcation, py::arg("params"), py::arg("c1") = -4.0,
        py::arg("omega_min") = 1.0, py::arg("omega_max") = 9.0, py::arg("steps") = 600,
        py::arg("theta_range") = Range{-0.5, 0.5}, py::arg("threads") = 0u);

  py::class_<Trajectory>(m, "Trajectory")
      .def_property_readonly("c1", [](const Trajectory& t) { return t.law.c1; })
      .def_property_readonly("omega0", [](const Trajectory& t) { return t.law.omega0; })
      .def_property_readonly("t", [](const Trajectory& t) { return array(t.t); })
      .def_property_readonly(
          "theta", [](const Trajectory& t) { return column(t.state, [](LeanState s) { return s.theta; }); })
      .def_property_readonly("theta_dot",
                             [](const Trajectory& t) {
                               return column(t.state, [](LeanState s) { return s.theta_dot; });
                             })
      .def_property_readonly("tau_delta",
                             [](const Trajectory& t) {
                               return column(t.torque, [](TorqueSample s) { return s.tau_delta; });
                             })
      .def_property_readonly("tau_phir",
                             [](const Trajectory& t) {
                               return column(t.torque, [](TorqueSample s) { return s.tau_phir; });
                             })
      .def_readonly("domain_exit", &Trajectory::domain_exit)
      .def("__len__", [](const Trajectory& t) { return t.t.size(); });

  m.def("simulate", &run_simulation, py::arg("params"), py::arg("c1"), py::arg("omega0"),
        py::arg("theta0") = 0.0, py::arg("thetadot0") = 0.0, py::arg("t_max") = 30.0,
        py::arg("dt_out") = 0.01, py::arg("rtol") = 1e-9, py::arg("atol") = 1e-12);

  m.def(
      "reconstruct_path",
      [](const BicycleParams& p, const Trajectory& tr) {
        PlanarPath path;
        {
          py::gil_scoped_release release;
          path = reconstruct_path(p, tr);
        }
        return path_dict(path);
      },
      py::arg("params"), py::arg("trajectory"));

  m.def("reduced_coeffs", &reduced_dict, py::arg("params"), py::arg("theta"), py::arg("delta"));
  m.def("coefficient_partials", &partials_dict, py::arg("params"), py::arg("theta"),
        py::arg("delta"));
  m.def(
      "trivial_coeffs",
      [](const BicycleParams& p, double c1, double omega0) {
        return coeffs_dict(linearize_trivial(p, {c1, omega0}));
      },
      py::arg("params"), py::arg("c1"), py::arg("omega0"));
  m.def(
      "free_eigenvalues",
      [](const BicycleParams& p, double omega) {
        return free_eigenvalues(linearize_free(p), omega);
      },
      py::arg("params"), py::arg("omega"));
  m.def("verify", &verify_dict, py::arg("params"), py::arg("tolerance") = 1e-8);
}
