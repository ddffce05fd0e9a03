// bike: command-line front end for the controlled Whipple bicycle.
//
// Exit status: 0 ok, 1 numeric or input failure (error JSON on stderr),
// 2 usage error.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "whipple/whipple.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace whipple;

namespace {

struct Common {
  std::string params_path;
  std::string out_dir;
};

struct Output {
  std::string name;
  std::string content;
};

std::string utc_timestamp() {
  // SOURCE_DATE_EPOCH pins the manifest for reproducible builds of the docs.
  std::time_t now = std::time(nullptr);
  if (const char* sde = std::getenv("SOURCE_DATE_EPOCH")) now = std::strtoll(sde, nullptr, 10);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

BicycleParams resolve_params(const Common& c) {
  return c.params_path.empty() ? BicycleParams::paper_table1() : load_params(c.params_path);
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::ParseError, "cannot write " + path.string());
  os << content;
  if (!os) throw Error(ErrorKind::ParseError, "write failed for " + path.string());
}

// With --out-dir every output lands there next to manifest.json. Without it
// the first output goes to stdout and the rest to the working directory.
void emit(const Common& c, const std::string& subcommand, const json& options,
          const BicycleParams& p, const std::vector<Output>& outputs, json extra = json::object()) {
  if (c.out_dir.empty()) {
    for (std::size_t i = 0; i < outputs.size(); ++i) {
      if (i == 0) {
        std::cout << outputs[i].content;
      } else {
        write_file(outputs[i].name, outputs[i].content);
      }
    }
    std::cout.flush();
    return;
  }
  const fs::path dir(c.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::ParseError, "cannot create " + dir.string() + ": " + ec.message());

  json files = json::array();
  for (const auto& o : outputs) {
    write_file(dir / o.name, o.content);
    files.push_back(o.name);
  }
  json manifest;
  manifest["tool"] = "bike";
  manifest["version"] = io::kVersion;
  manifest["subcommand"] = subcommand;
  manifest["options"] = options;
  manifest["params_source"] = c.params_path.empty() ? "builtin:paper_table1" : c.params_path;
  manifest["params"] = io::to_json(p);
  manifest["outputs"] = files;
  for (auto& [k, v] : extra.items()) manifest[k] = v;
  manifest["timestamp"] = utc_timestamp();
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

ThetaRange theta_range(const std::vector<double>& r) {
  ThetaRange out;
  if (r.size() == 2) out = {r[0], r[1]};
  return out;
}

json range_json(const ThetaRange& r) { return json::array({r.lo, r.hi}); }

// --- subcommands -----------------------------------------------------------

void run_critical_speed(const Common& c, double c1) {
  const BicycleParams p = resolve_params(c);
  const double wc = critical_speed(p, c1);
  json out;
  out["c1"] = c1;
  out["omega_c"] = wc;
  emit(c, "critical-speed", {{"c1", c1}}, p, {{"critical_speed.json", dump(out)}});
}

void run_equilibria(const Common& c, double c1, double omega0, const ThetaRange& range) {
  const BicycleParams p = resolve_params(c);
  const ControlLaw law{c1, omega0};
  validate(law);
  json out;
  out["c1"] = c1;
  out["omega0"] = omega0;
  out["theta_range"] = range_json(range);
  out["equilibria"] = io::to_json(find_equilibria(p, law, range));
  emit(c, "equilibria", {{"c1", c1}, {"omega0", omega0}, {"theta_range", range_json(range)}}, p,
       {{"equilibria.json", dump(out)}});
}

void run_bifurcate(const Common& c, double c1, double wmin, double wmax, int steps,
                   const ThetaRange& range, unsigned threads) {
  const BicycleParams p = resolve_params(c);
  std::vector<double> grid(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    grid[static_cast<std::size_t>(i)] = wmin + (wmax - wmin) * i / (steps - 1);
  }
  BifurcationOptions opt;
  opt.range = range;
  opt.threads = threads;
  const BifurcationDiagram d = bifurcation_diagram(p, c1, grid, opt);

  std::ostringstream csv;
  io::write_bifurcation_csv(csv, d);
  json speeds = io::to_json(d.speeds);
  speeds = json{{"c1", c1}, {"omega_c", speeds["omega_c"]}, {"omega_c_prime", speeds["omega_c_prime"]},
                {"omega_c_double_prime", speeds["omega_c_double_prime"]},
                {"branches", d.branches.size()}, {"warnings", d.warnings}};
  for (const auto& w : d.warnings) std::cerr << "warning: " << w << "\n";
  const json options{{"c1", c1},         {"omega_min", wmin},
                     {"omega_max", wmax}, {"steps", steps},
                     {"theta_range", range_json(range)}};
  emit(c, "bifurcate", options, p,
       {{"bifurcation.csv", csv.str()}, {"critical_speeds.json", dump(speeds)}});
}

struct SimulateArgs {
  double c1 = -4.0;
  double omega0 = 0.0;
  double theta0 = 0.0;
  double thetadot0 = 0.0;
  double tmax = 30.0;
  double dt_out = 0.01;
  double rtol = 1e-9;
  double atol = 1e-12;
  bool path = false;
  bool oracle = false;
};

void run_simulate(const Common& c, const SimulateArgs& a) {
  const BicycleParams p = resolve_params(c);
  const ControlLaw law{a.c1, a.omega0};
  SimulationOptions opt;
  opt.rtol = a.rtol;
  opt.atol = a.atol;
  const LeanState s0{a.theta0, a.thetadot0};
  const Trajectory traj = simulate(p, law, s0, a.tmax, a.dt_out, opt);

  std::vector<Output> outputs;
  std::ostringstream csv;
  io::write_trajectory_csv(csv, traj);
  outputs.push_back({"trajectory.csv", csv.str()});

  if (a.path) {
    std::ostringstream pc;
    io::write_path_csv(pc, reconstruct_path(p, traj, opt));
    outputs.push_back({"path.csv", pc.str()});
  }
  if (a.oracle) {
    const FullState fs0 = full_state(p, {s0.theta, law.c1 * s0.theta},
                                     {s0.theta_dot, law.c1 * s0.theta_dot, law.omega0});
    const DaeTrajectory dae =
        simulate_dae(p, fs0, interpolate_torques(traj), traj.t.back(), a.dt_out);
    std::ostringstream oc;
    io::write_oracle_csv(oc, dae);
    outputs.push_back({"oracle.csv", oc.str()});
  }

  json extra = json::object();
  if (traj.domain_exit) {
    std::cerr << "fall at t=" << io::fmt(*traj.domain_exit) << "\n";
    extra["domain_exit"] = *traj.domain_exit;
  }
  const json options{{"c1", a.c1},     {"omega0", a.omega0}, {"theta0", a.theta0},
                     {"thetadot0", a.thetadot0}, {"tmax", a.tmax},   {"dt_out", a.dt_out},
                     {"rtol", a.rtol}, {"atol", a.atol},     {"path", a.path},
                     {"oracle", a.oracle}};
  emit(c, "simulate", options, p, outputs, extra);
}

void run_coeffs(const Common& c, double theta, double delta) {
  const BicycleParams p = resolve_params(c);
  const ShapeCoords shape{theta, delta};
  const json out = io::coeffs_json(shape, reduced_coeffs(p, shape), coefficient_partials(p, shape));
  emit(c, "coeffs", {{"theta", theta}, {"delta", delta}}, p, {{"coeffs.json", dump(out)}});
}

int run_verify(const Common& c) {
  const BicycleParams p = resolve_params(c);
  const IdentityReport r = verify_structural_identities(p);
  emit(c, "verify", json::object(), p, {{"verify.json", dump(io::to_json(r))}});
  if (!r.passed()) {
    std::ostringstream msg;
    msg << "structural identity residual " << io::fmt(r.worst()) << " exceeds 1e-8";
    std::cerr << io::error_json(Error(ErrorKind::ValidationError, msg.str())).dump() << "\n";
    return 1;
  }
  return 0;
}

void add_common(CLI::App* sub, Common& c) {
  sub->add_option("--params", c.params_path, "TOML parameter file (default: built-in paper_table1 set)")
      ->check(CLI::ExistingFile);
  sub->add_option("--out-dir", c.out_dir, "Write outputs and manifest.json into this directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Controlled Whipple bicycle: critical speeds, equilibria, simulation", "bike"};
  app.set_version_flag("--version", std::string(io::kVersion));
  app.require_subcommand(1);

  Common common;
  double c1 = -4.0;
  double omega0 = 0.0;
  std::vector<double> range_v;
  double wmin = 1.0, wmax = 9.0;
  int steps = 600;
  unsigned threads = 0;
  double theta = 0.0, delta = 0.0;
  SimulateArgs sim;

  auto* cs = app.add_subcommand("critical-speed", "Critical rear wheel rate of upright running");
  add_common(cs, common);
  cs->add_option("--c1", c1, "Steer coefficient")->capture_default_str();

  auto* eq = app.add_subcommand("equilibria", "Equilibria of the lean dynamics with stability");
  add_common(eq, common);
  eq->add_option("--c1", c1, "Steer coefficient")->capture_default_str();
  eq->add_option("--omega0", omega0, "Rear wheel rate [rad/s]")->required()->check(CLI::NonNegativeNumber);
  eq->add_option("--theta-range", range_v, "Lean interval A B [rad]")->expected(2);

  auto* bf = app.add_subcommand("bifurcate", "Equilibria over a grid of rear wheel rates");
  add_common(bf, common);
  bf->add_option("--c1", c1, "Steer coefficient")->capture_default_str();
  bf->add_option("--omega-min", wmin, "Lowest rate [rad/s]")->capture_default_str()->check(CLI::NonNegativeNumber);
  bf->add_option("--omega-max", wmax, "Highest rate [rad/s]")->capture_default_str()->check(CLI::NonNegativeNumber);
  bf->add_option("--steps", steps, "Grid points")->capture_default_str()->check(CLI::Range(2, 1000000));
  bf->add_option("--theta-range", range_v, "Lean interval A B [rad]")->expected(2);
  bf->add_option("--threads", threads, "Worker threads (0: BIKE_NUM_THREADS or all cores)");

  auto* sm = app.add_subcommand("simulate", "Integrate the controlled lean dynamics");
  add_common(sm, common);
  sm->add_option("--c1", sim.c1, "Steer coefficient")->capture_default_str();
  sm->add_option("--omega0", sim.omega0, "Rear wheel rate [rad/s]")->required()->check(CLI::NonNegativeNumber);
  sm->add_option("--theta0", sim.theta0, "Initial lean [rad]")->capture_default_str();
  sm->add_option("--thetadot0", sim.thetadot0, "Initial lean rate [rad/s]")->capture_default_str();
  sm->add_option("--tmax", sim.tmax, "End time [s]")->capture_default_str()->check(CLI::PositiveNumber);
  sm->add_option("--dt-out", sim.dt_out, "Output interval [s]")->capture_default_str()->check(CLI::PositiveNumber);
  sm->add_option("--rtol", sim.rtol, "Relative tolerance")->capture_default_str()->check(CLI::PositiveNumber);
  sm->add_option("--atol", sim.atol, "Absolute tolerance")->capture_default_str()->check(CLI::PositiveNumber);
  sm->add_flag("--path", sim.path, "Also reconstruct the ground path (path.csv)");
  sm->add_flag("--oracle", sim.oracle, "Replay through the full-coordinate model (oracle.csv)")
      ->group("");

  auto* co = app.add_subcommand("coeffs", "Reduced coefficients and partials at a shape");
  add_common(co, common);
  co->add_option("--theta", theta, "Lean [rad]")->required();
  co->add_option("--delta", delta, "Steer [rad]")->required();

  auto* vf = app.add_subcommand("verify", "Residuals of the structural identities");
  add_common(vf, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  if (bf->parsed() && !(wmax > wmin)) {
    std::cerr << "--omega-max must exceed --omega-min\n" << bf->help();
    return 2;
  }
  if (!range_v.empty() && !(range_v[1] > range_v[0])) {
    std::cerr << "--theta-range needs A < B\n";
    return 2;
  }

  try {
    if (cs->parsed()) run_critical_speed(common, c1);
    if (eq->parsed()) run_equilibria(common, c1, omega0, theta_range(range_v));
    if (bf->parsed()) run_bifurcate(common, c1, wmin, wmax, steps, theta_range(range_v), threads);
    if (sm->parsed()) run_simulate(common, sim);
    if (co->parsed()) run_coeffs(common, theta, delta);
    if (vf->parsed()) return run_verify(common);
  } catch (const Error& e) {
    std::cerr << io::error_json(e).dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "InternalError"}, {"message", e.what()}}.dump() << "\n";
    return 1;
  }
  return 0;
}
