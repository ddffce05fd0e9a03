#pragma once

// CSV and JSON emission shared by the CLI and the Python bindings.

#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "whipple/controlled_motion.hpp"
#include "whipple/dynamics.hpp"
#include "whipple/error.hpp"
#include "whipple/oracle_dae.hpp"
#include "whipple/stability.hpp"

namespace whipple::io {

inline constexpr const char* kVersion = "1.0.0";

/// Decimal with 17 significant digits.
std::string fmt(double v);

void write_trajectory_csv(std::ostream& os, const Trajectory& traj);
void write_path_csv(std::ostream& os, const PlanarPath& path);
void write_bifurcation_csv(std::ostream& os, const BifurcationDiagram& d);
/// Lean, steer and wheel rate of the full-coordinate oracle run.
void write_oracle_csv(std::ostream& os, const DaeTrajectory& traj);

nlohmann::ordered_json to_json(const BicycleParams& p);
nlohmann::ordered_json to_json(const CriticalSpeeds& s);
nlohmann::ordered_json to_json(const LinearCoeffs& lc);
nlohmann::ordered_json to_json(const std::vector<EquilibriumPoint>& eq);
nlohmann::ordered_json to_json(const IdentityReport& r);
nlohmann::ordered_json coeffs_json(ShapeCoords shape, const ReducedCoefficients& rc,
                                   const CoefficientPartials& cp);
nlohmann::ordered_json error_json(const Error& e);

}  // namespace whipple::io
