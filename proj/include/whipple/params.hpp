#pragma once

#include <string>
#include <string_view>

namespace whipple {

/// Inertial data of one wheel. The wheel is axisymmetric about its axle (y),
/// so Izz == Ixx.
struct WheelParams {
  double m = 0.0;
  double R = 0.0;
  double Ixx = 0.0;
  double Iyy = 0.0;
};

/// Inertial data of one frame, expressed at its mass center in the upright
/// reference configuration. (x, z) locate the mass center: x forward of the
/// rear contact point, z above the ground. Ixz is the (x, z) entry of the
/// inertia tensor in body axes x forward, y left, z up.
struct FrameParams {
  double m = 0.0;
  double x = 0.0;
  double z = 0.0;
  double Ixx = 0.0;
  double Iyy = 0.0;
  double Izz = 0.0;
  double Ixz = 0.0;
};

/// The 25 geometric and inertial parameters of a Whipple bicycle, plus gravity.
struct BicycleParams {
  double w = 0.0;       // wheelbase [m]
  double c = 0.0;       // trail [m]
  double lambda = 0.0;  // steer-axis tilt from vertical [rad]
  double g = 9.81;      // [m/s^2]

  WheelParams rear_wheel;
  FrameParams rear_frame;
  FrameParams front_frame;
  WheelParams front_wheel;

  [[nodiscard]] double total_mass() const {
    return rear_wheel.m + rear_frame.m + front_frame.m + front_wheel.m;
  }

  /// The powered autonomous bicycle bundled as params/paper_table1.toml
  /// (w = 0.935 m, c = 0.046 m, lambda = 0.175 rad).
  static BicycleParams paper_table1();

  /// The Meijaard et al. (2007) benchmark bicycle, converted to this schema.
  static BicycleParams benchmark();
};

/// Throws Error(ValidationError) naming the first violated invariant.
void validate(const BicycleParams& p);

/// Reads and validates a TOML parameter file. Missing `g` defaults to 9.81.
/// Throws Error(ParseError) for syntax errors, missing or unknown keys.
BicycleParams load_params(const std::string& path);

/// Same as load_params, from an in-memory document. `source` names it in
/// error messages.
BicycleParams parse_params(std::string_view toml_text,
                           const std::string& source = "<string>");

/// Serializes to the TOML schema accepted by load_params.
std::string to_toml(const BicycleParams& p);

}  // namespace whipple
