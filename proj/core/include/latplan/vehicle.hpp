#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>

#include "latplan/dual.hpp"
#include "latplan/util.hpp"

namespace latplan {

/// Axle-aligned body rectangle: total length/width and the longitudinal
/// offset of its center ahead of the reference axle.
struct BodyRect {
  double length = 0.0;
  double width = 0.0;
  double offset = 0.0;
};

/// Geometry and actuator limits of the truck-dolly-trailer chain.
///
/// L3: trailer axle to dolly axle, L2: dolly axle to the truck's off-axle
/// hitch, L1: truck wheelbase, M1: hitch offset behind the truck rear axle.
/// Defaults are the full-size test-vehicle geometry.
struct VehicleParams {
  double L1 = 4.66;
  double L2 = 3.75;
  double L3 = 7.59;
  double M1 = 0.8;

  double alpha_max = kPi / 4.0;
  double omega_max = 1.5;
  double u_max = 40.0;
  double beta3_max = kPi / 2.0;
  double beta2_max = kPi / 2.0;

  BodyRect truck{6.0, 2.5, 1.5};
  BodyRect dolly{2.0, 2.5, 0.0};
  BodyRect trailer{10.0, 2.5, 3.0};

  /// Throws std::invalid_argument when a length or limit is out of range.
  void validate() const;

  static VehicleParams from_config(const KeyValueFile& kv);
  std::string to_config() const;
  std::uint64_t fingerprint() const;
};

/// Planner state: trailer axle position, trailer heading, and the two
/// relative angles (trailer-dolly, dolly-truck).
struct ContinuousState {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double beta3 = 0.0;
  double beta2 = 0.0;
};

/// ContinuousState extended with the steering state used by the OCP.
struct ExtendedState {
  ContinuousState base;
  double alpha = 0.0;
  double omega = 0.0;
};

/// Circular steady state for a constant steering angle.
/// Radii are +infinity when alpha_e == 0.
struct EquilibriumConfig {
  double alpha_e = 0.0;
  double beta3_e = 0.0;
  double beta2_e = 0.0;
  double R1 = 0.0;
  double R2 = 0.0;
  double R3 = 0.0;
};

enum class Direction : std::uint8_t { Forward, Backward };

inline double direction_sign(Direction d) { return d == Direction::Forward ? 1.0 : -1.0; }
inline Direction opposite(Direction d) {
  return d == Direction::Forward ? Direction::Backward : Direction::Forward;
}
inline char direction_char(Direction d) { return d == Direction::Forward ? 'F' : 'B'; }

/// One control point: direction sign, steering angle, and its derivatives.
struct ControlSample {
  double v = 1.0;
  double alpha = 0.0;
  double omega = 0.0;
  double u = 0.0;
};

/// Raised when a relative angle folds past +-pi/2 during simulation.
class JackKnifeError : public std::runtime_error {
 public:
  JackKnifeError(double arc, const std::string& what) : std::runtime_error(what), arc_(arc) {}
  double arc_length() const { return arc_; }

 private:
  double arc_;
};

/// Raised when an equilibrium radius chain has no real solution.
class GeometryError : public std::domain_error {
  using std::domain_error::domain_error;
};

/// Kinematic model scalar-generic core. `state` is (x, y, theta, beta3,
/// beta2); writes the five derivatives with respect to traveled arc length
/// (|v| = 1). No pole checks here; callers guard the domain.
template <class S>
void model_derivs(const S* state, const S& alpha, double v, const VehicleParams& p, S* out) {
  using namespace adm;
  const S& theta = state[2];
  const S& beta3 = state[3];
  const S& beta2 = state[4];

  S tan_a = tan(alpha);
  S cos_b3 = cos(beta3);
  S sin_b3 = sin(beta3);
  S cos_b2 = cos(beta2);
  S sin_b2 = sin(beta2);
  S tan_b2 = sin_b2 / cos_b2;

  S coupling = S(1.0) + (p.M1 / p.L1) * tan_b2 * tan_a;
  S speed3 = cos_b3 * cos_b2 * coupling;  // trailer axle speed factor

  out[0] = v * speed3 * cos(theta);
  out[1] = v * speed3 * sin(theta);
  out[2] = v * sin_b3 * cos_b2 * coupling * (1.0 / p.L3);
  out[3] = v * cos_b2 *
           ((tan_b2 - (p.M1 / p.L1) * tan_a) * (1.0 / p.L2) -
            sin_b3 * coupling * (1.0 / p.L3));
  out[4] = v * (tan_a * (1.0 / p.L1) - sin_b2 * (1.0 / p.L2) +
                (p.M1 / (p.L1 * p.L2)) * cos_b2 * tan_a);
}

/// Derivatives of (x, y, theta, beta3, beta2) with respect to arc length.
/// Throws std::domain_error when evaluated at a tan/cos pole.
std::array<double, 5> derivatives(const ContinuousState& s, double v, double alpha,
                                  const VehicleParams& p);

/// Equilibrium configuration for constant steering alpha_e.
/// Throws GeometryError when the radius chain is not real (turn too tight).
EquilibriumConfig equilibrium(double alpha_e, const VehicleParams& p);

/// State at the equilibrium for alpha_e, placed at the given trailer pose.
ContinuousState equilibrium_state(double alpha_e, const VehicleParams& p, double x = 0.0,
                                  double y = 0.0, double theta = 0.0);

/// Steering angle whose equilibrium drives the trailer axle at signed
/// curvature `kappa`. Inverse of equilibrium(): kappa = sign/R3.
/// Curvatures beyond the steady-state range are clamped.
double steady_state_alpha(double kappa, const VehicleParams& p);

/// Largest |alpha| with a real equilibrium for this geometry (R3 -> 0).
double max_equilibrium_alpha(const VehicleParams& p);

struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double heading = 0.0;
};

/// Axle poses of the three bodies: trailer axle, dolly axle, truck rear axle.
struct VehiclePoses {
  Pose2 trailer;
  Pose2 dolly;
  Pose2 truck;
  Pose2 hitch;  // hitch point, heading = truck heading
};

/// Chains the vehicle geometry from the trailer state (Fig.-1 layout):
/// dolly axle L3 ahead of the trailer axle along theta2 = theta + beta3,
/// hitch L2 ahead of the dolly axle along theta1 = theta2 + beta2,
/// truck rear axle M1 ahead of the hitch along theta1.
VehiclePoses pose_chain(const ContinuousState& s, const VehicleParams& p);

}  // namespace latplan
