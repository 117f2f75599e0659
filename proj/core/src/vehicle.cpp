#include "latplan/vehicle.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace latplan {

namespace {

void check_rect(const BodyRect& r, const char* name) {
  if (r.length <= 0.0 || r.width <= 0.0) {
    throw std::invalid_argument(std::string("vehicle: ") + name + " body dimensions must be > 0");
  }
}

void append_rect(std::ostringstream& out, const char* name, const BodyRect& r) {
  out << name << "_length " << fmt_double(r.length) << "\n"
      << name << "_width " << fmt_double(r.width) << "\n"
      << name << "_offset " << fmt_double(r.offset) << "\n";
}

BodyRect rect_from(const KeyValueFile& kv, const char* name, const BodyRect& def) {
  BodyRect r;
  std::string n(name);
  r.length = kv.get_double(n + "_length", def.length);
  r.width = kv.get_double(n + "_width", def.width);
  r.offset = kv.get_double(n + "_offset", def.offset);
  return r;
}

}  // namespace

void VehicleParams::validate() const {
  if (L1 <= 0.0 || L2 <= 0.0 || L3 <= 0.0) {
    throw std::invalid_argument("vehicle: L1, L2, L3 must be > 0");
  }
  if (M1 < 0.0) throw std::invalid_argument("vehicle: M1 must be >= 0");
  if (alpha_max <= 0.0 || alpha_max >= kPi / 2.0) {
    throw std::invalid_argument("vehicle: alpha_max must be in (0, pi/2)");
  }
  if (omega_max <= 0.0 || u_max <= 0.0) {
    throw std::invalid_argument("vehicle: omega_max and u_max must be > 0");
  }
  if (beta3_max <= 0.0 || beta3_max > kPi / 2.0 || beta2_max <= 0.0 || beta2_max > kPi / 2.0) {
    throw std::invalid_argument("vehicle: beta limits must be in (0, pi/2]");
  }
  check_rect(truck, "truck");
  check_rect(dolly, "dolly");
  check_rect(trailer, "trailer");
}

VehicleParams VehicleParams::from_config(const KeyValueFile& kv) {
  VehicleParams def;
  VehicleParams p;
  p.L1 = kv.get_double("L1", def.L1);
  p.L2 = kv.get_double("L2", def.L2);
  p.L3 = kv.get_double("L3", def.L3);
  p.M1 = kv.get_double("M1", def.M1);
  p.alpha_max = kv.get_double("alpha_max", def.alpha_max);
  p.omega_max = kv.get_double("omega_max", def.omega_max);
  p.u_max = kv.get_double("u_max", def.u_max);
  p.beta3_max = kv.get_double("beta3_max", def.beta3_max);
  p.beta2_max = kv.get_double("beta2_max", def.beta2_max);
  p.truck = rect_from(kv, "truck", def.truck);
  p.dolly = rect_from(kv, "dolly", def.dolly);
  p.trailer = rect_from(kv, "trailer", def.trailer);
  p.validate();
  return p;
}

std::string VehicleParams::to_config() const {
  std::ostringstream out;
  out << "L1 " << fmt_double(L1) << "\n"
      << "L2 " << fmt_double(L2) << "\n"
      << "L3 " << fmt_double(L3) << "\n"
      << "M1 " << fmt_double(M1) << "\n"
      << "alpha_max " << fmt_double(alpha_max) << "\n"
      << "omega_max " << fmt_double(omega_max) << "\n"
      << "u_max " << fmt_double(u_max) << "\n"
      << "beta3_max " << fmt_double(beta3_max) << "\n"
      << "beta2_max " << fmt_double(beta2_max) << "\n";
  append_rect(out, "truck", truck);
  append_rect(out, "dolly", dolly);
  append_rect(out, "trailer", trailer);
  return out.str();
}

std::uint64_t VehicleParams::fingerprint() const {
  Fnv1a h;
  h.add(to_config());
  return h.value();
}

std::array<double, 5> derivatives(const ContinuousState& s, double v, double alpha,
                                  const VehicleParams& p) {
  constexpr double kPole = kPi / 2.0 - 1e-9;
  if (std::abs(alpha) >= kPole) throw std::domain_error("derivatives: |alpha| at tan pole");
  if (std::abs(s.beta3) >= kPole) throw std::domain_error("derivatives: |beta3| at cos pole");
  if (std::abs(s.beta2) >= kPole) throw std::domain_error("derivatives: |beta2| at cos pole");

  double state[5] = {s.x, s.y, s.theta, s.beta3, s.beta2};
  std::array<double, 5> out;
  model_derivs(state, alpha, v, p, out.data());
  return out;
}

EquilibriumConfig equilibrium(double alpha_e, const VehicleParams& p) {
  EquilibriumConfig eq;
  eq.alpha_e = alpha_e;
  if (alpha_e == 0.0) {
    eq.R1 = eq.R2 = eq.R3 = std::numeric_limits<double>::infinity();
    return eq;
  }
  if (std::abs(alpha_e) >= kPi / 2.0) throw GeometryError("equilibrium: |alpha_e| >= pi/2");

  double r1 = p.L1 / std::abs(std::tan(alpha_e));
  double r2_sq = r1 * r1 + p.M1 * p.M1 - p.L2 * p.L2;
  if (r2_sq < 0.0) throw GeometryError("equilibrium: R2^2 < 0, turn too tight for this vehicle");
  double r2 = std::sqrt(r2_sq);
  double r3_sq = r2_sq - p.L3 * p.L3;
  if (r3_sq < 0.0) throw GeometryError("equilibrium: R3^2 < 0, turn too tight for this vehicle");
  double r3 = std::sqrt(r3_sq);

  double sign = alpha_e > 0.0 ? 1.0 : -1.0;
  eq.R1 = r1;
  eq.R2 = r2;
  eq.R3 = r3;
  eq.beta3_e = sign * std::atan2(p.L3, r3);
  eq.beta2_e = sign * (std::atan2(p.M1, r1) + std::atan2(p.L2, r2));
  return eq;
}

ContinuousState equilibrium_state(double alpha_e, const VehicleParams& p, double x, double y,
                                  double theta) {
  EquilibriumConfig eq = equilibrium(alpha_e, p);
  return ContinuousState{x, y, theta, eq.beta3_e, eq.beta2_e};
}

double max_equilibrium_alpha(const VehicleParams& p) {
  // Real radii require R1^2 >= L3^2 + L2^2 - M1^2.
  double r1_min_sq = p.L3 * p.L3 + p.L2 * p.L2 - p.M1 * p.M1;
  if (r1_min_sq <= 0.0) return p.alpha_max;
  return std::atan2(p.L1, std::sqrt(r1_min_sq));
}

double steady_state_alpha(double kappa, const VehicleParams& p) {
  if (kappa == 0.0) return 0.0;
  double r3 = 1.0 / std::abs(kappa);
  double r2_sq = r3 * r3 + p.L3 * p.L3;
  double r1_sq = r2_sq + p.L2 * p.L2 - p.M1 * p.M1;
  double alpha = std::atan2(p.L1, std::sqrt(std::max(r1_sq, 1e-12)));
  return kappa > 0.0 ? alpha : -alpha;
}

VehiclePoses pose_chain(const ContinuousState& s, const VehicleParams& p) {
  VehiclePoses out;
  double theta2 = s.theta + s.beta3;
  double theta1 = theta2 + s.beta2;

  out.trailer = {s.x, s.y, norm_angle(s.theta)};
  out.dolly = {s.x + p.L3 * std::cos(theta2), s.y + p.L3 * std::sin(theta2), norm_angle(theta2)};
  out.hitch = {out.dolly.x + p.L2 * std::cos(theta1), out.dolly.y + p.L2 * std::sin(theta1),
               norm_angle(theta1)};
  out.truck = {out.hitch.x + p.M1 * std::cos(theta1), out.hitch.y + p.M1 * std::sin(theta1),
               norm_angle(theta1)};
  return out;
}

}  // namespace latplan
