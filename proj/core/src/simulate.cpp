#include "latplan/simulate.hpp"

#include <algorithm>
#include <cmath>

namespace latplan {

HermiteAlpha::HermiteAlpha(std::vector<double> arc, std::vector<double> alpha,
                           std::vector<double> omega)
    : s_(std::move(arc)), a_(std::move(alpha)), w_(std::move(omega)) {
  if (s_.size() < 2 || s_.size() != a_.size() || s_.size() != w_.size()) {
    throw std::invalid_argument("HermiteAlpha: need >= 2 consistent knots");
  }
  for (std::size_t i = 1; i < s_.size(); ++i) {
    if (!(s_[i] > s_[i - 1])) throw std::invalid_argument("HermiteAlpha: arcs not increasing");
  }
}

double HermiteAlpha::alpha(double s) const {
  if (s <= s_.front()) return a_.front();
  if (s >= s_.back()) return a_.back();
  auto it = std::upper_bound(s_.begin(), s_.end(), s);
  std::size_t i = static_cast<std::size_t>(it - s_.begin()) - 1;
  double h = s_[i + 1] - s_[i];
  double t = (s - s_[i]) / h;
  double t2 = t * t, t3 = t2 * t;
  double h00 = 2 * t3 - 3 * t2 + 1;
  double h10 = t3 - 2 * t2 + t;
  double h01 = -2 * t3 + 3 * t2;
  double h11 = t3 - t2;
  return h00 * a_[i] + h10 * h * w_[i] + h01 * a_[i + 1] + h11 * h * w_[i + 1];
}

namespace {

using State5 = std::array<double, 5>;

State5 rhs(const State5& x, double s, double v, const AlphaProfile& profile,
           const VehicleParams& p) {
  if (std::abs(x[3]) >= kPi / 2.0 || std::abs(x[4]) >= kPi / 2.0) {
    throw JackKnifeError(s, "simulate: relative angle reached pi/2");
  }
  double a = profile.alpha(s);
  if (std::abs(a) >= kPi / 2.0 - 1e-9) {
    throw std::domain_error("simulate: steering angle at tan pole");
  }
  State5 dx;
  model_derivs(x.data(), a, v, p, dx.data());
  return dx;
}

State5 rk4_step(const State5& x, double s, double h, double v, const AlphaProfile& profile,
                const VehicleParams& p) {
  State5 k1 = rhs(x, s, v, profile, p);
  State5 x2, x3, x4;
  for (int i = 0; i < 5; ++i) x2[i] = x[i] + 0.5 * h * k1[i];
  State5 k2 = rhs(x2, s + 0.5 * h, v, profile, p);
  for (int i = 0; i < 5; ++i) x3[i] = x[i] + 0.5 * h * k2[i];
  State5 k3 = rhs(x3, s + 0.5 * h, v, profile, p);
  for (int i = 0; i < 5; ++i) x4[i] = x[i] + h * k3[i];
  State5 k4 = rhs(x4, s + h, v, profile, p);
  State5 out;
  for (int i = 0; i < 5; ++i) {
    out[i] = x[i] + (h / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  return out;
}

}  // namespace

Trajectory simulate(const ContinuousState& initial, const AlphaProfile& profile, double v,
                    double total_arc, const VehicleParams& params, double step) {
  if (step <= 0.0) throw std::invalid_argument("simulate: step must be > 0");
  if (total_arc < 0.0) throw std::invalid_argument("simulate: total_arc must be >= 0");
  if (v != 1.0 && v != -1.0) throw std::invalid_argument("simulate: v must be +-1");

  Trajectory traj;
  State5 x{initial.x, initial.y, initial.theta, initial.beta3, initial.beta2};
  double s = 0.0;

  auto push = [&](double arc, const State5& st) {
    if (std::abs(st[3]) >= kPi / 2.0 || std::abs(st[4]) >= kPi / 2.0) {
      throw JackKnifeError(arc, "simulate: relative angle reached pi/2");
    }
    traj.arc.push_back(arc);
    traj.states.push_back(ContinuousState{st[0], st[1], norm_angle(st[2]), st[3], st[4]});
  };

  push(0.0, x);
  while (s < total_arc - 1e-12) {
    double h = std::min(step, total_arc - s);
    x = rk4_step(x, s, h, v, profile, params);
    s += h;
    push(s, x);
  }
  return traj;
}

}  // namespace latplan
