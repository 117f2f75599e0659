#pragma once

#include <vector>

#include "latplan/vehicle.hpp"

namespace latplan {

/// Steering angle as a function of traveled arc length.
class AlphaProfile {
 public:
  virtual ~AlphaProfile() = default;
  virtual double alpha(double s) const = 0;
};

class ConstantAlpha : public AlphaProfile {
 public:
  explicit ConstantAlpha(double a) : a_(a) {}
  double alpha(double) const override { return a_; }

 private:
  double a_;
};

/// Cubic Hermite interpolation of (alpha, dalpha/ds) knots. Knot arcs must be
/// strictly increasing; evaluation clamps to the knot range.
class HermiteAlpha : public AlphaProfile {
 public:
  HermiteAlpha(std::vector<double> arc, std::vector<double> alpha, std::vector<double> omega);
  double alpha(double s) const override;

 private:
  std::vector<double> s_, a_, w_;
};

struct Trajectory {
  std::vector<double> arc;
  std::vector<ContinuousState> states;

  const ContinuousState& endpoint() const { return states.back(); }
};

/// Fixed-step classical RK4 integration of the kinematic model in arc
/// length. Samples every `step` plus the exact endpoint at `total_arc`.
/// Throws JackKnifeError at the first sample (or integration stage) where a
/// relative angle reaches +-pi/2; propagates domain errors from the model.
Trajectory simulate(const ContinuousState& initial, const AlphaProfile& profile, double v,
                    double total_arc, const VehicleParams& params, double step = 0.05);

}  // namespace latplan
