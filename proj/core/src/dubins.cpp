#include "latplan/dubins.hpp"

#include <cmath>
#include <limits>

namespace latplan {

namespace {

double mod2pi(double a) {
  double r = std::fmod(a, kTwoPi);
  if (r < 0.0) r += kTwoPi;
  return r;
}

struct Word {
  bool ok = false;
  double t = 0.0, p = 0.0, q = 0.0;  // normalized segment lengths
};

// Shkel-Lumelsky closed forms in normalized coordinates (radius 1,
// start at origin heading alpha, goal at (d, 0) heading beta).
Word lsl(double d, double a, double b) {
  double sa = std::sin(a), ca = std::cos(a), sb = std::sin(b), cb = std::cos(b);
  double p_sq = 2.0 + d * d - 2.0 * std::cos(a - b) + 2.0 * d * (sa - sb);
  if (p_sq < 0.0) return {};
  double tmp = std::atan2(cb - ca, d + sa - sb);
  return {true, mod2pi(-a + tmp), std::sqrt(p_sq), mod2pi(b - tmp)};
}

Word rsr(double d, double a, double b) {
  double sa = std::sin(a), ca = std::cos(a), sb = std::sin(b), cb = std::cos(b);
  double p_sq = 2.0 + d * d - 2.0 * std::cos(a - b) + 2.0 * d * (sb - sa);
  if (p_sq < 0.0) return {};
  double tmp = std::atan2(ca - cb, d - sa + sb);
  return {true, mod2pi(a - tmp), std::sqrt(p_sq), mod2pi(-b + tmp)};
}

Word lsr(double d, double a, double b) {
  double sa = std::sin(a), ca = std::cos(a), sb = std::sin(b), cb = std::cos(b);
  double p_sq = -2.0 + d * d + 2.0 * std::cos(a - b) + 2.0 * d * (sa + sb);
  if (p_sq < 0.0) return {};
  double p = std::sqrt(p_sq);
  double tmp = std::atan2(-ca - cb, d + sa + sb) - std::atan2(-2.0, p);
  return {true, mod2pi(-a + tmp), p, mod2pi(-mod2pi(b) + tmp)};
}

Word rsl(double d, double a, double b) {
  double sa = std::sin(a), ca = std::cos(a), sb = std::sin(b), cb = std::cos(b);
  double p_sq = -2.0 + d * d + 2.0 * std::cos(a - b) - 2.0 * d * (sa + sb);
  if (p_sq < 0.0) return {};
  double p = std::sqrt(p_sq);
  double tmp = std::atan2(ca + cb, d - sa - sb) - std::atan2(2.0, p);
  return {true, mod2pi(a - tmp), p, mod2pi(b - tmp)};
}

Word rlr(double d, double a, double b) {
  double sa = std::sin(a), ca = std::cos(a), sb = std::sin(b), cb = std::cos(b);
  double tmp = (6.0 - d * d + 2.0 * std::cos(a - b) + 2.0 * d * (sa - sb)) / 8.0;
  if (std::abs(tmp) > 1.0) return {};
  double p = mod2pi(kTwoPi - std::acos(tmp));
  double t = mod2pi(a - std::atan2(ca - cb, d - sa + sb) + p / 2.0);
  return {true, t, p, mod2pi(a - b - t + p)};
}

Word lrl(double d, double a, double b) {
  double sa = std::sin(a), ca = std::cos(a), sb = std::sin(b), cb = std::cos(b);
  double tmp = (6.0 - d * d + 2.0 * std::cos(a - b) + 2.0 * d * (sb - sa)) / 8.0;
  if (std::abs(tmp) > 1.0) return {};
  double p = mod2pi(kTwoPi - std::acos(tmp));
  double t = mod2pi(-a + std::atan2(cb - ca, d + sa - sb) + p / 2.0);
  return {true, t, p, mod2pi(mod2pi(b) - a - t + p)};
}

Pose2 advance(const Pose2& pose, char type, double len, double radius) {
  Pose2 out = pose;
  if (type == 'S') {
    out.x += len * std::cos(pose.heading);
    out.y += len * std::sin(pose.heading);
    return out;
  }
  double sign = type == 'L' ? 1.0 : -1.0;
  double dth = sign * len / radius;
  out.x += radius * sign * (std::sin(pose.heading + dth) - std::sin(pose.heading));
  out.y += radius * sign * (-std::cos(pose.heading + dth) + std::cos(pose.heading));
  out.heading = norm_angle(pose.heading + dth);
  return out;
}

}  // namespace

double DubinsPath::curvature_at(double s) const {
  for (const auto& seg : segments) {
    if (s <= seg.length || &seg == &segments[2]) {
      if (seg.type == 'S') return 0.0;
      return (seg.type == 'L' ? 1.0 : -1.0) / radius;
    }
    s -= seg.length;
  }
  return 0.0;
}

Pose2 DubinsPath::pose_at(double s) const {
  Pose2 pose = start;
  for (const auto& seg : segments) {
    double len = std::min(s, seg.length);
    pose = advance(pose, seg.type, len, radius);
    s -= len;
    if (s <= 0.0) break;
  }
  return pose;
}

std::optional<DubinsPath> dubins_shortest(const Pose2& start, const Pose2& goal, double radius) {
  if (radius <= 0.0) return std::nullopt;
  double dx = goal.x - start.x;
  double dy = goal.y - start.y;
  double big_d = std::hypot(dx, dy);
  double d = big_d / radius;
  double phi = big_d > 1e-12 ? std::atan2(dy, dx) : start.heading;
  double a = mod2pi(start.heading - phi);
  double b = mod2pi(goal.heading - phi);

  struct Candidate {
    Word w;
    const char* types;
  };
  const Candidate cands[6] = {
      {lsl(d, a, b), "LSL"}, {rsr(d, a, b), "RSR"}, {lsr(d, a, b), "LSR"},
      {rsl(d, a, b), "RSL"}, {rlr(d, a, b), "RLR"}, {lrl(d, a, b), "LRL"},
  };

  const Candidate* best = nullptr;
  double best_len = std::numeric_limits<double>::infinity();
  for (const auto& c : cands) {
    if (!c.w.ok) continue;
    double len = c.w.t + c.w.p + c.w.q;
    if (len < best_len) {
      best_len = len;
      best = &c;
    }
  }
  if (best == nullptr) return std::nullopt;

  DubinsPath path;
  path.radius = radius;
  path.start = start;
  path.segments[0] = {best->types[0], best->w.t * radius};
  path.segments[1] = {best->types[1], best->w.p * radius};
  path.segments[2] = {best->types[2], best->w.q * radius};
  return path;
}

}  // namespace latplan
