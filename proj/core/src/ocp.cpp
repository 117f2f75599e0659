#include "latplan/ocp.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "latplan/auglag.hpp"
#include "latplan/dubins.hpp"

namespace latplan {

const char* to_string(OcpStatus s) {
  switch (s) {
    case OcpStatus::Converged: return "Converged";
    case OcpStatus::MaxIterations: return "MaxIterations";
    case OcpStatus::Infeasible: return "Infeasible";
  }
  return "?";
}

OcpProblem OcpProblem::between_equilibria(const VehicleParams& vp, const Pose2& start_pose,
                                          double alpha_e_start, const Pose2& end_pose,
                                          double alpha_e_end) {
  OcpProblem p;
  p.vehicle = vp;
  p.bounds.beta3_max = vp.beta3_max;
  p.bounds.beta2_max = vp.beta2_max;
  p.bounds.alpha_bound = 0.8 * vp.alpha_max;
  p.bounds.omega_max = vp.omega_max;
  p.bounds.u_max = vp.u_max;

  EquilibriumConfig eq_i = equilibrium(alpha_e_start, vp);
  EquilibriumConfig eq_f = equilibrium(alpha_e_end, vp);
  p.initial.base = {start_pose.x, start_pose.y, start_pose.heading, eq_i.beta3_e, eq_i.beta2_e};
  p.initial.alpha = alpha_e_start;
  p.initial.omega = 0.0;
  p.final_.base = {end_pose.x, end_pose.y, end_pose.heading, eq_f.beta3_e, eq_f.beta2_e};
  p.final_.alpha = alpha_e_end;
  p.final_.omega = 0.0;
  return p;
}

SolverConfig SolverConfig::from_config(const KeyValueFile& kv) {
  SolverConfig def;
  SolverConfig c;
  c.n_segments = static_cast<int>(kv.get_double("n_segments", def.n_segments));
  c.substeps = static_cast<int>(kv.get_double("substeps", def.substeps));
  c.max_total_iters = static_cast<int>(kv.get_double("max_total_iters", def.max_total_iters));
  c.stationarity_tol = kv.get_double("stationarity_tol", def.stationarity_tol);
  c.constraint_tol = kv.get_double("constraint_tol", def.constraint_tol);
  c.boundary_pos_tol = kv.get_double("boundary_pos_tol", def.boundary_pos_tol);
  c.boundary_ang_tol = kv.get_double("boundary_ang_tol", def.boundary_ang_tol);
  c.horizon_reg = kv.get_double("horizon_reg", def.horizon_reg);
  c.sample_step = kv.get_double("sample_step", def.sample_step);
  c.dense_step = kv.get_double("dense_step", def.dense_step);
  c.retry_perturbations =
      static_cast<int>(kv.get_double("retry_perturbations", def.retry_perturbations));
  c.rng_seed = static_cast<std::uint32_t>(kv.get_double("rng_seed", def.rng_seed));
  if (c.n_segments < 10) throw std::invalid_argument("solver config: n_segments must be >= 10");
  if (c.sample_step <= 0.0 || c.dense_step <= 0.0) {
    throw std::invalid_argument("solver config: steps must be > 0");
  }
  return c;
}

std::string SolverConfig::to_config() const {
  std::ostringstream out;
  out << "n_segments " << n_segments << "\n"
      << "substeps " << substeps << "\n"
      << "max_total_iters " << max_total_iters << "\n"
      << "stationarity_tol " << fmt_double(stationarity_tol) << "\n"
      << "constraint_tol " << fmt_double(constraint_tol) << "\n"
      << "boundary_pos_tol " << fmt_double(boundary_pos_tol) << "\n"
      << "boundary_ang_tol " << fmt_double(boundary_ang_tol) << "\n"
      << "horizon_reg " << fmt_double(horizon_reg) << "\n"
      << "sample_step " << fmt_double(sample_step) << "\n"
      << "dense_step " << fmt_double(dense_step) << "\n"
      << "retry_perturbations " << retry_perturbations << "\n"
      << "rng_seed " << rng_seed << "\n";
  return out.str();
}

std::uint64_t SolverConfig::fingerprint() const {
  Fnv1a h;
  h.add(to_config());
  return h.value();
}

namespace {

/// Extended-state right-hand side: 5 model states, then alpha' = omega,
/// omega' = u, and the running objective integrand.
template <class S>
inline void ext_rhs(const S x[8], const S& u, const VehicleParams& p, double w_omega, double w_u,
                    S dx[8]) {
  model_derivs(x, x[5], 1.0, p, dx);
  dx[5] = x[6];
  dx[6] = u;
  dx[7] = w_omega * (x[6] * x[6]) + w_u * (u * u);
}

template <class S>
inline bool state_ok(const S x[8]) {
  double b3 = std::abs(value_of(x[3]));
  double b2 = std::abs(value_of(x[4]));
  double al = std::abs(value_of(x[5]));
  return b3 < 1.52 && b2 < 1.52 && al < 1.47 && std::isfinite(value_of(x[0])) &&
         std::isfinite(value_of(x[7]));
}

}  // namespace

OcpNlp::OcpNlp(const OcpProblem& problem, int n_segments, int substeps, double horizon_reg,
               double s_min, double s_max)
    : prob_(problem), n_(n_segments), substeps_(substeps), reg_(horizon_reg), s_min_(s_min),
      s_max_(s_max) {
  if (n_ < 10) throw std::invalid_argument("OcpNlp: n_segments must be >= 10");
  if (substeps_ < 1) throw std::invalid_argument("OcpNlp: substeps must be >= 1");
}

void OcpNlp::tighten(double alpha_margin, double omega_margin, double beta_margin) {
  auto shrink = [](double bound, double margin) {
    return std::max(bound - margin, 0.5 * bound);
  };
  prob_.bounds.alpha_bound = shrink(prob_.bounds.alpha_bound, alpha_margin);
  prob_.bounds.omega_max = shrink(prob_.bounds.omega_max, omega_margin);
  prob_.bounds.beta3_max = shrink(prob_.bounds.beta3_max, beta_margin);
  prob_.bounds.beta2_max = shrink(prob_.bounds.beta2_max, beta_margin);
}

namespace {

/// Shared rollout core. `on_node(k, x)` sees the 8-state at every node.
template <class S, class NodeFn>
bool roll(const OcpProblem& prob, int n, int substeps, double reg, const S* u_nodes,
          const S& horizon, NodeFn&& on_node, S out_end[7], S* cost) {
  double sv = value_of(horizon);
  if (!(sv > 0.02) || sv > 240.0) return false;

  S x[8];
  x[0] = S(prob.initial.base.x);
  x[1] = S(prob.initial.base.y);
  x[2] = S(prob.initial.base.theta);
  x[3] = S(prob.initial.base.beta3);
  x[4] = S(prob.initial.base.beta2);
  x[5] = S(prob.initial.alpha);
  x[6] = S(prob.initial.omega);
  x[7] = S(0.0);

  on_node(0, x);

  S seg = horizon * (1.0 / n);
  S h = seg * (1.0 / substeps);
  S k1[8], k2[8], k3[8], k4[8], xt[8];

  for (int k = 0; k < n; ++k) {
    const S& u0 = u_nodes[k];
    const S& u1 = u_nodes[k + 1];
    for (int m = 0; m < substeps; ++m) {
      double f0 = static_cast<double>(m) / substeps;
      double fm = (m + 0.5) / substeps;
      double f1 = static_cast<double>(m + 1) / substeps;
      S ua = u0 + (u1 - u0) * f0;
      S um = u0 + (u1 - u0) * fm;
      S ub = u0 + (u1 - u0) * f1;

      ext_rhs(x, ua, prob.vehicle, prob.w_omega, prob.w_u, k1);
      for (int i = 0; i < 8; ++i) xt[i] = x[i] + 0.5 * h * k1[i];
      ext_rhs(xt, um, prob.vehicle, prob.w_omega, prob.w_u, k2);
      for (int i = 0; i < 8; ++i) xt[i] = x[i] + 0.5 * h * k2[i];
      ext_rhs(xt, um, prob.vehicle, prob.w_omega, prob.w_u, k3);
      for (int i = 0; i < 8; ++i) xt[i] = x[i] + h * k3[i];
      ext_rhs(xt, ub, prob.vehicle, prob.w_omega, prob.w_u, k4);
      for (int i = 0; i < 8; ++i) {
        x[i] += (h * (1.0 / 6.0)) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
      }
      if (!state_ok(x)) return false;
    }
    on_node(k + 1, x);
  }

  for (int i = 0; i < 7; ++i) out_end[i] = x[i];
  *cost = x[7] + reg * horizon;
  return true;
}

std::array<double, 7> target_of(const OcpProblem& p) {
  return {p.final_.base.x,  p.final_.base.y, p.final_.base.theta, p.final_.base.beta3,
          p.final_.base.beta2, p.final_.alpha, p.final_.omega};
}

}  // namespace

OcpNlp::Eval OcpNlp::eval(const Eigen::VectorXd& z) const {
  Eval e;
  e.h.resize(num_eq());
  e.g.resize(num_ineq());

  std::vector<double> u(n_ + 1);
  for (int k = 0; k <= n_; ++k) u[k] = z[k];
  double s_total = z[n_ + 1];

  std::vector<std::array<double, 4>> nodes(n_ + 1);  // alpha, omega, beta3, beta2
  double end[7];
  double cost = 0.0;
  bool ok = roll(
      prob_, n_, substeps_, reg_, u.data(), s_total,
      [&](int k, const double x[8]) {
        nodes[k] = {x[5], x[6], x[3], x[4]};
      },
      end, &cost);
  if (!ok) return e;

  auto tgt = target_of(prob_);
  e.f = cost;
  for (int i = 0; i < 7; ++i) e.h[i] = end[i] - tgt[i];

  const OcpBounds& b = prob_.bounds;
  int gi = 0;
  for (int k = 0; k <= n_; ++k) {
    e.g[gi++] = nodes[k][0] - b.alpha_bound;
    e.g[gi++] = -nodes[k][0] - b.alpha_bound;
    e.g[gi++] = nodes[k][1] - b.omega_max;
    e.g[gi++] = -nodes[k][1] - b.omega_max;
    e.g[gi++] = nodes[k][2] - b.beta3_max;
    e.g[gi++] = -nodes[k][2] - b.beta3_max;
    e.g[gi++] = nodes[k][3] - b.beta2_max;
    e.g[gi++] = -nodes[k][3] - b.beta2_max;
  }
  for (int k = 0; k <= n_; ++k) {
    e.g[gi++] = u[k] - b.u_max;
    e.g[gi++] = -u[k] - b.u_max;
  }
  e.g[gi++] = s_total - s_max_;
  e.g[gi++] = s_min_ - s_total;
  e.valid = true;
  return e;
}

Eigen::VectorXd OcpNlp::weighted_gradient(const Eigen::VectorXd& z, double wf,
                                          const Eigen::VectorXd& ch,
                                          const Eigen::VectorXd& cg) const {
  constexpr int kLanes = 8;
  using D = Dual<kLanes>;
  const int nv = num_vars();

  // Per-node weights folded from the paired +/- inequality multipliers.
  std::vector<std::array<double, 4>> nw(n_ + 1);
  for (int k = 0; k <= n_; ++k) {
    nw[k] = {cg[8 * k + 0] - cg[8 * k + 1], cg[8 * k + 2] - cg[8 * k + 3],
             cg[8 * k + 4] - cg[8 * k + 5], cg[8 * k + 6] - cg[8 * k + 7]};
  }
  auto tgt = target_of(prob_);
  (void)tgt;  // h is end - tgt; the constant drops out of the gradient

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(nv);
  std::vector<D> u(n_ + 1);
  for (int batch = 0; batch * kLanes < nv; ++batch) {
    int lo = batch * kLanes;
    int hi = std::min(nv, lo + kLanes);

    for (int k = 0; k <= n_; ++k) {
      u[k] = D(z[k]);
      if (k >= lo && k < hi) u[k].d[k - lo] = 1.0;
    }
    D s_total(z[n_ + 1]);
    if (n_ + 1 >= lo && n_ + 1 < hi) s_total.d[n_ + 1 - lo] = 1.0;

    D phi(0.0);
    D end[7];
    D cost(0.0);
    bool ok = roll(
        prob_, n_, substeps_, reg_, u.data(), s_total,
        [&](int k, const D x[8]) {
          const auto& w = nw[k];
          if (w[0] != 0.0) phi += w[0] * x[5];
          if (w[1] != 0.0) phi += w[1] * x[6];
          if (w[2] != 0.0) phi += w[2] * x[3];
          if (w[3] != 0.0) phi += w[3] * x[4];
        },
        end, &cost);
    if (!ok) {
      throw std::runtime_error("OcpNlp::weighted_gradient at invalid point");
    }
    phi += wf * cost;
    for (int i = 0; i < 7; ++i) phi += ch[i] * end[i];

    for (int v = lo; v < hi; ++v) grad[v] += phi.d[v - lo];
  }

  // Box constraints are linear in z; add their multipliers directly.
  int ubase = 8 * (n_ + 1);
  for (int k = 0; k <= n_; ++k) grad[k] += cg[ubase + 2 * k] - cg[ubase + 2 * k + 1];
  int sbase = ubase + 2 * (n_ + 1);
  grad[n_ + 1] += cg[sbase] - cg[sbase + 1];
  return grad;
}

OcpNlp::LmSystem OcpNlp::lm_system(const Eigen::VectorXd& z, double margin) const {
  LmSystem sys;
  Eval e = eval(z);
  if (!e.valid) return sys;

  // Select the inequality rows to control.
  std::vector<int> act;
  for (int j = 0; j < e.g.size(); ++j) {
    if (e.g[j] > -margin) act.push_back(j);
  }

  const int nv = num_vars();
  const int rows = 7 + static_cast<int>(act.size());
  sys.r.resize(rows);
  sys.J.setZero(rows, nv);
  for (int i = 0; i < 7; ++i) sys.r[i] = e.h[i];
  for (std::size_t a = 0; a < act.size(); ++a) sys.r[7 + a] = e.g[act[a]];

  // Map each active inequality to its source: node-state classes carry
  // rollout derivatives, control/horizon boxes are identity rows.
  const int ubase = 8 * (n_ + 1);
  const int sbase = ubase + 2 * (n_ + 1);
  struct NodeRow {
    int row;
    int node;
    int comp;     // state component index: 5 alpha, 6 omega, 3 beta3, 4 beta2
    double sign;
  };
  std::vector<NodeRow> node_rows;
  for (std::size_t a = 0; a < act.size(); ++a) {
    int j = act[a];
    int row = 7 + static_cast<int>(a);
    if (j < ubase) {
      int node = j / 8;
      int c = j % 8;
      static constexpr int comp_of[4] = {5, 6, 3, 4};
      node_rows.push_back({row, node, comp_of[c / 2], c % 2 == 0 ? 1.0 : -1.0});
    } else if (j < sbase) {
      int k = (j - ubase) / 2;
      sys.J(row, k) = (j - ubase) % 2 == 0 ? 1.0 : -1.0;
    } else {
      sys.J(row, n_ + 1) = j == sbase ? 1.0 : -1.0;
    }
  }

  constexpr int kLanes = 8;
  using D = Dual<kLanes>;
  std::vector<D> u(n_ + 1);
  std::vector<std::array<D, 7>> nodes(n_ + 1);
  for (int batch = 0; batch * kLanes < nv; ++batch) {
    int lo = batch * kLanes;
    int hi = std::min(nv, lo + kLanes);
    for (int k = 0; k <= n_; ++k) {
      u[k] = D(z[k]);
      if (k >= lo && k < hi) u[k].d[k - lo] = 1.0;
    }
    D s_total(z[n_ + 1]);
    if (n_ + 1 >= lo && n_ + 1 < hi) s_total.d[n_ + 1 - lo] = 1.0;

    D end[7];
    D cost(0.0);
    bool ok = roll(
        prob_, n_, substeps_, reg_, u.data(), s_total,
        [&](int k, const D x[8]) {
          for (int i = 0; i < 7; ++i) nodes[k][i] = x[i];
        },
        end, &cost);
    if (!ok) return sys;

    for (int i = 0; i < 7; ++i) {
      for (int v = lo; v < hi; ++v) sys.J(i, v) = end[i].d[v - lo];
    }
    for (const NodeRow& nr : node_rows) {
      for (int v = lo; v < hi; ++v) sys.J(nr.row, v) = nr.sign * nodes[nr.node][nr.comp].d[v - lo];
    }
  }
  sys.valid = true;
  return sys;
}

std::vector<ExtendedState> OcpNlp::node_states(const Eigen::VectorXd& z) const {
  std::vector<double> u(n_ + 1);
  for (int k = 0; k <= n_; ++k) u[k] = z[k];
  std::vector<ExtendedState> out(n_ + 1);
  double end[7];
  double cost;
  bool ok = roll(
      prob_, n_, substeps_, reg_, u.data(), static_cast<double>(z[n_ + 1]),
      [&](int k, const double x[8]) {
        out[k].base = {x[0], x[1], x[2], x[3], x[4]};
        out[k].alpha = x[5];
        out[k].omega = x[6];
      },
      end, &cost);
  if (!ok) out.clear();
  return out;
}

// ---------------------------------------------------------------------------
// Steering profile reconstruction and dense re-integration.

namespace {

/// Piecewise-cubic steering angle from node accelerations (u linear within
/// each segment). RK4 reproduces these polynomials exactly at the nodes.
struct SteeringPoly {
  double seg_len = 0.0;
  std::vector<double> u;       // node accelerations
  std::vector<double> alpha;   // node angles
  std::vector<double> omega;   // node rates

  static SteeringPoly build(const std::vector<double>& u_nodes, double s_total, double alpha0,
                            double omega0) {
    SteeringPoly sp;
    int n = static_cast<int>(u_nodes.size()) - 1;
    sp.seg_len = s_total / n;
    sp.u = u_nodes;
    sp.alpha.resize(n + 1);
    sp.omega.resize(n + 1);
    sp.alpha[0] = alpha0;
    sp.omega[0] = omega0;
    double d = sp.seg_len;
    for (int k = 0; k < n; ++k) {
      sp.alpha[k + 1] =
          sp.alpha[k] + sp.omega[k] * d + d * d * (2.0 * sp.u[k] + sp.u[k + 1]) / 6.0;
      sp.omega[k + 1] = sp.omega[k] + d * (sp.u[k] + sp.u[k + 1]) / 2.0;
    }
    return sp;
  }

  int segment_of(double s) const {
    int n = static_cast<int>(u.size()) - 1;
    int k = static_cast<int>(std::floor(s / seg_len));
    return std::clamp(k, 0, n - 1);
  }
  double u_at(double s) const {
    int k = segment_of(s);
    double t = s - k * seg_len;
    return u[k] + (u[k + 1] - u[k]) * (t / seg_len);
  }
  double omega_at(double s) const {
    int k = segment_of(s);
    double t = s - k * seg_len;
    return omega[k] + u[k] * t + (u[k + 1] - u[k]) * t * t / (2.0 * seg_len);
  }
  double alpha_at(double s) const {
    int k = segment_of(s);
    double t = s - k * seg_len;
    return alpha[k] + omega[k] * t + u[k] * t * t / 2.0 +
           (u[k + 1] - u[k]) * t * t * t / (6.0 * seg_len);
  }
};

bool dense_integrate(const OcpProblem& prob, const SteeringPoly& sp, double s_total,
                     double sample_step, double dense_step, std::vector<OcpSample>& out) {
  out.clear();
  double x[5] = {prob.initial.base.x, prob.initial.base.y, prob.initial.base.theta,
                 prob.initial.base.beta3, prob.initial.base.beta2};

  auto rhs5 = [&](const double st[5], double s, double dx[5]) {
    model_derivs(st, sp.alpha_at(s), 1.0, prob.vehicle, dx);
  };

  auto emit = [&](double s) {
    out.push_back(OcpSample{s,
                            ContinuousState{x[0], x[1], norm_angle(x[2]), x[3], x[4]},
                            sp.alpha_at(s), sp.omega_at(s), sp.u_at(s)});
  };

  double s = 0.0;
  emit(0.0);
  double next_emit = sample_step;
  while (s < s_total - 1e-12) {
    double target = std::min(next_emit, s_total);
    double h = std::min(dense_step, target - s);
    double k1[5], k2[5], k3[5], k4[5], xt[5];
    rhs5(x, s, k1);
    for (int i = 0; i < 5; ++i) xt[i] = x[i] + 0.5 * h * k1[i];
    rhs5(xt, s + 0.5 * h, k2);
    for (int i = 0; i < 5; ++i) xt[i] = x[i] + 0.5 * h * k2[i];
    rhs5(xt, s + 0.5 * h, k3);
    for (int i = 0; i < 5; ++i) xt[i] = x[i] + h * k3[i];
    rhs5(xt, s + h, k4);
    for (int i = 0; i < 5; ++i) x[i] += (h / 6.0) * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    s += h;
    if (std::abs(x[3]) > 1.55 || std::abs(x[4]) > 1.55 || !std::isfinite(x[0])) return false;
    if (s >= target - 1e-12 && target == next_emit && target < s_total - 1e-12) {
      emit(s);
      next_emit += sample_step;
    }
  }
  emit(s_total);
  return true;
}

struct DenseCheck {
  double res_pos = 0.0;
  double res_ang = 0.0;
  double res_omega = 0.0;
  double viol_alpha = 0.0;
  double viol_omega = 0.0;
  double viol_beta = 0.0;
  double viol_u = 0.0;
  double max_violation() const {
    return std::max({viol_alpha, viol_omega, viol_beta, viol_u});
  }
};

DenseCheck check_dense(const OcpProblem& prob, const OcpBounds& original_bounds,
                       const std::vector<OcpSample>& samples) {
  DenseCheck c;
  const OcpSample& last = samples.back();
  c.res_pos = std::max(std::abs(last.state.x - prob.final_.base.x),
                       std::abs(last.state.y - prob.final_.base.y));
  c.res_ang = std::max({std::abs(norm_angle(last.state.theta - prob.final_.base.theta)),
                        std::abs(last.state.beta3 - prob.final_.base.beta3),
                        std::abs(last.state.beta2 - prob.final_.base.beta2),
                        std::abs(last.alpha - prob.final_.alpha)});
  c.res_omega = std::abs(last.omega - prob.final_.omega);
  for (const auto& s : samples) {
    c.viol_alpha = std::max(c.viol_alpha, std::abs(s.alpha) - original_bounds.alpha_bound);
    c.viol_omega = std::max(c.viol_omega, std::abs(s.omega) - original_bounds.omega_max);
    c.viol_beta = std::max({c.viol_beta, std::abs(s.state.beta3) - original_bounds.beta3_max,
                            std::abs(s.state.beta2) - original_bounds.beta2_max});
    c.viol_u = std::max(c.viol_u, std::abs(s.u) - original_bounds.u_max);
  }
  return c;
}

// ---------------------------------------------------------------------------
// Geometric initial guess: a trailer-axle reference path (Dubins arc-line-arc
// at a sensible radius, cubic Hermite as fallback), converted to a steering
// profile through the steady-state steering map.

struct GuessPath {
  std::vector<double> arc;    // trailer arc grid
  std::vector<double> kappa;  // signed curvature
  double length = 0.0;
};

GuessPath sample_dubins(const DubinsPath& d, int n_pts) {
  GuessPath g;
  g.length = d.total_length();
  g.arc.resize(n_pts);
  g.kappa.resize(n_pts);
  for (int i = 0; i < n_pts; ++i) {
    double s = g.length * i / (n_pts - 1);
    g.arc[i] = s;
    g.kappa[i] = d.curvature_at(std::min(s, g.length - 1e-9));
  }
  return g;
}

GuessPath sample_hermite(const Pose2& a, const Pose2& b, int n_pts) {
  double chord = std::hypot(b.x - a.x, b.y - a.y);
  double m = std::max(chord, 2.0);
  double p0x = a.x, p0y = a.y;
  double t0x = m * std::cos(a.heading), t0y = m * std::sin(a.heading);
  double p1x = b.x, p1y = b.y;
  double t1x = m * std::cos(b.heading), t1y = m * std::sin(b.heading);

  auto eval = [&](double t, double& x, double& y, double& dx, double& dy, double& ddx,
                  double& ddy) {
    double t2 = t * t, t3 = t2 * t;
    double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t;
    double h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
    double d00 = 6 * t2 - 6 * t, d10 = 3 * t2 - 4 * t + 1;
    double d01 = -6 * t2 + 6 * t, d11 = 3 * t2 - 2 * t;
    double s00 = 12 * t - 6, s10 = 6 * t - 4, s01 = -12 * t + 6, s11 = 6 * t - 2;
    x = h00 * p0x + h10 * t0x + h01 * p1x + h11 * t1x;
    y = h00 * p0y + h10 * t0y + h01 * p1y + h11 * t1y;
    dx = d00 * p0x + d10 * t0x + d01 * p1x + d11 * t1x;
    dy = d00 * p0y + d10 * t0y + d01 * p1y + d11 * t1y;
    ddx = s00 * p0x + s10 * t0x + s01 * p1x + s11 * t1x;
    ddy = s00 * p0y + s10 * t0y + s01 * p1y + s11 * t1y;
  };

  GuessPath g;
  g.arc.resize(n_pts);
  g.kappa.resize(n_pts);
  double s = 0.0;
  double px = p0x, py = p0y;
  for (int i = 0; i < n_pts; ++i) {
    double t = static_cast<double>(i) / (n_pts - 1);
    double x, y, dx, dy, ddx, ddy;
    eval(t, x, y, dx, dy, ddx, ddy);
    if (i > 0) s += std::hypot(x - px, y - py);
    px = x;
    py = y;
    double sp = std::pow(dx * dx + dy * dy, 1.5);
    g.arc[i] = s;
    g.kappa[i] = sp > 1e-9 ? (dx * ddy - dy * ddx) / sp : 0.0;
  }
  g.length = s;
  return g;
}

struct Guess {
  std::vector<double> u;
  double s_total = 0.0;
};

Guess build_guess(const OcpProblem& prob, int n) {
  const Pose2 a{prob.initial.base.x, prob.initial.base.y, prob.initial.base.theta};
  const Pose2 b{prob.final_.base.x, prob.final_.base.y, prob.final_.base.theta};
  double chord = std::hypot(b.x - a.x, b.y - a.y);

  constexpr int kPts = 401;
  GuessPath path;
  bool have = false;
  for (double radius : {20.0, 12.0, 8.0, 5.0}) {
    auto d = dubins_shortest(a, b, radius);
    if (!d) continue;
    if (d->total_length() <= std::max(2.2 * chord + 6.0, chord + 4.0)) {
      path = sample_dubins(*d, kPts);
      have = true;
      break;
    }
  }
  if (!have) {
    GuessPath hermite = sample_hermite(a, b, kPts);
    auto d = dubins_shortest(a, b, 5.0);
    if (d && d->total_length() < hermite.length) {
      path = sample_dubins(*d, kPts);
    } else {
      path = hermite;
    }
  }

  // Steady-state steering along the path, smoothed to something C1-ish.
  std::vector<double> alpha(kPts);
  for (int i = 0; i < kPts; ++i) alpha[i] = steady_state_alpha(path.kappa[i], prob.vehicle);
  double ds = path.length / (kPts - 1);
  int w = std::max(2, static_cast<int>(std::round(1.5 / std::max(ds, 1e-6))));
  for (int pass = 0; pass < 2; ++pass) {
    std::vector<double> sm(kPts);
    for (int i = 0; i < kPts; ++i) {
      int lo = std::max(0, i - w), hi = std::min(kPts - 1, i + w);
      double acc = 0.0;
      for (int j = lo; j <= hi; ++j) acc += alpha[j];
      sm[i] = acc / (hi - lo + 1);
    }
    alpha = std::move(sm);
  }

  // Pin the profile ends to the boundary equilibrium steering with flat
  // slope; the acceleration guess is double-integrated from alpha(0) = a0.
  {
    double a0 = prob.initial.alpha;
    double a1 = prob.final_.alpha;
    double blend = std::clamp(0.3 * path.length, 1.0, 5.0);
    auto smoothstep = [](double t) {
      t = std::clamp(t, 0.0, 1.0);
      return t * t * (3.0 - 2.0 * t);
    };
    for (int i = 0; i < kPts; ++i) {
      double s = path.arc[i];
      alpha[i] = a0 + (alpha[i] - a0) * smoothstep(s / blend);
      alpha[i] = a1 + (alpha[i] - a1) * smoothstep((path.length - s) / blend);
    }
  }

  // Convert trailer arc to truck arc through the equilibrium speed factor.
  std::vector<double> truck_arc(kPts, 0.0);
  for (int i = 1; i < kPts; ++i) {
    double al = alpha[i];
    double factor = 1.0;
    try {
      EquilibriumConfig eq = equilibrium(al, prob.vehicle);
      double coupling = 1.0 + (prob.vehicle.M1 / prob.vehicle.L1) * std::tan(eq.beta2_e) *
                                  std::tan(al);
      factor = std::cos(eq.beta3_e) * std::cos(eq.beta2_e) * coupling;
    } catch (const GeometryError&) {
      factor = 0.7;
    }
    truck_arc[i] = truck_arc[i - 1] + ds / std::clamp(factor, 0.4, 1.0);
  }

  Guess guess;
  guess.s_total = std::max(truck_arc.back(), 0.3);
  guess.u.assign(n + 1, 0.0);

  // Record node accelerations from a PD law tracking the target profile.
  // Double-integrating raw second differences drifts; tracking does not.
  auto target_at = [&](double s) {
    auto it = std::upper_bound(truck_arc.begin(), truck_arc.end(), s);
    if (it == truck_arc.begin()) return std::pair<double, double>{alpha.front(), 0.0};
    if (it == truck_arc.end()) return std::pair<double, double>{alpha.back(), 0.0};
    std::size_t i = static_cast<std::size_t>(it - truck_arc.begin()) - 1;
    double span = std::max(truck_arc[i + 1] - truck_arc[i], 1e-9);
    double t = (s - truck_arc[i]) / span;
    double slope = (alpha[i + 1] - alpha[i]) / span;
    return std::pair<double, double>{alpha[i] + t * (alpha[i + 1] - alpha[i]), slope};
  };
  const double kp = 2.0, kd = 3.0;
  double u_cap = 0.5 * prob.bounds.u_max;
  auto pd = [&](double s, double al, double om) {
    auto [a_ref, w_ref] = target_at(s);
    return std::clamp(kp * (a_ref - al) + kd * (w_ref - om), -u_cap, u_cap);
  };

  double dseg = guess.s_total / n;
  double al = prob.initial.alpha, om = prob.initial.omega;
  guess.u[0] = pd(0.0, al, om);
  const int sub = 4;
  for (int k = 0; k < n; ++k) {
    double h = dseg / sub;
    for (int m = 0; m < sub; ++m) {
      double s0 = k * dseg + m * h;
      // RK4 on (alpha, omega) with the feedback acceleration.
      auto f = [&](double s, double a, double w) {
        return std::pair<double, double>{w, pd(s, a, w)};
      };
      auto [k1a, k1w] = f(s0, al, om);
      auto [k2a, k2w] = f(s0 + h / 2, al + h / 2 * k1a, om + h / 2 * k1w);
      auto [k3a, k3w] = f(s0 + h / 2, al + h / 2 * k2a, om + h / 2 * k2w);
      auto [k4a, k4w] = f(s0 + h, al + h * k3a, om + h * k3w);
      al += h / 6 * (k1a + 2 * k2a + 2 * k3a + k4a);
      om += h / 6 * (k1w + 2 * k2w + 2 * k3w + k4w);
    }
    guess.u[k + 1] = pd((k + 1) * dseg, al, om);
  }
  guess.u.front() = 0.0;
  guess.u.back() = 0.0;
  return guess;
}

/// Levenberg-Marquardt restoration: drives the boundary equalities (and any
/// violated bounds) toward zero. Much better conditioned than penalty
/// escalation for closing large boundary gaps.
bool lm_restore(const OcpNlp& nlp, Eigen::VectorXd& z, int max_iters, double tol) {
  auto max_g = [](const OcpNlp::Eval& e) {
    double m = 0.0;
    for (int j = 0; j < e.g.size(); ++j) m = std::max(m, e.g[j]);
    return m;
  };
  // Small ridge on the controls keeps the restored solution smooth instead
  // of letting the step pile acceleration into a few nodes.
  const double u_reg = 1e-3;
  const int n_u = nlp.num_vars() - 1;
  auto merit_of = [&](const OcpNlp::Eval& e, const Eigen::VectorXd& at) {
    double m = 0.5 * e.h.squaredNorm();
    for (int j = 0; j < e.g.size(); ++j) m += 0.5 * sq(std::max(0.0, e.g[j]));
    for (int k = 0; k < n_u; ++k) m += 0.5 * u_reg * sq(at[k]);
    return m;
  };

  OcpNlp::Eval e = nlp.eval(z);
  if (!e.valid) return false;
  double merit = merit_of(e, z);
  double damping = 1e-3;

  for (int it = 0; it < max_iters; ++it) {
    if (e.h.lpNorm<Eigen::Infinity>() <= tol && max_g(e) <= tol) return true;
    auto sys = nlp.lm_system(z, 0.0);
    if (!sys.valid) return false;
    Eigen::MatrixXd jtj = sys.J.transpose() * sys.J;
    Eigen::VectorXd grad = sys.J.transpose() * sys.r;
    for (int k = 0; k < n_u; ++k) {
      jtj(k, k) += u_reg;
      grad[k] += u_reg * z[k];
    }
    Eigen::VectorXd diag = jtj.diagonal().cwiseMax(1e-8);

    bool accepted = false;
    for (int t = 0; t < 10; ++t) {
      Eigen::MatrixXd a = jtj;
      a.diagonal() += damping * diag;
      Eigen::VectorXd dz = a.ldlt().solve(-grad);
      OcpNlp::Eval e2 = nlp.eval(z + dz);
      if (e2.valid) {
        double m2 = merit_of(e2, z + dz);
        if (m2 < merit) {
          z += dz;
          e = std::move(e2);
          merit = m2;
          damping = std::max(damping / 3.0, 1e-10);
          accepted = true;
          break;
        }
      }
      damping *= 4.0;
    }
    if (!accepted) break;
  }
  return e.h.lpNorm<Eigen::Infinity>() <= 100.0 * tol && max_g(e) <= 100.0 * tol;
}

/// Adapter exposing OcpNlp through the augmented-Lagrangian interface.
class OcpNlpAdapter final : public NlpInterface {
 public:
  explicit OcpNlpAdapter(const OcpNlp& nlp) : nlp_(nlp) {}
  int num_vars() const override { return nlp_.num_vars(); }
  int num_eq() const override { return nlp_.num_eq(); }
  int num_ineq() const override { return nlp_.num_ineq(); }
  bool eval_fhg(const Eigen::VectorXd& z, double& f, Eigen::VectorXd& h,
                Eigen::VectorXd& g) const override {
    auto e = nlp_.eval(z);
    if (!e.valid) return false;
    f = e.f;
    h = std::move(e.h);
    g = std::move(e.g);
    return true;
  }
  Eigen::VectorXd gradient(const Eigen::VectorXd& z, double wf, const Eigen::VectorXd& ch,
                           const Eigen::VectorXd& cg) const override {
    return nlp_.weighted_gradient(z, wf, ch, cg);
  }

 private:
  const OcpNlp& nlp_;
};

}  // namespace

std::pair<std::vector<double>, double> initial_guess(const OcpProblem& problem, int n_segments) {
  Guess g = build_guess(problem, n_segments);
  return {std::move(g.u), g.s_total};
}

OcpNlp transcribe(const OcpProblem& problem, int n_segments, int substeps, double horizon_reg) {
  double chord = std::hypot(problem.final_.base.x - problem.initial.base.x,
                            problem.final_.base.y - problem.initial.base.y);
  double s_min = std::max(0.25, 0.5 * chord);
  double s_max = std::min(std::max(6.0, 3.0 * chord + 20.0), 200.0);
  return OcpNlp(problem, n_segments, substeps, horizon_reg, s_min, s_max);
}

OcpSolution solve(const OcpProblem& problem, const SolverConfig& config,
                  const std::vector<OcpSample>* warm_start) {
  OcpSolution sol;

  double chord = std::hypot(problem.final_.base.x - problem.initial.base.x,
                            problem.final_.base.y - problem.initial.base.y);
  double dth = std::abs(problem.final_.base.theta - problem.initial.base.theta);
  double dae = std::abs(problem.final_.alpha - problem.initial.alpha);
  if (chord < 1e-9 && dth < 1e-9 && dae < 1e-12) {
    sol.status = OcpStatus::Infeasible;
    sol.note = "degenerate zero-length problem";
    return sol;
  }

  Guess guess = build_guess(problem, config.n_segments);
  double s_min = std::max(0.25, 0.5 * chord);
  double s_max = std::min(std::max({6.0, 3.0 * guess.s_total, 2.0 * chord + 20.0}), 200.0);

  struct Attempt {
    int n;
    std::vector<double> u;
    double s;
  };
  std::vector<Attempt> attempts;

  if (warm_start != nullptr && warm_start->size() >= 2) {
    Attempt w;
    w.n = config.n_segments;
    w.s = warm_start->back().arc;
    w.u.resize(w.n + 1);
    for (int k = 0; k <= w.n; ++k) {
      double s = w.s * k / w.n;
      auto it = std::lower_bound(warm_start->begin(), warm_start->end(), s,
                                 [](const OcpSample& a, double v) { return a.arc < v; });
      w.u[k] = it == warm_start->end() ? warm_start->back().u : it->u;
    }
    attempts.push_back(std::move(w));
  }

  attempts.push_back({config.n_segments, guess.u, guess.s_total});

  {
    Attempt dbl;
    dbl.n = config.n_segments * 2;
    dbl.s = guess.s_total;
    dbl.u.resize(dbl.n + 1);
    for (int k = 0; k <= dbl.n; ++k) {
      double pos = static_cast<double>(k) * config.n_segments / dbl.n;
      int lo = std::min(static_cast<int>(pos), config.n_segments - 1);
      double t = pos - lo;
      dbl.u[k] = guess.u[lo] * (1.0 - t) + guess.u[lo + 1] * t;
    }
    attempts.push_back(std::move(dbl));
  }

  // Acceleration noise double-integrates into steering drift; keep the
  // perturbation size inversely proportional to the squared horizon.
  double pert_sigma = std::min(0.5, 12.0 / std::max(guess.s_total * guess.s_total, 1.0));
  for (int pert = 0; pert < config.retry_perturbations; ++pert) {
    std::mt19937 rng(config.rng_seed + 1000003u * (pert + 1));
    std::normal_distribution<double> du(0.0, pert_sigma);
    std::uniform_real_distribution<double> dscale(0.85, 1.3);
    Attempt a;
    a.n = config.n_segments;
    a.s = std::clamp(guess.s_total * dscale(rng), s_min, s_max);
    a.u = guess.u;
    for (auto& uk : a.u) uk = std::clamp(uk + du(rng), -0.6 * problem.bounds.u_max,
                                         0.6 * problem.bounds.u_max);
    a.u.front() = 0.0;
    a.u.back() = 0.0;
    attempts.push_back(std::move(a));
  }

  // Constant-steering fallback; always rolls out to a valid state chain.
  attempts.push_back(
      {config.n_segments, std::vector<double>(config.n_segments + 1, 0.0),
       std::clamp(guess.s_total, s_min, s_max)});

  int total_iters = 0;
  std::string last_note;
  for (std::size_t ai = 0; ai < attempts.size(); ++ai) {
    const Attempt& at = attempts[ai];
    OcpNlp nlp(problem, at.n, config.substeps, config.horizon_reg, s_min, s_max);

    Eigen::VectorXd z(at.n + 2);
    for (int k = 0; k <= at.n; ++k) z[k] = at.u[k];
    z[at.n + 1] = std::clamp(at.s, s_min, s_max);

    AugLagOptions opts;
    opts.max_iters = config.max_total_iters;
    opts.stat_tol = config.stationarity_tol;
    opts.cons_tol = config.constraint_tol;
    opts.mu0 = 10.0;
    opts.scale = Eigen::VectorXd::Ones(at.n + 2);
    opts.scale[at.n + 1] = std::max(1.0, 0.25 * guess.s_total);

    lm_restore(nlp, z, 60, 1e-9);

    bool attempt_done = false;
    for (int round = 0; round < 6 && !attempt_done; ++round) {
      OcpNlpAdapter adapter(nlp);
      AugLagResult res = auglag_minimize(adapter, z, opts);
      total_iters += res.iterations;
      if (res.z.size() == 0) break;
      z = res.z;
      // Resume the multiplier state if another round runs on this attempt.
      // The penalty restarts moderate; huge resumed penalties leave the
      // quasi-Newton inner loop no room to move.
      opts.lambda0 = res.lambda;
      opts.sigma0 = res.sigma;
      opts.mu_init = std::min(res.mu, 1e4);

      std::vector<double> u_nodes(at.n + 1);
      for (int k = 0; k <= at.n; ++k) u_nodes[k] = z[k];
      SteeringPoly sp = SteeringPoly::build(u_nodes, z[at.n + 1], problem.initial.alpha,
                                            problem.initial.omega);
      std::vector<OcpSample> samples;
      if (!dense_integrate(problem, sp, z[at.n + 1], config.sample_step, config.dense_step,
                           samples)) {
        last_note = "dense re-integration left the model domain";
        break;
      }
      DenseCheck chk = check_dense(problem, problem.bounds, samples);

      bool residual_ok = chk.res_pos <= config.boundary_pos_tol &&
                         chk.res_ang <= config.boundary_ang_tol &&
                         chk.res_omega <= config.boundary_ang_tol;
      bool bounds_ok = chk.max_violation() <= 1e-6;

      if (residual_ok && bounds_ok) {
        sol.status = OcpStatus::Converged;
        sol.samples = std::move(samples);
        sol.arc_length = z[at.n + 1];
        sol.objective = std::max(0.0, res.f - config.horizon_reg * z[at.n + 1]);
        sol.residual_pos = chk.res_pos;
        sol.residual_ang = chk.res_ang;
        sol.residual_omega = chk.res_omega;
        sol.max_bound_violation = chk.max_violation();
        sol.iterations = total_iters;
        return sol;
      }

      if (residual_ok && !bounds_ok && round < 5) {
        // Bounds hold at the transcription nodes but not between them:
        // shrink the violated bounds and re-solve from the current point.
        nlp.tighten(chk.viol_alpha > 1e-6 ? chk.viol_alpha + 1e-5 : 0.0,
                    chk.viol_omega > 1e-6 ? chk.viol_omega + 1e-5 : 0.0,
                    chk.viol_beta > 1e-6 ? chk.viol_beta + 1e-5 : 0.0);
        lm_restore(nlp, z, 30, 1e-9);
        last_note = "inter-node bound violation, tightening";
        continue;
      }

      std::ostringstream note;
      note << "residual pos " << chk.res_pos << " ang " << chk.res_ang << " viol(a/w/b/u) "
           << chk.viol_alpha << "/" << chk.viol_omega << "/" << chk.viol_beta << "/" << chk.viol_u
           << " after " << res.iterations << " iters";
      last_note = note.str();

      // A near-feasible attempt is worth more rounds with resumed
      // multipliers before falling back to the next ladder rung.
      bool promising = chk.res_pos < 1.0 && chk.res_ang < 0.5 && chk.max_violation() < 0.5;
      if (promising && res.iterations > 0 && round < 5) {
        lm_restore(nlp, z, 30, 1e-9);
      } else {
        attempt_done = true;
      }
    }
  }

  sol.status = OcpStatus::Infeasible;
  sol.iterations = total_iters;
  sol.note = last_note.empty() ? "no attempt converged" : last_note;
  return sol;
}

}  // namespace latplan
