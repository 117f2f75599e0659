#include "latplan/auglag.hpp"

#include <cmath>
#include <limits>

namespace latplan {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Multipliers {
  Eigen::VectorXd lambda;  // equalities
  Eigen::VectorXd sigma;   // inequalities, >= 0
  double mu = 10.0;
};

/// L = f + lambda.h + mu/2 |h|^2 + sum_j psi(g_j) with the standard
/// inequality term psi = (max(0, sigma + mu g)^2 - sigma^2) / (2 mu).
double al_value(double f, const Eigen::VectorXd& h, const Eigen::VectorXd& g,
                const Multipliers& m) {
  double val = f + m.lambda.dot(h) + 0.5 * m.mu * h.squaredNorm();
  for (int j = 0; j < g.size(); ++j) {
    double a = std::max(0.0, m.sigma[j] + m.mu * g[j]);
    val += (a * a - m.sigma[j] * m.sigma[j]) / (2.0 * m.mu);
  }
  return val;
}

void al_weights(const Eigen::VectorXd& h, const Eigen::VectorXd& g, const Multipliers& m,
                Eigen::VectorXd& ch, Eigen::VectorXd& cg) {
  ch = m.lambda + m.mu * h;
  cg.resize(g.size());
  for (int j = 0; j < g.size(); ++j) cg[j] = std::max(0.0, m.sigma[j] + m.mu * g[j]);
}

}  // namespace

AugLagResult auglag_minimize(const NlpInterface& nlp, Eigen::VectorXd z0,
                             const AugLagOptions& opts) {
  const int n = nlp.num_vars();
  Eigen::VectorXd scale = opts.scale.size() == n ? opts.scale : Eigen::VectorXd::Ones(n);

  Multipliers mult;
  mult.mu = opts.mu_init > 0.0 ? opts.mu_init : opts.mu0;
  mult.lambda = opts.lambda0.size() == nlp.num_eq() ? opts.lambda0
                                                    : Eigen::VectorXd::Zero(nlp.num_eq());
  mult.sigma = opts.sigma0.size() == nlp.num_ineq() ? opts.sigma0
                                                    : Eigen::VectorXd::Zero(nlp.num_ineq());

  AugLagResult best;
  best.z = z0;
  best.eq_violation = kInf;
  best.ineq_violation = kInf;

  Eigen::VectorXd z = z0;
  double f = 0.0;
  Eigen::VectorXd h, g;
  if (!nlp.eval_fhg(z, f, h, g)) {
    // Caller is expected to seed a valid point; report as non-converged.
    best.iterations = 0;
    return best;
  }

  int iters = 0;
  double inner_tol = 1e-2;
  double feas_target = 1e-2;

  auto grad_al = [&](const Eigen::VectorXd& at, const Eigen::VectorXd& hh,
                     const Eigen::VectorXd& gg) {
    Eigen::VectorXd ch, cg;
    al_weights(hh, gg, mult, ch, cg);
    return nlp.gradient(at, 1.0, ch, cg);
  };

  for (int outer = 0; outer < opts.max_outer && iters < opts.max_iters; ++outer) {
    // Inner: BFGS on the augmented Lagrangian in scaled variables.
    double L = al_value(f, h, g, mult);
    Eigen::VectorXd gz = grad_al(z, h, g);
    Eigen::VectorXd gy = scale.cwiseProduct(gz);
    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(n, n) / std::max(1.0, gy.norm());

    int inner = 0;
    const int inner_cap = 200;
    while (gy.lpNorm<Eigen::Infinity>() > inner_tol && iters < opts.max_iters &&
           inner < inner_cap) {
      Eigen::VectorXd p = -(H * gy);
      double slope = p.dot(gy);
      if (!(slope < 0.0)) {
        H = Eigen::MatrixXd::Identity(n, n) / std::max(1.0, gy.norm());
        p = -gy / std::max(1.0, gy.norm());
        slope = p.dot(gy);
      }

      // Armijo backtracking in y-space.
      double t = 1.0;
      double f_t = 0.0;
      Eigen::VectorXd h_t, g_t, z_t;
      bool accepted = false;
      for (int ls = 0; ls < 45; ++ls) {
        z_t = z + scale.cwiseProduct(p) * t;
        if (nlp.eval_fhg(z_t, f_t, h_t, g_t)) {
          double L_t = al_value(f_t, h_t, g_t, mult);
          if (L_t <= L + 1e-4 * t * slope) {
            accepted = true;
            break;
          }
        }
        t *= 0.5;
      }
      if (!accepted) break;

      Eigen::VectorXd gz_t = grad_al(z_t, h_t, g_t);
      Eigen::VectorXd gy_t = scale.cwiseProduct(gz_t);
      Eigen::VectorXd s = t * p;
      Eigen::VectorXd ydiff = gy_t - gy;
      double sy = s.dot(ydiff);
      if (sy > 1e-12 * s.norm() * ydiff.norm()) {
        double rho = 1.0 / sy;
        Eigen::VectorXd Hy = H * ydiff;
        // BFGS inverse update.
        H.noalias() += (rho * rho * (ydiff.dot(Hy)) + rho) * (s * s.transpose());
        H.noalias() -= rho * (Hy * s.transpose() + s * Hy.transpose());
      }

      z = z_t;
      f = f_t;
      h = h_t;
      g = g_t;
      L = al_value(f, h, g, mult);
      gy = gy_t;
      ++iters;
      ++inner;
    }

    double eq_viol = h.size() > 0 ? h.lpNorm<Eigen::Infinity>() : 0.0;
    double in_viol = 0.0;
    for (int j = 0; j < g.size(); ++j) in_viol = std::max(in_viol, g[j]);
    in_viol = std::max(in_viol, 0.0);
    double viol = std::max(eq_viol, in_viol);
    double stat = gy.lpNorm<Eigen::Infinity>();

    if (viol < best.eq_violation + best.ineq_violation || outer == 0) {
      best.z = z;
      best.f = f;
      best.h = h;
      best.g = g;
      best.eq_violation = eq_viol;
      best.ineq_violation = in_viol;
      best.stationarity = stat;
    }

    double stat_scale = std::max(1.0, std::abs(f));
    if (viol <= opts.cons_tol && stat <= opts.stat_tol * stat_scale) {
      best.converged = true;
      break;
    }

    if (viol <= std::max(feas_target, opts.cons_tol)) {
      mult.lambda += mult.mu * h;
      for (int j = 0; j < g.size(); ++j) {
        mult.sigma[j] = std::max(0.0, mult.sigma[j] + mult.mu * g[j]);
      }
      feas_target = std::max(feas_target * 0.2, opts.cons_tol * 0.1);
      inner_tol = std::max(inner_tol * 0.2, opts.stat_tol * stat_scale);
    } else {
      mult.mu = std::min(mult.mu * opts.mu_growth, opts.mu_max);
      inner_tol = std::max(inner_tol * 0.5, opts.stat_tol * stat_scale);
    }
  }

  best.iterations = iters;
  // Report the last iterate rather than the best-violation snapshot when it
  // is at least as feasible; downstream checks work on actual residuals.
  double eq_v = h.size() > 0 ? h.lpNorm<Eigen::Infinity>() : 0.0;
  double in_v = 0.0;
  for (int j = 0; j < g.size(); ++j) in_v = std::max(in_v, g[j]);
  in_v = std::max(in_v, 0.0);
  if (std::max(eq_v, in_v) <= std::max(best.eq_violation, best.ineq_violation)) {
    best.z = z;
    best.f = f;
    best.h = h;
    best.g = g;
    best.eq_violation = eq_v;
    best.ineq_violation = in_v;
  }
  best.lambda = mult.lambda;
  best.sigma = mult.sigma;
  best.mu = mult.mu;
  return best;
}

}  // namespace latplan
