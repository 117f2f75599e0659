#pragma once

#include <Eigen/Core>

namespace latplan {

/// Smooth NLP with equality constraints h(z) = 0 and inequalities g(z) <= 0.
/// eval() returns false when z is outside the evaluable domain (the line
/// search treats that as +infinity).
class NlpInterface {
 public:
  virtual ~NlpInterface() = default;
  virtual int num_vars() const = 0;
  virtual int num_eq() const = 0;
  virtual int num_ineq() const = 0;
  virtual bool eval_fhg(const Eigen::VectorXd& z, double& f, Eigen::VectorXd& h,
                        Eigen::VectorXd& g) const = 0;
  /// Gradient of wf*f + ch.h + cg.g at z.
  virtual Eigen::VectorXd gradient(const Eigen::VectorXd& z, double wf, const Eigen::VectorXd& ch,
                                   const Eigen::VectorXd& cg) const = 0;
};

struct AugLagOptions {
  int max_iters = 500;  // total quasi-Newton iterations across outer rounds
  int max_outer = 40;
  double stat_tol = 1e-6;  // scaled by max(1, |f|)
  double cons_tol = 1e-6;
  double mu0 = 10.0;
  double mu_growth = 10.0;
  double mu_max = 1e9;
  Eigen::VectorXd scale;  // per-variable scaling; empty = ones
  // Optional resume state from a previous run on the same problem.
  Eigen::VectorXd lambda0, sigma0;
  double mu_init = -1.0;
};

struct AugLagResult {
  Eigen::VectorXd z;
  double f = 0.0;
  Eigen::VectorXd h, g;
  double eq_violation = 0.0;
  double ineq_violation = 0.0;
  double stationarity = 0.0;
  int iterations = 0;
  bool converged = false;
  // Final multiplier state, reusable to resume.
  Eigen::VectorXd lambda, sigma;
  double mu = 0.0;
};

/// Classic augmented-Lagrangian outer loop (multiplier updates on progress,
/// penalty growth otherwise) with a dense-BFGS Armijo inner minimizer.
AugLagResult auglag_minimize(const NlpInterface& nlp, Eigen::VectorXd z0,
                             const AugLagOptions& opts);

}  // namespace latplan
