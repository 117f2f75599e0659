#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "latplan/util.hpp"
#include "latplan/vehicle.hpp"

namespace latplan {

/// Path bounds enforced while generating a motion segment. The steering
/// bound is pre-tightened (0.8 * alpha_max) to leave authority for a
/// tracking controller.
struct OcpBounds {
  double beta3_max = kPi / 2.0;
  double beta2_max = kPi / 2.0;
  double alpha_bound = 0.8 * kPi / 4.0;
  double omega_max = 1.5;
  double u_max = 40.0;
};

/// Two-point boundary value problem between equilibrium states. Both
/// boundaries carry the equilibrium relative angles for their steering
/// angle and zero steering rate. `final_.base.theta` is kept unwrapped
/// relative to the initial heading so the equality residual is wrap-free.
struct OcpProblem {
  VehicleParams vehicle;
  ExtendedState initial;
  ExtendedState final_;
  OcpBounds bounds;
  double w_omega = 10.0;
  double w_u = 1.0;

  static OcpProblem between_equilibria(const VehicleParams& vp, const Pose2& start_pose,
                                       double alpha_e_start, const Pose2& end_pose,
                                       double alpha_e_end);
};

struct SolverConfig {
  int n_segments = 50;
  int substeps = 3;            // RK4 steps per segment
  int max_total_iters = 500;   // quasi-Newton iterations per attempt
  double stationarity_tol = 1e-6;
  double constraint_tol = 1e-6;
  double boundary_pos_tol = 1e-3;
  double boundary_ang_tol = 1e-3;
  double horizon_reg = 1e-3;   // epsilon * S added to the objective
  double sample_step = 0.1;    // arc step of the returned samples
  double dense_step = 0.05;    // integration step for the dense re-check
  int retry_perturbations = 3;
  std::uint32_t rng_seed = 42;

  static SolverConfig from_config(const KeyValueFile& kv);
  std::string to_config() const;
  std::uint64_t fingerprint() const;
};

enum class OcpStatus : std::uint8_t { Converged, MaxIterations, Infeasible };

const char* to_string(OcpStatus s);

struct OcpSample {
  double arc = 0.0;
  ContinuousState state;
  double alpha = 0.0;
  double omega = 0.0;
  double u = 0.0;
};

struct OcpSolution {
  OcpStatus status = OcpStatus::Infeasible;
  std::vector<OcpSample> samples;  // at sample_step granularity plus endpoint
  double arc_length = 0.0;         // free horizon S (truck rear-axle arc)
  double objective = 0.0;          // integral of w_omega*omega^2 + w_u*u^2
  double residual_pos = 0.0;       // max |endpoint - target| over x, y
  double residual_ang = 0.0;       // max over theta, beta3, beta2, alpha
  double residual_omega = 0.0;
  double max_bound_violation = 0.0;
  int iterations = 0;
  std::string note;
};

/// Direct single-shooting transcription of the boundary value problem:
/// decision vector z = (u_0 ... u_N, S) with the steering acceleration
/// interpolated linearly between nodes and the 7-state extended dynamics
/// integrated by RK4 across each of the N segments.
class OcpNlp {
 public:
  OcpNlp(const OcpProblem& problem, int n_segments, int substeps, double horizon_reg,
         double s_min, double s_max);

  int num_vars() const { return n_ + 2; }
  int num_eq() const { return 7; }
  int num_ineq() const { return 8 * (n_ + 1) + 2 * (n_ + 1) + 2; }
  int n_segments() const { return n_; }
  double s_min() const { return s_min_; }
  double s_max() const { return s_max_; }
  const OcpProblem& problem() const { return prob_; }

  /// Shrinks a path bound (used when a dense re-check finds inter-node
  /// violations; the transcription only pins bounds at nodes).
  void tighten(double alpha_margin, double omega_margin, double beta_margin);

  struct Eval {
    bool valid = false;
    double f = 0.0;        // objective incl. horizon regularization
    Eigen::VectorXd h;     // equality residuals (7)
    Eigen::VectorXd g;     // inequality values, feasible when <= 0
  };

  Eval eval(const Eigen::VectorXd& z) const;

  /// Gradient of wf*f + ch.h + cg.g by batched forward-mode AD.
  Eigen::VectorXd weighted_gradient(const Eigen::VectorXd& z, double wf,
                                    const Eigen::VectorXd& ch, const Eigen::VectorXd& cg) const;

  struct LmSystem {
    bool valid = false;
    Eigen::VectorXd r;  // boundary equalities, then inequalities above -margin
    Eigen::MatrixXd J;
  };

  /// Residual system for feasibility restoration (Levenberg-Marquardt):
  /// all 7 equality rows plus Jacobian rows for inequalities with
  /// g_j > -margin. Row order matches eval() ordering within each group.
  LmSystem lm_system(const Eigen::VectorXd& z, double margin) const;

  /// Node states (x, y, theta, beta3, beta2, alpha, omega) for diagnostics.
  std::vector<ExtendedState> node_states(const Eigen::VectorXd& z) const;

 private:
  OcpProblem prob_;
  int n_;
  int substeps_;
  double reg_;
  double s_min_, s_max_;
};

/// Builds the transcription with horizon brackets derived from the boundary
/// chord. Construction always succeeds for a well-formed problem.
OcpNlp transcribe(const OcpProblem& problem, int n_segments, int substeps = 3,
                  double horizon_reg = 1e-3);

/// Geometric warm start for the transcription: node accelerations u and the
/// horizon estimate, from an arc-line-arc (or Hermite) trailer path mapped
/// through the steady-state steering relation.
std::pair<std::vector<double>, double> initial_guess(const OcpProblem& problem, int n_segments);

/// Solves the boundary value problem with an augmented-Lagrangian quasi-
/// Newton iteration over the transcription, a geometric initial guess, and
/// a deterministic retry ladder (2x segments, then seeded perturbations).
OcpSolution solve(const OcpProblem& problem, const SolverConfig& config,
                  const std::vector<OcpSample>* warm_start = nullptr);

}  // namespace latplan
