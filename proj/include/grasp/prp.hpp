#pragma once

#include <array>
#include <string>
#include <vector>

#include "grasp/assemble.hpp"
#include "grasp/qp.hpp"
#include "grasp/scene.hpp"
#include "grasp/types.hpp"

namespace grasp {

struct SolverConfig {
  /// Big-M scale factor: k1..k6 default to
  /// kappa * max(1, |tau_c|_inf / L, |f_c|_inf, |w|_inf).
  double kappa = 1e3;
  /// Explicit virtual limits k1..k6 (N, N, rad, N·m, m, N). Zero entries are
  /// derived from kappa at encode time.
  std::array<double, 6> k = {0, 0, 0, 0, 0, 0};
  QPSettings qp;
  /// Largest binary count the exhaustive cross-check path accepts.
  int enumeration_threshold = 12;
};

/// Passive response problem: the convex blocks of Algorithms 1/2 plus the
/// complementarity binaries (one per contact spring, one per joint or
/// actuator loading regime). Unit spring stiffness (k = 1) throughout.
struct PRPProblem {
  enum class Kind { Direct, Tendon };
  Kind kind = Kind::Direct;
  bool movement_constrained = false;  // Algorithm 2 form

  int n = 0;      // contacts
  int E = 0;      // pyramid edges
  int d = 0;      // joints
  int d_act = 0;  // actuators (== d for Direct)
  double L = 1.0;

  MatX D;    // 3n x E
  MatX GD;   // 6 x E
  MatX JTD;  // d x E
  MatX N;    // n x E   c_{i,n} = (N beta)_i
  MatX SJ;   // n x d   normal rows of J
  MatX SGT;  // n x 6   normal rows of G^T
  MatX R;    // d x d_act (Tendon only)
  VecX cmd;  // tau_c (Direct, d) or f_c (Tendon, d_act)
  Vec6 w = Vec6::Zero();

  // Movement constraint x = x_prev + s * r_prev, 0 <= s <= gamma.
  Vec6 x_prev = Vec6::Zero();
  Vec6 r_prev = Vec6::Zero();
  double gamma = 0.0;

  std::array<double, 6> big_m = {0, 0, 0, 0, 0, 0};
  double objective_constant = 0.0;  // w^T w for Algorithm 2

  int binary_count() const { return n + (kind == Kind::Direct ? d : d_act); }
};

enum class PRPStatus { Optimal, Infeasible, NumericalFailure };

const char* to_string(PRPStatus status);

struct PRPSolution {
  PRPStatus status = PRPStatus::Infeasible;
  VecX beta;
  VecX contact_forces;  // 3n, contact-local, c = D beta
  Vec6 x = Vec6::Zero();
  VecX q;
  VecX tau;  // Direct equilibrium joint torques
  VecX f;    // Tendon equilibrium actuator forces
  double s = 0.0;
  std::vector<int> y;  // spring regimes
  std::vector<int> z;  // joint / actuator regimes
  double objective = 0.0;
  double complementarity_violation = 0.0;
  double qp_kkt_residual = 0.0;
  std::vector<std::string> warnings;  // big-M saturation diagnostics
  int nodes_explored = 0;

  std::string binary_summary() const;
};

/// Algorithm 1: minimize sum c_{i,n}^2 subject to equilibrium, friction,
/// spring / joint (or tendon) complementarities.
PRPProblem encode_prp(const AssembledGrasp& grasp, const Actuation& commands, const Vec6& w,
                      const SolverConfig& config = {});

/// Algorithm 2: equilibrium row removed, objective |w + G D beta|^2, object
/// displacement constrained to x_prev + s * r_prev with 0 <= s <= gamma.
PRPProblem encode_movement_constrained(const AssembledGrasp& grasp, const Actuation& commands,
                                       const Vec6& w, const Vec6& x_prev, const Vec6& r_prev,
                                       double gamma, const SolverConfig& config = {});

/// Globally optimal solve over the binary regimes: best-first branch and
/// bound on the continuous relaxation, most-fractional branching, lowest
/// index on ties. Deterministic for identical inputs.
PRPSolution solve_miqp(const PRPProblem& problem, const SolverConfig& config = {});

/// Exhaustive cross-check: one QP per binary assignment. Only available for
/// binary_count() <= config.enumeration_threshold.
PRPSolution solve_miqp_enumerated(const PRPProblem& problem, const SolverConfig& config = {});

/// Residual wrench of a solution against the problem's applied wrench,
/// r = w + G D beta.
Vec6 residual_wrench(const PRPProblem& problem, const PRPSolution& solution);

}  // namespace grasp
