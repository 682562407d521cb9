#pragma once

#include <string>
#include <vector>

#include "grasp/prp.hpp"

namespace grasp {

/// Stability classification threshold on the residual wrench norm [N].
inline constexpr double kStableResidual = 1e-3;

struct IterationConfig {
  double gamma = 1e-2;    // max step scalar per iteration [m/N], Eq. x = s r
  double epsilon = 1e-3;  // convergence threshold on |r - r_next| [N]
  int max_iterations = 200;
  int stall_window = 10;  // safety net: abort if the residual stops improving
  SolverConfig solver;
};

enum class Stability { Stable, Unstable, Nonconverged };

const char* to_string(Stability status);

struct TraceStep {
  int iter = 0;
  Vec6 x = Vec6::Zero();
  Vec6 r = Vec6::Zero();
  double objective = 0.0;  // |r_next|^2 of the step's solve
  double s = 0.0;
  std::string binaries;
};

struct IterationTrace {
  std::vector<TraceStep> steps;
  PRPSolution final_solution;  // last successful movement-constrained solve
  bool infeasible = false;     // a solve had no passive regime
};

struct StabilityVerdict {
  Stability status = Stability::Nonconverged;
  double residual = 0.0;  // final |r| [N]
  int iterations = 0;
  IterationTrace trace;
  std::string reason;

  bool stable() const { return status == Stability::Stable; }
};

/// Iterative passive response problem: repeat movement-constrained solves,
/// accumulating object displacement along the unbalanced wrench, until
/// |r - r_next| < epsilon; classify by the final residual against 1e-3 N.
/// Deterministic: identical inputs give identical traces.
StabilityVerdict solve_iterative_prp(const AssembledGrasp& grasp, const Actuation& commands,
                                     const Vec6& w, const IterationConfig& config = {});

struct EnergyReport {
  double external_work = 0.0;       // w . x_total [J]
  double actuator_work = 0.0;       // commanded force x transmission motion [J]
  double spring_energy = 0.0;       // 1/2 sum c_{i,n}^2 [J]
  double friction_dissipation = 0.0;  // lower bound [J]
  double excess = 0.0;              // stored + dissipated - input
  bool conservation_violated = false;
};

/// Diagnostic energy balance of a completed solve. Flags solutions whose
/// stored plus dissipated energy exceeds the input work by more than 1e-6 J;
/// never alters the stability verdict.
EnergyReport energy_audit(const IterationTrace& trace, const AssembledGrasp& grasp,
                          const Actuation& commands, const Vec6& w);

/// Wrap an Algorithm 1 (direct PRP) solution so it can be audited.
IterationTrace single_solve_trace(const PRPProblem& problem, const PRPSolution& solution);

/// CSV export: iter, s, |r|, objective, binaries.
std::string trace_to_csv(const IterationTrace& trace);

}  // namespace grasp
