#include "grasp/iterate.hpp"

#include <cmath>
#include <cstdio>

namespace grasp {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

const char* to_string(Stability status) {
  switch (status) {
    case Stability::Stable: return "stable";
    case Stability::Unstable: return "unstable";
    case Stability::Nonconverged: return "nonconverged";
  }
  return "?";
}

StabilityVerdict solve_iterative_prp(const AssembledGrasp& grasp, const Actuation& commands,
                                     const Vec6& w, const IterationConfig& config) {
  StabilityVerdict verdict;
  Vec6 x = Vec6::Zero();
  Vec6 r = w;
  double window_best = r.norm();
  int window_start = 0;

  for (int iter = 1; iter <= config.max_iterations; ++iter) {
    const PRPProblem problem =
        encode_movement_constrained(grasp, commands, w, x, r, config.gamma, config.solver);
    const PRPSolution sol = solve_miqp(problem, config.solver);
    verdict.iterations = iter;

    if (sol.status != PRPStatus::Optimal) {
      verdict.status = Stability::Unstable;
      verdict.residual = r.norm();
      verdict.trace.infeasible = true;
      verdict.reason = sol.status == PRPStatus::Infeasible
                           ? "no passive regime balances the commanded load"
                           : "solver failure";
      return verdict;
    }

    const Vec6 r_next = residual_wrench(problem, sol);
    const Vec6 x_next = x + sol.s * r;

    TraceStep step;
    step.iter = iter;
    step.x = x_next;
    step.r = r_next;
    step.objective = sol.objective;
    step.s = sol.s;
    step.binaries = sol.binary_summary();
    verdict.trace.steps.push_back(step);
    verdict.trace.final_solution = sol;

    const double progress = (r - r_next).norm();
    if (progress < config.epsilon) {
      if (r_next.norm() <= kStableResidual) {
        verdict.residual = r_next.norm();
        verdict.status = Stability::Stable;
        return verdict;
      }
      // The residual settled above the threshold. Sub-epsilon steps that
      // still shrink the residual by a meaningful fraction are continued
      // rather than classified: a geometric tail slower than epsilon per
      // step is not yet "converged to a larger value".
      if (progress <= 0.01 * r_next.norm()) {
        verdict.residual = r_next.norm();
        verdict.status = Stability::Unstable;
        verdict.reason = "residual converged above the stability threshold";
        return verdict;
      }
    }

    x = x_next;
    r = r_next;

    // Safety net: residuals are monotone under exact solves, so a window
    // without epsilon-level progress means the iteration is stuck.
    if (r.norm() < window_best - config.epsilon) {
      window_best = r.norm();
      window_start = iter;
    } else if (iter - window_start >= config.stall_window) {
      verdict.residual = r.norm();
      verdict.status = verdict.residual <= kStableResidual ? Stability::Stable
                                                           : Stability::Unstable;
      verdict.reason = "stalled: no residual progress over the stall window";
      return verdict;
    }
  }

  verdict.status = Stability::Nonconverged;
  verdict.residual = r.norm();
  verdict.reason = "max_iterations reached with the residual still decreasing";
  return verdict;
}

EnergyReport energy_audit(const IterationTrace& trace, const AssembledGrasp& grasp,
                          const Actuation& commands, const Vec6& w) {
  EnergyReport report;
  if (trace.steps.empty() || trace.infeasible) return report;
  const PRPSolution& sol = trace.final_solution;
  const Vec6& x_total = trace.steps.back().x;

  report.external_work = w.dot(x_total);
  if (const auto* direct = std::get_if<DirectActuation>(&commands)) {
    report.actuator_work = direct->tau_c.dot(sol.q);
  } else {
    const auto& tendon = std::get<TendonActuation>(commands);
    report.actuator_work = tendon.f_c.dot(tendon.R.transpose() * sol.q);
  }

  double friction = 0.0;
  for (int i = 0; i < grasp.n; ++i) {
    const Vec3 c_i = sol.contact_forces.segment<3>(3 * i);
    report.spring_energy += 0.5 * c_i.z() * c_i.z();
    // Tangential relative motion of hand vs object at the contact; work the
    // tangential force actually transfers is a lower bound on dissipation.
    const Vec3 rel = grasp.J.block(3 * i, 0, 3, grasp.d) * sol.q -
                     grasp.G.block(0, 3 * i, 6, 3).transpose() * sol.x;
    const double transfer = c_i.x() * rel.x() + c_i.y() * rel.y();
    friction += std::max(0.0, transfer);
  }
  report.friction_dissipation = friction;

  report.excess = report.spring_energy + report.friction_dissipation -
                  (report.external_work + report.actuator_work);
  report.conservation_violated = report.excess > 1e-6;
  return report;
}

IterationTrace single_solve_trace(const PRPProblem& problem, const PRPSolution& solution) {
  IterationTrace trace;
  if (solution.status != PRPStatus::Optimal) {
    trace.infeasible = true;
    return trace;
  }
  TraceStep step;
  step.iter = 1;
  step.x = solution.x;
  step.r = residual_wrench(problem, solution);
  step.objective = solution.objective;
  step.s = 0.0;
  step.binaries = solution.binary_summary();
  trace.steps.push_back(step);
  trace.final_solution = solution;
  return trace;
}

std::string trace_to_csv(const IterationTrace& trace) {
  std::string out = "iter,s_m_per_N,residual_N,objective_N2,binaries\n";
  for (const TraceStep& step : trace.steps) {
    out += std::to_string(step.iter) + "," + fmt(step.s) + "," + fmt(step.r.norm()) + "," +
           fmt(step.objective) + "," + step.binaries + "\n";
  }
  return out;
}

}  // namespace grasp
