#pragma once

#include <limits>

#include "grasp/types.hpp"

namespace grasp {

enum class QPStatus { Optimal, Infeasible, Unbounded, NumericalFailure };

const char* to_string(QPStatus status);

/// Convex quadratic program
///   minimize    1/2 u^T Q u + g^T u
///   subject to  A u = b,  C u <= d
/// Q must be symmetric positive semidefinite (eigenvalues >= -1e-10).
struct QuadraticProgram {
  MatX Q;
  VecX g;
  MatX A;
  VecX b;
  MatX C;
  VecX d;

  int vars() const { return static_cast<int>(g.size()); }
};

struct QPSettings {
  /// Diagonal shift added to Q. Breaks degenerate-optimum ties toward the
  /// minimum-norm solution; recorded in QPResult::regularized.
  double regularization = 1e-10;
  int max_iterations = 10000;
  double feasibility_tol = 1e-9;
};

struct QPResult {
  QPStatus status = QPStatus::NumericalFailure;
  VecX u;
  VecX lambda_eq;    // multipliers of A u = b (sign per Q u + g + A^T l_eq + C^T l_in = 0)
  VecX lambda_ineq;  // multipliers of C u <= d, >= 0 at an optimum
  double objective = std::numeric_limits<double>::quiet_NaN();
  double kkt_residual = std::numeric_limits<double>::infinity();
  bool regularized = true;
  int iterations = 0;

  /// Farkas-type certificate when status == Infeasible:
  /// A^T farkas_eq + C^T farkas_ineq = 0, farkas_ineq >= 0 and
  /// farkas_gap = -(b^T farkas_eq + d^T farkas_ineq) > 0.
  VecX farkas_eq;
  VecX farkas_ineq;
  double farkas_gap = 0.0;
};

/// Dual active-set solve with a direct KKT polish of the final active set.
/// status == Optimal guarantees kkt_residual <= 1e-8. Stateless; concurrent
/// calls are permitted.
QPResult solve_qp(const QuadraticProgram& qp, const QPSettings& settings = {});

/// Max-norm KKT residual of (u, lambda_eq, lambda_ineq): stationarity, primal
/// feasibility, dual feasibility and complementary slackness.
double kkt_residual(const QuadraticProgram& qp, const VecX& u, const VecX& lambda_eq,
                    const VecX& lambda_ineq);

}  // namespace grasp
