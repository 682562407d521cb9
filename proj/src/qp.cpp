#include "grasp/qp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <vector>

#include "grasp/scene.hpp"  // ContractError

namespace grasp {

namespace {

// Internally every constraint is n^T x >= h (equalities are n^T x = h and are
// added to the active set first, never dropped). External rows map as
//   a^T u  = b   ->  n = a,  h = b
//   c^T u <= d   ->  n = -c, h = -d
// so returned inequality multipliers need no sign flip while equality
// multipliers flip once at the end.

struct Workspace {
  MatX J;              // m x m, starts as L^-T of the regularized Hessian
  MatX R;              // m x m, leading q x q upper triangular
  std::vector<int> active;   // constraint ids (equalities first)
  VecX u;              // active-set multipliers, size q
  int q = 0;
  int n_eq = 0;        // leading active slots that are equalities
};

void apply_col_rotation(MatX& M, int c1, int c2, double cc, double ss) {
  for (int k = 0; k < M.rows(); ++k) {
    const double t1 = M(k, c1), t2 = M(k, c2);
    M(k, c1) = cc * t1 + ss * t2;
    M(k, c2) = -ss * t1 + cc * t2;
  }
}

// Rotate the tail of d into slot q, keeping J * (rotations) consistent.
// Returns false if the new diagonal entry of R would vanish (dependent normal).
bool add_constraint(Workspace& ws, VecX& d) {
  const int m = static_cast<int>(ws.J.rows());
  for (int j = m - 1; j > ws.q; --j) {
    const double a = d[j - 1], b = d[j];
    const double h = std::hypot(a, b);
    if (h == 0.0) continue;
    double cc = a / h, ss = b / h;
    d[j] = 0.0;
    d[j - 1] = (cc < 0.0) ? -h : h;
    if (cc < 0.0) { cc = -cc; ss = -ss; }
    apply_col_rotation(ws.J, j - 1, j, cc, ss);
  }
  ws.R.col(ws.q).head(ws.q + 1) = d.head(ws.q + 1);
  ++ws.q;
  return std::abs(ws.R(ws.q - 1, ws.q - 1)) > 1e-13 * (1.0 + d.head(ws.q).cwiseAbs().maxCoeff());
}

// Remove the active constraint at position pos (an inequality) and restore
// the triangularity of R.
void drop_constraint(Workspace& ws, int pos) {
  const int m = static_cast<int>(ws.J.rows());
  for (int i = pos; i < ws.q - 1; ++i) {
    ws.active[i] = ws.active[i + 1];
    ws.u[i] = ws.u[i + 1];
    ws.R.col(i) = ws.R.col(i + 1);
  }
  ws.active.pop_back();
  --ws.q;
  for (int j = pos; j < ws.q; ++j) {
    const double a = ws.R(j, j), b = ws.R(j + 1, j);
    const double h = std::hypot(a, b);
    if (h == 0.0) continue;
    double cc = a / h, ss = b / h;
    ws.R(j, j) = (cc < 0.0) ? -h : h;
    ws.R(j + 1, j) = 0.0;
    if (cc < 0.0) { cc = -cc; ss = -ss; }
    for (int k = j + 1; k < ws.q; ++k) {
      const double t1 = ws.R(j, k), t2 = ws.R(j + 1, k);
      ws.R(j, k) = cc * t1 + ss * t2;
      ws.R(j + 1, k) = -ss * t1 + cc * t2;
    }
    apply_col_rotation(ws.J, j, j + 1, cc, ss);
  }
}

struct Certificate {
  VecX y_eq, y_in;
  double gap = 0.0;
  bool valid = false;
};

// At a dead end (z = 0, no blocking constraint) the new normal is a
// combination of active normals: n_new = sum r_k n_k with r_k <= 0 on active
// inequalities. That combination is a Farkas ray proving emptiness.
Certificate build_certificate(const Workspace& ws, const VecX& r, int new_id, int p_ext,
                              const MatX& A, const VecX& b, const MatX& C, const VecX& d,
                              const std::vector<int>& eq_rows) {
  Certificate cert;
  cert.y_eq = VecX::Zero(A.rows());
  cert.y_in = VecX::Zero(C.rows());
  auto assign = [&](int id, double coef) {
    if (id < p_ext) {
      cert.y_eq[eq_rows[id]] = -coef;  // internal normal n = a
    } else {
      cert.y_in[id - p_ext] = coef;    // internal normal n = -c
    }
  };
  for (int k = 0; k < ws.q; ++k) assign(ws.active[k], -r[k]);
  assign(new_id, 1.0);

  VecX combo = VecX::Zero(A.cols());
  if (A.rows() > 0) combo += A.transpose() * cert.y_eq;
  if (C.rows() > 0) combo += C.transpose() * cert.y_in;
  cert.gap = -(b.dot(cert.y_eq) + d.dot(cert.y_in));
  const double scale =
      1.0 + std::max(cert.y_eq.size() ? cert.y_eq.cwiseAbs().maxCoeff() : 0.0,
                     cert.y_in.size() ? cert.y_in.cwiseAbs().maxCoeff() : 0.0);
  cert.valid = combo.cwiseAbs().maxCoeff() <= 1e-6 * scale && cert.gap > 1e-9 * scale &&
               cert.y_in.minCoeff() >= -1e-9 * scale;
  return cert;
}

}  // namespace

const char* to_string(QPStatus status) {
  switch (status) {
    case QPStatus::Optimal: return "optimal";
    case QPStatus::Infeasible: return "infeasible";
    case QPStatus::Unbounded: return "unbounded";
    case QPStatus::NumericalFailure: return "numerical_failure";
  }
  return "?";
}

double kkt_residual(const QuadraticProgram& qp, const VecX& u, const VecX& lambda_eq,
                    const VecX& lambda_ineq) {
  VecX stat = qp.Q * u + qp.g;
  if (qp.A.rows() > 0) stat += qp.A.transpose() * lambda_eq;
  if (qp.C.rows() > 0) stat += qp.C.transpose() * lambda_ineq;
  double res = stat.size() ? stat.cwiseAbs().maxCoeff() : 0.0;
  if (qp.A.rows() > 0) res = std::max(res, (qp.A * u - qp.b).cwiseAbs().maxCoeff());
  if (qp.C.rows() > 0) {
    const VecX slack = qp.C * u - qp.d;  // <= 0 feasible
    res = std::max(res, slack.maxCoeff());
    res = std::max(res, -std::min(0.0, lambda_ineq.minCoeff()));
    res = std::max(res, (lambda_ineq.array() * slack.array()).abs().maxCoeff());
  }
  return res;
}

QPResult solve_qp(const QuadraticProgram& qp, const QPSettings& settings) {
  const int m = qp.vars();
  if (qp.Q.rows() != m || qp.Q.cols() != m) throw ContractError("solve_qp: Q dimension mismatch");
  if (qp.A.rows() != qp.b.size() || (qp.A.rows() > 0 && qp.A.cols() != m))
    throw ContractError("solve_qp: equality dimension mismatch");
  if (qp.C.rows() != qp.d.size() || (qp.C.rows() > 0 && qp.C.cols() != m))
    throw ContractError("solve_qp: inequality dimension mismatch");

  const int p_all = static_cast<int>(qp.A.rows());
  const int n_in = static_cast<int>(qp.C.rows());

  QPResult result;
  result.lambda_eq = VecX::Zero(p_all);
  result.lambda_ineq = VecX::Zero(n_in);

  const MatX Qsym = 0.5 * (qp.Q + qp.Q.transpose());

  // Equality preprocessing: consistency by least squares, then keep an
  // independent row subset so the active-set factorization stays regular.
  std::vector<int> eq_rows;
  if (p_all > 0) {
    const Eigen::CompleteOrthogonalDecomposition<MatX> cod(qp.A);
    const VecX u_ls = cod.solve(qp.b);
    const VecX rho = qp.A * u_ls - qp.b;
    const double scale = 1.0 + qp.b.cwiseAbs().maxCoeff() + u_ls.cwiseAbs().maxCoeff();
    if (rho.cwiseAbs().maxCoeff() > 1e-8 * scale) {
      result.status = QPStatus::Infeasible;
      result.farkas_eq = rho;
      result.farkas_ineq = VecX::Zero(n_in);
      result.farkas_gap = rho.squaredNorm();
      return result;
    }
    Eigen::ColPivHouseholderQR<MatX> qr(qp.A.transpose());
    qr.setThreshold(1e-12);
    const int rank = static_cast<int>(qr.rank());
    eq_rows.assign(qr.colsPermutation().indices().data(),
                   qr.colsPermutation().indices().data() + rank);
    std::sort(eq_rows.begin(), eq_rows.end());
  }
  const int p = static_cast<int>(eq_rows.size());

  // Internal >= form.
  const int total = p + n_in;
  auto normal_of = [&](int id) -> VecX {
    return id < p ? VecX(qp.A.row(eq_rows[id]).transpose()) : VecX(-qp.C.row(id - p).transpose());
  };
  auto rhs_of = [&](int id) -> double { return id < p ? qp.b[eq_rows[id]] : -qp.d[id - p]; };

  // Regularized Cholesky; bump the shift if the PSD tolerance bites.
  double reg = settings.regularization;
  Eigen::LLT<MatX> llt;
  for (int attempt = 0; attempt < 4; ++attempt) {
    llt.compute(Qsym + reg * MatX::Identity(m, m));
    if (llt.info() == Eigen::Success) break;
    reg *= 100.0;
  }
  if (llt.info() != Eigen::Success) {
    result.status = QPStatus::NumericalFailure;
    return result;
  }

  Workspace ws;
  ws.J = llt.matrixL().transpose().solve(MatX::Identity(m, m));
  ws.R = MatX::Zero(m, m);
  ws.u = VecX::Zero(0);

  VecX x = -llt.solve(qp.g);

  const double data_scale = 1.0 + (qp.g.size() ? qp.g.cwiseAbs().maxCoeff() : 0.0) +
                            (m ? Qsym.cwiseAbs().maxCoeff() : 0.0);
  const double unbounded_norm = 0.01 / reg;

  int iterations = 0;
  auto finish_numerical_failure = [&]() {
    result.status = QPStatus::NumericalFailure;
    result.u = x;
    result.iterations = iterations;
    result.objective = 0.5 * x.dot(qp.Q * x) + qp.g.dot(x);
    return result;
  };

  // Phase 1: install equalities.
  for (int id = 0; id < p; ++id) {
    const VecX np = normal_of(id);
    VecX dvec = ws.J.transpose() * np;
    VecX z = VecX::Zero(m);
    for (int j = ws.q; j < m; ++j) z += ws.J.col(j) * dvec[j];
    VecX r(ws.q);
    if (ws.q > 0)
      r = ws.R.topLeftCorner(ws.q, ws.q)
              .triangularView<Eigen::Upper>()
              .solve(dvec.head(ws.q));
    const double s = np.dot(x) - rhs_of(id);
    const double ztnp = z.dot(np);
    if (std::abs(ztnp) <= 1e-14 * data_scale) {
      // Dependent equality; preprocessing should have removed it.
      if (std::abs(s) > settings.feasibility_tol * data_scale) return finish_numerical_failure();
      continue;
    }
    const double t = -s / ztnp;
    x += t * z;
    VecX u_new(ws.q + 1);
    if (ws.q > 0) u_new.head(ws.q) = ws.u - t * r;
    u_new[ws.q] = t;
    if (!add_constraint(ws, dvec)) return finish_numerical_failure();
    ws.active.push_back(id);
    ws.u = u_new;
    ++ws.n_eq;
    ++iterations;
  }

  // Phase 2: dual iterations over inequalities.
  while (true) {
    if (++iterations > settings.max_iterations) return finish_numerical_failure();

    // Most violated inactive inequality, lowest index on ties.
    int worst = -1;
    double worst_s = -settings.feasibility_tol * data_scale;
    VecX slack_all;
    if (n_in > 0) slack_all = qp.d - qp.C * x;  // >= 0 feasible
    for (int j = 0; j < n_in; ++j) {
      const bool is_active =
          std::find(ws.active.begin(), ws.active.end(), p + j) != ws.active.end();
      if (is_active) continue;
      if (slack_all[j] < worst_s) {
        worst_s = slack_all[j];
        worst = j;
      }
    }
    if (worst < 0) break;  // primal feasible -> optimal

    const int new_id = p + worst;
    const VecX np = normal_of(new_id);
    double u_plus = 0.0;

    while (true) {
      if (++iterations > settings.max_iterations) return finish_numerical_failure();
      VecX dvec = ws.J.transpose() * np;
      VecX z = VecX::Zero(m);
      for (int j = ws.q; j < m; ++j) z += ws.J.col(j) * dvec[j];
      VecX r(ws.q);
      if (ws.q > 0)
        r = ws.R.topLeftCorner(ws.q, ws.q)
                .triangularView<Eigen::Upper>()
                .solve(dvec.head(ws.q));

      // Dual step bound from active inequalities.
      double t1 = std::numeric_limits<double>::infinity();
      int drop_pos = -1;
      for (int k = ws.n_eq; k < ws.q; ++k) {
        if (r[k] > 1e-13) {
          const double step = ws.u[k] / r[k];
          if (step < t1) {
            t1 = step;
            drop_pos = k;
          }
        }
      }
      const double s = np.dot(x) - rhs_of(new_id);  // < 0 while violated
      const double ztnp = z.dot(np);
      const bool has_primal = ztnp > 1e-14 * data_scale;
      const double t2 = has_primal ? -s / ztnp : std::numeric_limits<double>::infinity();
      const double t = std::min(t1, t2);

      if (!std::isfinite(t)) {
        Certificate cert = build_certificate(ws, r, new_id, p, qp.A, qp.b, qp.C, qp.d, eq_rows);
        if (!cert.valid) return finish_numerical_failure();
        result.status = QPStatus::Infeasible;
        result.u = x;
        result.iterations = iterations;
        result.farkas_eq = cert.y_eq;
        result.farkas_ineq = cert.y_in;
        result.farkas_gap = cert.gap;
        return result;
      }

      if (ws.q > 0) ws.u.head(ws.q) -= t * r;
      u_plus += t;
      if (has_primal) x += t * z;

      if (has_primal && t == t2) {
        VecX u_new(ws.q + 1);
        u_new.head(ws.q) = ws.u;
        u_new[ws.q] = u_plus;
        if (!add_constraint(ws, dvec)) {
          // Degenerate add: treat as satisfied-by-dependence.
          --ws.q;
          break;
        }
        ws.active.push_back(new_id);
        ws.u = u_new;
        break;
      }
      drop_constraint(ws, drop_pos);
    }

    if (x.cwiseAbs().maxCoeff() > unbounded_norm) {
      result.status = QPStatus::Unbounded;
      result.u = x;
      result.iterations = iterations;
      return result;
    }
  }

  if (x.size() > 0 && x.cwiseAbs().maxCoeff() > unbounded_norm) {
    result.status = QPStatus::Unbounded;
    result.u = x;
    result.iterations = iterations;
    return result;
  }

  // Map multipliers back to the external rows.
  for (int k = 0; k < ws.q; ++k) {
    const int id = ws.active[k];
    if (id < p)
      result.lambda_eq[eq_rows[id]] = -ws.u[k];
    else
      result.lambda_ineq[id - p] = ws.u[k];
  }
  result.u = x;
  result.iterations = iterations;
  result.kkt_residual = kkt_residual(qp, x, result.lambda_eq, result.lambda_ineq);

  // Polish: direct KKT solve on the final active set with the original
  // (unregularized) Hessian; keeps whichever iterate certifies better.
  {
    std::vector<int> act_in;
    for (int k = ws.n_eq; k < ws.q; ++k) act_in.push_back(ws.active[k] - p);
    std::sort(act_in.begin(), act_in.end());
    const int na = p + static_cast<int>(act_in.size());
    MatX K = MatX::Zero(m + na, m + na);
    VecX rhs(m + na);
    K.topLeftCorner(m, m) = Qsym;
    rhs.head(m) = -qp.g;
    for (int k = 0; k < p; ++k) {
      K.block(m + k, 0, 1, m) = qp.A.row(eq_rows[k]);
      K.block(0, m + k, m, 1) = qp.A.row(eq_rows[k]).transpose();
      rhs[m + k] = qp.b[eq_rows[k]];
    }
    for (size_t k = 0; k < act_in.size(); ++k) {
      const int row = static_cast<int>(m + p + k);
      K.block(row, 0, 1, m) = qp.C.row(act_in[k]);
      K.block(0, row, m, 1) = qp.C.row(act_in[k]).transpose();
      rhs[row] = qp.d[act_in[k]];
    }
    const VecX sol = K.completeOrthogonalDecomposition().solve(rhs);
    VecX le = VecX::Zero(p_all);
    VecX li = VecX::Zero(n_in);
    for (int k = 0; k < p; ++k) le[eq_rows[k]] = sol[m + k];
    for (size_t k = 0; k < act_in.size(); ++k) li[act_in[k]] = sol[m + p + k];
    const VecX u_pol = sol.head(m);
    const double res_pol = kkt_residual(qp, u_pol, le, li);
    if (res_pol < result.kkt_residual) {
      result.u = u_pol;
      result.lambda_eq = le;
      result.lambda_ineq = li;
      result.kkt_residual = res_pol;
    }
  }

  result.objective = 0.5 * result.u.dot(qp.Q * result.u) + qp.g.dot(result.u);
  result.status = result.kkt_residual <= 1e-8 ? QPStatus::Optimal : QPStatus::NumericalFailure;
  return result;
}

}  // namespace grasp
