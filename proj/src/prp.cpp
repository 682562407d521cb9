#include "grasp/prp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <tuple>

namespace grasp {

namespace {

constexpr double kIntegralTol = 1e-7;
constexpr double kSaturationTol = 1e-6;

std::array<double, 6> resolve_big_m(const SolverConfig& config, double cmd_scale, const Vec6& w) {
  const double scale = std::max({1.0, cmd_scale, w.cwiseAbs().maxCoeff()});
  std::array<double, 6> k{};
  for (int i = 0; i < 6; ++i) k[i] = config.k[i] > 0.0 ? config.k[i] : config.kappa * scale;
  return k;
}

PRPProblem encode_common(const AssembledGrasp& grasp, const Actuation& commands, const Vec6& w,
                         const SolverConfig& config) {
  PRPProblem p;
  p.n = grasp.n;
  p.E = grasp.E;
  p.d = grasp.d;
  p.L = grasp.L;
  p.D = grasp.D;
  p.GD = grasp.G * grasp.D;
  p.JTD = grasp.J.transpose() * grasp.D;
  p.N = grasp.normal_rows;
  p.SJ = grasp.normal_select * grasp.J;
  p.SGT = grasp.normal_select * grasp.G.transpose();
  p.w = w;

  double cmd_scale = 0.0;
  if (const auto* direct = std::get_if<DirectActuation>(&commands)) {
    if (direct->tau_c.size() != grasp.d)
      throw ContractError("encode_prp: tau_c size does not match joint count");
    p.kind = PRPProblem::Kind::Direct;
    p.d_act = grasp.d;
    p.cmd = direct->tau_c;
    if (p.cmd.size() > 0) cmd_scale = p.cmd.cwiseAbs().maxCoeff() / grasp.L;
  } else {
    const auto& tendon = std::get<TendonActuation>(commands);
    if (tendon.R.rows() != grasp.d)
      throw ContractError("encode_prp: R row count does not match joint count");
    if (tendon.f_c.size() != tendon.R.cols())
      throw ContractError("encode_prp: f_c size does not match actuator count");
    p.kind = PRPProblem::Kind::Tendon;
    p.d_act = static_cast<int>(tendon.R.cols());
    p.R = tendon.R;
    p.cmd = tendon.f_c;
    if (p.cmd.size() > 0) cmd_scale = p.cmd.cwiseAbs().maxCoeff();
  }
  p.big_m = resolve_big_m(config, cmd_scale, w);
  return p;
}

// Variable layout of a node QP: [beta | x | q | tau or f | s | free binaries].
struct NodeLayout {
  int beta0 = 0, x0 = 0, q0 = 0, t0 = 0, s0 = -1, bin0 = 0;
  int nvars = 0;
  std::vector<int> free_binaries;  // binary index per appended column
};

/// Build the convex QP of one branch-and-bound node. Fixed binaries are
/// substituted into the rows (forced complementarity sides become
/// equalities); free ones stay as [0,1] columns, keeping the relaxation
/// convex. Big-M rows are scaled by 1/k so coefficients stay O(1) regardless
/// of kappa.
NodeLayout build_node_qp(const PRPProblem& p, const std::vector<int8_t>& fix,
                         QuadraticProgram& qp) {
  const int dt = p.kind == PRPProblem::Kind::Direct ? p.d : p.d_act;
  const int db = dt;  // one regime binary per joint (Direct) or actuator (Tendon)
  const bool mv = p.movement_constrained;

  NodeLayout lay;
  lay.beta0 = 0;
  lay.x0 = p.E;
  lay.q0 = p.E + 6;
  lay.t0 = p.E + 6 + p.d;
  lay.s0 = mv ? lay.t0 + dt : -1;
  lay.bin0 = lay.t0 + dt + (mv ? 1 : 0);
  for (int b = 0; b < p.n + db; ++b)
    if (fix[b] < 0) lay.free_binaries.push_back(b);
  lay.nvars = lay.bin0 + static_cast<int>(lay.free_binaries.size());

  int n_eq = 6 + p.d;  // equilibrium (Alg 1) or movement (Alg 2) rows + torque rows
  int n_in = p.E + (mv ? 2 : 0) + 2 * static_cast<int>(lay.free_binaries.size());
  for (int i = 0; i < p.n; ++i) {
    n_eq += fix[i] >= 0 ? 1 : 0;
    n_in += fix[i] >= 0 ? 2 : 4;
  }
  for (int j = 0; j < db; ++j) {
    n_eq += fix[p.n + j] >= 0 ? 1 : 0;
    n_in += fix[p.n + j] >= 0 ? 2 : 4;
  }

  qp.Q = MatX::Zero(lay.nvars, lay.nvars);
  qp.g = VecX::Zero(lay.nvars);
  qp.A = MatX::Zero(n_eq, lay.nvars);
  qp.b = VecX::Zero(n_eq);
  qp.C = MatX::Zero(n_in, lay.nvars);
  qp.d = VecX::Zero(n_in);

  if (mv) {
    // minimize |w + GD beta|^2 (the w^T w constant lives in objective_constant)
    qp.Q.topLeftCorner(p.E, p.E) = 2.0 * p.GD.transpose() * p.GD;
    qp.g.head(p.E) = 2.0 * p.GD.transpose() * p.w;
  } else {
    // minimize sum c_{i,n}^2
    qp.Q.topLeftCorner(p.E, p.E) = 2.0 * p.N.transpose() * p.N;
  }

  int eq = 0;
  if (!mv) {
    qp.A.block(0, lay.beta0, 6, p.E) = p.GD;  // G D beta = -w
    qp.b.segment(0, 6) = -p.w;
  } else {
    for (int r = 0; r < 6; ++r) {  // x = x_prev + s r_prev
      qp.A(r, lay.x0 + r) = 1.0;
      qp.A(r, lay.s0) = -p.r_prev[r];
      qp.b[r] = p.x_prev[r];
    }
  }
  eq = 6;

  for (int j = 0; j < p.d; ++j) {  // J^T D beta = tau   or   J^T D beta = R f
    qp.A.block(eq + j, lay.beta0, 1, p.E) = p.JTD.row(j);
    if (p.kind == PRPProblem::Kind::Direct) {
      qp.A(eq + j, lay.t0 + j) = -1.0;
    } else {
      for (int l = 0; l < p.d_act; ++l) qp.A(eq + j, lay.t0 + l) = -p.R(j, l);
    }
  }
  eq += p.d;

  int in = 0;
  for (int e = 0; e < p.E; ++e) qp.C(in++, lay.beta0 + e) = -1.0;  // F beta <= 0

  int free_col = lay.bin0;
  std::vector<int> bin_col(p.n + db, -1);
  for (int b : lay.free_binaries) bin_col[b] = free_col++;

  // coef * (c_n - compression) with compression = (SJ q - SGT x)_i
  auto spring_slack_row = [&](int i, double coef, int row) {
    qp.C.block(row, lay.beta0, 1, p.E) = coef * p.N.row(i);
    qp.C.block(row, lay.q0, 1, p.d) = -coef * p.SJ.row(i);
    qp.C.block(row, lay.x0, 1, 6) = coef * p.SGT.row(i);
  };

  for (int i = 0; i < p.n; ++i) {
    const double k1 = p.big_m[0], k2 = p.big_m[1];
    if (fix[i] < 0) {
      qp.C.block(in, lay.beta0, 1, p.E) = -p.N.row(i);  // c_n >= 0
      ++in;
      qp.C.block(in, lay.beta0, 1, p.E) = p.N.row(i) / k1;  // c_n <= k1 y
      qp.C(in, bin_col[i]) = -1.0;
      ++in;
      spring_slack_row(i, -1.0, in);  // c_n - compression >= 0
      ++in;
      spring_slack_row(i, 1.0 / k2, in);  // c_n - compression <= k2 (1 - y)
      qp.C(in, bin_col[i]) = 1.0;
      qp.d[in] = 1.0;
      ++in;
    } else if (fix[i] == 1) {
      // engaged spring: c_n equals the spring force, below the virtual limit
      qp.A.block(eq, lay.beta0, 1, p.E) = p.N.row(i);
      qp.A.block(eq, lay.q0, 1, p.d) = -p.SJ.row(i);
      qp.A.block(eq, lay.x0, 1, 6) = p.SGT.row(i);
      ++eq;
      qp.C.block(in, lay.beta0, 1, p.E) = -p.N.row(i);
      ++in;
      qp.C.block(in, lay.beta0, 1, p.E) = p.N.row(i) / k1;
      qp.d[in] = 1.0;
      ++in;
    } else {
      // broken contact: zero force, spring extended at most k2
      qp.A.block(eq, lay.beta0, 1, p.E) = p.N.row(i);
      ++eq;
      spring_slack_row(i, -1.0, in);
      ++in;
      spring_slack_row(i, 1.0 / k2, in);
      qp.d[in] = 1.0;
      ++in;
    }
  }

  if (p.kind == PRPProblem::Kind::Direct) {
    const double k3 = p.big_m[2], k4 = p.big_m[3];
    for (int j = 0; j < p.d; ++j) {
      const int b = p.n + j;
      if (fix[b] < 0) {
        qp.C(in++, lay.q0 + j) = -1.0;  // q_j >= 0
        qp.C(in, lay.q0 + j) = 1.0 / k3;  // q_j <= k3 z
        qp.C(in, bin_col[b]) = -1.0;
        ++in;
        qp.C(in, lay.t0 + j) = -1.0;  // tau_j >= tau_c
        qp.d[in] = -p.cmd[j];
        ++in;
        qp.C(in, lay.t0 + j) = 1.0 / k4;  // tau_j - tau_c <= k4 (1 - z)
        qp.C(in, bin_col[b]) = 1.0;
        qp.d[in] = 1.0 + p.cmd[j] / k4;
        ++in;
      } else if (fix[b] == 1) {
        // joint free to close: torque pinned at the commanded value
        qp.A(eq, lay.t0 + j) = 1.0;
        qp.b[eq] = p.cmd[j];
        ++eq;
        qp.C(in++, lay.q0 + j) = -1.0;
        qp.C(in, lay.q0 + j) = 1.0 / k3;
        qp.d[in] = 1.0;
        ++in;
      } else {
        // passively loaded joint: stationary, torque at or above commanded
        qp.A(eq, lay.q0 + j) = 1.0;
        ++eq;
        qp.C(in, lay.t0 + j) = -1.0;
        qp.d[in] = -p.cmd[j];
        ++in;
        qp.C(in, lay.t0 + j) = 1.0 / k4;
        qp.d[in] = 1.0 + p.cmd[j] / k4;
        ++in;
      }
    }
  } else {
    const double k5 = p.big_m[4], k6 = p.big_m[5];
    for (int l = 0; l < p.d_act; ++l) {
      const int b = p.n + l;
      auto transmission_row = [&](double coef, int row) {
        for (int j = 0; j < p.d; ++j) qp.C(row, lay.q0 + j) = coef * p.R(j, l);
      };
      if (fix[b] < 0) {
        transmission_row(-1.0, in);  // (R^T q)_l >= 0
        ++in;
        transmission_row(1.0 / k5, in);  // (R^T q)_l <= k5 z
        qp.C(in, bin_col[b]) = -1.0;
        ++in;
        qp.C(in, lay.t0 + l) = -1.0;  // f_l >= f_c
        qp.d[in] = -p.cmd[l];
        ++in;
        qp.C(in, lay.t0 + l) = 1.0 / k6;  // f_l - f_c <= k6 (1 - z)
        qp.C(in, bin_col[b]) = 1.0;
        qp.d[in] = 1.0 + p.cmd[l] / k6;
        ++in;
      } else if (fix[b] == 1) {
        qp.A(eq, lay.t0 + l) = 1.0;
        qp.b[eq] = p.cmd[l];
        ++eq;
        transmission_row(-1.0, in);
        ++in;
        transmission_row(1.0 / k5, in);
        qp.d[in] = 1.0;
        ++in;
      } else {
        for (int j = 0; j < p.d; ++j) qp.A(eq, lay.q0 + j) = p.R(j, l);
        ++eq;
        qp.C(in, lay.t0 + l) = -1.0;
        qp.d[in] = -p.cmd[l];
        ++in;
        qp.C(in, lay.t0 + l) = 1.0 / k6;
        qp.d[in] = 1.0 + p.cmd[l] / k6;
        ++in;
      }
    }
  }

  if (mv) {
    qp.C(in, lay.s0) = -1.0;  // 0 <= s
    ++in;
    qp.C(in, lay.s0) = 1.0;  // s <= gamma
    qp.d[in] = p.gamma;
    ++in;
  }

  for (int b : lay.free_binaries) {
    qp.C(in, bin_col[b]) = -1.0;
    ++in;
    qp.C(in, bin_col[b]) = 1.0;
    qp.d[in] = 1.0;
    ++in;
  }

  return lay;
}

PRPSolution extract_leaf(const PRPProblem& p, const std::vector<int8_t>& fix,
                         const QPResult& qp_result, const NodeLayout& lay) {
  const int dt = p.kind == PRPProblem::Kind::Direct ? p.d : p.d_act;
  PRPSolution sol;
  sol.status = PRPStatus::Optimal;
  sol.beta = qp_result.u.head(p.E);
  sol.contact_forces = p.D * sol.beta;
  sol.x = qp_result.u.segment(lay.x0, 6);
  sol.q = qp_result.u.segment(lay.q0, p.d);
  if (p.kind == PRPProblem::Kind::Direct) {
    sol.tau = qp_result.u.segment(lay.t0, dt);
  } else {
    sol.f = qp_result.u.segment(lay.t0, dt);
    sol.tau = p.R * sol.f;
  }
  if (lay.s0 >= 0) sol.s = qp_result.u[lay.s0];
  sol.y.assign(fix.begin(), fix.begin() + p.n);
  sol.z.assign(fix.begin() + p.n, fix.end());
  sol.objective = qp_result.objective + p.objective_constant;
  sol.qp_kkt_residual = qp_result.kkt_residual;

  // Complementarity products in physical units.
  const VecX c_n = p.N * sol.beta;
  const VecX compression = p.SJ * sol.q - p.SGT * sol.x;
  double viol = 0.0;
  for (int i = 0; i < p.n; ++i) viol = std::max(viol, std::abs(c_n[i] * (c_n[i] - compression[i])));
  if (p.kind == PRPProblem::Kind::Direct) {
    for (int j = 0; j < p.d; ++j)
      viol = std::max(viol, std::abs(sol.q[j] * (sol.tau[j] - p.cmd[j])));
  } else {
    const VecX motion = p.R.transpose() * sol.q;
    for (int l = 0; l < p.d_act; ++l)
      viol = std::max(viol, std::abs(motion[l] * (sol.f[l] - p.cmd[l])));
  }
  sol.complementarity_violation = viol;

  // Big-M saturation: a binding virtual limit means kappa is too small.
  auto saturated = [&](double lhs, double limit) {
    return lhs >= limit * (1.0 - kSaturationTol);
  };
  for (int i = 0; i < p.n; ++i) {
    if (sol.y[i] == 1 && saturated(c_n[i], p.big_m[0]))
      sol.warnings.push_back("big-M saturation: c_n at contact " + std::to_string(i) +
                             " reaches k1; increase kappa");
    if (sol.y[i] == 0 && saturated(c_n[i] - compression[i], p.big_m[1]))
      sol.warnings.push_back("big-M saturation: spring slack at contact " + std::to_string(i) +
                             " reaches k2; increase kappa");
  }
  if (p.kind == PRPProblem::Kind::Direct) {
    for (int j = 0; j < p.d; ++j) {
      if (sol.z[j] == 1 && saturated(sol.q[j], p.big_m[2]))
        sol.warnings.push_back("big-M saturation: q at joint " + std::to_string(j) +
                               " reaches k3; increase kappa");
      if (sol.z[j] == 0 && saturated(sol.tau[j] - p.cmd[j], p.big_m[3]))
        sol.warnings.push_back("big-M saturation: excess torque at joint " + std::to_string(j) +
                               " reaches k4; increase kappa");
    }
  } else {
    const VecX motion = p.R.transpose() * sol.q;
    for (int l = 0; l < p.d_act; ++l) {
      if (sol.z[l] == 1 && saturated(motion[l], p.big_m[4]))
        sol.warnings.push_back("big-M saturation: transmission motion at actuator " +
                               std::to_string(l) + " reaches k5; increase kappa");
      if (sol.z[l] == 0 && saturated(sol.f[l] - p.cmd[l], p.big_m[5]))
        sol.warnings.push_back("big-M saturation: excess force at actuator " + std::to_string(l) +
                               " reaches k6; increase kappa");
    }
  }
  return sol;
}

struct LeafOutcome {
  bool feasible = false;
  bool failed = false;
  double value = std::numeric_limits<double>::infinity();
  PRPSolution solution;
};

LeafOutcome solve_leaf(const PRPProblem& p, const std::vector<int8_t>& fix,
                       const SolverConfig& config) {
  QuadraticProgram qp;
  const NodeLayout lay = build_node_qp(p, fix, qp);
  const QPResult res = solve_qp(qp, config.qp);
  LeafOutcome out;
  if (res.status == QPStatus::Optimal) {
    out.feasible = true;
    out.value = res.objective + p.objective_constant;
    out.solution = extract_leaf(p, fix, res, lay);
  } else if (res.status != QPStatus::Infeasible) {
    out.failed = true;
  }
  return out;
}

}  // namespace

const char* to_string(PRPStatus status) {
  switch (status) {
    case PRPStatus::Optimal: return "optimal";
    case PRPStatus::Infeasible: return "infeasible";
    case PRPStatus::NumericalFailure: return "numerical_failure";
  }
  return "?";
}

std::string PRPSolution::binary_summary() const {
  std::string out = "y=";
  for (int v : y) out += static_cast<char>('0' + v);
  if (!z.empty()) {
    out += " z=";
    for (int v : z) out += static_cast<char>('0' + v);
  }
  return out;
}

PRPProblem encode_prp(const AssembledGrasp& grasp, const Actuation& commands, const Vec6& w,
                      const SolverConfig& config) {
  PRPProblem p = encode_common(grasp, commands, w, config);
  p.movement_constrained = false;
  p.objective_constant = 0.0;
  return p;
}

PRPProblem encode_movement_constrained(const AssembledGrasp& grasp, const Actuation& commands,
                                       const Vec6& w, const Vec6& x_prev, const Vec6& r_prev,
                                       double gamma, const SolverConfig& config) {
  if (!(gamma > 0.0)) throw ContractError("encode_movement_constrained: gamma must be > 0");
  PRPProblem p = encode_common(grasp, commands, w, config);
  p.movement_constrained = true;
  p.x_prev = x_prev;
  p.r_prev = r_prev;
  p.gamma = gamma;
  p.objective_constant = w.squaredNorm();
  return p;
}

PRPSolution solve_miqp(const PRPProblem& problem, const SolverConfig& config) {
  const int B = problem.binary_count();

  struct Node {
    std::vector<int8_t> fix;
    double bound;
    VecX frac;  // free-binary relaxation values, index-aligned with free list
    std::vector<int> free_list;
    long id;
    bool unbounded_below = false;  // relaxation failed; cannot prune
  };
  auto cmp = [](const Node& a, const Node& b) {
    return std::tie(a.bound, a.id) > std::tie(b.bound, b.id);
  };
  std::priority_queue<Node, std::vector<Node>, decltype(cmp)> open(cmp);

  long next_id = 0;
  int nodes = 0;
  bool any_failure = false;
  bool have_incumbent = false;
  double best_value = std::numeric_limits<double>::infinity();
  PRPSolution best;

  auto consider_incumbent = [&](LeafOutcome&& out) {
    if (out.failed) any_failure = true;
    if (out.feasible && out.value < best_value - 1e-12) {
      best_value = out.value;
      best = std::move(out.solution);
      have_incumbent = true;
    }
  };

  // Evaluate a node: solve its relaxation; leaves and integral relaxations
  // become incumbent candidates, others enter the queue with their bound.
  auto evaluate = [&](std::vector<int8_t> fix) {
    ++nodes;
    bool all_fixed = true;
    for (int b = 0; b < B; ++b)
      if (fix[b] < 0) all_fixed = false;
    if (all_fixed) {
      consider_incumbent(solve_leaf(problem, fix, config));
      return;
    }
    QuadraticProgram qp;
    const NodeLayout lay = build_node_qp(problem, fix, qp);
    const QPResult res = solve_qp(qp, config.qp);
    if (res.status == QPStatus::Infeasible) return;
    if (res.status != QPStatus::Optimal) {
      any_failure = true;
      Node node;
      node.fix = std::move(fix);
      node.bound = -std::numeric_limits<double>::infinity();
      node.free_list = lay.free_binaries;
      node.frac = VecX::Zero(static_cast<int>(lay.free_binaries.size()));
      node.id = next_id++;
      node.unbounded_below = true;
      open.push(std::move(node));
      return;
    }
    const double bound = res.objective + problem.objective_constant;
    VecX frac(static_cast<int>(lay.free_binaries.size()));
    bool integral = true;
    for (size_t k = 0; k < lay.free_binaries.size(); ++k) {
      const double v = std::clamp(res.u[lay.bin0 + static_cast<int>(k)], 0.0, 1.0);
      frac[static_cast<int>(k)] = v;
      if (std::min(v, 1.0 - v) > kIntegralTol) integral = false;
    }
    if (integral) {
      // The rounded leaf attains the relaxation bound; the subtree is solved.
      std::vector<int8_t> leaf_fix = fix;
      for (size_t k = 0; k < lay.free_binaries.size(); ++k)
        leaf_fix[lay.free_binaries[k]] = frac[static_cast<int>(k)] > 0.5 ? 1 : 0;
      consider_incumbent(solve_leaf(problem, leaf_fix, config));
      return;
    }
    Node node;
    node.fix = std::move(fix);
    node.bound = bound;
    node.frac = std::move(frac);
    node.free_list = lay.free_binaries;
    node.id = next_id++;
    open.push(std::move(node));
  };

  evaluate(std::vector<int8_t>(B, -1));

  while (!open.empty()) {
    Node node = open.top();
    open.pop();
    if (have_incumbent && !node.unbounded_below &&
        node.bound >= best_value - 1e-9 * (1.0 + std::abs(best_value)))
      continue;
    if (nodes > 200000) throw ContractError("solve_miqp: node budget exceeded");

    // Most fractional free binary, lowest index on ties.
    int branch = node.free_list.front();
    double score = -1.0;
    for (size_t k = 0; k < node.free_list.size(); ++k) {
      const double v = node.frac[static_cast<int>(k)];
      const double s = std::min(v, 1.0 - v);
      if (s > score + 1e-12) {
        score = s;
        branch = node.free_list[k];
      }
    }
    for (int value = 0; value <= 1; ++value) {
      std::vector<int8_t> child = node.fix;
      child[branch] = static_cast<int8_t>(value);
      evaluate(std::move(child));
    }
  }

  if (!have_incumbent) {
    PRPSolution sol;
    sol.status = PRPStatus::Infeasible;
    sol.nodes_explored = nodes;
    if (any_failure)
      sol.warnings.push_back("a node QP failed numerically; infeasibility may be unsound");
    return sol;
  }
  best.status = PRPStatus::Optimal;
  best.nodes_explored = nodes;
  if (any_failure) best.warnings.push_back("a relaxation QP failed numerically during the search");
  return best;
}

PRPSolution solve_miqp_enumerated(const PRPProblem& problem, const SolverConfig& config) {
  const int B = problem.binary_count();
  if (B > config.enumeration_threshold)
    throw ContractError("solve_miqp_enumerated: binary count " + std::to_string(B) +
                        " exceeds enumeration_threshold " +
                        std::to_string(config.enumeration_threshold));
  bool have_best = false;
  double best_value = std::numeric_limits<double>::infinity();
  PRPSolution best;
  int solves = 0;
  for (std::uint64_t a = 0; a < (std::uint64_t{1} << B); ++a) {
    std::vector<int8_t> fix(B);
    for (int b = 0; b < B; ++b) fix[b] = static_cast<int8_t>((a >> b) & 1u);
    LeafOutcome out = solve_leaf(problem, fix, config);
    ++solves;
    if (out.feasible && out.value < best_value - 1e-12) {
      best_value = out.value;
      best = std::move(out.solution);
      have_best = true;
    }
  }
  if (!have_best) {
    PRPSolution sol;
    sol.status = PRPStatus::Infeasible;
    sol.nodes_explored = solves;
    return sol;
  }
  best.status = PRPStatus::Optimal;
  best.nodes_explored = solves;
  return best;
}

Vec6 residual_wrench(const PRPProblem& problem, const PRPSolution& solution) {
  return problem.w + problem.GD * solution.beta;
}

}  // namespace grasp
