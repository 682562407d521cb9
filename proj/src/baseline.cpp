#include "grasp/baseline.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <cmath>
#include <cstdio>
#include <limits>

namespace grasp {

namespace {

std::string fmt(double v) {
  char buf[40];
  if (std::isinf(v)) return "inf";
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

StiffnessModel StiffnessModel::from_grasp(const AssembledGrasp& grasp) {
  StiffnessModel model;
  model.diagonal = VecX::Ones(3 * grasp.n);
  for (int i = 0; i < grasp.n; ++i) {
    model.diagonal[3 * i] = grasp.mu[i];
    model.diagonal[3 * i + 1] = grasp.mu[i];
  }
  return model;
}

WeightedPinv weighted_pseudoinverse(const MatX& G, const StiffnessModel& K) {
  if (K.diagonal.size() != G.cols())
    throw ContractError("weighted_pseudoinverse: K dimension does not match G columns");
  for (int i = 0; i < K.diagonal.size(); ++i)
    if (!(K.diagonal[i] > 0.0))
      throw ContractError("weighted_pseudoinverse: stiffness entries must be positive");

  const MatX S = G * K.diagonal.asDiagonal() * G.transpose();
  Eigen::SelfAdjointEigenSolver<MatX> eig(S);
  const VecX values = eig.eigenvalues();
  const double threshold = 1e-10 * std::max(1.0, values.cwiseAbs().maxCoeff());

  WeightedPinv out;
  VecX inv = VecX::Zero(values.size());
  for (int i = 0; i < values.size(); ++i) {
    if (values[i] > threshold) {
      inv[i] = 1.0 / values[i];
      ++out.rank;
    }
  }
  out.rank_deficient = out.rank < S.rows();
  const MatX S_pinv = eig.eigenvectors() * inv.asDiagonal() * eig.eigenvectors().transpose();
  out.G_RK = K.diagonal.asDiagonal() * G.transpose() * S_pinv;
  return out;
}

ForceDistribution distribute(const AssembledGrasp& grasp, const StiffnessModel& K, const Vec6& w,
                             const VecX& c_0) {
  if (c_0.size() != 3 * grasp.n)
    throw ContractError("distribute: c_0 dimension does not match contact count");
  const double scale = 1.0 + c_0.cwiseAbs().maxCoeff();
  if ((grasp.G * c_0).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw ContractError("distribute: c_0 is not in the nullspace of G");

  const WeightedPinv pinv = weighted_pseudoinverse(grasp.G, K);
  ForceDistribution dist;
  dist.c_p = -pinv.G_RK * w;
  dist.c_0 = c_0;
  dist.c = dist.c_p + dist.c_0;
  dist.cone_excess = cone_excess_ratios(grasp, dist.c);
  return dist;
}

MatX grasp_map_nullspace(const MatX& G) {
  Eigen::FullPivLU<MatX> lu(G);
  lu.setThreshold(1e-10);
  MatX kernel = lu.kernel();
  // FullPivLU returns a single zero column for a full-rank map.
  if (kernel.cols() == 1 && kernel.cwiseAbs().maxCoeff() == 0.0) return MatX::Zero(G.cols(), 0);
  Eigen::HouseholderQR<MatX> qr(kernel);
  return qr.householderQ() * MatX::Identity(kernel.rows(), kernel.cols());
}

std::vector<double> cone_excess_ratios(const AssembledGrasp& grasp, const VecX& c) {
  std::vector<double> excess(grasp.n, 0.0);
  for (int i = 0; i < grasp.n; ++i) {
    const double tangential = std::hypot(c[3 * i], c[3 * i + 1]);
    const double normal = c[3 * i + 2];
    if (normal <= 0.0) {
      excess[i] = (tangential == 0.0 && normal == 0.0)
                      ? 0.0
                      : std::numeric_limits<double>::infinity();
      continue;
    }
    const double limit = grasp.mu[i] * normal;
    if (tangential <= limit) {
      excess[i] = 0.0;
    } else if (limit == 0.0) {
      excess[i] = std::numeric_limits<double>::infinity();
    } else {
      excess[i] = tangential / limit - 1.0;
    }
  }
  return excess;
}

std::string comparison_csv(const AssembledGrasp& grasp, const ForceDistribution& baseline,
                           const VecX& prp_forces) {
  const std::vector<double> prp_excess = cone_excess_ratios(grasp, prp_forces);
  std::string out =
      "contact_id,baseline_t1_N,baseline_t2_N,baseline_n_N,baseline_cone_excess,"
      "prp_t1_N,prp_t2_N,prp_n_N,prp_cone_excess\n";
  for (int i = 0; i < grasp.n; ++i) {
    out += grasp.contact_ids[i];
    for (int k = 0; k < 3; ++k) out += "," + fmt(baseline.c[3 * i + k]);
    out += "," + fmt(baseline.cone_excess[i]);
    for (int k = 0; k < 3; ++k) out += "," + fmt(prp_forces[3 * i + k]);
    out += "," + fmt(prp_excess[i]);
    out += "\n";
  }
  return out;
}

}  // namespace grasp
