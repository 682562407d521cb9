#pragma once

#include <string>
#include <vector>

#include "grasp/assemble.hpp"

namespace grasp {

/// Diagonal grasp stiffness: unity normal stiffness, tangential stiffness
/// equal to the friction coefficient of each contact. Joints are treated as
/// infinitely stiff.
struct StiffnessModel {
  VecX diagonal;  // 3n entries, contact-local (t1, t2, n) order

  static StiffnessModel from_grasp(const AssembledGrasp& grasp);
};

struct WeightedPinv {
  MatX G_RK;  // 3n x 6, K-weighted right inverse restricted to image(G)
  int rank = 0;
  bool rank_deficient = false;  // pseudo-inversion crossed the eigen threshold
};

/// G_RK = K G^T (G K G^T)^+ with eigен threshold 1e-10; G * G_RK acts as the
/// identity on the image of G.
WeightedPinv weighted_pseudoinverse(const MatX& G, const StiffnessModel& K);

struct ForceDistribution {
  VecX c_p;  // particular forces, G c_p = -w
  VecX c_0;  // homogeneous (internal) forces, G c_0 = 0
  VecX c;    // c_p + c_0
  std::vector<double> cone_excess;  // per contact, max(0, |tangential|/(mu normal) - 1)
};

/// Linear-compliance force distribution: c = -G_RK w + c_0. The homogeneous
/// term must lie in the nullspace of G (checked).
ForceDistribution distribute(const AssembledGrasp& grasp, const StiffnessModel& K, const Vec6& w,
                             const VecX& c_0);

/// Orthonormal basis of null(G), one column per nullspace direction.
MatX grasp_map_nullspace(const MatX& G);

/// Friction-cone excess ratios of stacked local contact forces; infinity for
/// a pulling normal component.
std::vector<double> cone_excess_ratios(const AssembledGrasp& grasp, const VecX& c);

/// Per-contact comparison table (CSV) of baseline vs passive-response forces.
std::string comparison_csv(const AssembledGrasp& grasp, const ForceDistribution& baseline,
                           const VecX& prp_forces);

}  // namespace grasp
