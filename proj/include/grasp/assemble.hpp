#pragma once

#include <string>
#include <vector>

#include "grasp/scene.hpp"
#include "grasp/types.hpp"

namespace grasp {

/// Numeric form of a grasp. Immutable after assemble(); safe to share across
/// concurrent solver queries.
///
/// Conventions:
///  - contact forces are stacked per contact in contact-local coordinates
///    (t1, t2, n), normal third;
///  - object wrenches are 6-vectors [force; torque / L], so every wrench
///    norm is in newtons;
///  - G maps stacked local contact forces to the object wrench they apply;
///  - G^T maps an object displacement [v; theta * L] to contact-point
///    displacements in contact frames;
///  - J maps joint motion to contact-point hand motion in contact frames.
struct AssembledGrasp {
  MatX G;  // 6 x 3n
  MatX J;  // 3n x d
  MatX D;  // 3n x E, block diagonal; unit pyramid edges, contact-local
  MatX F;  // E x E = -Identity (beta >= 0 encodes cone membership)

  std::vector<Mat3> contact_frames;  // columns (t1, t2, n), object frame
  std::vector<int> edge_offset;      // start column of each contact's D block
  std::vector<int> edge_count;       // per contact
  std::vector<double> mu;            // per contact
  std::vector<std::string> contact_ids;

  int n = 0;      // contacts
  int E = 0;      // total pyramid edges
  int d = 0;      // joints
  double L = 1.0;

  /// n x E: (normal_rows * beta)(i) = c_{i,n}
  MatX normal_rows;
  /// n x 3n: selects the normal component of each stacked local 3-vector
  MatX normal_select;
};

/// Deterministic orthonormal right-handed triad (t1, t2, normal).
/// t1 is built by crossing the coordinate axis of the normal's
/// smallest-magnitude component (ties toward the higher index) with the
/// normal, then normalizing.
Mat3 build_contact_frame(const Vec3& normal);

/// Friction pyramid edges in the object frame, 3 x edge_count. Column k is
/// normalize(n + mu (cos(2 pi k / m) t1 + sin(2 pi k / m) t2)). Any
/// nonnegative combination of columns lies inside the linearized cone.
MatX build_friction_pyramid(const Contact& contact, const Mat3& frame);

/// Build G, J, D, F and contact frames for a validated scene.
AssembledGrasp assemble(const GraspScene& scene);

}  // namespace grasp
