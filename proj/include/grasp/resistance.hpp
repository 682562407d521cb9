#pragma once

#include <optional>
#include <string>
#include <vector>

#include "grasp/iterate.hpp"

namespace grasp {

/// Preload itself admits no passive equilibrium (unstable at magnitude 0).
struct PreloadError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DirectionQuery {
  Vec6 direction = Vec6::Zero();  // unit, scaled wrench space
  int steps = 20;                 // bisection halvings
  double upper = 1e3;             // magnitude cap [N]
};

struct MaxWrenchResult {
  bool unbounded = false;  // stable at the upper cap
  double magnitude = 0.0;  // largest stable midpoint [N]
  double cap = 0.0;
  std::vector<std::pair<double, Stability>> search_log;
  int max_alg3_iterations = 0;  // worst iteration count across probes
};

struct RegionSample {
  enum class Kind { Finite, Unbounded, Gap };
  double angle_rad = 0.0;
  Kind kind = Kind::Gap;
  double magnitude = 0.0;                // [N], valid for Finite
  std::optional<double> normalized;      // set by normalize_region
  std::string gap_reason;
};

struct ResistanceRegion {
  Vec6 basis1 = Vec6::Zero();
  Vec6 basis2 = Vec6::Zero();
  std::vector<RegionSample> samples;
  std::optional<double> reference_value;  // magnitude used by normalize_region
};

/// Bisection for the maximum resistible magnitude along a direction:
/// stability at each probe decided by the iterative passive response loop.
/// Throws PreloadError if the zero-magnitude solve is not stable.
MaxWrenchResult max_resistible(const AssembledGrasp& grasp, const Actuation& commands,
                               const DirectionQuery& query, const IterationConfig& config = {});

/// Sample n_dirs equally spaced directions in the plane spanned by the
/// orthonormal pair (basis1, basis2). Per-direction failures become Gap
/// samples; the sweep never aborts. jobs <= 0 uses hardware parallelism;
/// output is ordered by angle index regardless of jobs. query_shape carries
/// the per-direction bisection steps and cap (its direction is ignored).
ResistanceRegion sweep_plane(const AssembledGrasp& grasp, const Actuation& commands,
                             const Vec6& basis1, const Vec6& basis2, int n_dirs,
                             const IterationConfig& config = {}, int jobs = 1,
                             const DirectionQuery& query_shape = {});

/// Divide finite magnitudes by the value at the reference direction (which
/// must be a finite sample of the region). Unbounded samples are preserved.
ResistanceRegion normalize_region(ResistanceRegion region, const Vec6& reference_direction);

/// CSV export: angle_deg, magnitude_N, unbounded_flag, normalized_value.
std::string region_to_csv(const ResistanceRegion& region);

}  // namespace grasp
