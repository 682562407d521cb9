#include "grasp/resistance.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <thread>

namespace grasp {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

MaxWrenchResult max_resistible(const AssembledGrasp& grasp, const Actuation& commands,
                               const DirectionQuery& query, const IterationConfig& config) {
  if (std::abs(query.direction.norm() - 1.0) > 1e-9)
    throw ContractError("max_resistible: direction must be a unit vector");
  if (query.steps < 1 || !(query.upper > 0.0))
    throw ContractError("max_resistible: steps must be >= 1 and upper > 0");

  MaxWrenchResult result;
  result.cap = query.upper;

  auto probe = [&](double magnitude) {
    const StabilityVerdict verdict =
        solve_iterative_prp(grasp, commands, magnitude * query.direction, config);
    result.search_log.emplace_back(magnitude, verdict.status);
    result.max_alg3_iterations = std::max(result.max_alg3_iterations, verdict.iterations);
    return verdict.stable();
  };

  if (!probe(0.0))
    throw PreloadError("preload not in equilibrium: unstable at zero magnitude");
  if (probe(query.upper)) {
    result.unbounded = true;
    result.magnitude = query.upper;
    return result;
  }

  double lo = 0.0, hi = query.upper;
  for (int step = 0; step < query.steps; ++step) {
    const double mid = 0.5 * (lo + hi);
    if (probe(mid))
      lo = mid;
    else
      hi = mid;
  }
  result.magnitude = lo;
  return result;
}

ResistanceRegion sweep_plane(const AssembledGrasp& grasp, const Actuation& commands,
                             const Vec6& basis1, const Vec6& basis2, int n_dirs,
                             const IterationConfig& config, int jobs,
                             const DirectionQuery& query_shape) {
  if (std::abs(basis1.norm() - 1.0) > 1e-9 || std::abs(basis2.norm() - 1.0) > 1e-9 ||
      std::abs(basis1.dot(basis2)) > 1e-9)
    throw ContractError("sweep_plane: basis must be orthonormal");
  if (n_dirs < 1) throw ContractError("sweep_plane: n_dirs must be >= 1");

  ResistanceRegion region;
  region.basis1 = basis1;
  region.basis2 = basis2;
  region.samples.resize(n_dirs);

  auto run_one = [&](int k) {
    RegionSample sample;
    sample.angle_rad = 2.0 * M_PI * k / n_dirs;
    Vec6 dir = std::cos(sample.angle_rad) * basis1 + std::sin(sample.angle_rad) * basis2;
    // Snap quarter-turn roundoff so axis-aligned sweep directions match
    // direct axis queries exactly.
    for (int i = 0; i < 6; ++i)
      if (std::abs(dir[i]) < 1e-12) dir[i] = 0.0;
    DirectionQuery query = query_shape;
    query.direction = dir.normalized();
    try {
      const MaxWrenchResult res = max_resistible(grasp, commands, query, config);
      sample.kind = res.unbounded ? RegionSample::Kind::Unbounded : RegionSample::Kind::Finite;
      sample.magnitude = res.unbounded ? res.cap : res.magnitude;
    } catch (const std::exception& e) {
      sample.kind = RegionSample::Kind::Gap;
      sample.gap_reason = e.what();
    }
    return sample;
  };

  int workers = jobs > 0 ? jobs : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::max(1, std::min(workers, n_dirs));
  if (workers == 1) {
    for (int k = 0; k < n_dirs; ++k) region.samples[k] = run_one(k);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t)
      pool.emplace_back([&] {
        for (int k = next.fetch_add(1); k < n_dirs; k = next.fetch_add(1))
          region.samples[k] = run_one(k);
      });
    for (auto& t : pool) t.join();
  }
  return region;
}

ResistanceRegion normalize_region(ResistanceRegion region, const Vec6& reference_direction) {
  if (!(reference_direction.norm() > 0.0))
    throw ContractError("normalize_region: reference direction must be nonzero");
  const Vec6 ref = reference_direction.normalized();

  const RegionSample* reference = nullptr;
  for (const RegionSample& sample : region.samples) {
    const Vec6 dir = (std::cos(sample.angle_rad) * region.basis1 +
                      std::sin(sample.angle_rad) * region.basis2)
                         .normalized();
    if ((dir - ref).norm() < 1e-9) {
      reference = &sample;
      break;
    }
  }
  if (reference == nullptr)
    throw ContractError("normalize_region: reference direction is not a sample of the region");
  if (reference->kind == RegionSample::Kind::Unbounded)
    throw ContractError("normalize_region: reference direction is unbounded");
  if (reference->kind == RegionSample::Kind::Gap || !(reference->magnitude > 0.0))
    throw ContractError("normalize_region: reference direction has no finite magnitude");

  region.reference_value = reference->magnitude;
  for (RegionSample& sample : region.samples) {
    if (sample.kind == RegionSample::Kind::Finite)
      sample.normalized = sample.magnitude / *region.reference_value;
    else
      sample.normalized.reset();  // Unbounded stays unbounded, gaps stay gaps
  }
  return region;
}

std::string region_to_csv(const ResistanceRegion& region) {
  std::string out = "angle_deg,magnitude_N,unbounded_flag,normalized_value\n";
  for (const RegionSample& sample : region.samples) {
    out += fmt(sample.angle_rad * 180.0 / M_PI) + ",";
    if (sample.kind == RegionSample::Kind::Gap) {
      out += ",,"
             "\n";
      continue;
    }
    out += fmt(sample.magnitude) + ",";
    out += sample.kind == RegionSample::Kind::Unbounded ? "1," : "0,";
    if (sample.normalized) out += fmt(*sample.normalized);
    out += "\n";
  }
  return out;
}

}  // namespace grasp
