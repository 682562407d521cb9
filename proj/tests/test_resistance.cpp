#include "grasp/resistance.hpp"

#include "doctest.h"
#include "fixtures.hpp"
#include "grasp/assemble.hpp"

using namespace grasp;
using fixtures::unit6;

namespace {

IterationConfig fast_config() {
  IterationConfig config;
  config.gamma = 1.0;
  return config;
}

DirectionQuery query_along(const Vec6& direction, int steps = 20, double upper = 1e3) {
  DirectionQuery query;
  query.direction = direction.normalized();
  query.steps = steps;
  query.upper = upper;
  return query;
}

}  // namespace

TEST_CASE("downward push onto the proximal pads is unbounded without preload") {
  const GraspScene scene = fixtures::envelope(0.0);
  const AssembledGrasp grasp = assemble(scene);
  const MaxWrenchResult res =
      max_resistible(grasp, scene.actuation, query_along(-unit6(1)), fast_config());
  CHECK(res.unbounded);
  CHECK(res.cap == doctest::Approx(1e3));
}

TEST_CASE("pull out of the preloaded pinch hits the Coulomb bound") {
  const double t = 0.045;
  const GraspScene scene = fixtures::envelope(t);
  const AssembledGrasp grasp = assemble(scene);
  const MaxWrenchResult res =
      max_resistible(grasp, scene.actuation, query_along(unit6(1)), fast_config());
  REQUIRE(!res.unbounded);
  const double coulomb = 2.0 * 0.5 * fixtures::envelope_pinch_force(t);
  CHECK(res.magnitude / coulomb >= 0.8);
  CHECK(res.magnitude / coulomb <= 1.0);
}

TEST_CASE("bisection bracketing holds on the search log") {
  const GraspScene scene = fixtures::envelope(0.045);
  const AssembledGrasp grasp = assemble(scene);
  const DirectionQuery query = query_along(unit6(1), 12, 10.0);
  const MaxWrenchResult res = max_resistible(grasp, scene.actuation, query, fast_config());
  REQUIRE(!res.unbounded);
  REQUIRE(res.magnitude > 0.0);
  bool stable_at_result = false;
  double tightest_unstable = query.upper;
  for (const auto& [m, verdict] : res.search_log) {
    if (verdict == Stability::Stable && m == res.magnitude) stable_at_result = true;
    if (verdict != Stability::Stable) tightest_unstable = std::min(tightest_unstable, m);
  }
  CHECK(stable_at_result);
  CHECK(tightest_unstable <=
        res.magnitude + std::pow(2.0, 1 - query.steps) * query.upper + 1e-12);
}

TEST_CASE("stability is monotone along a direction") {
  const GraspScene scene = fixtures::envelope(0.045);
  const AssembledGrasp grasp = assemble(scene);
  const Vec6 dir = unit6(1);
  for (double m : {0.2, 0.4, 0.8}) {
    const StabilityVerdict at_m =
        solve_iterative_prp(grasp, scene.actuation, m * dir, fast_config());
    const StabilityVerdict at_half =
        solve_iterative_prp(grasp, scene.actuation, 0.5 * m * dir, fast_config());
    if (at_m.status == Stability::Stable) CHECK(at_half.status == Stability::Stable);
  }
}

TEST_CASE("unstable preload raises a preload error") {
  const GraspScene scene = fixtures::single_joint(0.05, 0.5, /*closing_sign_ok=*/false);
  const AssembledGrasp grasp = assemble(scene);
  CHECK_THROWS_AS(max_resistible(grasp, scene.actuation, query_along(unit6(0)), fast_config()),
                  PreloadError);
}

TEST_CASE("four-direction sweep reproduces the individual axis queries") {
  const GraspScene scene = fixtures::envelope(0.045);
  const AssembledGrasp grasp = assemble(scene);
  const IterationConfig config = fast_config();
  DirectionQuery shape;
  shape.upper = 10.0;  // keep every probe away from stall knife edges

  ResistanceRegion region =
      sweep_plane(grasp, scene.actuation, unit6(0), unit6(1), 4, config, 1, shape);
  REQUIRE(region.samples.size() == 4);

  const Vec6 axes[] = {unit6(0), unit6(1), -unit6(0), -unit6(1)};
  for (int k = 0; k < 4; ++k) {
    INFO("direction index ", k);
    DirectionQuery query = shape;
    query.direction = axes[k].normalized();
    const MaxWrenchResult res = max_resistible(grasp, scene.actuation, query, config);
    if (res.unbounded) {
      CHECK(region.samples[k].kind == RegionSample::Kind::Unbounded);
    } else {
      REQUIRE(region.samples[k].kind == RegionSample::Kind::Finite);
      CHECK(region.samples[k].magnitude == doctest::Approx(res.magnitude).epsilon(1e-12));
    }
  }
}

TEST_CASE("sweep of the symmetric grasp is mirror-symmetric in the plane") {
  const GraspScene scene = fixtures::envelope(0.045);
  const AssembledGrasp grasp = assemble(scene);
  IterationConfig config = fast_config();
  DirectionQuery shape;
  shape.upper = 10.0;
  const ResistanceRegion region =
      sweep_plane(grasp, scene.actuation, unit6(0), unit6(1), 8, config, 2, shape);
  // Mirror pairs about the Y axis: angle th <-> pi - th.
  const std::pair<int, int> pairs[] = {{1, 3}, {0, 4}, {7, 5}};
  for (const auto& [a, b] : pairs) {
    REQUIRE(region.samples[a].kind != RegionSample::Kind::Gap);
    CHECK(region.samples[a].kind == region.samples[b].kind);
    if (region.samples[a].kind == RegionSample::Kind::Finite) {
      const double ra = region.samples[a].magnitude;
      const double rb = region.samples[b].magnitude;
      CHECK(std::abs(ra - rb) <= 0.05 * std::max(ra, rb));
    }
  }
}

TEST_CASE("normalize_region") {
  ResistanceRegion region;
  region.basis1 = unit6(0);
  region.basis2 = unit6(1);
  region.samples.resize(4);
  region.samples[0] = {0.0, RegionSample::Kind::Finite, 8.6, std::nullopt, ""};
  region.samples[1] = {M_PI / 2, RegionSample::Kind::Finite, 4.3, std::nullopt, ""};
  region.samples[2] = {M_PI, RegionSample::Kind::Unbounded, 1e3, std::nullopt, ""};
  region.samples[3] = {3 * M_PI / 2, RegionSample::Kind::Finite, 2.15, std::nullopt, ""};

  SUBCASE("reference becomes exactly one") {
    const ResistanceRegion normalized = normalize_region(region, unit6(1));
    CHECK(normalized.samples[1].normalized.value() == 1.0);
    CHECK(normalized.samples[0].normalized.value() == doctest::Approx(2.0));
    CHECK(normalized.samples[3].normalized.value() == doctest::Approx(0.5));
    CHECK(normalized.samples[2].kind == RegionSample::Kind::Unbounded);
    CHECK(!normalized.samples[2].normalized.has_value());
  }

  SUBCASE("unbounded reference is an error") {
    CHECK_THROWS_AS(normalize_region(region, -unit6(0)), ContractError);
  }

  SUBCASE("missing reference is an error") {
    CHECK_THROWS_AS(normalize_region(region, unit6(2)), ContractError);
  }
}

TEST_CASE("normalized shape is preload-invariant on friction-bound directions") {
  const GraspScene small = fixtures::envelope(0.045);
  const GraspScene big = fixtures::envelope(0.090);
  const IterationConfig config = fast_config();
  DirectionQuery up = query_along(unit6(1), 16, 20.0);
  DirectionQuery diag = query_along((unit6(0) + unit6(1)).normalized(), 16, 20.0);

  const AssembledGrasp g_small = assemble(small);
  const AssembledGrasp g_big = assemble(big);
  const double up_small = max_resistible(g_small, small.actuation, up, config).magnitude;
  const double up_big = max_resistible(g_big, big.actuation, up, config).magnitude;
  const MaxWrenchResult d_small = max_resistible(g_small, small.actuation, diag, config);
  const MaxWrenchResult d_big = max_resistible(g_big, big.actuation, diag, config);
  CHECK(up_big == doctest::Approx(2.0 * up_small).epsilon(0.02));
  if (!d_small.unbounded && !d_big.unbounded) {
    CHECK(d_big.magnitude / up_big ==
          doctest::Approx(d_small.magnitude / up_small).epsilon(0.05));
  }
}

TEST_CASE("sweep output is deterministic and jobs-independent") {
  const GraspScene scene = fixtures::envelope(0.045);
  const AssembledGrasp grasp = assemble(scene);
  IterationConfig config = fast_config();
  const ResistanceRegion serial =
      sweep_plane(grasp, scene.actuation, unit6(0), unit6(1), 6, config, 1);
  const ResistanceRegion parallel =
      sweep_plane(grasp, scene.actuation, unit6(0), unit6(1), 6, config, 3);
  CHECK(region_to_csv(serial) == region_to_csv(parallel));
}
