// graspstab: passive grasp stability analysis from declarative scene files.
//
// Subcommands: solve, max-wrench, sweep, baseline-compare. All outputs are
// deterministic for identical inputs; CSV headers carry units.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "grasp/assemble.hpp"
#include "grasp/baseline.hpp"
#include "grasp/iterate.hpp"
#include "grasp/resistance.hpp"
#include "json.hpp"

namespace {

using nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitInvalidInput = 2;
constexpr int kExitPreload = 3;
constexpr int kExitNonconverged = 4;

struct CommonOptions {
  std::string scene_path;
  double gamma = 1e-2;
  double epsilon = 1e-3;
  int max_iterations = 200;
  double kappa = 1e3;
  int edges = 0;  // 0 keeps the per-contact scene values
  std::string out_path;
  std::string format = "json";
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw grasp::SceneError("cannot open scene file '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_output(const CommonOptions& options, const std::string& text) {
  if (options.out_path.empty()) {
    std::fputs(text.c_str(), stdout);
    if (!text.empty() && text.back() != '\n') std::fputc('\n', stdout);
    return;
  }
  std::ofstream out(options.out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write output file '" + options.out_path + "'");
  out << text;
}

std::vector<double> parse_numbers(const std::string& text, const std::string& what) {
  std::vector<double> values;
  std::stringstream stream(text);
  std::string token;
  while (std::getline(stream, token, ',')) {
    try {
      values.push_back(std::stod(token));
    } catch (...) {
      throw grasp::SceneError(what + ": '" + token + "' is not a number");
    }
  }
  return values;
}

// Physical wrench (N, N·m) to the solver's L-scaled form.
grasp::Vec6 parse_wrench(const std::string& text, double L) {
  const std::vector<double> v = parse_numbers(text, "wrench");
  if (v.size() != 3 && v.size() != 6)
    throw grasp::SceneError("wrench: expected 3 or 6 comma-separated numbers");
  grasp::Vec6 w = grasp::Vec6::Zero();
  for (size_t i = 0; i < v.size(); ++i) w[static_cast<int>(i)] = v[i];
  w.tail<3>() /= L;
  return w;
}

struct LoadedScene {
  grasp::GraspScene scene;
  grasp::AssembledGrasp grasp;
};

LoadedScene load(const CommonOptions& options) {
  LoadedScene loaded;
  loaded.scene = grasp::parse_scene(read_file(options.scene_path));
  if (options.edges > 0)
    for (auto& contact : loaded.scene.contacts) contact.edge_count = options.edges;
  loaded.grasp = grasp::assemble(loaded.scene);
  return loaded;
}

grasp::IterationConfig iteration_config(const CommonOptions& options) {
  grasp::IterationConfig config;
  config.gamma = options.gamma;
  config.epsilon = options.epsilon;
  config.max_iterations = options.max_iterations;
  config.solver.kappa = options.kappa;
  return config;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

int run_solve(const CommonOptions& options, const std::string& wrench_text) {
  const LoadedScene loaded = load(options);
  const grasp::Vec6 w = parse_wrench(wrench_text, loaded.grasp.L);
  const grasp::StabilityVerdict verdict = grasp::solve_iterative_prp(
      loaded.grasp, loaded.scene.actuation, w, iteration_config(options));

  if (options.format == "csv") {
    write_output(options, grasp::trace_to_csv(verdict.trace));
  } else {
    ordered_json out;
    out["verdict"] = grasp::to_string(verdict.status);
    out["residual_N"] = verdict.residual;
    out["stable_threshold_N"] = grasp::kStableResidual;
    out["iterations"] = verdict.iterations;
    if (!verdict.reason.empty()) out["reason"] = verdict.reason;
    ordered_json trace = ordered_json::array();
    for (const grasp::TraceStep& step : verdict.trace.steps)
      trace.push_back({{"iter", step.iter},
                       {"s_m_per_N", step.s},
                       {"residual_N", step.r.norm()},
                       {"objective_N2", step.objective},
                       {"binaries", step.binaries}});
    out["trace"] = trace;
    const grasp::EnergyReport audit =
        grasp::energy_audit(verdict.trace, loaded.grasp, loaded.scene.actuation, w);
    out["energy_audit"] = {{"external_work_J", audit.external_work},
                           {"actuator_work_J", audit.actuator_work},
                           {"spring_energy_J", audit.spring_energy},
                           {"friction_dissipation_lb_J", audit.friction_dissipation},
                           {"conservation_violated", audit.conservation_violated}};
    if (!verdict.trace.final_solution.warnings.empty())
      out["warnings"] = verdict.trace.final_solution.warnings;
    write_output(options, out.dump(2));
  }
  std::fprintf(stderr, "verdict: %s (residual %s N after %d iterations)\n",
               grasp::to_string(verdict.status), fmt(verdict.residual).c_str(),
               verdict.iterations);
  return verdict.status == grasp::Stability::Nonconverged ? kExitNonconverged : kExitOk;
}

int run_max_wrench(const CommonOptions& options, const std::string& direction_text, int steps,
                   double upper) {
  const LoadedScene loaded = load(options);
  grasp::DirectionQuery query;
  query.direction = parse_wrench(direction_text, loaded.grasp.L).normalized();
  query.steps = steps;
  query.upper = upper;
  const grasp::MaxWrenchResult res = grasp::max_resistible(
      loaded.grasp, loaded.scene.actuation, query, iteration_config(options));

  ordered_json out;
  out["direction"] = std::vector<double>(query.direction.data(), query.direction.data() + 6);
  if (res.unbounded) {
    out["result"] = "unbounded (cap " + fmt(res.cap) + " N)";
  } else {
    out["result"] = "finite";
    out["magnitude_N"] = res.magnitude;
  }
  ordered_json log = ordered_json::array();
  for (const auto& [m, verdict] : res.search_log)
    log.push_back({{"magnitude_N", m}, {"verdict", grasp::to_string(verdict)}});
  out["search_log"] = log;
  write_output(options, out.dump(2));
  if (res.unbounded)
    std::fprintf(stderr, "max resistible wrench: unbounded (cap %s N)\n", fmt(res.cap).c_str());
  else
    std::fprintf(stderr, "max resistible wrench: %s N\n", fmt(res.magnitude).c_str());
  return kExitOk;
}

grasp::Vec6 plane_axis(const std::string& token) {
  grasp::Vec6 axis = grasp::Vec6::Zero();
  if (token == "x") axis[0] = 1;
  else if (token == "y") axis[1] = 1;
  else if (token == "z") axis[2] = 1;
  else if (token == "tx") axis[3] = 1;
  else if (token == "ty") axis[4] = 1;
  else if (token == "tz") axis[5] = 1;
  else throw grasp::SceneError("plane: unknown axis '" + token + "'");
  return axis;
}

int run_sweep(const CommonOptions& options, const std::string& plane, int n_dirs, int jobs,
              int steps, double upper, const std::string& normalize_ref) {
  const LoadedScene loaded = load(options);
  std::string first = plane.substr(0, plane.find('-'));
  std::string second = plane.substr(plane.find('-') + 1);
  if (plane.find('-') == std::string::npos) {
    if (plane.size() != 2) throw grasp::SceneError("plane: expected e.g. xy or tx-ty");
    first = plane.substr(0, 1);
    second = plane.substr(1, 1);
  }
  const grasp::Vec6 b1 = plane_axis(first);
  const grasp::Vec6 b2 = plane_axis(second);

  grasp::IterationConfig config = iteration_config(options);
  grasp::DirectionQuery shape;
  shape.steps = steps;
  shape.upper = upper;
  grasp::ResistanceRegion region = grasp::sweep_plane(
      loaded.grasp, loaded.scene.actuation, b1, b2, n_dirs, config, jobs, shape);

  if (!normalize_ref.empty()) {
    const grasp::Vec6 ref = parse_wrench(normalize_ref, loaded.grasp.L);
    region = grasp::normalize_region(region, ref);
  }

  write_output(options, grasp::region_to_csv(region));

  int gaps = 0;
  for (const auto& sample : region.samples)
    if (sample.kind == grasp::RegionSample::Kind::Gap) ++gaps;
  if (gaps == n_dirs) {
    std::fprintf(stderr, "sweep produced no samples: %s\n",
                 region.samples.front().gap_reason.c_str());
    return region.samples.front().gap_reason.find("preload") != std::string::npos
               ? kExitPreload
               : kExitInvalidInput;
  }
  if (gaps > 0) std::fprintf(stderr, "sweep finished with %d gap(s)\n", gaps);
  return kExitOk;
}

int run_baseline_compare(const CommonOptions& options, const std::string& wrench_text) {
  const LoadedScene loaded = load(options);
  const grasp::Vec6 w = parse_wrench(wrench_text, loaded.grasp.L);
  const grasp::IterationConfig config = iteration_config(options);

  const grasp::StabilityVerdict preload = grasp::solve_iterative_prp(
      loaded.grasp, loaded.scene.actuation, grasp::Vec6::Zero(), config);
  if (preload.status != grasp::Stability::Stable)
    throw grasp::PreloadError("preload not in equilibrium");
  const grasp::VecX c_0 = preload.trace.final_solution.contact_forces;

  const grasp::ForceDistribution dist = grasp::distribute(
      loaded.grasp, grasp::StiffnessModel::from_grasp(loaded.grasp), w, c_0);

  const grasp::StabilityVerdict verdict =
      grasp::solve_iterative_prp(loaded.grasp, loaded.scene.actuation, w, config);
  grasp::VecX prp_forces = grasp::VecX::Zero(3 * loaded.grasp.n);
  if (verdict.status == grasp::Stability::Stable)
    prp_forces = verdict.trace.final_solution.contact_forces;

  write_output(options, grasp::comparison_csv(loaded.grasp, dist, prp_forces));
  std::fprintf(stderr, "passive verdict: %s\n", grasp::to_string(verdict.status));
  return verdict.status == grasp::Stability::Nonconverged ? kExitNonconverged : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Passive grasp stability analysis"};
  app.require_subcommand(1);

  CommonOptions options;
  std::string wrench_text = "0,0,0";
  std::string direction_text;
  std::string plane = "xy";
  std::string normalize_ref;
  int steps = 20;
  double upper = 1e3;
  int n_dirs = 36;
  int jobs = 0;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("scene", options.scene_path, "scene file (JSON)")->required();
    cmd->add_option("--gamma", options.gamma, "max step scalar per iteration [m/N]");
    cmd->add_option("--epsilon", options.epsilon, "convergence threshold [N]");
    cmd->add_option("--max-iters", options.max_iterations, "iteration cap");
    cmd->add_option("--kappa", options.kappa, "big-M scale factor");
    cmd->add_option("--edges", options.edges, "override friction pyramid edge count");
    cmd->add_option("--out", options.out_path, "output file (default: stdout)");
  };

  CLI::App* solve = app.add_subcommand("solve", "stability verdict for one wrench");
  add_common(solve);
  solve->add_option("--wrench", wrench_text, "fx,fy,fz[,tx,ty,tz] (N, N·m)");
  solve->add_option("--format", options.format, "json | csv (csv emits the trace)");

  CLI::App* max_wrench =
      app.add_subcommand("max-wrench", "bisection for the largest resistible magnitude");
  add_common(max_wrench);
  max_wrench->add_option("--direction", direction_text, "fx,fy,fz[,tx,ty,tz] direction")
      ->required();
  max_wrench->add_option("--steps", steps, "bisection steps");
  max_wrench->add_option("--upper", upper, "magnitude cap [N]");

  CLI::App* sweep = app.add_subcommand("sweep", "resistance region over a plane of directions");
  add_common(sweep);
  sweep->add_option("--plane", plane, "xy | xz | yz | tx-ty | ... (force/torque axes)");
  sweep->add_option("--dirs", n_dirs, "number of sweep directions");
  sweep->add_option("--steps", steps, "bisection steps");
  sweep->add_option("--upper", upper, "magnitude cap [N]");
  sweep->add_option("--jobs", jobs, "parallel queries (0 = hardware)");
  sweep->add_option("--normalize-ref", normalize_ref,
                    "normalize by the magnitude along this direction, e.g. 0,1,0");

  CLI::App* baseline =
      app.add_subcommand("baseline-compare", "linear compliance vs passive response");
  add_common(baseline);
  baseline->add_option("--wrench", wrench_text, "fx,fy,fz[,tx,ty,tz] (N, N·m)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitInvalidInput;
  }

  try {
    if (solve->parsed()) return run_solve(options, wrench_text);
    if (max_wrench->parsed()) return run_max_wrench(options, direction_text, steps, upper);
    if (sweep->parsed())
      return run_sweep(options, plane, n_dirs, jobs, steps, upper, normalize_ref);
    if (baseline->parsed()) return run_baseline_compare(options, wrench_text);
  } catch (const grasp::PreloadError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitPreload;
  } catch (const grasp::SceneError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInvalidInput;
  } catch (const grasp::ContractError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInvalidInput;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInvalidInput;
  }
  return kExitInvalidInput;
}
