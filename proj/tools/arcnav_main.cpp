#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "arcnav/trial_harness.hpp"

namespace {

std::filesystem::path default_out_dir() {
  if (const char* env = std::getenv("ARCNAV_OUT")) return env;
  return "out";
}

std::vector<double> parse_list(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stod(item));
  }
  return out;
}

int cmd_run(const std::string& config_path, std::uint64_t seed, bool seed_set,
            const std::filesystem::path& out_dir, bool diag) {
  arcnav::TrialConfig cfg = arcnav::load_trial_config(config_path);
  if (seed_set) {
    cfg.seed = seed;
    if (auto* forest = std::get_if<arcnav::ForestParams>(&cfg.world)) {
      forest->seed = seed;
    }
  }
  std::filesystem::create_directories(out_dir);

  std::ofstream traj(out_dir / "trajectory.csv");
  if (!traj) throw std::runtime_error("cannot open " + (out_dir / "trajectory.csv").string());

  std::ofstream rounds;
  arcnav::TrialHooks hooks;
  if (diag) {
    rounds.open(out_dir / "rounds.jsonl");
    if (!rounds) throw std::runtime_error("cannot open " + (out_dir / "rounds.jsonl").string());
    hooks.on_round = [&rounds](double t, const arcnav::StepResult& step,
                               const arcnav::FrameChain::Snapshot&, const arcnav::Vec3&,
                               const arcnav::PlannerConfig&) {
      rounds << arcnav::decision_record(t, step.decision) << "\n";
    };
  }
  const arcnav::TrialResult r = arcnav::run_trial(cfg, diag ? &hooks : nullptr, &traj);

  nlohmann::ordered_json j;
  j["outcome"] = arcnav::outcome_name(r.outcome);
  j["flight_time"] = r.flight_time;
  j["path_length"] = r.path_length;
  j["max_speed"] = r.max_speed;
  j["avg_speed"] = r.avg_speed;
  j["control_effort"] = r.control_effort;
  j["final_goal_distance"] = r.final_goal_distance;
  j["decisions"] = r.decision_counts;
  j["plan_rounds"] = r.plan_timing.rounds;
  j["plan_time_mean_ms"] = r.plan_timing.mean_seconds() * 1e3;
  j["config_hash"] = arcnav::config_fingerprint(cfg);
  j["seed"] = cfg.seed;
  j["version"] = arcnav::kArcnavVersion;
  std::ofstream os(out_dir / "result.json");
  os << j.dump(2) << "\n";

  std::cout << "outcome: " << arcnav::outcome_name(r.outcome)
            << "  flight_time: " << r.flight_time
            << "  path_length: " << r.path_length
            << "  avg_speed: " << r.avg_speed << "\n"
            << "wrote " << (out_dir / "result.json").string() << " and trajectory.csv\n";
  return 0;
}

int cmd_batch(const std::string& config_path, const std::string& densities,
              const std::string& speeds, int trials, int jobs, std::uint64_t seed,
              bool seed_set, const std::filesystem::path& out_dir) {
  arcnav::BatchConfig cfg;
  if (!config_path.empty()) cfg.base = arcnav::load_trial_config(config_path);
  if (!densities.empty()) cfg.densities = parse_list(densities);
  if (!speeds.empty()) cfg.speeds = parse_list(speeds);
  cfg.trials_per_cell = trials;
  cfg.jobs = jobs;
  if (seed_set) cfg.base_seed = seed;

  const arcnav::BatchReport report = arcnav::run_batch(cfg);
  arcnav::write_report(report, out_dir);

  int successes = 0, collisions = 0, timeouts = 0, errors = 0;
  for (const auto& t : report.trials) {
    if (!t.error.empty()) ++errors;
    else if (t.outcome == arcnav::Outcome::Success) ++successes;
    else if (t.outcome == arcnav::Outcome::Collision) ++collisions;
    else ++timeouts;
  }
  std::cout << report.trials.size() << " trials: " << successes << " success, "
            << collisions << " collision, " << timeouts << " timeout, " << errors
            << " error\nplan_round mean "
            << report.plan_timing.mean_seconds() * 1e3 << " ms over "
            << report.plan_timing.rounds << " rounds\nwrote report to "
            << out_dir.string() << "\n";
  return 0;
}

int cmd_worldgen(double density, double width, double height, std::uint64_t seed,
                 const std::string& out) {
  arcnav::ForestParams p;
  p.density = density;
  p.region = {0.0, -height / 2.0, width, height / 2.0};
  p.seed = seed;
  const arcnav::ForestResult r = arcnav::gen_forest(p);
  arcnav::save_world(r.world, out);
  std::cout << "placed " << r.placed_count << "/" << r.target_count
            << " cylinders (realized density " << r.realized_density << ")";
  if (r.density_warning) std::cout << "  [warning: below 90% of requested]";
  std::cout << "\nwrote " << out << "\n";
  return 0;
}

int cmd_report(const std::filesystem::path& in_dir, const std::string& format) {
  const auto records = arcnav::load_results(in_dir / "results.jsonl");
  arcnav::write_tables(records, in_dir, format, 0, "");
  std::cout << "rebuilt " << format << " tables from " << records.size()
            << " trials in " << in_dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"forward-arc reactive planner: trials, batches, worlds, reports"};
  app.require_subcommand(1);

  std::string config_path, densities, speeds, format = "csv", world_out = "world.json";
  std::filesystem::path out_dir = default_out_dir(), in_dir = ".";
  std::uint64_t seed = 0;
  int trials = 50, jobs = 1;
  double density = 0.05, width = 80.0, height = 44.0;

  bool diag = false;
  auto* run = app.add_subcommand("run", "run a single trial");
  run->add_option("--config", config_path, "trial config (JSON)")->required();
  auto* run_seed = run->add_option("--seed", seed, "override the trial seed");
  run->add_option("--out", out_dir, "output directory");
  run->add_flag("--diag", diag, "write per-round planner diagnostics (rounds.jsonl)");

  auto* batch = app.add_subcommand("batch", "run a density x speed matrix");
  batch->add_option("--config", config_path, "base trial config (JSON)");
  batch->add_option("--densities", densities, "comma-separated obstacle densities");
  batch->add_option("--speeds", speeds, "comma-separated forward speeds");
  batch->add_option("--trials", trials, "trials per cell");
  batch->add_option("--jobs", jobs, "parallel trial workers");
  auto* batch_seed = batch->add_option("--seed", seed, "batch base seed");
  batch->add_option("--out", out_dir, "output directory");

  auto* worldgen = app.add_subcommand("worldgen", "generate a forest world file");
  worldgen->add_option("--density", density, "obstacles per square meter");
  worldgen->add_option("--width", width, "region width (m)");
  worldgen->add_option("--height", height, "region height (m)");
  worldgen->add_option("--seed", seed, "generation seed");
  worldgen->add_option("--out", world_out, "output world file");

  auto* report = app.add_subcommand("report", "rebuild tables from results.jsonl");
  report->add_option("--in", in_dir, "directory containing results.jsonl")->required();
  report->add_option("--format", format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, seed, !run_seed->empty(), out_dir, diag);
    if (batch->parsed())
      return cmd_batch(config_path, densities, speeds, trials, jobs, seed,
                       !batch_seed->empty(), out_dir);
    if (worldgen->parsed()) return cmd_worldgen(density, width, height, seed, world_out);
    if (report->parsed()) return cmd_report(in_dir, format);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
