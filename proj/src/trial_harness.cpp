#include "arcnav/trial_harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace arcnav {

namespace {

using json = nlohmann::ordered_json;

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

int exact_divisor(double num, double den, const char* what) {
  const double ratio = num / den;
  const int n = static_cast<int>(std::lround(ratio));
  if (n < 1 || std::abs(ratio - n) > 1e-9) {
    throw std::invalid_argument(std::string("rates: ") + what +
                                " must divide physics_hz evenly");
  }
  return n;
}

std::shared_ptr<const World> resolve_world(const TrialConfig& cfg,
                                           double* realized_density) {
  if (realized_density) *realized_density = 0.0;
  if (const auto* path = std::get_if<std::filesystem::path>(&cfg.world)) {
    return std::make_shared<const World>(load_world(*path));
  }
  if (const auto* world = std::get_if<std::shared_ptr<const World>>(&cfg.world)) {
    return *world;
  }
  ForestParams params = std::get<ForestParams>(cfg.world);
  if (params.clear_zones.empty()) {
    params.clear_zones = {{cfg.start.head<2>(), 3.0}, {cfg.goal.head<2>(), 3.0}};
  }
  ForestResult result = gen_forest(params);
  if (realized_density) *realized_density = result.realized_density;
  return std::make_shared<const World>(std::move(result.world));
}

const char* decision_name(DecisionKind k) {
  switch (k) {
    case DecisionKind::Commit: return "Commit";
    case DecisionKind::ExecuteStop: return "ExecuteStop";
    case DecisionKind::GoalReached: return "GoalReached";
  }
  return "?";
}

}  // namespace

const char* outcome_name(Outcome o) {
  switch (o) {
    case Outcome::Success: return "Success";
    case Outcome::Collision: return "Collision";
    case Outcome::Timeout: return "Timeout";
  }
  return "?";
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t cell, std::uint64_t trial) {
  std::uint64_t x = base;
  std::uint64_t h = splitmix64(x);
  x ^= (cell + 1) * 0x9E3779B97F4A7C15ULL;
  h ^= splitmix64(x);
  x ^= (trial + 1) * 0xC2B2AE3D27D4EB4FULL;
  h ^= splitmix64(x);
  return h ? h : 1;
}

TrialResult run_trial(const TrialConfig& cfg, const TrialHooks* hooks,
                      std::ostream* trajectory_csv) {
  cfg.camera.validate();

  PlannerConfig planner = cfg.planner;
  planner.t_p = 1.0 / cfg.rates.planner_hz;
  if (cfg.auto_cap_T && planner.v_x > 0.0) {
    planner.T = std::min(planner.T, 0.9 * cfg.camera.d_max / planner.v_x);
  }
  planner.delta_t = std::min(planner.delta_t, planner.T);
  planner.validate();
  if (cfg.robot_radius <= 0.0) throw std::invalid_argument("robot_radius <= 0");
  if (cfg.history_duration <= 0.0) throw std::invalid_argument("history_duration <= 0");

  double realized_density = 0.0;
  const std::shared_ptr<const World> world = resolve_world(cfg, &realized_density);

  auto inside = [&](const Vec3& p) {
    return (p.array() >= world->bounds.min.array()).all() &&
           (p.array() <= world->bounds.max.array()).all();
  };
  if (!inside(cfg.start) || !inside(cfg.goal))
    throw std::invalid_argument("start/goal outside world bounds");
  if (gt_collides(*world, cfg.start, cfg.robot_radius))
    throw std::invalid_argument("start position is not collision-free");
  if (gt_collides(*world, cfg.goal, cfg.robot_radius))
    throw std::invalid_argument("goal position is not collision-free");

  const double dist = (cfg.goal - cfg.start).norm();
  const double time_limit =
      cfg.time_limit > 0.0 ? cfg.time_limit
                           : 2.5 * dist / std::max(planner.v_x, 0.1);

  const double dt = 1.0 / cfg.rates.physics_hz;
  const int cam_every = exact_divisor(cfg.rates.physics_hz, cfg.rates.camera_hz, "camera_hz");
  const int plan_every = exact_divisor(cfg.rates.physics_hz, cfg.rates.planner_hz, "planner_hz");

  const double yaw0 = cfg.start_yaw
                          ? *cfg.start_yaw
                          : std::atan2(cfg.goal.y() - cfg.start.y(),
                                       cfg.goal.x() - cfg.start.x());

  std::uint64_t noise_stream = cfg.seed ^ 0xA02B5C19ULL;
  std::mt19937_64 noise_rng(splitmix64(noise_stream));

  FrameChain chain(cfg.camera, cfg.history_duration);
  std::optional<Eigen::Isometry3d> prev_sensor_pose;

  SimState sim;
  sim.reference = hover_state(cfg.start, yaw0);
  std::optional<ScheduledTrajectory> schedule;

  TrialResult result;
  result.decision_counts = {{"Commit", 0}, {"ExecuteStop", 0}, {"GoalReached", 0}};
  std::string last_decision = "None";

  if (trajectory_csv) {
    *trajectory_csv << "t,x,y,z,yaw,vx,vy,vz,speed,decision_kind\n";
  }
  auto write_row = [&]() {
    if (!trajectory_csv) return;
    const ReferenceState& r = sim.reference;
    *trajectory_csv << g17(sim.time) << ',' << g17(r.position.x()) << ','
                    << g17(r.position.y()) << ',' << g17(r.position.z()) << ','
                    << g17(r.yaw) << ',' << g17(r.velocity.x()) << ','
                    << g17(r.velocity.y()) << ',' << g17(r.velocity.z()) << ','
                    << g17(r.velocity.norm()) << ',' << last_decision << '\n';
  };

  Outcome outcome = Outcome::Timeout;
  for (long step = 0;; ++step) {
    if (step % cam_every == 0) {
      Eigen::Isometry3d pose_body = world_from_body(sim.reference);
      if (cfg.pose_noise_sigma > 0.0) {
        std::normal_distribution<double> g(0.0, cfg.pose_noise_sigma);
        pose_body.translation() += Vec3(g(noise_rng), g(noise_rng), g(noise_rng));
        pose_body.linear() =
            Eigen::AngleAxisd(g(noise_rng), Vec3::UnitZ()).toRotationMatrix() *
            pose_body.linear();
      }
      const Eigen::Isometry3d pose_sensor = pose_body * cfg.camera.body_to_sensor.inverse();
      RenderOptions opts;
      opts.cloud_stride = cfg.cloud_stride;
      opts.stamp = sim.time;
      opts.noise_sigma = cfg.depth_noise_sigma;
      opts.rng = cfg.depth_noise_sigma > 0.0 ? &noise_rng : nullptr;
      auto frame = std::make_shared<DepthFrame>(render_depth(*world, pose_sensor,
                                                             cfg.camera, opts));
      Eigen::Isometry3d edge = Eigen::Isometry3d::Identity();
      if (prev_sensor_pose) edge = prev_sensor_pose->inverse() * pose_sensor;
      chain.push_frame(std::move(frame), edge, pose_body);
      prev_sensor_pose = pose_sensor;
    }

    if (step % plan_every == 0) {
      const FrameChain::Snapshot snap = chain.snapshot();
      const auto tic = std::chrono::steady_clock::now();
      StepResult planned = planner_step(sim.time, schedule, sim.reference, snap,
                                        cfg.goal, planner);
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - tic).count();
      result.plan_timing.rounds += 1;
      result.plan_timing.total_seconds += secs;
      result.plan_timing.max_seconds = std::max(result.plan_timing.max_seconds, secs);
      schedule = planned.schedule;
      last_decision = decision_name(planned.decision.kind);
      result.decision_counts[last_decision] += 1;
      if (hooks && hooks->on_round) {
        hooks->on_round(sim.time, planned, snap, cfg.goal, planner);
      }
    }

    if (step % cfg.trajectory_stride == 0) write_row();

    sim = sim_step(sim, schedule ? &*schedule : nullptr, dt, *world, cfg.robot_radius);

    if (sim.collided) {
      outcome = Outcome::Collision;
      break;
    }
    if ((sim.reference.position - cfg.goal).norm() <= planner.goal_radius) {
      outcome = Outcome::Success;
      break;
    }
    if (sim.time >= time_limit - 1e-12) {
      outcome = Outcome::Timeout;
      break;
    }
  }
  write_row();

  result.outcome = outcome;
  result.flight_time = sim.time;
  result.path_length = sim.path_length;
  result.max_speed = sim.speed_max;
  result.avg_speed = sim.time > 0.0 ? sim.path_length / sim.time : 0.0;
  result.control_effort = sim.effort_accum;
  result.final_goal_distance = (sim.reference.position - cfg.goal).norm();
  result.final_speed = sim.reference.velocity.norm();
  result.final_position = sim.reference.position;
  return result;
}

Vec3 batch_start(const BatchConfig& cfg) {
  return Vec3(cfg.start_x, 0.0, cfg.flight_altitude);
}

std::vector<Vec3> batch_goals(const BatchConfig& cfg) {
  std::vector<Vec3> goals;
  goals.reserve(cfg.goal_endpoints);
  for (int k = 0; k < cfg.goal_endpoints; ++k) {
    const double y = cfg.goal_endpoints > 1
                         ? -cfg.goal_span / 2.0 +
                               cfg.goal_span * k / (cfg.goal_endpoints - 1)
                         : 0.0;
    const double x = cfg.start_x +
                     std::sqrt(cfg.separation * cfg.separation - y * y);
    goals.emplace_back(x, y, cfg.flight_altitude);
  }
  return goals;
}

TrialConfig make_batch_trial(const BatchConfig& cfg, int cell_index, double density,
                             double v_x, int trial_index) {
  TrialConfig trial = cfg.base;
  const int env_index = trial_index / std::max(1, cfg.goal_endpoints);
  const int goal_index = trial_index % std::max(1, cfg.goal_endpoints);

  trial.seed = derive_seed(cfg.base_seed, cell_index, trial_index);
  trial.start = batch_start(cfg);
  trial.goal = batch_goals(cfg)[goal_index];
  trial.planner.v_x = v_x;
  trial.time_limit = 2.5 * cfg.separation / v_x;

  ForestParams forest;
  forest.density = density;
  forest.region = cfg.region;
  forest.diameter = cfg.forest_diameter;
  forest.min_separation = cfg.forest_min_separation;
  forest.seed = derive_seed(cfg.base_seed, cell_index, 1000 + env_index);
  forest.clear_zones.push_back({trial.start.head<2>(), cfg.spawn_clear_radius});
  for (const Vec3& g : batch_goals(cfg)) {
    forest.clear_zones.push_back({g.head<2>(), cfg.spawn_clear_radius});
  }
  trial.world = forest;
  return trial;
}

BatchReport run_batch(const BatchConfig& cfg) {
  if (cfg.trials_per_cell < 1) throw std::invalid_argument("run_batch: trials_per_cell < 1");
  if (cfg.densities.empty() || cfg.speeds.empty())
    throw std::invalid_argument("run_batch: empty matrix");

  struct Cell {
    int index;
    double density;
    double v_x;
  };
  std::vector<Cell> cells;
  int ci = 0;
  for (double density : cfg.densities) {
    for (double v : cfg.speeds) cells.push_back({ci++, density, v});
  }

  BatchReport report;
  report.base_seed = cfg.base_seed;
  report.config_hash = config_fingerprint(cfg.base);
  const int total = static_cast<int>(cells.size()) * cfg.trials_per_cell;
  report.trials.resize(total);

  std::atomic<int> next{0};
  std::mutex timing_mutex;
  auto worker = [&]() {
    for (;;) {
      const int task = next.fetch_add(1);
      if (task >= total) return;
      const Cell& cell = cells[task / cfg.trials_per_cell];
      const int trial_index = cfg.first_trial_index + task % cfg.trials_per_cell;

      TrialRecord rec;
      rec.cell_index = cell.index;
      rec.density = cell.density;
      rec.v_x = cell.v_x;
      rec.trial_index = trial_index;
      rec.env_index = trial_index / std::max(1, cfg.goal_endpoints);
      rec.goal_index = trial_index % std::max(1, cfg.goal_endpoints);

      try {
        TrialConfig trial =
            make_batch_trial(cfg, cell.index, cell.density, cell.v_x, trial_index);
        rec.seed = trial.seed;
        ForestResult forest = gen_forest(std::get<ForestParams>(trial.world));
        rec.realized_density = forest.realized_density;
        trial.world = std::make_shared<const World>(std::move(forest.world));
        const TrialResult r = run_trial(trial);
        rec.outcome = r.outcome;
        rec.flight_time = r.flight_time;
        rec.path_length = r.path_length;
        rec.max_speed = r.max_speed;
        rec.avg_speed = r.avg_speed;
        rec.control_effort = r.control_effort;
        rec.final_goal_distance = r.final_goal_distance;
        rec.commits = r.decision_counts.at("Commit");
        rec.execute_stops = r.decision_counts.at("ExecuteStop");
        {
          std::lock_guard<std::mutex> lock(timing_mutex);
          report.plan_timing.rounds += r.plan_timing.rounds;
          report.plan_timing.total_seconds += r.plan_timing.total_seconds;
          report.plan_timing.max_seconds =
              std::max(report.plan_timing.max_seconds, r.plan_timing.max_seconds);
        }
      } catch (const std::exception& e) {
        rec.error = e.what();
        rec.outcome = Outcome::Timeout;
      }
      report.trials[task] = rec;
    }
  };

  const int jobs = std::max(1, cfg.jobs);
  std::vector<std::thread> pool;
  pool.reserve(jobs - 1);
  for (int i = 1; i < jobs; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  report.cells = aggregate_cells(report.trials);
  return report;
}

namespace {

MetricStats stats_of(std::vector<double> values) {
  MetricStats s;
  s.count = static_cast<int>(values.size());
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  s.min = values.front();
  s.max = values.back();
  const std::size_t n = values.size();
  s.median = n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
  double total = 0.0;
  for (double v : values) total += v;
  s.mean = total / n;
  return s;
}

json stats_json(const MetricStats& s) {
  return {{"min", s.min}, {"median", s.median}, {"mean", s.mean},
          {"max", s.max}, {"count", s.count}};
}

MetricStats stats_from_json(const json& j) {
  MetricStats s;
  s.min = j.at("min").get<double>();
  s.median = j.at("median").get<double>();
  s.mean = j.at("mean").get<double>();
  s.max = j.at("max").get<double>();
  s.count = j.at("count").get<int>();
  return s;
}

Outcome outcome_from_name(const std::string& name) {
  if (name == "Success") return Outcome::Success;
  if (name == "Collision") return Outcome::Collision;
  if (name == "Timeout") return Outcome::Timeout;
  throw std::runtime_error("unknown outcome: " + name);
}

json record_json(const TrialRecord& r) {
  return {{"cell_index", r.cell_index},
          {"density", r.density},
          {"v_x", r.v_x},
          {"trial_index", r.trial_index},
          {"env_index", r.env_index},
          {"goal_index", r.goal_index},
          {"seed", r.seed},
          {"realized_density", r.realized_density},
          {"outcome", outcome_name(r.outcome)},
          {"flight_time", r.flight_time},
          {"path_length", r.path_length},
          {"max_speed", r.max_speed},
          {"avg_speed", r.avg_speed},
          {"control_effort", r.control_effort},
          {"final_goal_distance", r.final_goal_distance},
          {"commits", r.commits},
          {"execute_stops", r.execute_stops},
          {"error", r.error}};
}

TrialRecord record_from_json(const json& j) {
  TrialRecord r;
  r.cell_index = j.at("cell_index").get<int>();
  r.density = j.at("density").get<double>();
  r.v_x = j.at("v_x").get<double>();
  r.trial_index = j.at("trial_index").get<int>();
  r.env_index = j.at("env_index").get<int>();
  r.goal_index = j.at("goal_index").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.realized_density = j.at("realized_density").get<double>();
  r.outcome = outcome_from_name(j.at("outcome").get<std::string>());
  r.flight_time = j.at("flight_time").get<double>();
  r.path_length = j.at("path_length").get<double>();
  r.max_speed = j.at("max_speed").get<double>();
  r.avg_speed = j.at("avg_speed").get<double>();
  r.control_effort = j.at("control_effort").get<double>();
  r.final_goal_distance = j.at("final_goal_distance").get<double>();
  r.commits = j.at("commits").get<int>();
  r.execute_stops = j.at("execute_stops").get<int>();
  r.error = j.at("error").get<std::string>();
  return r;
}

}  // namespace

std::vector<CellAggregate> aggregate_cells(const std::vector<TrialRecord>& records) {
  std::map<int, std::vector<const TrialRecord*>> by_cell;
  for (const TrialRecord& r : records) by_cell[r.cell_index].push_back(&r);

  std::vector<CellAggregate> cells;
  cells.reserve(by_cell.size());
  for (const auto& [index, rs] : by_cell) {
    CellAggregate c;
    c.cell_index = index;
    c.density = rs.front()->density;
    c.v_x = rs.front()->v_x;
    c.trials = static_cast<int>(rs.size());
    std::vector<double> ft, pl, ms, as, ce;
    for (const TrialRecord* r : rs) {
      switch (r->outcome) {
        case Outcome::Success:
          ++c.successes;
          ft.push_back(r->flight_time);
          pl.push_back(r->path_length);
          ms.push_back(r->max_speed);
          as.push_back(r->avg_speed);
          ce.push_back(r->control_effort);
          break;
        case Outcome::Collision: ++c.collisions; break;
        case Outcome::Timeout: ++c.timeouts; break;
      }
    }
    c.success_rate = static_cast<double>(c.successes) / c.trials;
    c.collision_rate = static_cast<double>(c.collisions) / c.trials;
    c.timeout_rate = static_cast<double>(c.timeouts) / c.trials;
    c.flight_time = stats_of(std::move(ft));
    c.path_length = stats_of(std::move(pl));
    c.max_speed = stats_of(std::move(ms));
    c.avg_speed = stats_of(std::move(as));
    c.control_effort = stats_of(std::move(ce));
    cells.push_back(c);
  }
  return cells;
}

std::string trials_csv_header() {
  return "cell_index,density,v_x,trial_index,env_index,goal_index,seed,"
         "realized_density,outcome,flight_time,path_length,max_speed,avg_speed,"
         "control_effort,final_goal_distance,commits,execute_stops,error";
}

namespace {

void write_trials_csv(const std::vector<TrialRecord>& records,
                      const std::filesystem::path& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open " + path.string());
  os << trials_csv_header() << '\n';
  for (const TrialRecord& r : records) {
    os << r.cell_index << ',' << g17(r.density) << ',' << g17(r.v_x) << ','
       << r.trial_index << ',' << r.env_index << ',' << r.goal_index << ','
       << r.seed << ',' << g17(r.realized_density) << ',' << outcome_name(r.outcome)
       << ',' << g17(r.flight_time) << ',' << g17(r.path_length) << ','
       << g17(r.max_speed) << ',' << g17(r.avg_speed) << ',' << g17(r.control_effort)
       << ',' << g17(r.final_goal_distance) << ',' << r.commits << ','
       << r.execute_stops << ',' << r.error << '\n';
  }
  if (!os) throw std::runtime_error("write failed for " + path.string());
}

json aggregates_json(const std::vector<CellAggregate>& cells, std::uint64_t base_seed,
                     const std::string& config_hash) {
  json j;
  j["version"] = kArcnavVersion;
  j["base_seed"] = base_seed;
  j["config_hash"] = config_hash;
  j["cells"] = json::array();
  for (const CellAggregate& c : cells) {
    j["cells"].push_back({{"cell_index", c.cell_index},
                          {"density", c.density},
                          {"v_x", c.v_x},
                          {"trials", c.trials},
                          {"successes", c.successes},
                          {"collisions", c.collisions},
                          {"timeouts", c.timeouts},
                          {"success_rate", c.success_rate},
                          {"collision_rate", c.collision_rate},
                          {"timeout_rate", c.timeout_rate},
                          {"flight_time", stats_json(c.flight_time)},
                          {"path_length", stats_json(c.path_length)},
                          {"max_speed", stats_json(c.max_speed)},
                          {"avg_speed", stats_json(c.avg_speed)},
                          {"control_effort", stats_json(c.control_effort)}});
  }
  return j;
}

}  // namespace

void write_report(const BatchReport& report, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream os(dir / "results.jsonl");
    if (!os) throw std::runtime_error("cannot open " + (dir / "results.jsonl").string());
    for (const TrialRecord& r : report.trials) os << record_json(r).dump() << '\n';
  }
  write_trials_csv(report.trials, dir / "trials.csv");
  {
    std::ofstream os(dir / "aggregates.json");
    os << aggregates_json(report.cells, report.base_seed, report.config_hash).dump(2)
       << '\n';
  }
  {
    json t;
    t["plan_rounds"] = report.plan_timing.rounds;
    t["plan_time_mean_ms"] = report.plan_timing.mean_seconds() * 1e3;
    t["plan_time_max_ms"] = report.plan_timing.max_seconds * 1e3;
    std::ofstream os(dir / "timing.json");
    os << t.dump(2) << '\n';
  }
}

std::vector<TrialRecord> load_results(const std::filesystem::path& jsonl_path) {
  std::ifstream is(jsonl_path);
  if (!is) throw std::runtime_error("cannot open " + jsonl_path.string());
  std::vector<TrialRecord> records;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    records.push_back(record_from_json(json::parse(line)));
  }
  return records;
}

void write_tables(const std::vector<TrialRecord>& records,
                  const std::filesystem::path& dir, const std::string& format,
                  std::uint64_t base_seed, const std::string& config_hash) {
  std::filesystem::create_directories(dir);
  if (format == "csv") {
    write_trials_csv(records, dir / "trials.csv");
    std::ofstream os(dir / "aggregates.csv");
    os << "cell_index,density,v_x,trials,successes,collisions,timeouts,"
          "success_rate,collision_rate,timeout_rate,flight_time_mean,"
          "path_length_mean,control_effort_mean\n";
    for (const CellAggregate& c : aggregate_cells(records)) {
      os << c.cell_index << ',' << g17(c.density) << ',' << g17(c.v_x) << ','
         << c.trials << ',' << c.successes << ',' << c.collisions << ','
         << c.timeouts << ',' << g17(c.success_rate) << ',' << g17(c.collision_rate)
         << ',' << g17(c.timeout_rate) << ',' << g17(c.flight_time.mean) << ','
         << g17(c.path_length.mean) << ',' << g17(c.control_effort.mean) << '\n';
    }
  } else if (format == "json") {
    std::ofstream os(dir / "aggregates.json");
    os << aggregates_json(aggregate_cells(records), base_seed, config_hash).dump(2)
       << '\n';
  } else {
    throw std::invalid_argument("write_tables: format must be csv or json");
  }
}

namespace {

std::vector<double> doubles_from(const json& j) {
  std::vector<double> out;
  for (const auto& v : j) out.push_back(v.get<double>());
  return out;
}

Vec3 vec3_from(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::runtime_error("config: bad 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

}  // namespace

TrialConfig load_trial_config(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config " + path.string());
  json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("config parse error in " + path.string() + ": " + e.what());
  }

  TrialConfig cfg;
  if (j.contains("world")) {
    const json& w = j["world"];
    if (w.contains("file")) {
      cfg.world = std::filesystem::path(w["file"].get<std::string>());
    } else if (w.contains("forest")) {
      const json& f = w["forest"];
      ForestParams p;
      p.density = f.value("density", p.density);
      if (f.contains("region")) {
        const json& r = f["region"];
        p.region = {r.at(0).get<double>(), r.at(1).get<double>(),
                    r.at(2).get<double>(), r.at(3).get<double>()};
      } else {
        p.region = {0.0, -22.0, 80.0, 22.0};
      }
      p.diameter = f.value("diameter", p.diameter);
      p.min_separation = f.value("min_separation", p.min_separation);
      p.seed = f.value("seed", std::uint64_t{0});
      p.z_min = f.value("z_min", p.z_min);
      p.z_max = f.value("z_max", p.z_max);
      p.include_ground = f.value("include_ground", p.include_ground);
      cfg.world = p;
    } else {
      throw std::runtime_error("config: world must contain 'file' or 'forest'");
    }
  }
  if (j.contains("start")) cfg.start = vec3_from(j["start"]);
  if (j.contains("goal")) cfg.goal = vec3_from(j["goal"]);
  if (j.contains("start_yaw")) cfg.start_yaw = j["start_yaw"].get<double>();
  cfg.time_limit = j.value("time_limit", cfg.time_limit);
  cfg.robot_radius = j.value("robot_radius", cfg.robot_radius);
  cfg.history_duration = j.value("history_duration", cfg.history_duration);
  cfg.cloud_stride = j.value("cloud_stride", cfg.cloud_stride);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.auto_cap_T = j.value("auto_cap_T", cfg.auto_cap_T);
  cfg.pose_noise_sigma = j.value("pose_noise_sigma", cfg.pose_noise_sigma);
  cfg.depth_noise_sigma = j.value("depth_noise_sigma", cfg.depth_noise_sigma);
  cfg.trajectory_stride = j.value("trajectory_stride", cfg.trajectory_stride);

  if (j.contains("planner")) {
    const json& p = j["planner"];
    PlannerConfig& pc = cfg.planner;
    pc.r_coll = p.value("r_coll", pc.r_coll);
    pc.delta_t = p.value("delta_t", pc.delta_t);
    pc.goal_radius = p.value("goal_radius", pc.goal_radius);
    pc.v_x = p.value("v_x", pc.v_x);
    if (p.contains("omega_set")) {
      pc.omega_set = doubles_from(p["omega_set"]);
    } else if (p.contains("omega_max") || p.contains("omega_count")) {
      pc.omega_set = centered_steps(p.value("omega_max", 1.2), p.value("omega_count", 11));
    }
    if (p.contains("v_z_set")) pc.v_z_set = doubles_from(p["v_z_set"]);
    pc.T = p.value("T", pc.T);
    pc.ramp_duration = p.value("ramp_duration", pc.ramp_duration);
    pc.stop_duration = p.value("stop_duration", pc.stop_duration);
    pc.startup_free_radius = p.value("startup_free_radius", pc.startup_free_radius);
    pc.knn_k = p.value("k", pc.knn_k);
  }
  if (j.contains("camera")) {
    const json& c = j["camera"];
    CameraModel& cam = cfg.camera;
    cam.width = c.value("width", cam.width);
    cam.height = c.value("height", cam.height);
    cam.fx = c.value("fx", cam.fx);
    cam.fy = c.value("fy", cam.fy);
    cam.cx = c.value("cx", cam.cx);
    cam.cy = c.value("cy", cam.cy);
    cam.d_min = c.value("d_min", cam.d_min);
    cam.d_max = c.value("d_max", cam.d_max);
    cam.edge_margin_px = c.value("edge_margin_px", cam.edge_margin_px);
    cam.occlusion_band = c.value("occlusion_band", cam.occlusion_band);
  }
  if (j.contains("rates")) {
    const json& r = j["rates"];
    cfg.rates.physics_hz = r.value("physics_hz", cfg.rates.physics_hz);
    cfg.rates.camera_hz = r.value("camera_hz", cfg.rates.camera_hz);
    cfg.rates.planner_hz = r.value("planner_hz", cfg.rates.planner_hz);
  }
  return cfg;
}

std::string config_fingerprint(const TrialConfig& cfg) {
  std::ostringstream os;
  os.precision(17);
  os << cfg.start.transpose() << '|' << cfg.goal.transpose() << '|'
     << cfg.time_limit << '|' << cfg.robot_radius << '|' << cfg.history_duration
     << '|' << cfg.cloud_stride << '|' << cfg.auto_cap_T << '|'
     << cfg.rates.physics_hz << '|' << cfg.rates.camera_hz << '|'
     << cfg.rates.planner_hz << '|';
  const PlannerConfig& p = cfg.planner;
  os << p.r_coll << '|' << p.delta_t << '|' << p.goal_radius << '|' << p.v_x << '|';
  for (double w : p.omega_set) os << w << ',';
  os << '|';
  for (double w : p.v_z_set) os << w << ',';
  os << '|' << p.T << '|' << p.ramp_duration << '|' << p.stop_duration << '|'
     << p.startup_free_radius << '|' << p.knn_k << '|';
  const CameraModel& c = cfg.camera;
  os << c.width << '|' << c.height << '|' << c.fx << '|' << c.fy << '|' << c.cx
     << '|' << c.cy << '|' << c.d_min << '|' << c.d_max << '|' << c.edge_margin_px
     << '|' << c.occlusion_band;

  // FNV-1a 64 over the canonical string.
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char ch : os.str()) {
    h ^= ch;
    h *= 0x100000001B3ULL;
  }
  char buf[19];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace arcnav
