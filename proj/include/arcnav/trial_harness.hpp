#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "arcnav/reactive_planner.hpp"
#include "arcnav/sim_env.hpp"

namespace arcnav {

inline constexpr const char* kArcnavVersion = "0.1.0";

struct RatesConfig {
  double physics_hz{240.0};
  double camera_hz{30.0};
  double planner_hz{12.0};
};

/// World for a trial: a file on disk, an already-built world, or forest
/// generation parameters (seeded).
using WorldSource = std::variant<std::filesystem::path, std::shared_ptr<const World>,
                                 ForestParams>;

struct TrialConfig {
  WorldSource world{ForestParams{}};
  Vec3 start{Vec3(0, 0, 1.5)};
  Vec3 goal{Vec3(20, 0, 1.5)};
  std::optional<double> start_yaw;   // default: face the goal
  double time_limit{0.0};            // <= 0: 2.5 * distance / v_x
  PlannerConfig planner;
  CameraModel camera{CameraModel::forward_depth()};
  double robot_radius{0.3};
  RatesConfig rates;
  double history_duration{1.0};
  int cloud_stride{4};
  std::uint64_t seed{1};
  bool auto_cap_T{true};             // keep v_x * T inside the sensing range
  double pose_noise_sigma{0.0};      // optional render-pose perturbation
  double depth_noise_sigma{0.0};
  int trajectory_stride{4};          // physics steps per trajectory row
};

enum class Outcome { Success, Collision, Timeout };

const char* outcome_name(Outcome o);

struct PlanTimingStats {
  int rounds{0};
  double total_seconds{0.0};
  double max_seconds{0.0};
  double mean_seconds() const { return rounds ? total_seconds / rounds : 0.0; }
};

struct TrialResult {
  Outcome outcome{Outcome::Timeout};
  double flight_time{0.0};
  double path_length{0.0};
  double max_speed{0.0};
  double avg_speed{0.0};
  double control_effort{0.0};
  double final_goal_distance{0.0};
  double final_speed{0.0};
  Vec3 final_position{Vec3::Zero()};
  std::map<std::string, int> decision_counts;
  PlanTimingStats plan_timing;
};

/// Per-round observer for audits; called after every planner round.
struct TrialHooks {
  std::function<void(double t_now, const StepResult& step,
                     const FrameChain::Snapshot& snap, const Vec3& goal,
                     const PlannerConfig& cfg)>
      on_round;
};

/// Runs one trial: interleaves physics steps, camera renders, and planner
/// rounds on the physics clock; terminates on the first of goal reached,
/// ground-truth collision, or the time limit. Throws on invalid
/// configuration; trial failures are outcomes, not errors.
TrialResult run_trial(const TrialConfig& cfg, const TrialHooks* hooks = nullptr,
                      std::ostream* trajectory_csv = nullptr);

// --- batch protocol -------------------------------------------------------

struct BatchConfig {
  std::vector<double> densities{0.025, 0.05, 0.075, 0.1};
  std::vector<double> speeds{1.5, 3.0, 5.0};
  int trials_per_cell{50};
  int first_trial_index{0};  // offset into the deterministic seed stream
  std::uint64_t base_seed{1};
  int jobs{1};
  TrialConfig base;

  // Forest geometry: start and 10 evenly spaced goal endpoints, all
  // start-goal pairs separated by exactly `separation` meters.
  double separation{70.0};
  int goal_endpoints{10};
  double goal_span{36.0};        // lateral spread of the endpoint line
  double spawn_clear_radius{3.0};
  Rect region{0.0, -22.0, 80.0, 22.0};
  double start_x{5.0};
  double flight_altitude{1.5};
  double forest_diameter{0.75};
  double forest_min_separation{2.0};
};

struct TrialRecord {
  int cell_index{0};
  double density{0.0};
  double v_x{0.0};
  int trial_index{0};
  int env_index{0};
  int goal_index{0};
  std::uint64_t seed{0};
  double realized_density{0.0};
  Outcome outcome{Outcome::Timeout};
  double flight_time{0.0};
  double path_length{0.0};
  double max_speed{0.0};
  double avg_speed{0.0};
  double control_effort{0.0};
  double final_goal_distance{0.0};
  int commits{0};
  int execute_stops{0};
  std::string error;  // per-trial config failure, empty otherwise
};

struct MetricStats {
  double min{0.0}, median{0.0}, mean{0.0}, max{0.0};
  int count{0};
};

struct CellAggregate {
  int cell_index{0};
  double density{0.0};
  double v_x{0.0};
  int trials{0};
  int successes{0}, collisions{0}, timeouts{0};
  double success_rate{0.0}, collision_rate{0.0}, timeout_rate{0.0};
  // Metric distributions over successful trials.
  MetricStats flight_time, path_length, max_speed, avg_speed, control_effort;
};

struct BatchReport {
  std::vector<TrialRecord> trials;
  std::vector<CellAggregate> cells;
  std::uint64_t base_seed{0};
  std::string config_hash;
  std::string version{kArcnavVersion};
  PlanTimingStats plan_timing;  // pooled over all trials (not determinism-stable)
};

/// Deterministic trial seed stream: mixes (base_seed, cell, trial).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t cell, std::uint64_t trial);

/// Start pose and the 10 evenly spaced goal endpoints of the batch protocol.
Vec3 batch_start(const BatchConfig& cfg);
std::vector<Vec3> batch_goals(const BatchConfig& cfg);

/// Builds the TrialConfig for one (cell, trial) slot of the matrix.
TrialConfig make_batch_trial(const BatchConfig& cfg, int cell_index, double density,
                             double v_x, int trial_index);

/// Runs the density x speed matrix with `jobs`-way trial parallelism.
/// Per-trial configuration errors become per-trial failure records; the
/// batch itself only throws on invalid batch configuration.
BatchReport run_batch(const BatchConfig& cfg);

// --- reports ---------------------------------------------------------------

/// Writes results.jsonl (raw per-trial records), trials.csv, aggregates.json
/// (cells + run metadata), and timing.json into `dir`. All but timing.json
/// are byte-deterministic for a fixed (seed, config).
void write_report(const BatchReport& report, const std::filesystem::path& dir);

/// Rebuilds per-trial tables from a results.jsonl written by write_report.
std::vector<TrialRecord> load_results(const std::filesystem::path& jsonl_path);

/// Aggregates records into per-cell statistics (used by `report` and tests).
std::vector<CellAggregate> aggregate_cells(const std::vector<TrialRecord>& records);

/// Re-emits trials.csv / aggregates.json from loaded records.
void write_tables(const std::vector<TrialRecord>& records,
                  const std::filesystem::path& dir, const std::string& format,
                  std::uint64_t base_seed, const std::string& config_hash);

std::string trials_csv_header();

// --- config files ----------------------------------------------------------

/// Loads a TrialConfig from a JSON document (see README for the schema).
TrialConfig load_trial_config(const std::filesystem::path& path);
std::string config_fingerprint(const TrialConfig& cfg);

}  // namespace arcnav
