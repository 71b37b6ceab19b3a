#pragma once

#include <Eigen/Dense>

#include <optional>
#include <string>
#include <vector>

#include "arcnav/arc_primitives.hpp"
#include "arcnav/depth_memory.hpp"

namespace arcnav {

enum class UnknownPolicy { Conservative };

struct PlannerConfig {
  double r_coll{0.5};            // minimum clearance to any observed point
  double delta_t{0.1};           // collision-sampling step along trajectories
  double t_p{1.0 / 12.0};        // planning period
  double goal_radius{1.0};
  double v_x{3.0};               // fixed forward speed of the library
  std::vector<double> omega_set{centered_steps(1.2, 11)};
  std::vector<double> v_z_set{0.0, -0.5, 0.5};
  double T{2.0};                 // primitive duration
  double ramp_duration{0.3};
  double stop_duration{2.0};
  UnknownPolicy unknown_policy{UnknownPolicy::Conservative};
  double startup_free_radius{1.0};  // near-field exemption for unseen samples
  int knn_k{1};

  void validate() const;
};

enum class Feasibility { Feasible, InfeasibleObstacle, InfeasibleUnknown };

struct CheckResult {
  Feasibility verdict{Feasibility::Feasible};
  double min_clearance{std::numeric_limits<double>::infinity()};
};

/// Samples the primitive over its full duration and the stop over its full
/// duration at delta_t (terminal points forced) and queries every sample
/// against the chain. Every sample must resolve FreeKnown with clearance
/// >= r_coll; Unknown samples fail unless they lie within
/// startup_free_radius of `robot_position`.
CheckResult check_primitive(const FrameChain::Snapshot& snap,
                            const MotionPrimitive& prim, const StopPrimitive& stop,
                            const PlannerConfig& cfg, const Vec3& robot_position);

/// Euclidean distance from the primitive endpoint to the goal.
double cost(const MotionPrimitive& prim, const Vec3& goal);

enum class DecisionKind { Commit, ExecuteStop, GoalReached };

struct PrimitiveDiag {
  int index{-1};
  double omega{0.0};
  double v_z{0.0};
  Feasibility verdict{Feasibility::Feasible};
  double cost{0.0};
  double min_clearance{0.0};
};

struct PlanDecision {
  DecisionKind kind{DecisionKind::ExecuteStop};
  std::optional<MotionPrimitive> selected;
  std::optional<StopPrimitive> stop;
  int selected_index{-1};
  std::vector<PrimitiveDiag> diagnostics;
};

/// One newline-delimited record of a planning round (for the diagnostic log).
std::string decision_record(double t_now, const PlanDecision& decision);

/// Evaluates the library from the handoff state: prunes candidates whose
/// sampled body or stop violates clearance, selects the feasible candidate
/// of minimum cost (first in library order on ties), and pairs it with the
/// stop starting at its committed-window endpoint eval(t_p). GoalReached
/// when the handoff state is within goal_radius; ExecuteStop when nothing is
/// feasible.
PlanDecision plan_round(const ReferenceState& state_at_handoff,
                        const FrameChain::Snapshot& snap, const Vec3& goal,
                        const PlannerConfig& cfg,
                        const std::optional<ScheduledTrajectory>& prev);

struct StepResult {
  std::optional<ScheduledTrajectory> schedule;
  PlanDecision decision;
  ReferenceState handoff;   // state the round planned from
  bool planned{false};      // false when the round was skipped (mid-stop, goal)
};

/// One planning round at time t_now (called at period t_p). Commits the
/// selected primitive onto the schedule; leaves the previous schedule (and
/// its already-verified stop) running when nothing is feasible; freezes a
/// hover schedule once the goal is reached. While a stop is being executed
/// no new primitive is committed; planning resumes from the stop's terminal
/// hover state.
StepResult planner_step(double t_now, const std::optional<ScheduledTrajectory>& schedule,
                        const ReferenceState& current_state,
                        const FrameChain::Snapshot& snap, const Vec3& goal,
                        const PlannerConfig& cfg);

}  // namespace arcnav
