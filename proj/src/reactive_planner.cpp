#include "arcnav/reactive_planner.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace arcnav {

void PlannerConfig::validate() const {
  if (r_coll <= 0.0) throw std::invalid_argument("PlannerConfig: r_coll <= 0");
  if (!(delta_t > 0.0 && delta_t <= T))
    throw std::invalid_argument("PlannerConfig: delta_t outside (0, T]");
  if (!(t_p > 0.0 && t_p < T))
    throw std::invalid_argument("PlannerConfig: t_p outside (0, T)");
  if (v_x < 0.0) throw std::invalid_argument("PlannerConfig: v_x < 0");
  if (omega_set.empty() || v_z_set.empty())
    throw std::invalid_argument("PlannerConfig: empty command sets");
  if (ramp_duration < 0.0 || ramp_duration > T)
    throw std::invalid_argument("PlannerConfig: ramp_duration outside [0, T]");
  if (stop_duration <= 0.0) throw std::invalid_argument("PlannerConfig: stop_duration <= 0");
  if (goal_radius <= 0.0) throw std::invalid_argument("PlannerConfig: goal_radius <= 0");
}

namespace {

// Queries one world-frame sample against the chain. The chain anchor maps
// world coordinates into the body frame of the newest frame.
bool sample_ok(const FrameChain::Snapshot& snap, const Eigen::Isometry3d& body_from_world,
               const Vec3& p_world, const PlannerConfig& cfg, const Vec3& robot_position,
               CheckResult& result) {
  const QueryResult q = query(snap, body_from_world * p_world, cfg.knn_k, cfg.r_coll);
  switch (q.verdict) {
    case QueryResult::Verdict::FreeKnown:
      result.min_clearance = std::min(result.min_clearance, q.distance);
      return true;
    case QueryResult::Verdict::NearObstacle:
      result.verdict = Feasibility::InfeasibleObstacle;
      result.min_clearance = std::min(result.min_clearance, q.distance);
      return false;
    case QueryResult::Verdict::Unknown:
      if ((p_world - robot_position).norm() <= cfg.startup_free_radius) return true;
      result.verdict = Feasibility::InfeasibleUnknown;
      return false;
  }
  return false;
}

}  // namespace

CheckResult check_primitive(const FrameChain::Snapshot& snap,
                            const MotionPrimitive& prim, const StopPrimitive& stop,
                            const PlannerConfig& cfg, const Vec3& robot_position) {
  CheckResult result;
  const Eigen::Isometry3d body_from_world = snap.world_from_body.inverse();
  for (const TimedPoint& tp : sample_points(prim, cfg.delta_t)) {
    if (!sample_ok(snap, body_from_world, tp.position, cfg, robot_position, result))
      return result;
  }
  for (const TimedPoint& tp : sample_points(stop, cfg.delta_t)) {
    if (!sample_ok(snap, body_from_world, tp.position, cfg, robot_position, result))
      return result;
  }
  return result;
}

double cost(const MotionPrimitive& prim, const Vec3& goal) {
  return (goal - prim.eval(prim.duration()).position).norm();
}

std::string decision_record(double t_now, const PlanDecision& decision) {
  std::ostringstream os;
  os.precision(17);
  os << "{\"t\":" << t_now << ",\"kind\":\"";
  switch (decision.kind) {
    case DecisionKind::Commit: os << "Commit"; break;
    case DecisionKind::ExecuteStop: os << "ExecuteStop"; break;
    case DecisionKind::GoalReached: os << "GoalReached"; break;
  }
  os << "\",\"selected\":" << decision.selected_index << ",\"primitives\":[";
  for (std::size_t i = 0; i < decision.diagnostics.size(); ++i) {
    const PrimitiveDiag& d = decision.diagnostics[i];
    if (i) os << ",";
    os << "{\"i\":" << d.index << ",\"omega\":" << d.omega << ",\"v_z\":" << d.v_z
       << ",\"verdict\":\""
       << (d.verdict == Feasibility::Feasible ? "feasible"
           : d.verdict == Feasibility::InfeasibleObstacle ? "obstacle" : "unknown")
       << "\",\"cost\":" << d.cost << ",\"min_clearance\":" << d.min_clearance << "}";
  }
  os << "]}";
  return os.str();
}

PlanDecision plan_round(const ReferenceState& state_at_handoff,
                        const FrameChain::Snapshot& snap, const Vec3& goal,
                        const PlannerConfig& cfg,
                        const std::optional<ScheduledTrajectory>& prev) {
  (void)prev;  // informational; the fallback stop already lives in the schedule
  cfg.validate();
  PlanDecision decision;

  if ((state_at_handoff.position - goal).norm() <= cfg.goal_radius) {
    decision.kind = DecisionKind::GoalReached;
    return decision;
  }

  const PrimitiveLibrary lib = build_library(state_at_handoff, cfg.v_x, cfg.omega_set,
                                             cfg.v_z_set, cfg.T, cfg.ramp_duration);
  decision.diagnostics.reserve(lib.primitives.size());

  int best = -1;
  double best_cost = std::numeric_limits<double>::infinity();
  std::vector<StopPrimitive> stops;
  stops.reserve(lib.primitives.size());

  for (std::size_t i = 0; i < lib.primitives.size(); ++i) {
    const MotionPrimitive& prim = lib.primitives[i];
    stops.emplace_back(prim.eval(cfg.t_p), cfg.stop_duration);
    const CheckResult check =
        check_primitive(snap, prim, stops.back(), cfg, state_at_handoff.position);
    PrimitiveDiag diag;
    diag.index = static_cast<int>(i);
    diag.omega = prim.command().omega;
    diag.v_z = prim.command().v_z;
    diag.verdict = check.verdict;
    diag.cost = cost(prim, goal);
    diag.min_clearance = check.min_clearance;
    decision.diagnostics.push_back(diag);
    if (check.verdict == Feasibility::Feasible && diag.cost < best_cost) {
      best = static_cast<int>(i);
      best_cost = diag.cost;
    }
  }

  if (best < 0) {
    decision.kind = DecisionKind::ExecuteStop;
    return decision;
  }
  decision.kind = DecisionKind::Commit;
  decision.selected = lib.primitives[best];
  decision.stop = stops[best];
  decision.selected_index = best;
  return decision;
}

StepResult planner_step(double t_now, const std::optional<ScheduledTrajectory>& schedule,
                        const ReferenceState& current_state,
                        const FrameChain::Snapshot& snap, const Vec3& goal,
                        const PlannerConfig& cfg) {
  StepResult out;
  out.schedule = schedule;

  if (schedule && schedule->is_hover()) {
    out.decision.kind = DecisionKind::GoalReached;
    return out;
  }

  ReferenceState handoff;
  if (!schedule) {
    handoff = current_state;
  } else if (std::abs(t_now - schedule->active_start()) <= 1e-9) {
    handoff = schedule->eval(t_now + cfg.t_p);  // normal cadence
  } else if (t_now >= schedule->stop_end() - 1e-9) {
    handoff = schedule->eval(t_now + cfg.t_p);  // terminal hover hold
  } else {
    // Mid-stop: let the verified stop run to completion.
    out.decision.kind = DecisionKind::ExecuteStop;
    return out;
  }

  out.handoff = handoff;
  out.planned = true;
  out.decision = plan_round(handoff, snap, goal, cfg, schedule);
  switch (out.decision.kind) {
    case DecisionKind::Commit:
      out.schedule = commit_schedule(schedule, *out.decision.selected,
                                     *out.decision.stop, t_now, cfg.t_p);
      break;
    case DecisionKind::ExecuteStop:
      break;  // previous schedule keeps running into its stop window
    case DecisionKind::GoalReached: {
      std::optional<MotionPrimitive> head;
      if (schedule && !schedule->is_hover() &&
          std::abs(t_now - schedule->active_start()) <= 1e-9) {
        head = schedule->active();  // keep the reference continuous to the freeze
      }
      out.schedule = ScheduledTrajectory::hover(
          hover_state(handoff.position, handoff.yaw), t_now, cfg.t_p, std::move(head));
      break;
    }
  }
  return out;
}

}  // namespace arcnav
