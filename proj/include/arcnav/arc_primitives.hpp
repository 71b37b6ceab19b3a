#pragma once

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

namespace arcnav {

using Vec3 = Eigen::Vector3d;

/// Yaw-rate magnitude below which the unicycle closed form switches to the
/// analytic straight-line limit.
inline constexpr double kOmegaSingular = 1e-6;

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

/// Position and heading of the vehicle (flat outputs).
struct FlatState {
  Vec3 position{Vec3::Zero()};
  double yaw{0.0};
};

/// Full reference state tracked by the downstream controller. Derivatives of
/// position are carried through snap so the planner can hand out references
/// that keep commanded angular rates bounded.
struct ReferenceState {
  Vec3 position{Vec3::Zero()};
  Vec3 velocity{Vec3::Zero()};
  Vec3 acceleration{Vec3::Zero()};
  Vec3 jerk{Vec3::Zero()};
  Vec3 snap{Vec3::Zero()};
  double yaw{0.0};
  double yaw_rate{0.0};
};

/// Reference at rest at `position` facing `yaw`.
ReferenceState hover_state(const Vec3& position, double yaw);

/// Body-frame command triple: forward speed, vertical speed, yaw rate, held
/// for duration_T seconds.
struct BodyCommand {
  double v_x{0.0};
  double v_z{0.0};
  double omega{0.0};
  double duration_T{0.0};
};

/// Closed-form unicycle propagation of a flat state under a constant command.
/// For |omega| <= kOmegaSingular the straight-line limit is returned.
FlatState propagate_flat(const FlatState& xi, const BodyCommand& cmd, double tau);

/// Quintic polynomial on [0, duration] with prescribed value and first two
/// derivatives at t=0 and value p1 with zero first and second derivatives at
/// t=duration. Exposes derivatives up to 4th order and the exact
/// antiderivative from 0.
class QuinticRamp {
 public:
  QuinticRamp() = default;
  QuinticRamp(double duration, double p0, double d0, double dd0, double p1);

  double value(double t) const;
  double deriv(double t, int order) const;
  double integral(double t) const;
  double duration() const { return dur_; }

 private:
  double c_[6] = {0, 0, 0, 0, 0, 0};  // coefficients in u = t / dur_
  double dur_{0.0};
};

/// Forward-arc motion primitive: body-frame forward/vertical speed and yaw
/// rate blend from the start state's values to the command over
/// ramp_duration with a quintic profile (zero slope and curvature where the
/// command is reached), then hold constant. Evaluation at tau=0 reproduces
/// the start position, velocity, acceleration, and jerk.
class MotionPrimitive {
 public:
  MotionPrimitive() = default;
  MotionPrimitive(const ReferenceState& start, const BodyCommand& command,
                  double ramp_duration);

  const ReferenceState& start() const { return start_; }
  const BodyCommand& command() const { return cmd_; }
  double ramp_duration() const { return ramp_; }
  double duration() const { return cmd_.duration_T; }

  /// Reference state at tau in [0, duration_T]. Throws std::invalid_argument
  /// outside that range.
  ReferenceState eval(double tau) const;

 private:
  ReferenceState start_;
  BodyCommand cmd_{};
  double ramp_{0.0};
  QuinticRamp v_ramp_, w_ramp_, omega_ramp_;
  FlatState ramp_end_;  // anchor of the constant-command arc

  ReferenceState eval_ramp(double tau) const;
  ReferenceState eval_arc(double tau) const;
};

/// Shorthand for MotionPrimitive::eval.
ReferenceState eval_reference(const MotionPrimitive& prim, double tau);

/// Deceleration-to-hover primitive: all three body channels ramp to zero
/// with the quintic profile over stop_duration; the terminal state has
/// exactly zero velocity, acceleration, jerk, and yaw rate and the position
/// is held constant for all later times.
///
/// From a steady start (zero acceleration and jerk) this is a single
/// quintic over the whole duration. A transient start first gets a short
/// blend segment that rings the channel derivatives down to zero, so the
/// junction stays continuous through jerk without the long quintic
/// overshooting.
class StopPrimitive {
 public:
  StopPrimitive() = default;
  StopPrimitive(const ReferenceState& start, double stop_duration);

  const ReferenceState& start() const;
  double duration() const { return duration_; }
  const ReferenceState& terminal() const { return terminal_; }

  /// Defined for all tau >= 0; taus past stop_duration return the terminal
  /// hover state.
  ReferenceState eval(double tau) const;

 private:
  std::optional<MotionPrimitive> blend_;  // transient starts only
  MotionPrimitive decel_;
  double blend_duration_{0.0};
  double duration_{0.0};
  ReferenceState terminal_;
};

StopPrimitive build_stop(const ReferenceState& start, double stop_duration);

/// The primitive library over the cartesian grid omega_set x v_z_set, in
/// omega-major order. Set ordering is preserved, so centered-outward input
/// sets give deterministic, straight-first tie-breaking downstream.
struct PrimitiveLibrary {
  std::vector<MotionPrimitive> primitives;
  double v_x_fixed{0.0};
  std::vector<double> omega_set;
  std::vector<double> v_z_set;
};

PrimitiveLibrary build_library(const ReferenceState& start, double v_x,
                               std::span<const double> omega_set,
                               std::span<const double> v_z_set, double T,
                               double ramp_duration);

/// `count` values evenly covering [-max_value, max_value], ordered
/// center-outward: 0, +step, -step, +2*step, ... (count must be odd).
std::vector<double> centered_steps(double max_value, int count);

struct TimedPoint {
  double tau{0.0};
  Vec3 position{Vec3::Zero()};
};

/// World-frame positions sampled at tau = 0, dt, 2*dt, ...; the terminal
/// time is always included exactly.
std::vector<TimedPoint> sample_points(const MotionPrimitive& prim, double delta_t);
std::vector<TimedPoint> sample_points(const StopPrimitive& prim, double delta_t);

/// Raised by commit_schedule when the new primitive does not start at the
/// handoff state of the previous schedule; indicates a planner wiring bug.
struct StartMismatchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Piecewise plan committed at t0: the head segment (tail of the previous
/// round's active primitive, or a hold from hover) covers [t0, t0+t_p), the
/// newly selected primitive covers [t0+t_p, t0+2t_p), and its stop covers
/// [t0+2t_p, t0+2t_p+stop_duration). Beyond that the terminal hover state is
/// held. A "hover" schedule (goal reached) holds one state forever.
class ScheduledTrajectory {
 public:
  ScheduledTrajectory() = default;

  /// Post-goal freeze: holds `state` forever. When the freeze happens while
  /// a committed window is still playing, the previous active primitive is
  /// passed as `head` and keeps the reference continuous through t0 + t_p.
  static ScheduledTrajectory hover(const ReferenceState& state, double t0, double t_p,
                                   std::optional<MotionPrimitive> head = std::nullopt);

  ReferenceState eval(double t) const;

  double t0() const { return t0_; }
  double t_p() const { return t_p_; }
  double active_start() const { return t0_ + t_p_; }
  double active_end() const { return t0_ + 2.0 * t_p_; }
  double stop_end() const;
  bool is_hover() const { return !active_.has_value(); }

  const MotionPrimitive& active() const { return *active_; }
  const StopPrimitive& stop() const { return *stop_; }

  friend ScheduledTrajectory commit_schedule(
      const std::optional<ScheduledTrajectory>& prev,
      const MotionPrimitive& selected, const StopPrimitive& stop, double t_now,
      double t_p);

 private:
  double t0_{0.0};
  double t_p_{0.0};
  std::optional<MotionPrimitive> head_;  // tail of previous active; nullopt = hold
  std::optional<MotionPrimitive> active_;
  std::optional<StopPrimitive> stop_;
  ReferenceState hover_state_;  // hover schedules only
};

/// Commits a new schedule at t_now. `selected` must start at the state the
/// previous schedule reaches at t_now + t_p (1e-9 per component), and `stop`
/// must start at selected.eval(t_p). Throws StartMismatchError otherwise.
ScheduledTrajectory commit_schedule(const std::optional<ScheduledTrajectory>& prev,
                                    const MotionPrimitive& selected,
                                    const StopPrimitive& stop, double t_now,
                                    double t_p);

}  // namespace arcnav
