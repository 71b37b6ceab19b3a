#include "arcnav/arc_primitives.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace arcnav {

namespace {

constexpr double kPi = std::numbers::pi;

// 32-point Gauss-Legendre rule on [-1, 1], computed once by Newton iteration
// on the Legendre polynomial. Used to integrate the ramped-arc position,
// whose integrand (quintic speed times trig of a degree-6 phase) has no
// elementary antiderivative.
struct GaussRule {
  std::array<double, 32> nodes{};
  std::array<double, 32> weights{};
};

const GaussRule& gauss32() {
  static const GaussRule rule = [] {
    GaussRule r;
    constexpr int n = 32;
    for (int i = 0; i < n; ++i) {
      double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
      double p_prime = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
          double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        p_prime = n * (x * p1 - p0) / (x * x - 1.0);
        double dx = p1 / p_prime;
        x -= dx;
        if (std::abs(dx) < 1e-15) break;
      }
      r.nodes[i] = x;
      r.weights[i] = 2.0 / ((1.0 - x * x) * p_prime * p_prime);
    }
    return r;
  }();
  return rule;
}

double sinc(double x) { return x == 0.0 ? 1.0 : std::sin(x) / x; }

Eigen::Vector2d heading(double yaw) { return {std::cos(yaw), std::sin(yaw)}; }
Eigen::Vector2d normal_left(double yaw) { return {-std::sin(yaw), std::cos(yaw)}; }

// Body-channel boundary conditions recovered from a reference state: values
// and first/second time derivatives of forward speed v, vertical speed w,
// and yaw rate. The inversion uses the unicycle relations
//   p'  = v h + w e_z
//   p'' = v' h + v*omega n + w' e_z
//   p''' = (v'' - v omega^2) h + (2 v' omega + v omega') n + w'' e_z,
// so omega' is observable only when v is nonzero.
struct BodyBoundary {
  double v{}, dv{}, ddv{};
  double w{}, dw{}, ddw{};
  double omega{}, domega{};
};

BodyBoundary extract_boundary(const ReferenceState& s) {
  const Eigen::Vector2d h = heading(s.yaw);
  const Eigen::Vector2d n = normal_left(s.yaw);
  BodyBoundary b;
  b.v = s.velocity.head<2>().dot(h);
  b.w = s.velocity.z();
  b.omega = s.yaw_rate;
  b.dv = s.acceleration.head<2>().dot(h);
  b.dw = s.acceleration.z();
  b.ddv = s.jerk.head<2>().dot(h) + b.v * b.omega * b.omega;
  b.ddw = s.jerk.z();
  b.domega = std::abs(b.v) > 1e-6
                 ? (s.jerk.head<2>().dot(n) - 2.0 * b.dv * b.omega) / b.v
                 : 0.0;
  return b;
}

void check_finite(const ReferenceState& s, const char* who) {
  if (!s.position.allFinite() || !s.velocity.allFinite() ||
      !s.acceleration.allFinite() || !s.jerk.allFinite() ||
      !std::isfinite(s.yaw) || !std::isfinite(s.yaw_rate)) {
    throw std::invalid_argument(std::string(who) + ": non-finite start state");
  }
}

}  // namespace

double wrap_angle(double a) {
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

ReferenceState hover_state(const Vec3& position, double yaw) {
  ReferenceState s;
  s.position = position;
  s.yaw = wrap_angle(yaw);
  return s;
}

FlatState propagate_flat(const FlatState& xi, const BodyCommand& cmd, double tau) {
  if (tau < 0.0 || tau > cmd.duration_T + 1e-12) {
    throw std::invalid_argument("propagate_flat: tau outside [0, duration_T]");
  }
  if (!xi.position.allFinite() || !std::isfinite(xi.yaw)) {
    throw std::invalid_argument("propagate_flat: non-finite state");
  }
  FlatState out;
  out.position.z() = xi.position.z() + cmd.v_z * tau;
  if (std::abs(cmd.omega) <= kOmegaSingular) {
    out.position.x() = xi.position.x() + cmd.v_x * tau * std::cos(xi.yaw);
    out.position.y() = xi.position.y() + cmd.v_x * tau * std::sin(xi.yaw);
  } else {
    // (v/w)(sin(th+wt) - sin th) and (v/w)(cos th - cos(th+wt)) rewritten as
    // products: v*t*sinc(wt/2)*cos(th + wt/2) and v*t*sinc(wt/2)*sin(th+wt/2).
    const double half = 0.5 * cmd.omega * tau;
    const double chord = cmd.v_x * tau * sinc(half);
    out.position.x() = xi.position.x() + chord * std::cos(xi.yaw + half);
    out.position.y() = xi.position.y() + chord * std::sin(xi.yaw + half);
  }
  out.yaw = wrap_angle(xi.yaw + cmd.omega * tau);
  return out;
}

QuinticRamp::QuinticRamp(double duration, double p0, double d0, double dd0, double p1)
    : dur_(duration) {
  if (duration <= 0.0) throw std::invalid_argument("QuinticRamp: duration <= 0");
  const double b = d0 * duration;
  const double c = 0.5 * dd0 * duration * duration;
  const double r0 = p1 - p0 - b - c;
  const double r1 = -b - 2.0 * c;
  const double r2 = -2.0 * c;
  c_[0] = p0;
  c_[1] = b;
  c_[2] = c;
  c_[3] = 10.0 * r0 - 4.0 * r1 + 0.5 * r2;
  c_[4] = -15.0 * r0 + 7.0 * r1 - r2;
  c_[5] = 6.0 * r0 - 3.0 * r1 + 0.5 * r2;
}

double QuinticRamp::value(double t) const {
  const double u = t / dur_;
  return c_[0] + u * (c_[1] + u * (c_[2] + u * (c_[3] + u * (c_[4] + u * c_[5]))));
}

double QuinticRamp::deriv(double t, int order) const {
  const double u = t / dur_;
  double acc = 0.0;
  for (int k = 5; k >= order; --k) {
    double f = 1.0;
    for (int j = 0; j < order; ++j) f *= static_cast<double>(k - j);
    acc = acc * u + f * c_[k];
  }
  return acc / std::pow(dur_, order);
}

double QuinticRamp::integral(double t) const {
  const double u = t / dur_;
  double acc = 0.0;
  for (int k = 5; k >= 0; --k) acc = acc * u + c_[k] / (k + 1.0);
  return acc * u * dur_;
}

MotionPrimitive::MotionPrimitive(const ReferenceState& start,
                                 const BodyCommand& command, double ramp_duration)
    : start_(start), cmd_(command), ramp_(ramp_duration) {
  check_finite(start, "MotionPrimitive");
  if (cmd_.v_x < 0.0) throw std::invalid_argument("MotionPrimitive: v_x < 0");
  if (cmd_.duration_T <= 0.0)
    throw std::invalid_argument("MotionPrimitive: duration_T <= 0");
  if (ramp_ < 0.0 || ramp_ > cmd_.duration_T + 1e-12)
    throw std::invalid_argument("MotionPrimitive: ramp_duration outside [0, T]");

  if (ramp_ > 0.0) {
    const BodyBoundary b = extract_boundary(start_);
    v_ramp_ = QuinticRamp(ramp_, b.v, b.dv, b.ddv, cmd_.v_x);
    w_ramp_ = QuinticRamp(ramp_, b.w, b.dw, b.ddw, cmd_.v_z);
    omega_ramp_ = QuinticRamp(ramp_, b.omega, b.domega, 0.0, cmd_.omega);
    // Anchor of the constant-command arc: exact polynomial integrals for yaw
    // and z, Gauss-Legendre quadrature for the horizontal position.
    const ReferenceState end = eval_ramp(ramp_);
    ramp_end_.position = end.position;
    ramp_end_.yaw = start_.yaw + omega_ramp_.integral(ramp_);
  } else {
    ramp_end_.position = start_.position;
    ramp_end_.yaw = start_.yaw;
  }
}

ReferenceState MotionPrimitive::eval_ramp(double tau) const {
  const double theta0 = start_.yaw;
  const auto& g = gauss32();

  Eigen::Vector2d xy = start_.position.head<2>();
  if (tau > 0.0) {
    const double hw = 0.5 * tau;
    Eigen::Vector2d acc = Eigen::Vector2d::Zero();
    for (std::size_t i = 0; i < g.nodes.size(); ++i) {
      const double u = hw * (g.nodes[i] + 1.0);
      const double th = theta0 + omega_ramp_.integral(u);
      acc += g.weights[i] * v_ramp_.value(u) * Eigen::Vector2d(std::cos(th), std::sin(th));
    }
    xy += hw * acc;
  }

  const double theta = theta0 + omega_ramp_.integral(tau);
  const double v = v_ramp_.value(tau);
  const double dv = v_ramp_.deriv(tau, 1);
  const double ddv = v_ramp_.deriv(tau, 2);
  const double dddv = v_ramp_.deriv(tau, 3);
  const double om = omega_ramp_.value(tau);
  const double dom = omega_ramp_.deriv(tau, 1);
  const double ddom = omega_ramp_.deriv(tau, 2);
  const Eigen::Vector2d h = heading(theta);
  const Eigen::Vector2d n = normal_left(theta);

  ReferenceState s;
  s.position << xy, start_.position.z() + w_ramp_.integral(tau);
  s.velocity << v * h, w_ramp_.value(tau);
  s.acceleration << dv * h + v * om * n, w_ramp_.deriv(tau, 1);
  s.jerk << (ddv - v * om * om) * h + (2.0 * dv * om + v * dom) * n,
      w_ramp_.deriv(tau, 2);
  s.snap << (dddv - 3.0 * dv * om * om - 3.0 * v * om * dom) * h +
          (3.0 * ddv * om + 3.0 * dv * dom + v * ddom - v * om * om * om) * n,
      w_ramp_.deriv(tau, 3);
  s.yaw = wrap_angle(theta);
  s.yaw_rate = om;
  return s;
}

ReferenceState MotionPrimitive::eval_arc(double tau) const {
  const double dt = tau - ramp_;
  BodyCommand c = cmd_;
  c.duration_T = std::max(cmd_.duration_T - ramp_, dt);
  const FlatState f = propagate_flat(ramp_end_, c, dt);
  const double v = cmd_.v_x;
  const double om = cmd_.omega;
  const Eigen::Vector2d h = heading(f.yaw);
  const Eigen::Vector2d n = normal_left(f.yaw);

  ReferenceState s;
  s.position = f.position;
  s.velocity << v * h, cmd_.v_z;
  s.acceleration << v * om * n, 0.0;
  s.jerk << -v * om * om * h, 0.0;
  s.snap << -v * om * om * om * n, 0.0;
  s.yaw = f.yaw;
  s.yaw_rate = om;
  return s;
}

ReferenceState MotionPrimitive::eval(double tau) const {
  if (tau < 0.0 || tau > cmd_.duration_T + 1e-12) {
    throw std::invalid_argument("MotionPrimitive::eval: tau outside [0, duration_T]");
  }
  if (ramp_ > 0.0 && tau < ramp_) return eval_ramp(tau);
  return eval_arc(tau);
}

ReferenceState eval_reference(const MotionPrimitive& prim, double tau) {
  return prim.eval(tau);
}

StopPrimitive::StopPrimitive(const ReferenceState& start, double stop_duration)
    : duration_(stop_duration) {
  if (stop_duration <= 0.0)
    throw std::invalid_argument("StopPrimitive: stop_duration <= 0");
  const BodyBoundary b = extract_boundary(start);
  const double transient = std::max({std::abs(b.dv), std::abs(b.ddv), std::abs(b.dw),
                                     std::abs(b.ddw), std::abs(b.domega)});
  ReferenceState decel_start = start;
  if (transient > 1e-9) {
    blend_duration_ = std::min(0.3, stop_duration / 2.0);
    const double v1 = std::max(0.0, b.v + 0.5 * b.dv * blend_duration_);
    const double w1 = b.w + 0.5 * b.dw * blend_duration_;
    const double om1 = b.omega + 0.5 * b.domega * blend_duration_;
    blend_ = MotionPrimitive(start, BodyCommand{v1, w1, om1, blend_duration_},
                             blend_duration_);
    decel_start = blend_->eval(blend_duration_);
  }
  const double decel_duration = stop_duration - blend_duration_;
  decel_ = MotionPrimitive(decel_start, BodyCommand{0.0, 0.0, 0.0, decel_duration},
                           decel_duration);
  const ReferenceState end = decel_.eval(decel_duration);
  terminal_ = hover_state(end.position, end.yaw);
}

const ReferenceState& StopPrimitive::start() const {
  return blend_ ? blend_->start() : decel_.start();
}

ReferenceState StopPrimitive::eval(double tau) const {
  if (tau < 0.0) throw std::invalid_argument("StopPrimitive::eval: tau < 0");
  if (tau >= duration_) return terminal_;
  if (blend_ && tau < blend_duration_) return blend_->eval(tau);
  return decel_.eval(tau - blend_duration_);
}

StopPrimitive build_stop(const ReferenceState& start, double stop_duration) {
  return StopPrimitive(start, stop_duration);
}

PrimitiveLibrary build_library(const ReferenceState& start, double v_x,
                               std::span<const double> omega_set,
                               std::span<const double> v_z_set, double T,
                               double ramp_duration) {
  if (omega_set.empty() || v_z_set.empty())
    throw std::invalid_argument("build_library: empty command set");
  if (v_x < 0.0) throw std::invalid_argument("build_library: v_x < 0");
  PrimitiveLibrary lib;
  lib.v_x_fixed = v_x;
  lib.omega_set.assign(omega_set.begin(), omega_set.end());
  lib.v_z_set.assign(v_z_set.begin(), v_z_set.end());
  lib.primitives.reserve(omega_set.size() * v_z_set.size());
  for (double omega : omega_set) {
    for (double v_z : v_z_set) {
      lib.primitives.emplace_back(start, BodyCommand{v_x, v_z, omega, T},
                                  ramp_duration);
    }
  }
  return lib;
}

std::vector<double> centered_steps(double max_value, int count) {
  if (count < 1 || count % 2 == 0)
    throw std::invalid_argument("centered_steps: count must be odd and >= 1");
  std::vector<double> out;
  out.reserve(count);
  out.push_back(0.0);
  const int half = count / 2;
  for (int i = 1; i <= half; ++i) {
    const double v = max_value * static_cast<double>(i) / half;
    out.push_back(v);
    out.push_back(-v);
  }
  return out;
}

namespace {

template <typename Prim>
std::vector<TimedPoint> sample_points_impl(const Prim& prim, double delta_t,
                                           double duration) {
  if (delta_t <= 0.0) throw std::invalid_argument("sample_points: delta_t <= 0");
  std::vector<TimedPoint> out;
  out.reserve(static_cast<std::size_t>(duration / delta_t) + 2);
  for (double tau = 0.0; tau < duration - 1e-9; tau += delta_t) {
    out.push_back({tau, prim.eval(tau).position});
  }
  out.push_back({duration, prim.eval(duration).position});
  return out;
}

}  // namespace

std::vector<TimedPoint> sample_points(const MotionPrimitive& prim, double delta_t) {
  return sample_points_impl(prim, delta_t, prim.duration());
}

std::vector<TimedPoint> sample_points(const StopPrimitive& prim, double delta_t) {
  return sample_points_impl(prim, delta_t, prim.duration());
}

ScheduledTrajectory ScheduledTrajectory::hover(const ReferenceState& state,
                                               double t0, double t_p,
                                               std::optional<MotionPrimitive> head) {
  ScheduledTrajectory s;
  s.t0_ = t0;
  s.t_p_ = t_p;
  s.hover_state_ = state;
  s.head_ = std::move(head);
  return s;
}

double ScheduledTrajectory::stop_end() const {
  return is_hover() ? t0_ : t0_ + 2.0 * t_p_ + stop_->duration();
}

ReferenceState ScheduledTrajectory::eval(double t) const {
  if (is_hover()) {
    if (head_ && t - t0_ < t_p_) return head_->eval(std::max(t - t0_, 0.0));
    return hover_state_;
  }
  const double tau = std::max(t - t0_, 0.0);
  if (tau < t_p_) {
    return head_ ? head_->eval(tau) : active_->start();
  }
  if (tau < 2.0 * t_p_) return active_->eval(tau - t_p_);
  return stop_->eval(tau - 2.0 * t_p_);
}

namespace {

double state_mismatch(const ReferenceState& a, const ReferenceState& b) {
  double m = (a.position - b.position).cwiseAbs().maxCoeff();
  m = std::max(m, (a.velocity - b.velocity).cwiseAbs().maxCoeff());
  m = std::max(m, (a.acceleration - b.acceleration).cwiseAbs().maxCoeff());
  m = std::max(m, (a.jerk - b.jerk).cwiseAbs().maxCoeff());
  m = std::max(m, std::abs(wrap_angle(a.yaw - b.yaw)));
  m = std::max(m, std::abs(a.yaw_rate - b.yaw_rate));
  return m;
}

}  // namespace

ScheduledTrajectory commit_schedule(const std::optional<ScheduledTrajectory>& prev,
                                    const MotionPrimitive& selected,
                                    const StopPrimitive& stop, double t_now,
                                    double t_p) {
  if (t_p <= 0.0) throw std::invalid_argument("commit_schedule: t_p <= 0");
  constexpr double kTol = 1e-9;

  ScheduledTrajectory out;
  out.t0_ = t_now;
  out.t_p_ = t_p;
  out.active_ = selected;
  out.stop_ = stop;

  if (prev && !prev->is_hover()) {
    const double mismatch = state_mismatch(selected.start(), prev->eval(t_now + t_p));
    if (mismatch > kTol) {
      throw StartMismatchError("commit_schedule: selected.start deviates from "
                               "the scheduled handoff state by " +
                               std::to_string(mismatch));
    }
    if (std::abs(t_now - prev->active_start()) <= 1e-9) {
      out.head_ = prev->active_;  // normal cadence: previous active covers [t_now, t_now+t_p)
    } else if (t_now >= prev->stop_end() - 1e-9) {
      out.head_ = std::nullopt;  // re-planning from hover after a completed stop
    } else {
      throw StartMismatchError("commit_schedule: commit inside the stop window");
    }
  } else if (prev && prev->is_hover()) {
    if (state_mismatch(selected.start(), prev->eval(t_now)) > kTol) {
      throw StartMismatchError("commit_schedule: selected.start deviates from "
                               "the hover state");
    }
  }

  const double stop_gap = state_mismatch(stop.start(), selected.eval(t_p));
  if (stop_gap > kTol) {
    throw StartMismatchError(
        "commit_schedule: stop does not start at the active window endpoint "
        "(gap " + std::to_string(stop_gap) + ")");
  }
  return out;
}

}  // namespace arcnav
