#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "arcnav/arc_primitives.hpp"
#include "oracles.hpp"

using namespace arcnav;

namespace {
constexpr double kPi = std::numbers::pi;

ReferenceState cruise_state(const Vec3& pos, double yaw, double speed) {
  ReferenceState s = hover_state(pos, yaw);
  s.velocity = speed * Vec3(std::cos(yaw), std::sin(yaw), 0.0);
  return s;
}
}  // namespace

TEST_CASE("wrap_angle lands in (-pi, pi]") {
  CHECK(wrap_angle(kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(-kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(3.0 * kPi) == doctest::Approx(kPi));
  CHECK(wrap_angle(0.1 - 6.0 * kPi) == doctest::Approx(0.1));
}

TEST_CASE("propagate_flat straight line") {
  FlatState xi;
  const BodyCommand cmd{1.0, 0.0, 0.0, 2.0};
  const FlatState out = propagate_flat(xi, cmd, 2.0);
  CHECK(out.position.x() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(out.position.y() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(out.position.z() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(out.yaw == doctest::Approx(0.0));
}

TEST_CASE("propagate_flat quarter arc matches closed form and RK4") {
  FlatState xi;
  const BodyCommand cmd{1.0, 0.5, kPi / 2.0, 1.0};
  const FlatState out = propagate_flat(xi, cmd, 1.0);
  CHECK(out.position.x() == doctest::Approx(2.0 / kPi).epsilon(1e-12));
  CHECK(out.position.y() == doctest::Approx(2.0 / kPi).epsilon(1e-12));
  CHECK(out.position.z() == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(out.yaw == doctest::Approx(kPi / 2.0));

  const FlatState ode = oracle::rk4_unicycle(xi, cmd, 1.0);
  CHECK((out.position - ode.position).norm() < 1e-6);
}

TEST_CASE("propagate_flat is continuous at the omega singularity") {
  FlatState xi;
  const BodyCommand near_zero{1.0, 0.0, 1e-12, 1.0};
  const BodyCommand zero{1.0, 0.0, 0.0, 1.0};
  const FlatState a = propagate_flat(xi, near_zero, 1.0);
  const FlatState b = propagate_flat(xi, zero, 1.0);
  CHECK((a.position - b.position).norm() < 1e-9);

  for (double v : {1.0, 5.0, 10.0}) {
    for (double tau : {0.5, 2.0}) {
      const BodyCommand at_eps{v, 0.0, kOmegaSingular, tau};
      const BodyCommand at_neg{v, 0.0, -kOmegaSingular, tau};
      const BodyCommand at_0{v, 0.0, 0.0, tau};
      const FlatState p = propagate_flat(xi, at_eps, tau);
      const FlatState m = propagate_flat(xi, at_neg, tau);
      const FlatState z = propagate_flat(xi, at_0, tau);
      CHECK((p.position - z.position).norm() <= 1e-6);
      CHECK((m.position - z.position).norm() <= 1e-6);
    }
  }
}

TEST_CASE("propagate_flat matches the RK4 oracle on random draws") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    FlatState xi;
    xi.position = Vec3(u01(rng) * 20 - 10, u01(rng) * 20 - 10, u01(rng) * 5);
    xi.yaw = wrap_angle(u01(rng) * 2 * kPi);
    const double tau = 0.05 + 1.95 * u01(rng);
    BodyCommand cmd;
    cmd.v_x = 10.0 * u01(rng);
    cmd.v_z = 1.0 * (2 * u01(rng) - 1);
    cmd.omega = 1.2 * (2 * u01(rng) - 1);
    cmd.duration_T = tau;
    const FlatState got = propagate_flat(xi, cmd, tau);
    const FlatState ode = oracle::rk4_unicycle(xi, cmd, tau);
    REQUIRE((got.position - ode.position).cwiseAbs().maxCoeff() <= 1e-6);
    REQUIRE(std::abs(wrap_angle(got.yaw - ode.yaw)) <= 1e-6);
  }
}

TEST_CASE("eval at 0 reproduces a start from rest, ramp end hits the command") {
  const ReferenceState start = hover_state(Vec3::Zero(), 0.0);
  const MotionPrimitive prim(start, BodyCommand{2.0, 0.0, 0.0, 2.0}, 0.5);

  const ReferenceState s0 = prim.eval(0.0);
  CHECK(s0.velocity.norm() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s0.acceleration.norm() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(s0.position.norm() == doctest::Approx(0.0));

  const ReferenceState s_end = prim.eval(0.5);
  CHECK(s_end.velocity.norm() == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(s_end.acceleration.norm() == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("eval at 0 reproduces an arbitrary chained start exactly") {
  // Chain: evaluate one primitive mid-ramp and start another there.
  const ReferenceState start = hover_state(Vec3(1, 2, 3), 0.3);
  const MotionPrimitive a(start, BodyCommand{3.0, 0.4, 0.8, 2.0}, 0.3);
  const ReferenceState mid = a.eval(0.1);  // mid-ramp, all derivatives active
  const MotionPrimitive b(mid, BodyCommand{2.0, -0.2, -0.5, 2.0}, 0.3);
  const ReferenceState s0 = b.eval(0.0);
  CHECK((s0.position - mid.position).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((s0.velocity - mid.velocity).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((s0.acceleration - mid.acceleration).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((s0.jerk - mid.jerk).cwiseAbs().maxCoeff() < 1e-11);
  CHECK(s0.yaw == doctest::Approx(mid.yaw).epsilon(1e-14));
  CHECK(s0.yaw_rate == doctest::Approx(mid.yaw_rate).epsilon(1e-14));
}

TEST_CASE("post-ramp arc speed and centripetal acceleration") {
  const ReferenceState start = hover_state(Vec3::Zero(), 0.0);
  const MotionPrimitive prim(start, BodyCommand{1.0, 0.0, kPi / 2.0, 2.0}, 0.3);
  // Pick a post-ramp tau; the arc has |v| = v_x and |a| = v_x * omega.
  const ReferenceState s = prim.eval(1.2);
  CHECK(s.velocity.norm() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(s.acceleration.norm() == doctest::Approx(kPi / 2.0).epsilon(1e-9));
}

TEST_CASE("analytic derivatives match finite differences of the lower order") {
  const ReferenceState start = cruise_state(Vec3::Zero(), 0.2, 1.5);
  const MotionPrimitive prim(start, BodyCommand{3.0, 0.3, 0.9, 2.0}, 0.4);
  const double h = 1e-4;
  for (double tau : {0.05, 0.2, 0.35, 0.8, 1.7}) {
    const ReferenceState sm = prim.eval(tau - h);
    const ReferenceState sp = prim.eval(tau + h);
    const ReferenceState s = prim.eval(tau);
    const Vec3 fd_v = (sp.position - sm.position) / (2 * h);
    const Vec3 fd_a = (sp.velocity - sm.velocity) / (2 * h);
    const Vec3 fd_j = (sp.acceleration - sm.acceleration) / (2 * h);
    const Vec3 fd_s = (sp.jerk - sm.jerk) / (2 * h);
    CHECK((fd_v - s.velocity).cwiseAbs().maxCoeff() < 1e-3);
    CHECK((fd_a - s.acceleration).cwiseAbs().maxCoeff() < 1e-3);
    CHECK((fd_j - s.jerk).cwiseAbs().maxCoeff() < 1e-3);
    CHECK((fd_s - s.snap).cwiseAbs().maxCoeff() < 1e-2);
  }
}

TEST_CASE("eval rejects tau outside the primitive") {
  const MotionPrimitive prim(hover_state(Vec3::Zero(), 0.0),
                             BodyCommand{1.0, 0.0, 0.0, 2.0}, 0.3);
  CHECK_THROWS_AS(prim.eval(-0.1), std::invalid_argument);
  CHECK_THROWS_AS(prim.eval(2.1), std::invalid_argument);
}

TEST_CASE("build_library cardinality and ordering") {
  const ReferenceState start = hover_state(Vec3::Zero(), 0.0);
  const auto omegas = centered_steps(1.2, 9);
  const std::vector<double> vzs{0.0, -0.5, 0.5};
  const PrimitiveLibrary lib = build_library(start, 2.0, omegas, vzs, 2.0, 0.3);
  REQUIRE(lib.primitives.size() == 27);
  for (std::size_t i = 0; i < lib.primitives.size(); ++i) {
    const auto& cmd = lib.primitives[i].command();
    CHECK(cmd.omega == omegas[i / 3]);
    CHECK(cmd.v_z == vzs[i % 3]);
  }
  CHECK_THROWS_AS(build_library(start, 2.0, std::vector<double>{}, vzs, 2.0, 0.3),
                  std::invalid_argument);
}

TEST_CASE("single straight primitive endpoint") {
  const ReferenceState start = hover_state(Vec3(1, 1, 1), 0.0);
  const std::vector<double> zero{0.0};
  const PrimitiveLibrary lib = build_library(start, 2.0, zero, zero, 2.0, 0.0);
  REQUIRE(lib.primitives.size() == 1);
  const ReferenceState end = lib.primitives[0].eval(2.0);
  CHECK(end.position.x() == doctest::Approx(1.0 + 4.0).epsilon(1e-12));
  CHECK(end.position.y() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("library endpoints are mirror-symmetric about the heading axis") {
  const ReferenceState start = hover_state(Vec3::Zero(), 0.0);
  const auto omegas = centered_steps(1.2, 11);
  const std::vector<double> vz{0.0};
  const PrimitiveLibrary lib = build_library(start, 2.5, omegas, vz, 2.0, 0.3);
  REQUIRE(lib.primitives.size() == 11);
  // centered_steps emits (+w, -w) adjacent pairs after the leading zero.
  for (std::size_t i = 1; i + 1 < lib.primitives.size() + 1; i += 2) {
    const Vec3 p = lib.primitives[i].eval(2.0).position;
    const Vec3 m = lib.primitives[i + 1].eval(2.0).position;
    CHECK(std::abs(p.x() - m.x()) < 1e-9);
    CHECK(std::abs(p.y() + m.y()) < 1e-9);
    CHECK(std::abs(p.z() - m.z()) < 1e-9);
  }
}

TEST_CASE("stop from rest holds position") {
  const StopPrimitive stop(hover_state(Vec3(5, 6, 7), 1.0), 1.5);
  const ReferenceState end = stop.eval(1.5);
  CHECK((end.position - Vec3(5, 6, 7)).norm() == doctest::Approx(0.0));
  CHECK(end.velocity.norm() == 0.0);
}

TEST_CASE("stop from steady cruise travels half the cruise distance") {
  // Quintic ramp from 1 to 0 integrates to 1/2 over a unit interval, so a
  // 2 m/s start stopped over 1 s advances exactly 1 m.
  const ReferenceState start = cruise_state(Vec3::Zero(), 0.0, 2.0);
  const StopPrimitive stop(start, 1.0);
  const ReferenceState end = stop.eval(1.0);
  CHECK(end.position.x() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(end.position.y() == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(end.velocity.norm() == 0.0);
  CHECK(end.acceleration.norm() == 0.0);
  CHECK(end.jerk.norm() == 0.0);
}

TEST_CASE("stop speed is non-increasing and hits exactly zero") {
  const ReferenceState start = cruise_state(Vec3::Zero(), 0.7, 3.0);
  const StopPrimitive stop(start, 2.0);
  double prev = start.velocity.norm();
  for (int i = 1; i <= 400; ++i) {
    const double tau = 2.0 * i / 400;
    const double speed = stop.eval(tau).velocity.norm();
    CHECK(speed <= prev + 1e-12);
    prev = speed;
  }
  CHECK(stop.eval(2.0).velocity.norm() == 0.0);
  // Path length bound: never exceeds v_start * stop_duration.
  CHECK((stop.eval(2.0).position - start.position).norm() <= 3.0 * 2.0);
  // Beyond the stop the state is frozen.
  const ReferenceState later = stop.eval(5.0);
  CHECK((later.position - stop.eval(2.0).position).norm() == 0.0);
}

TEST_CASE("sample_points grid and forced terminal") {
  const MotionPrimitive prim(hover_state(Vec3::Zero(), 0.0),
                             BodyCommand{1.0, 0.0, 0.0, 1.0}, 0.3);
  const auto a = sample_points(prim, 0.25);
  REQUIRE(a.size() == 5);
  CHECK(a.back().tau == doctest::Approx(1.0));

  const auto b = sample_points(prim, 0.3);
  REQUIRE(b.size() == 5);
  CHECK(b[3].tau == doctest::Approx(0.9));
  CHECK(b.back().tau == doctest::Approx(1.0));

  const auto c = sample_points(prim, 0.5);
  for (const auto& tp : c) {
    CHECK((tp.position - prim.eval(tp.tau).position).norm() < 1e-12);
  }
}

TEST_CASE("commit_schedule chains rounds and rejects mismatched starts") {
  const double t_p = 1.0 / 12.0;
  const ReferenceState start = hover_state(Vec3::Zero(), 0.0);
  MotionPrimitive first(start, BodyCommand{2.0, 0.0, 0.4, 2.0}, 0.3);
  StopPrimitive first_stop(first.eval(t_p), 2.0);
  ScheduledTrajectory sched = commit_schedule(std::nullopt, first, first_stop, 0.0, t_p);
  CHECK(sched.active_start() == doctest::Approx(t_p));
  CHECK(sched.active_end() == doctest::Approx(2 * t_p));

  // Second round: start exactly at the handoff state.
  const ReferenceState handoff = sched.eval(t_p + t_p);
  MotionPrimitive second(handoff, BodyCommand{2.0, 0.0, -0.4, 2.0}, 0.3);
  StopPrimitive second_stop(second.eval(t_p), 2.0);
  const ScheduledTrajectory next =
      commit_schedule(sched, second, second_stop, t_p, t_p);
  CHECK(next.t0() == doctest::Approx(t_p));

  // Perturbed junction state must be rejected.
  ReferenceState bad = handoff;
  bad.position.x() += 1e-3;
  MotionPrimitive bad_prim(bad, BodyCommand{2.0, 0.0, -0.4, 2.0}, 0.3);
  StopPrimitive bad_stop(bad_prim.eval(t_p), 2.0);
  CHECK_THROWS_AS(commit_schedule(sched, bad_prim, bad_stop, t_p, t_p),
                  StartMismatchError);
}

TEST_CASE("schedule junctions are continuous through jerk over many rounds") {
  const double t_p = 1.0 / 12.0;
  std::optional<ScheduledTrajectory> sched;
  ReferenceState state = hover_state(Vec3::Zero(), 0.0);
  double t_now = 0.0;
  // Alternate turn directions to keep the ramps busy.
  const double omegas[] = {0.8, 0.8, -0.6, -0.6, 1.0, 0.2, -1.0, 0.4, -0.2, 0.6};
  for (int round = 0; round < 10; ++round) {
    const ReferenceState handoff = sched ? sched->eval(t_now + t_p) : state;
    MotionPrimitive prim(handoff, BodyCommand{2.5, 0.2, omegas[round], 2.0}, 0.3);
    StopPrimitive stop(prim.eval(t_p), 2.0);
    sched = commit_schedule(sched, prim, stop, t_now, t_p);

    // Two-sided limits at the three window junctions of this schedule.
    const ReferenceState l1 = sched->eval(t_now + t_p - 1e-15);
    const ReferenceState r1 = sched->active().eval(0.0);
    const ReferenceState l2 = sched->active().eval(t_p);
    const ReferenceState r2 = sched->stop().eval(0.0);
    for (const auto& [l, r] : {std::pair{l1, r1}, std::pair{l2, r2}}) {
      CHECK((l.position - r.position).cwiseAbs().maxCoeff() < 1e-6);
      CHECK((l.velocity - r.velocity).cwiseAbs().maxCoeff() < 1e-6);
      CHECK((l.acceleration - r.acceleration).cwiseAbs().maxCoeff() < 1e-6);
      CHECK((l.jerk - r.jerk).cwiseAbs().maxCoeff() < 1e-6);
    }
    t_now += t_p;
  }
}
