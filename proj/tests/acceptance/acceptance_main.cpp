// Acceptance suite: end-to-end checks of the planner stack at pinned
// tolerances. Each criterion prints exactly one [PASS]/[FAIL] line; the
// process exits nonzero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>
#include <vector>

#include "arcnav/trial_harness.hpp"

using namespace arcnav;
using Eigen::Vector3d;

namespace {

constexpr double kPi = std::numbers::pi;

int g_failures = 0;

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] criterion %d: %s  (%s)\n", pass ? "PASS" : "FAIL", id,
              name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

double elapsed_s(const std::chrono::steady_clock::time_point& t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// Criterion 3: closed-form unicycle propagation vs an RK4 oracle.

FlatState rk4_unicycle(const FlatState& xi, const BodyCommand& cmd, double tau) {
  Eigen::Vector4d y;
  y << xi.position.x(), xi.position.y(), xi.position.z(), xi.yaw;
  auto f = [&](const Eigen::Vector4d& s) {
    return Eigen::Vector4d(cmd.v_x * std::cos(s(3)), cmd.v_x * std::sin(s(3)),
                           cmd.v_z, cmd.omega);
  };
  double t = 0.0;
  const double step = 1e-4;
  while (t < tau - 1e-15) {
    const double h = std::min(step, tau - t);
    const Eigen::Vector4d k1 = f(y);
    const Eigen::Vector4d k2 = f(y + 0.5 * h * k1);
    const Eigen::Vector4d k3 = f(y + 0.5 * h * k2);
    const Eigen::Vector4d k4 = f(y + h * k3);
    y += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += h;
  }
  FlatState out;
  out.position << y(0), y(1), y(2);
  out.yaw = wrap_angle(y(3));
  return out;
}

void criterion_unicycle_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240811);
  auto u01 = [&]() { return (rng() >> 11) * 0x1.0p-53; };
  double max_pos = 0.0, max_yaw = 0.0;
  for (int i = 0; i < 1000; ++i) {
    FlatState xi;
    xi.position = Vector3d(u01() * 20 - 10, u01() * 20 - 10, u01() * 5);
    xi.yaw = wrap_angle(u01() * 2 * kPi - kPi);
    const double tau = 0.05 + 1.95 * u01();
    const BodyCommand cmd{10.0 * u01(), 2.0 * u01() - 1.0, 1.2 * (2.0 * u01() - 1.0), tau};
    const FlatState got = propagate_flat(xi, cmd, tau);
    const FlatState ode = rk4_unicycle(xi, cmd, tau);
    max_pos = std::max(max_pos, (got.position - ode.position).cwiseAbs().maxCoeff());
    max_yaw = std::max(max_yaw, std::abs(wrap_angle(got.yaw - ode.yaw)));
  }
  const double secs = elapsed_s(t0);
  std::ostringstream d;
  d << "max position err " << max_pos << " m, max yaw err " << max_yaw << " rad, "
    << secs << " s";
  report(3, "unicycle closed form vs RK4 oracle", max_pos <= 1e-6 && max_yaw <= 1e-6 &&
         secs < 10.0, d.str());
}

// ---------------------------------------------------------------------------
// Criterion 4: junction smoothness of a 10-round committed schedule.

void criterion_smoothness() {
  const auto t0 = std::chrono::steady_clock::now();
  const double t_p = 1.0 / 12.0;
  const double omegas[] = {0.8, -0.6, 1.0, 0.2, -1.0, 0.4, -0.2, 0.6, -0.8, 0.0};
  const double vzs[] = {0.2, -0.2, 0.0, 0.3, -0.3, 0.1, 0.0, -0.1, 0.2, 0.0};

  std::optional<ScheduledTrajectory> sched;
  double t_now = 0.0;
  double max_jump[4] = {0, 0, 0, 0};
  double interior_snap_max = 0.0, junction_snap_max = 0.0;

  for (int round = 0; round < 10; ++round) {
    const ReferenceState handoff =
        sched ? sched->eval(t_now + t_p) : hover_state(Vector3d::Zero(), 0.0);
    const MotionPrimitive prim(handoff, BodyCommand{2.5, vzs[round], omegas[round], 2.0},
                               0.3);
    const StopPrimitive stop(prim.eval(t_p), 2.0);
    sched = commit_schedule(sched, prim, stop, t_now, t_p);

    // One-sided limits at both junctions of the newly committed windows,
    // evaluated through the analytic window branches.
    auto jumps = [&](const ReferenceState& l, const ReferenceState& r) {
      max_jump[0] = std::max(max_jump[0], (l.position - r.position).cwiseAbs().maxCoeff());
      max_jump[1] = std::max(max_jump[1], (l.velocity - r.velocity).cwiseAbs().maxCoeff());
      max_jump[2] = std::max(max_jump[2],
                             (l.acceleration - r.acceleration).cwiseAbs().maxCoeff());
      max_jump[3] = std::max(max_jump[3], (l.jerk - r.jerk).cwiseAbs().maxCoeff());
    };
    const ReferenceState at1_left = sched->eval(t_now + t_p - 1e-15);
    const ReferenceState at1_right = sched->active().eval(0.0);
    jumps(at1_left, at1_right);
    const ReferenceState at2_left = sched->active().eval(t_p);
    const ReferenceState at2_right = sched->stop().eval(0.0);
    jumps(at2_left, at2_right);
    junction_snap_max = std::max({junction_snap_max, at1_left.snap.norm(),
                                  at1_right.snap.norm(), at2_left.snap.norm(),
                                  at2_right.snap.norm()});
    for (int k = 1; k < 40; ++k) {  // interior sweep of the committed window
      const double tau = t_p * k / 40.0;
      interior_snap_max = std::max(interior_snap_max,
                                   sched->active().eval(tau).snap.norm());
    }
    t_now += t_p;
  }
  const bool snap_ok = junction_snap_max <= 10.0 * interior_snap_max;
  const bool ok = max_jump[0] <= 1e-6 && max_jump[1] <= 1e-6 && max_jump[2] <= 1e-6 &&
                  max_jump[3] <= 1e-6 && snap_ok;
  std::ostringstream d;
  d << "jumps pos " << max_jump[0] << " vel " << max_jump[1] << " acc " << max_jump[2]
    << " jerk " << max_jump[3] << "; junction snap " << junction_snap_max
    << " vs 10x interior " << 10.0 * interior_snap_max << "; " << elapsed_s(t0) << " s";
  report(4, "schedule continuity through jerk, snap bounded", ok && elapsed_s(t0) < 5.0,
         d.str());
}

// ---------------------------------------------------------------------------
// Criterion 5: query correctness (kNN, chain transforms, rendering).

bool knn_matches_brute_force(std::string* detail) {
  std::mt19937_64 rng(5);
  auto u01 = [&]() { return (rng() >> 11) * 0x1.0p-53; };
  double worst = 0.0;
  for (int rep = 0; rep < 2; ++rep) {
    std::vector<Vector3d> pts(1000);
    for (auto& p : pts) p = Vector3d(u01() * 20 - 10, u01() * 20 - 10, u01() * 20 - 10);
    const KdTree3 tree(pts);
    for (int q = 0; q < 50; ++q) {
      const Vector3d query(u01() * 24 - 12, u01() * 24 - 12, u01() * 24 - 12);
      const auto got = tree.knn(query, 3);
      std::vector<double> want;
      for (const auto& p : pts) want.push_back((p - query).norm());
      std::sort(want.begin(), want.end());
      for (std::size_t i = 0; i < got.size(); ++i) {
        worst = std::max(worst, std::abs(got[i].distance - want[i]));
      }
    }
  }
  *detail = "knn worst dist err " + std::to_string(worst);
  return worst < 1e-12;
}

bool chain_transform_matches_direct(std::string* detail) {
  std::mt19937_64 rng(6);
  auto u01 = [&]() { return (rng() >> 11) * 0x1.0p-53; };
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 30;
    std::vector<Eigen::Isometry3d> pose(n);
    for (auto& t : pose) {
      t = Eigen::Isometry3d::Identity();
      t.linear() = Eigen::AngleAxisd(u01() * 2 * kPi - kPi,
                                     Vector3d(u01() - 0.5, u01() - 0.5, u01() - 0.5)
                                         .normalized())
                       .toRotationMatrix();
      t.translation() = Vector3d(u01() - 0.5, u01() - 0.5, u01() - 0.5) * 10.0;
    }
    const Vector3d p0(u01() * 10 - 5, u01() * 10 - 5, u01() * 10 - 5);
    Vector3d p = p0;
    for (int i = 0; i + 1 < n; ++i) {
      p = (pose[i + 1].inverse() * pose[i]) * p;
      const Vector3d direct = pose[i + 1].inverse() * (pose[0] * p0);
      worst = std::max(worst, (p - direct).cwiseAbs().maxCoeff());
    }
  }
  *detail = "chain compose worst err " + std::to_string(worst);
  return worst < 1e-9;
}

// Ray marcher with per-ray cylinder culling; steps 1e-3 m along the
// normalized ray and bisects the bracketing interval.
struct RayMarcher {
  const World& world;

  double march(const Vector3d& origin, const Vector3d& dir_unnormalized,
               double depth_max) const {
    const double scale = dir_unnormalized.norm();
    const Vector3d dir = dir_unnormalized / scale;
    const double s_max = depth_max * scale;

    std::vector<const Cylinder*> near;
    const Eigen::Vector2d o2(origin.x(), origin.y());
    const Eigen::Vector2d d2(dir.x(), dir.y());
    const double d2n = d2.norm();
    for (const Cylinder& c : world.cylinders) {
      const Eigen::Vector2d rel = c.center - o2;
      double line_dist;
      if (d2n < 1e-12) {
        line_dist = rel.norm();
      } else {
        const double along = rel.dot(d2) / d2n;
        if (along < -c.radius || along > s_max + c.radius) continue;
        line_dist = std::abs(rel.x() * d2.y() - rel.y() * d2.x()) / d2n;
      }
      if (line_dist <= c.radius + 0.01) near.push_back(&c);
    }

    auto inside = [&](const Vector3d& p) {
      for (const Cylinder* c : near) {
        if (p.z() >= c->z_min && p.z() <= c->z_max &&
            (Eigen::Vector2d(p.x(), p.y()) - c->center).squaredNorm() <=
                c->radius * c->radius)
          return true;
      }
      for (const Box& b : world.boxes) {
        if ((p.array() >= b.min.array()).all() && (p.array() <= b.max.array()).all())
          return true;
      }
      if (world.ground_z && p.z() <= *world.ground_z) return true;
      if (world.ceiling_z && p.z() >= *world.ceiling_z) return true;
      return false;
    };

    const double step = 1e-3;
    double prev = 0.0;
    for (double s = step; s <= s_max + step; s += step) {
      if (inside(origin + s * dir)) {
        double lo = prev, hi = s;
        for (int i = 0; i < 50; ++i) {
          const double mid = 0.5 * (lo + hi);
          (inside(origin + mid * dir) ? hi : lo) = mid;
        }
        return 0.5 * (lo + hi) / scale;
      }
      prev = s;
    }
    return std::numeric_limits<double>::infinity();
  }

  // Minimum |signed distance| along the ray; used to excuse silhouette pixels
  // where depth is discontinuous and a fixed-step marcher can disagree.
  double min_surface_distance(const Vector3d& origin, const Vector3d& dir_unnormalized,
                              double depth_max) const {
    const double scale = dir_unnormalized.norm();
    const Vector3d dir = dir_unnormalized / scale;
    double m = std::numeric_limits<double>::infinity();
    for (double s = 0.05; s <= depth_max * scale; s += 0.02) {
      m = std::min(m, std::abs(gt_distance(world, origin + s * dir)));
    }
    return m;
  }
};

bool render_matches_marcher(std::string* detail) {
  ForestParams fp;
  fp.density = 0.08;
  fp.region = {-20, -20, 20, 20};
  fp.seed = 99;
  const World world = gen_forest(fp).world;
  const CameraModel cam = CameraModel::forward_depth();
  const RayMarcher marcher{world};

  std::mt19937_64 rng(77);
  auto u01 = [&]() { return (rng() >> 11) * 0x1.0p-53; };
  double worst = 0.0;
  int checked = 0, skipped_silhouette = 0;
  for (int pose_i = 0; pose_i < 100; ++pose_i) {
    ReferenceState s = hover_state(
        Vector3d(u01() * 24 - 12, u01() * 24 - 12, 0.8 + 1.5 * u01()),
        u01() * 2 * kPi - kPi);
    const Eigen::Isometry3d pose = world_from_body(s) * cam.body_to_sensor.inverse();
    RenderOptions opts;
    opts.cloud_stride = 8;
    const DepthFrame frame = render_depth(world, pose, cam, opts);
    for (int k = 0; k < 120; ++k) {
      const int col = static_cast<int>(rng() % static_cast<std::uint64_t>(cam.width));
      const int row = static_cast<int>(rng() % static_cast<std::uint64_t>(cam.height));
      const Vector3d ds((col - cam.cx) / cam.fx, (row - cam.cy) / cam.fy, 1.0);
      const Vector3d dw = pose.linear() * ds;
      const double want = marcher.march(pose.translation(), dw, cam.d_max);
      const float got = frame.depth_at(col, row);
      const bool want_hit = std::isfinite(want) && want <= cam.d_max && want >= cam.d_min;
      const bool got_hit = std::isfinite(got);
      if (want_hit != got_hit) {
        if (marcher.min_surface_distance(pose.translation(), dw, cam.d_max) < 2e-3) {
          ++skipped_silhouette;
          continue;
        }
        // Range-boundary hits (within tolerance of d_min/d_max) are also
        // classification toggles rather than depth errors.
        const double ref = want_hit ? want : static_cast<double>(got);
        if (std::abs(ref - cam.d_max) < 2e-3 || std::abs(ref - cam.d_min) < 2e-3) {
          ++skipped_silhouette;
          continue;
        }
        *detail = "hit/miss disagreement away from silhouettes";
        return false;
      }
      if (want_hit && got_hit) {
        worst = std::max(worst, std::abs(static_cast<double>(got) - want));
        ++checked;
      }
    }
  }
  std::ostringstream d;
  d << "render worst err " << worst << " m over " << checked << " px ("
    << skipped_silhouette << " silhouette px excused)";
  *detail = d.str();
  return worst < 2e-3 && checked > 2000;
}

void criterion_query_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  std::string da, db, dc;
  const bool a = knn_matches_brute_force(&da);
  const bool b = chain_transform_matches_direct(&db);
  const bool c = render_matches_marcher(&dc);
  const double secs = elapsed_s(t0);
  std::ostringstream d;
  d << da << "; " << db << "; " << dc << "; " << secs << " s";
  report(5, "query correctness (knn, chain, rendering)", a && b && c && secs < 60.0,
         d.str());
}

// ---------------------------------------------------------------------------
// Criterion 6: dead-end scenarios stop in known free space.

World dead_end_world(int i, double* wall_x) {
  World w;
  w.ground_z = 0.0;
  w.bounds.min = Vector3d(-10, -40, -1);
  w.bounds.max = Vector3d(60, 40, 12);
  const double dist = 8.0 + (i % 7);
  *wall_x = dist;
  // Pocket: blind wall plus corridor walls behind the start, so no arc
  // escapes sideways.
  const double half_w = 2.0 + 0.5 * (i % 4);
  w.boxes.push_back({Vector3d(dist, -35.0, 0.0), Vector3d(dist + 1.0, 35.0, 10.0)});
  w.boxes.push_back({Vector3d(-5.0, half_w, 0.0), Vector3d(dist + 1.0, half_w + 1.0, 10.0)});
  w.boxes.push_back(
      {Vector3d(-5.0, -half_w - 1.0, 0.0), Vector3d(dist + 1.0, -half_w, 10.0)});
  if (i % 3 == 2) {  // picket of cylinders in front of the wall
    for (double y = -half_w + 0.7; y <= half_w - 0.7; y += 1.4) {
      w.cylinders.push_back({{dist - 2.0, y + 0.1 * (i % 5)}, 0.375, 0.0, 10.0});
    }
  }
  return w;
}

void criterion_stop_guarantee(int jobs) {
  const auto t0 = std::chrono::steady_clock::now();
  const int n = 50;
  std::vector<std::string> failures;
  std::mutex mu;
  std::atomic<int> next{0};

  auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      double wall_x = 0.0;
      World w = dead_end_world(i, &wall_x);
      TrialConfig cfg;
      cfg.world = std::make_shared<const World>(std::move(w));
      cfg.start = Vector3d(0, 0, 1.5);
      cfg.goal = Vector3d(wall_x + 20.0, 0, 1.5);
      cfg.planner.v_x = (i % 2) ? 1.5 : 2.5;
      cfg.planner.v_z_set = {0.0};
      cfg.cloud_stride = 1;  // densest clouds: tightest observed-vs-true gap
      cfg.time_limit = 2.0 * (wall_x + 20.0) / cfg.planner.v_x;
      cfg.seed = 1000 + i;
      const World& world = **std::get_if<std::shared_ptr<const World>>(&cfg.world);
      const TrialResult r = run_trial(cfg);
      const double clearance = gt_distance(world, r.final_position);
      std::string fail;
      if (r.outcome == Outcome::Collision) fail = "collision";
      else if (r.outcome != Outcome::Timeout) fail = "not a timeout";
      else if (r.final_speed != 0.0) fail = "final speed " + std::to_string(r.final_speed);
      else if (clearance < cfg.planner.r_coll)
        fail = "clearance " + std::to_string(clearance);
      if (!fail.empty()) {
        std::lock_guard<std::mutex> lock(mu);
        failures.push_back("scenario " + std::to_string(i) + ": " + fail);
      }
    }
  };
  std::vector<std::thread> pool;
  for (int i = 1; i < jobs; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::ostringstream d;
  d << n - static_cast<int>(failures.size()) << "/" << n
    << " scenarios stopped at rest with clearance >= r_coll; " << elapsed_s(t0) << " s";
  if (!failures.empty()) d << "; first: " << failures.front();
  report(6, "safe-stop guarantee in dead ends", failures.empty(), d.str());
}

// ---------------------------------------------------------------------------
// Criterion 8: selection optimality + determinism of logged commit rounds.

void criterion_selection_optimality() {
  const auto t0 = std::chrono::steady_clock::now();
  std::atomic<int> commits{0};
  std::atomic<int> violations{0};

  TrialHooks hooks;
  hooks.on_round = [&](double, const StepResult& step, const FrameChain::Snapshot& snap,
                       const Vec3& goal, const PlannerConfig& cfg) {
    if (!step.planned || step.decision.kind != DecisionKind::Commit) return;
    if (commits.fetch_add(1) >= 1200) return;
    // Independent recomputation of the whole library.
    const PlanDecision redo = plan_round(step.handoff, snap, goal, cfg, std::nullopt);
    if (redo.selected_index != step.decision.selected_index) {
      violations.fetch_add(1);
      return;
    }
    int best = -1;
    double best_cost = std::numeric_limits<double>::infinity();
    for (const PrimitiveDiag& diag : redo.diagnostics) {
      if (diag.verdict == Feasibility::Feasible && diag.cost < best_cost) {
        best = diag.index;
        best_cost = diag.cost;
      }
    }
    if (best != step.decision.selected_index) violations.fetch_add(1);
  };

  // Audit commit rounds across several forest trials.
  BatchConfig bc;
  bc.densities = {0.05};
  bc.speeds = {3.0};
  bc.base_seed = 500;
  for (int trial = 0; trial < 5 && commits.load() < 1000; ++trial) {
    const TrialConfig cfg = make_batch_trial(bc, 0, 0.05, 3.0, trial);
    run_trial(cfg, &hooks);
  }

  // Determinism: identical inputs give byte-identical decision streams.
  auto record_stream = [&](std::string* out) {
    std::ostringstream log;
    TrialHooks h;
    h.on_round = [&log](double t, const StepResult& step, const FrameChain::Snapshot&,
                        const Vec3&, const PlannerConfig&) {
      log << decision_record(t, step.decision) << "\n";
    };
    run_trial(make_batch_trial(bc, 0, 0.05, 3.0, 0), &h);
    *out = log.str();
  };
  std::string stream_a, stream_b;
  record_stream(&stream_a);
  record_stream(&stream_b);
  const bool deterministic = !stream_a.empty() && stream_a == stream_b;
  std::ostringstream d;
  d << commits.load() << " commit rounds audited, " << violations.load()
    << " optimality violations, rerun streams " << (deterministic ? "identical" : "differ")
    << "; " << elapsed_s(t0) << " s";
  report(8, "selection optimality and deterministic tie-breaking",
         commits.load() >= 1000 && violations.load() == 0 && deterministic, d.str());
}

// ---------------------------------------------------------------------------
// Criteria 1, 2, 7, 9: the obstacle-density batches.

void criterion_batches(int jobs) {
  BatchConfig grid;
  grid.densities = {0.025, 0.05, 0.075, 0.1};
  grid.speeds = {1.5, 3.0, 5.0};
  grid.trials_per_cell = 50;
  grid.base_seed = 20240810;
  grid.jobs = jobs;

  const auto t0 = std::chrono::steady_clock::now();
  const BatchReport grid_report = run_batch(grid);
  const double grid_secs = elapsed_s(t0);

  // Top-up batch so the <= 3 m/s population reaches 504 trials.
  BatchConfig extra = grid;
  extra.speeds = {1.5, 3.0};
  extra.trials_per_cell = 13;
  extra.first_trial_index = 50;
  const BatchReport extra_report = run_batch(extra);

  // Criterion 1: zero ground-truth collisions at densities <= 0.1, speeds <= 3.
  int safety_trials = 0, safety_collisions = 0, errors = 0;
  auto tally = [&](const std::vector<TrialRecord>& trials) {
    for (const TrialRecord& t : trials) {
      if (!t.error.empty()) { ++errors; continue; }
      if (t.v_x > 3.0 + 1e-9) continue;
      ++safety_trials;
      if (t.outcome == Outcome::Collision) ++safety_collisions;
    }
  };
  tally(grid_report.trials);
  tally(extra_report.trials);
  {
    std::ostringstream d;
    d << safety_trials << " trials at v<=3, " << safety_collisions << " collisions, "
      << errors << " config errors; " << grid_secs << " s for the 600-trial grid";
    report(1, "zero collisions with perfect sensing",
           safety_trials >= 500 && safety_collisions == 0 && errors == 0, d.str());
  }

  // Criterion 2: success non-increasing in density per speed (+5pp slack),
  // floor at the easiest cell.
  {
    bool trend_ok = true;
    double floor_rate = 0.0;
    std::ostringstream matrix;
    for (double v : grid.speeds) {
      matrix << "v=" << v << ":";
      double prev = 1e9;
      for (double rho : grid.densities) {
        double rate = -1.0;
        for (const CellAggregate& c : grid_report.cells) {
          if (std::abs(c.density - rho) < 1e-12 && std::abs(c.v_x - v) < 1e-12)
            rate = c.success_rate;
        }
        matrix << " " << rate;
        if (rate > prev + 0.05 + 1e-9) trend_ok = false;
        prev = rate;
        if (std::abs(rho - 0.025) < 1e-12 && std::abs(v - 1.5) < 1e-12) floor_rate = rate;
      }
      matrix << ";";
    }
    std::ostringstream d;
    d << "success rates " << matrix.str() << " floor(0.025,1.5)=" << floor_rate;
    report(2, "density/speed success trend with floor",
           trend_ok && floor_rate >= 0.95, d.str());
  }

  // Criterion 7: planning latency budget.
  {
    const double mean_ms = grid_report.plan_timing.mean_seconds() * 1e3;
    std::ostringstream d;
    d << "mean plan_round " << mean_ms << " ms (max "
      << grid_report.plan_timing.max_seconds * 1e3 << " ms) over "
      << grid_report.plan_timing.rounds << " rounds; target < 20, budget < 83";
    report(7, "12 Hz planning latency budget", mean_ms < 83.0, d.str());
  }

  // Criterion 9: metric identities.
  {
    // Control effort of a pure quintic ramp vs its closed-form integral,
    // accumulated through the simulator loop.
    const double v = 2.0, dur = 0.5;
    const MotionPrimitive ramp(hover_state(Vector3d::Zero(), 0.0),
                               BodyCommand{v, 0.0, 0.0, 2.0}, dur);
    const StopPrimitive stop(ramp.eval(dur), 1.0);
    const ScheduledTrajectory sched = commit_schedule(std::nullopt, ramp, stop, 0.0, dur);
    World empty;
    SimState sim;
    sim.reference = sched.eval(0.0);
    SimState at_ramp_start = sim;
    while (sim.time < 2.0 * dur - 1e-9) {
      sim = sim_step(sim, &sched, 1.0 / 2400.0, empty, 0.3);
      if (sim.time <= dur + 1e-12) at_ramp_start = sim;
    }
    const double got = sim.effort_accum - at_ramp_start.effort_accum;
    const double want = v * v * (120.0 / 7.0) / (dur * dur * dur);
    const double effort_rel = std::abs(got - want) / want;

    double worst_avg_rel = 0.0;
    auto check_avg = [&](const std::vector<TrialRecord>& trials) {
      for (const TrialRecord& t : trials) {
        if (!t.error.empty() || t.flight_time <= 0.0) continue;
        const double expect = t.path_length / t.flight_time;
        const double denom = std::max(std::abs(expect), 1e-12);
        worst_avg_rel = std::max(worst_avg_rel, std::abs(t.avg_speed - expect) / denom);
      }
    };
    check_avg(grid_report.trials);
    check_avg(extra_report.trials);

    std::ostringstream d;
    d << "quintic effort rel err " << effort_rel << "; worst avg_speed identity rel err "
      << worst_avg_rel;
    report(9, "metric identities", effort_rel < 1e-3 && worst_avg_rel < 1e-6, d.str());
  }

  // Persist the grid report next to the binary for inspection.
  try {
    write_report(grid_report, "acceptance_report");
  } catch (const std::exception& e) {
    std::fprintf(stderr, "note: could not write acceptance_report: %s\n", e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--jobs" && i + 1 < argc) jobs = std::max(1, std::atoi(argv[++i]));
  }
  std::printf("acceptance suite (jobs=%d)\n", jobs);

  criterion_unicycle_oracle();
  criterion_smoothness();
  criterion_query_correctness();
  criterion_stop_guarantee(jobs);
  criterion_selection_optimality();
  criterion_batches(jobs);

  std::printf("%s\n", g_failures == 0 ? "ALL CRITERIA PASSED"
                                      : "SOME CRITERIA FAILED");
  return g_failures == 0 ? 0 : 1;
}
