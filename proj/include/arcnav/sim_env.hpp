#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <vector>

#include "arcnav/arc_primitives.hpp"
#include "arcnav/depth_memory.hpp"

namespace arcnav {

struct Cylinder {
  Eigen::Vector2d center{Eigen::Vector2d::Zero()};
  double radius{0.0};
  double z_min{0.0}, z_max{0.0};
};

struct Box {
  Vec3 min{Vec3::Zero()};
  Vec3 max{Vec3::Zero()};
};

/// Ground-truth obstacle geometry. Everything is immutable after generation
/// and freely shared across trial threads.
struct World {
  std::vector<Cylinder> cylinders;
  std::vector<Box> boxes;
  std::optional<double> ground_z;
  std::optional<double> ceiling_z;
  Box bounds;
};

/// Axis-aligned rectangle on the ground plane.
struct Rect {
  double x0{0.0}, y0{0.0}, x1{0.0}, y1{0.0};
  double width() const { return x1 - x0; }
  double height() const { return y1 - y0; }
  double area() const { return width() * height(); }
};

struct Disc {
  Eigen::Vector2d center{Eigen::Vector2d::Zero()};
  double radius{0.0};
};

struct ForestParams {
  double density{0.05};        // obstacles per m^2
  Rect region;
  double diameter{0.75};
  double min_separation{2.0};  // between cylinder centers
  std::uint64_t seed{0};
  std::vector<Disc> clear_zones;  // spawn areas kept free of obstacles
  double z_min{0.0}, z_max{10.0};
  bool include_ground{true};
};

struct ForestResult {
  World world;
  int target_count{0};
  int placed_count{0};
  double realized_density{0.0};
  bool density_warning{false};  // realized < 90% of requested
};

/// Poisson-disk (Bridson) forest of vertical cylinders at the requested
/// density. Deterministic per seed. When the separation constraint caps the
/// count below the target the maximal achieved packing is returned and
/// density_warning is set.
ForestResult gen_forest(const ForestParams& params);

/// Exact distance from a point to the nearest obstacle surface (cylinders,
/// boxes, ground/ceiling planes). Positive outside, negative inside.
double gt_distance(const World& world, const Vec3& position);

/// True iff a sphere of robot_radius strictly intersects any obstacle.
bool gt_collides(const World& world, const Vec3& position, double robot_radius);

struct RenderOptions {
  int cloud_stride{4};
  double stamp{0.0};
  double noise_sigma{0.0};         // optional zero-mean Gaussian depth noise
  std::mt19937_64* rng{nullptr};   // required when noise_sigma > 0
};

/// Depth render by per-pixel ray casting against the analytic world.
/// Pixel values are sensor-frame z of the nearest hit; rays with no surface
/// inside [d_min, d_max] get +inf (free through the range); hits nearer than
/// d_min become NaN (invalid, conservative).
DepthFrame render_depth(const World& world, const Eigen::Isometry3d& world_from_sensor,
                        const CameraModel& camera, const RenderOptions& opts = {});

/// Body pose of the ideally-tracked reference (position + yaw, level).
Eigen::Isometry3d world_from_body(const ReferenceState& state);

/// Trial execution state with accumulated metrics.
struct SimState {
  double time{0.0};
  ReferenceState reference;
  bool collided{false};
  double path_length{0.0};
  double speed_max{0.0};
  double effort_accum{0.0};  // integral of squared jerk magnitude
};

/// Advances the state by dt along the schedule (ideal tracking), updating
/// path length, peak speed, and control effort by trapezoidal integration,
/// and the ground-truth collision flag. A null schedule holds the current
/// reference.
SimState sim_step(const SimState& sim, const ScheduledTrajectory* schedule, double dt,
                  const World& world, double robot_radius);

/// Versioned human-readable world files.
void save_world(const World& world, const std::filesystem::path& path);
World load_world(const std::filesystem::path& path);

}  // namespace arcnav
