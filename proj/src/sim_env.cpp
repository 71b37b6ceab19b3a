#include "arcnav/sim_env.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>

namespace arcnav {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// 53-bit uniform draw in [0, 1); keeps world generation bit-identical
// across standard library implementations.
double u01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

bool in_rect(const Rect& r, const Eigen::Vector2d& p) {
  return p.x() >= r.x0 && p.x() <= r.x1 && p.y() >= r.y0 && p.y() <= r.y1;
}

bool in_clear_zone(const std::vector<Disc>& zones, const Eigen::Vector2d& p) {
  for (const Disc& d : zones) {
    if ((p - d.center).squaredNorm() <= d.radius * d.radius) return true;
  }
  return false;
}

}  // namespace

ForestResult gen_forest(const ForestParams& params) {
  if (params.density < 0.0) throw std::invalid_argument("gen_forest: density < 0");
  if (params.min_separation < params.diameter)
    throw std::invalid_argument("gen_forest: min_separation < diameter");
  if (params.region.width() <= 0.0 || params.region.height() <= 0.0)
    throw std::invalid_argument("gen_forest: empty region");

  ForestResult out;
  out.target_count = static_cast<int>(std::ceil(params.density * params.region.area()));

  World& world = out.world;
  if (params.include_ground) world.ground_z = 0.0;
  world.bounds.min = Vec3(params.region.x0, params.region.y0,
                          std::min(0.0, params.z_min) - 1.0);
  world.bounds.max = Vec3(params.region.x1, params.region.y1, params.z_max + 2.0);

  if (out.target_count > 0) {
    std::mt19937_64 rng(params.seed);
    const double r = params.min_separation;
    const double cell = r / std::numbers::sqrt2;
    const int gw = std::max(1, static_cast<int>(std::ceil(params.region.width() / cell)));
    const int gh = std::max(1, static_cast<int>(std::ceil(params.region.height() / cell)));
    std::vector<int> grid(static_cast<std::size_t>(gw) * gh, -1);
    std::vector<Eigen::Vector2d> points;
    std::vector<int> active;

    auto cell_of = [&](const Eigen::Vector2d& p) {
      const int cx = std::min(gw - 1, static_cast<int>((p.x() - params.region.x0) / cell));
      const int cy = std::min(gh - 1, static_cast<int>((p.y() - params.region.y0) / cell));
      return std::pair{cx, cy};
    };
    auto far_enough = [&](const Eigen::Vector2d& p) {
      const auto [cx, cy] = cell_of(p);
      for (int dy = -2; dy <= 2; ++dy) {
        for (int dx = -2; dx <= 2; ++dx) {
          const int nx = cx + dx, ny = cy + dy;
          if (nx < 0 || ny < 0 || nx >= gw || ny >= gh) continue;
          const int idx = grid[ny * gw + nx];
          if (idx >= 0 && (points[idx] - p).squaredNorm() < r * r) return false;
        }
      }
      return true;
    };
    auto place = [&](const Eigen::Vector2d& p) {
      const auto [cx, cy] = cell_of(p);
      grid[cy * gw + cx] = static_cast<int>(points.size());
      points.push_back(p);
      active.push_back(static_cast<int>(points.size()) - 1);
    };

    for (int attempt = 0; attempt < 1000 && points.empty(); ++attempt) {
      Eigen::Vector2d p(params.region.x0 + u01(rng) * params.region.width(),
                        params.region.y0 + u01(rng) * params.region.height());
      if (!in_clear_zone(params.clear_zones, p)) place(p);
    }

    constexpr int kAttempts = 30;
    while (!active.empty()) {
      const std::size_t pick = rng() % active.size();
      const Eigen::Vector2d base = points[active[pick]];
      bool placed = false;
      for (int a = 0; a < kAttempts; ++a) {
        const double rad = r * (1.0 + u01(rng));
        const double ang = 2.0 * std::numbers::pi * u01(rng);
        const Eigen::Vector2d cand = base + rad * Eigen::Vector2d(std::cos(ang), std::sin(ang));
        if (!in_rect(params.region, cand)) continue;
        if (in_clear_zone(params.clear_zones, cand)) continue;
        if (!far_enough(cand)) continue;
        place(cand);
        placed = true;
        break;
      }
      if (!placed) {
        active[pick] = active.back();
        active.pop_back();
      }
    }

    if (static_cast<int>(points.size()) > out.target_count) {
      // Seeded Fisher-Yates, then keep the first target_count points.
      for (std::size_t i = points.size() - 1; i > 0; --i) {
        const std::size_t j = rng() % (i + 1);
        std::swap(points[i], points[j]);
      }
      points.resize(out.target_count);
    }

    world.cylinders.reserve(points.size());
    for (const auto& p : points) {
      world.cylinders.push_back(
          {p, params.diameter / 2.0, params.z_min, params.z_max});
    }
  }

  out.placed_count = static_cast<int>(world.cylinders.size());
  out.realized_density = out.placed_count / params.region.area();
  out.density_warning =
      out.target_count > 0 && out.placed_count < 0.9 * out.target_count;
  return out;
}

double gt_distance(const World& world, const Vec3& p) {
  double best = kInf;
  for (const Cylinder& c : world.cylinders) {
    const double dxy = (p.head<2>() - c.center).norm() - c.radius;
    const double dz = std::max(c.z_min - p.z(), p.z() - c.z_max);
    double d;
    if (dxy <= 0.0 && dz <= 0.0) {
      d = std::max(dxy, dz);
    } else {
      d = std::hypot(std::max(dxy, 0.0), std::max(dz, 0.0));
    }
    best = std::min(best, d);
  }
  for (const Box& b : world.boxes) {
    const Vec3 q = (b.min - p).cwiseMax(p - b.max);
    const double outside = q.cwiseMax(0.0).norm();
    const double inside = std::min(q.maxCoeff(), 0.0);
    best = std::min(best, outside + inside);
  }
  if (world.ground_z) best = std::min(best, p.z() - *world.ground_z);
  if (world.ceiling_z) best = std::min(best, *world.ceiling_z - p.z());
  return best;
}

bool gt_collides(const World& world, const Vec3& position, double robot_radius) {
  if (robot_radius <= 0.0) throw std::invalid_argument("gt_collides: robot_radius <= 0");
  return gt_distance(world, position) < robot_radius;
}

namespace {

// Entry parameter of the ray o + t*d into a solid, or +inf. Directions are
// not normalized: t is the sensor-frame z depth by construction.
double ray_cylinder_entry(const Eigen::Vector3d& o, const Eigen::Vector3d& d,
                          const Cylinder& c) {
  double lat_in = -kInf, lat_out = kInf;
  const Eigen::Vector2d rel(o.x() - c.center.x(), o.y() - c.center.y());
  const double a = d.x() * d.x() + d.y() * d.y();
  const double b = 2.0 * (rel.x() * d.x() + rel.y() * d.y());
  const double cc = rel.squaredNorm() - c.radius * c.radius;
  if (a < 1e-18) {
    if (cc > 0.0) return kInf;  // vertical ray outside the disc
  } else {
    const double disc = b * b - 4.0 * a * cc;
    if (disc < 0.0) return kInf;
    const double s = std::sqrt(disc);
    lat_in = (-b - s) / (2.0 * a);
    lat_out = (-b + s) / (2.0 * a);
  }
  double slab_in = -kInf, slab_out = kInf;
  if (std::abs(d.z()) < 1e-18) {
    if (o.z() < c.z_min || o.z() > c.z_max) return kInf;
  } else {
    slab_in = (c.z_min - o.z()) / d.z();
    slab_out = (c.z_max - o.z()) / d.z();
    if (slab_in > slab_out) std::swap(slab_in, slab_out);
  }
  const double t_in = std::max(lat_in, slab_in);
  const double t_out = std::min(lat_out, slab_out);
  if (t_in > t_out || t_out < 0.0) return kInf;
  return std::max(t_in, 0.0);
}

double ray_box_entry(const Eigen::Vector3d& o, const Eigen::Vector3d& d, const Box& b) {
  double t_in = -kInf, t_out = kInf;
  for (int ax = 0; ax < 3; ++ax) {
    if (std::abs(d[ax]) < 1e-18) {
      if (o[ax] < b.min[ax] || o[ax] > b.max[ax]) return kInf;
    } else {
      double lo = (b.min[ax] - o[ax]) / d[ax];
      double hi = (b.max[ax] - o[ax]) / d[ax];
      if (lo > hi) std::swap(lo, hi);
      t_in = std::max(t_in, lo);
      t_out = std::min(t_out, hi);
    }
  }
  if (t_in > t_out || t_out < 0.0) return kInf;
  return std::max(t_in, 0.0);
}

// Half-space below ground_z (or above ceiling_z when `above` is true).
double ray_halfspace_entry(double oz, double dz, double plane_z, bool above) {
  const bool inside = above ? oz >= plane_z : oz <= plane_z;
  if (inside) return 0.0;
  if (std::abs(dz) < 1e-18) return kInf;
  const double t = (plane_z - oz) / dz;
  return t >= 0.0 ? t : kInf;
}

}  // namespace

DepthFrame render_depth(const World& world, const Eigen::Isometry3d& world_from_sensor,
                        const CameraModel& camera, const RenderOptions& opts) {
  const Eigen::Matrix3d r = world_from_sensor.linear();
  if ((r * r.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9 ||
      std::abs(r.determinant() - 1.0) > 1e-9) {
    throw std::invalid_argument("render_depth: pose is not a proper rigid transform");
  }
  if (opts.noise_sigma > 0.0 && opts.rng == nullptr) {
    throw std::invalid_argument("render_depth: noise requires an rng");
  }

  const Eigen::Vector3d o = world_from_sensor.translation();
  const Eigen::Vector3d ax_x = r.col(0), ax_y = r.col(1), ax_z = r.col(2);
  std::vector<float> raster(static_cast<std::size_t>(camera.width) * camera.height);

  // Distance cull: horizontal reach of any ray is bounded by
  // d_max * sqrt(max_sx^2 + max_sy^2 + 1).
  const double max_sx = std::max(camera.cx, camera.width - 1 - camera.cx) / camera.fx;
  const double max_sy = std::max(camera.cy, camera.height - 1 - camera.cy) / camera.fy;
  const double reach = camera.d_max * std::sqrt(max_sx * max_sx + max_sy * max_sy + 1.0);
  std::vector<const Cylinder*> near_cyl;
  for (const Cylinder& c : world.cylinders) {
    if ((Eigen::Vector2d(o.x(), o.y()) - c.center).norm() <= reach + c.radius) {
      near_cyl.push_back(&c);
    }
  }

  // Level poses (sensor y exactly downward) admit two big shortcuts: each
  // image column sees a fixed horizontal azimuth, so cylinders bound to
  // column ranges, and ground/ceiling depths are constant per row.
  const bool level = std::abs(ax_y.z() + 1.0) < 1e-12 &&
                     std::abs(ax_x.z()) < 1e-12 && std::abs(ax_z.z()) < 1e-12;

  auto shade = [&](double t) -> float {
    if (t > camera.d_max) return kFreeDepth;
    if (t < camera.d_min) return kInvalidDepth;
    if (opts.noise_sigma > 0.0) {
      std::normal_distribution<double> gauss(0.0, opts.noise_sigma);
      t += gauss(*opts.rng);
    }
    return static_cast<float>(t);
  };

  if (level) {
    const Eigen::Vector2d fwd(ax_z.x(), ax_z.y());
    const Eigen::Vector2d right(ax_x.x(), ax_x.y());
    const double az_lo = std::atan(-camera.cx / camera.fx);
    const double az_hi = std::atan((camera.width - 1 - camera.cx) / camera.fx);

    struct ColRange {
      const Cylinder* cyl;
      int c0, c1;
    };
    std::vector<ColRange> ranges;
    ranges.reserve(near_cyl.size());
    for (const Cylinder* c : near_cyl) {
      const Eigen::Vector2d rel = c->center - Eigen::Vector2d(o.x(), o.y());
      const double dist = rel.norm();
      if (dist <= c->radius + 1e-9) {
        ranges.push_back({c, 0, camera.width - 1});
        continue;
      }
      const double half = std::asin(std::min(1.0, (c->radius + 1e-6) / dist));
      const double center = std::atan2(rel.dot(right), rel.dot(fwd));
      const double a0 = center - half, a1 = center + half;
      if (a1 < az_lo || a0 > az_hi) continue;
      const double ca0 = std::max(a0, az_lo), ca1 = std::min(a1, az_hi);
      const int c0 = std::max(0, static_cast<int>(std::floor(camera.fx * std::tan(ca0) + camera.cx)));
      const int c1 = std::min(camera.width - 1,
                              static_cast<int>(std::ceil(camera.fx * std::tan(ca1) + camera.cx)));
      ranges.push_back({c, c0, c1});
    }

    std::vector<double> plane_t(camera.height, kInf);
    for (int row = 0; row < camera.height; ++row) {
      const double sy = (row - camera.cy) / camera.fy;
      const double dz = -sy;  // level pose: sensor y maps to world -z
      double t = kInf;
      if (world.ground_z)
        t = std::min(t, ray_halfspace_entry(o.z(), dz, *world.ground_z, false));
      if (world.ceiling_z)
        t = std::min(t, ray_halfspace_entry(o.z(), dz, *world.ceiling_z, true));
      plane_t[row] = t;
    }

    std::vector<const Cylinder*> col_hits;
    for (int col = 0; col < camera.width; ++col) {
      col_hits.clear();
      for (const ColRange& cr : ranges) {
        if (col >= cr.c0 && col <= cr.c1) col_hits.push_back(cr.cyl);
      }
      const double sx = (col - camera.cx) / camera.fx;
      for (int row = 0; row < camera.height; ++row) {
        const double sy = (row - camera.cy) / camera.fy;
        const Eigen::Vector3d d = sx * ax_x + sy * ax_y + ax_z;
        double t = plane_t[row];
        for (const Cylinder* c : col_hits) t = std::min(t, ray_cylinder_entry(o, d, *c));
        for (const Box& b : world.boxes) t = std::min(t, ray_box_entry(o, d, b));
        raster[row * camera.width + col] = shade(t);
      }
    }
  } else {
    for (int row = 0; row < camera.height; ++row) {
      const double sy = (row - camera.cy) / camera.fy;
      for (int col = 0; col < camera.width; ++col) {
        const double sx = (col - camera.cx) / camera.fx;
        const Eigen::Vector3d d = sx * ax_x + sy * ax_y + ax_z;
        double t = kInf;
        for (const Cylinder* c : near_cyl) t = std::min(t, ray_cylinder_entry(o, d, *c));
        for (const Box& b : world.boxes) t = std::min(t, ray_box_entry(o, d, b));
        if (world.ground_z)
          t = std::min(t, ray_halfspace_entry(o.z(), d.z(), *world.ground_z, false));
        if (world.ceiling_z)
          t = std::min(t, ray_halfspace_entry(o.z(), d.z(), *world.ceiling_z, true));
        raster[row * camera.width + col] = shade(t);
      }
    }
  }

  return DepthFrame(std::move(raster), camera, opts.stamp, opts.cloud_stride);
}

Eigen::Isometry3d world_from_body(const ReferenceState& state) {
  Eigen::Isometry3d t = Eigen::Isometry3d::Identity();
  t.linear() = Eigen::AngleAxisd(state.yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  t.translation() = state.position;
  return t;
}

SimState sim_step(const SimState& sim, const ScheduledTrajectory* schedule, double dt,
                  const World& world, double robot_radius) {
  if (dt <= 0.0) throw std::invalid_argument("sim_step: dt <= 0");
  SimState next = sim;
  next.time = sim.time + dt;
  next.reference = schedule ? schedule->eval(next.time) : sim.reference;

  const double s0 = sim.reference.velocity.norm();
  const double s1 = next.reference.velocity.norm();
  next.path_length = sim.path_length + 0.5 * dt * (s0 + s1);
  const double j0 = sim.reference.jerk.squaredNorm();
  const double j1 = next.reference.jerk.squaredNorm();
  next.effort_accum = sim.effort_accum + 0.5 * dt * (j0 + j1);
  next.speed_max = std::max(sim.speed_max, s1);
  next.collided = sim.collided || gt_collides(world, next.reference.position, robot_radius);
  return next;
}

namespace {

using json = nlohmann::ordered_json;

json vec3_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw std::runtime_error("world file: bad 3-vector");
  return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

}  // namespace

void save_world(const World& world, const std::filesystem::path& path) {
  json j;
  j["version"] = 1;
  j["bounds"] = {{"min", vec3_to_json(world.bounds.min)},
                 {"max", vec3_to_json(world.bounds.max)}};
  j["ground_z"] = world.ground_z ? json(*world.ground_z) : json(nullptr);
  j["ceiling_z"] = world.ceiling_z ? json(*world.ceiling_z) : json(nullptr);
  j["cylinders"] = json::array();
  for (const Cylinder& c : world.cylinders) {
    j["cylinders"].push_back({{"center", json::array({c.center.x(), c.center.y()})},
                              {"radius", c.radius},
                              {"z_min", c.z_min},
                              {"z_max", c.z_max}});
  }
  j["boxes"] = json::array();
  for (const Box& b : world.boxes) {
    j["boxes"].push_back({{"min", vec3_to_json(b.min)}, {"max", vec3_to_json(b.max)}});
  }
  std::ofstream os(path);
  if (!os) throw std::runtime_error("save_world: cannot open " + path.string());
  os << j.dump(2) << "\n";
  if (!os) throw std::runtime_error("save_world: write failed for " + path.string());
}

World load_world(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("load_world: cannot open " + path.string());
  json j;
  try {
    is >> j;
  } catch (const std::exception& e) {
    throw std::runtime_error("load_world: parse error in " + path.string() + ": " + e.what());
  }
  if (j.value("version", 0) != 1)
    throw std::runtime_error("load_world: unsupported version in " + path.string());
  World w;
  w.bounds.min = vec3_from_json(j.at("bounds").at("min"));
  w.bounds.max = vec3_from_json(j.at("bounds").at("max"));
  if (!j.at("ground_z").is_null()) w.ground_z = j.at("ground_z").get<double>();
  if (!j.at("ceiling_z").is_null()) w.ceiling_z = j.at("ceiling_z").get<double>();
  for (const auto& cj : j.at("cylinders")) {
    Cylinder c;
    c.center = Eigen::Vector2d(cj.at("center")[0].get<double>(),
                               cj.at("center")[1].get<double>());
    c.radius = cj.at("radius").get<double>();
    c.z_min = cj.at("z_min").get<double>();
    c.z_max = cj.at("z_max").get<double>();
    w.cylinders.push_back(c);
  }
  for (const auto& bj : j.at("boxes")) {
    w.boxes.push_back({vec3_from_json(bj.at("min")), vec3_from_json(bj.at("max"))});
  }
  return w;
}

}  // namespace arcnav
