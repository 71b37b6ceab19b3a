#pragma once

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "arcnav/kd_tree.hpp"

namespace arcnav {

/// Pinhole depth camera: intrinsics, valid depth range, and the body-to-
/// sensor extrinsic (maps body-frame coordinates into the sensor frame).
/// Sensor frame convention: +z optical axis, +x right, +y down.
///
/// Raster depth semantics: finite value = measured sensor-frame z of a
/// surface; +inf = no return within [d_min, d_max] (the ray is known free
/// through the measured range); NaN = invalid pixel (dropout), which is
/// never treated as free.
struct CameraModel {
  double fx{220.0}, fy{220.0};
  double cx{211.5}, cy{119.5};
  int width{424}, height{240};
  double d_min{0.3}, d_max{10.0};
  int edge_margin_px{2};
  double occlusion_band{0.1};  // +/- band around the measured surface
  Eigen::Isometry3d body_to_sensor{Eigen::Isometry3d::Identity()};

  /// Forward-looking 424x240 profile: body x maps to the optical axis.
  static CameraModel forward_depth();

  void validate() const;
};

inline const float kInvalidDepth = std::numeric_limits<float>::quiet_NaN();
inline const float kFreeDepth = std::numeric_limits<float>::infinity();

struct PixelHit {
  double u{0.0}, v{0.0};
  double depth{0.0};
};

/// Pinhole projection with the in-view test (depth range and image bounds
/// shrunk by the edge margin). Out-of-view returns nullopt.
std::optional<PixelHit> project(const CameraModel& camera, const Eigen::Vector3d& p_S);

/// Back-projection of pixel center (col, row) at the given sensor depth.
Eigen::Vector3d back_project(const CameraModel& camera, int col, int row, double depth);

/// One depth observation: the raster, the back-projected (optionally
/// strided) point cloud in this sensor's frame, and its k-d tree.
class DepthFrame {
 public:
  DepthFrame(std::vector<float> raster, const CameraModel& camera, double stamp,
             int stride = 1);

  double stamp() const { return stamp_; }
  int width() const { return width_; }
  int height() const { return height_; }
  float depth_at(int col, int row) const { return raster_[row * width_ + col]; }
  const std::vector<float>& raster() const { return raster_; }
  const std::vector<Eigen::Vector3d>& points() const { return kd_.points(); }
  const KdTree3& kd_index() const { return kd_; }

 private:
  std::vector<float> raster_;
  int width_{0}, height_{0};
  double stamp_{0.0};
  KdTree3 kd_;
};

enum class FrameClass { FreeKnown, Occluded, OutOfView };

/// Free-space test of a sensor-frame point against one frame: compares the
/// point's depth with the raster measurement at its pixel. Points more than
/// occlusion_band behind the surface (or at invalid pixels) are Occluded;
/// everything else in view is FreeKnown.
FrameClass classify_in_frame(const DepthFrame& frame, const CameraModel& camera,
                             const Eigen::Vector3d& p_S);

/// Exact k nearest cloud points (ascending by distance).
std::vector<KdTree3::Neighbor> knn(const DepthFrame& frame,
                                   const Eigen::Vector3d& p_S, int k);

struct QueryResult {
  enum class Verdict { FreeKnown, NearObstacle, Unknown };
  Verdict verdict{Verdict::Unknown};
  double distance{std::numeric_limits<double>::infinity()};
  int frame_index{-1};
  std::vector<Eigen::Vector3d> neighbors;  // sensor frame of the resolving frame
};

/// Sliding time window of depth frames linked newest-first by relative
/// sensor-to-sensor transforms. One writer (push_frame) and any number of
/// concurrent readers; readers operate on an immutable snapshot.
class FrameChain {
 public:
  struct Entry {
    std::shared_ptr<const DepthFrame> frame;
    /// Maps this frame's sensor coordinates into the next-older frame's
    /// sensor coordinates. Unused for the oldest entry.
    Eigen::Isometry3d edge_to_older{Eigen::Isometry3d::Identity()};
  };

  struct Snapshot {
    std::shared_ptr<const std::vector<Entry>> entries;
    CameraModel camera;
    Eigen::Isometry3d world_from_body{Eigen::Isometry3d::Identity()};  // at newest stamp

    bool empty() const { return !entries || entries->empty(); }
    std::size_t size() const { return entries ? entries->size() : 0; }
  };

  FrameChain(const CameraModel& camera, double history_duration);
  FrameChain(FrameChain&& other) noexcept;
  FrameChain& operator=(FrameChain&& other) noexcept;
  FrameChain(const FrameChain&) = delete;
  FrameChain& operator=(const FrameChain&) = delete;

  /// Prepends a frame. `edge_to_older` maps the new frame's sensor
  /// coordinates into the previous newest frame's; `world_from_body` is the
  /// body pose at the frame stamp (anchor for world-frame callers). Frames
  /// older than history_duration before the new stamp are evicted. Throws
  /// std::invalid_argument when the stamp is not strictly newer.
  void push_frame(std::shared_ptr<const DepthFrame> frame,
                  const Eigen::Isometry3d& edge_to_older,
                  const Eigen::Isometry3d& world_from_body);

  Snapshot snapshot() const;
  std::size_t size() const;
  double history_duration() const { return history_duration_; }
  const CameraModel& camera() const { return camera_; }

 private:
  CameraModel camera_;
  double history_duration_{1.0};
  std::shared_ptr<const std::vector<Entry>> entries_;
  Eigen::Isometry3d world_from_body_{Eigen::Isometry3d::Identity()};
  mutable std::mutex mutex_;
};

/// Resolves a body-frame point against the chain: the point is transformed
/// into the newest sensor frame, then stepped frame-by-frame through the
/// stored relative transforms (newest to oldest). The first frame that
/// classifies it FreeKnown resolves the query with the nearest-neighbor
/// distance; NearObstacle when that distance is below r_coll. Unknown when
/// no frame contains the point.
QueryResult query(const FrameChain::Snapshot& snap, const Eigen::Vector3d& p_B,
                  int k, double r_coll);
QueryResult query(const FrameChain& chain, const Eigen::Vector3d& p_B, int k,
                  double r_coll);

/// Diagnostic dump of one frame: magic + version, width, height, fx, fy,
/// cx, cy, stamp, then the row-major raster as little-endian 32-bit floats.
void dump_frame(const DepthFrame& frame, const CameraModel& camera,
                const std::filesystem::path& path);

struct FrameDump {
  int width{0}, height{0};
  double fx{0}, fy{0}, cx{0}, cy{0};
  double stamp{0};
  std::vector<float> raster;
};

FrameDump load_frame_dump(const std::filesystem::path& path);

}  // namespace arcnav
