#include "arcnav/depth_memory.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace arcnav {

CameraModel CameraModel::forward_depth() {
  CameraModel cam;
  // Body frame: x forward, y left, z up. Sensor: x right, y down, z forward.
  Eigen::Matrix3d r;
  r << 0, -1, 0,
       0, 0, -1,
       1, 0, 0;
  cam.body_to_sensor.linear() = r;
  cam.body_to_sensor.translation().setZero();
  return cam;
}

void CameraModel::validate() const {
  if (fx <= 0.0 || fy <= 0.0) throw std::invalid_argument("CameraModel: fx, fy must be > 0");
  if (!(0.0 < d_min && d_min < d_max))
    throw std::invalid_argument("CameraModel: require 0 < d_min < d_max");
  if (width <= 0 || height <= 0) throw std::invalid_argument("CameraModel: bad image size");
  const Eigen::Matrix3d r = body_to_sensor.linear();
  if ((r * r.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() > 1e-9 ||
      std::abs(r.determinant() - 1.0) > 1e-9) {
    throw std::invalid_argument("CameraModel: body_to_sensor is not a proper rigid transform");
  }
}

std::optional<PixelHit> project(const CameraModel& camera, const Eigen::Vector3d& p_S) {
  const double z = p_S.z();
  if (!(z >= camera.d_min && z <= camera.d_max)) return std::nullopt;
  const double u = camera.fx * p_S.x() / z + camera.cx;
  const double v = camera.fy * p_S.y() / z + camera.cy;
  const int col = static_cast<int>(std::lround(u));
  const int row = static_cast<int>(std::lround(v));
  const int m = camera.edge_margin_px;
  if (col < m || col > camera.width - 1 - m || row < m || row > camera.height - 1 - m)
    return std::nullopt;
  return PixelHit{u, v, z};
}

Eigen::Vector3d back_project(const CameraModel& camera, int col, int row, double depth) {
  return {depth * (col - camera.cx) / camera.fx,
          depth * (row - camera.cy) / camera.fy, depth};
}

DepthFrame::DepthFrame(std::vector<float> raster, const CameraModel& camera,
                       double stamp, int stride)
    : raster_(std::move(raster)), width_(camera.width), height_(camera.height),
      stamp_(stamp) {
  if (static_cast<int>(raster_.size()) != width_ * height_)
    throw std::invalid_argument("DepthFrame: raster size does not match camera");
  if (stride < 1) throw std::invalid_argument("DepthFrame: stride < 1");
  std::vector<Eigen::Vector3d> pts;
  pts.reserve(raster_.size() / (stride * stride) + 16);
  for (int row = 0; row < height_; row += stride) {
    for (int col = 0; col < width_; col += stride) {
      const float d = raster_[row * width_ + col];
      if (std::isfinite(d)) pts.push_back(back_project(camera, col, row, d));
    }
  }
  kd_ = KdTree3(std::move(pts));
}

FrameClass classify_in_frame(const DepthFrame& frame, const CameraModel& camera,
                             const Eigen::Vector3d& p_S) {
  const auto hit = project(camera, p_S);
  if (!hit) return FrameClass::OutOfView;
  const float measured = frame.depth_at(static_cast<int>(std::lround(hit->u)),
                                        static_cast<int>(std::lround(hit->v)));
  if (std::isnan(measured)) return FrameClass::Occluded;
  if (hit->depth > static_cast<double>(measured) + camera.occlusion_band)
    return FrameClass::Occluded;
  return FrameClass::FreeKnown;
}

std::vector<KdTree3::Neighbor> knn(const DepthFrame& frame, const Eigen::Vector3d& p_S,
                                   int k) {
  if (k < 1) throw std::invalid_argument("knn: k < 1");
  return frame.kd_index().knn(p_S, k);
}

FrameChain::FrameChain(const CameraModel& camera, double history_duration)
    : camera_(camera), history_duration_(history_duration),
      entries_(std::make_shared<const std::vector<Entry>>()) {
  camera_.validate();
  if (history_duration_ <= 0.0)
    throw std::invalid_argument("FrameChain: history_duration <= 0");
}

FrameChain::FrameChain(FrameChain&& other) noexcept {
  std::lock_guard<std::mutex> lock(other.mutex_);
  camera_ = other.camera_;
  history_duration_ = other.history_duration_;
  entries_ = std::move(other.entries_);
  world_from_body_ = other.world_from_body_;
}

FrameChain& FrameChain::operator=(FrameChain&& other) noexcept {
  if (this != &other) {
    std::scoped_lock lock(mutex_, other.mutex_);
    camera_ = other.camera_;
    history_duration_ = other.history_duration_;
    entries_ = std::move(other.entries_);
    world_from_body_ = other.world_from_body_;
  }
  return *this;
}

void FrameChain::push_frame(std::shared_ptr<const DepthFrame> frame,
                            const Eigen::Isometry3d& edge_to_older,
                            const Eigen::Isometry3d& world_from_body) {
  if (!frame) throw std::invalid_argument("push_frame: null frame");
  std::lock_guard<std::mutex> lock(mutex_);
  const auto& old = *entries_;
  if (!old.empty() && frame->stamp() <= old.front().frame->stamp()) {
    throw std::invalid_argument("push_frame: stamp is not strictly newer");
  }
  auto next = std::make_shared<std::vector<Entry>>();
  next->reserve(old.size() + 1);
  next->push_back({std::move(frame), edge_to_older});
  const double cutoff = next->front().frame->stamp() - history_duration_ - 1e-9;
  for (const Entry& e : old) {
    if (e.frame->stamp() >= cutoff) next->push_back(e);
  }
  entries_ = std::move(next);
  world_from_body_ = world_from_body;
}

FrameChain::Snapshot FrameChain::snapshot() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return Snapshot{entries_, camera_, world_from_body_};
}

std::size_t FrameChain::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return entries_->size();
}

QueryResult query(const FrameChain::Snapshot& snap, const Eigen::Vector3d& p_B,
                  int k, double r_coll) {
  QueryResult out;
  if (snap.empty()) return out;
  Eigen::Vector3d p = snap.camera.body_to_sensor * p_B;
  const auto& entries = *snap.entries;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const FrameClass c = classify_in_frame(*entries[i].frame, snap.camera, p);
    if (c == FrameClass::FreeKnown) {
      out.frame_index = static_cast<int>(i);
      const auto neighbors = entries[i].frame->kd_index().knn(p, k);
      if (neighbors.empty()) {
        out.verdict = QueryResult::Verdict::FreeKnown;  // view with no returns
        return out;
      }
      out.distance = neighbors.front().distance;
      out.neighbors.reserve(neighbors.size());
      for (const auto& n : neighbors)
        out.neighbors.push_back(entries[i].frame->kd_index().point(n.index));
      out.verdict = out.distance < r_coll ? QueryResult::Verdict::NearObstacle
                                          : QueryResult::Verdict::FreeKnown;
      return out;
    }
    p = entries[i].edge_to_older * p;
  }
  return out;  // Unknown
}

QueryResult query(const FrameChain& chain, const Eigen::Vector3d& p_B, int k,
                  double r_coll) {
  return query(chain.snapshot(), p_B, k, r_coll);
}

namespace {

constexpr char kDumpMagic[8] = {'A', 'R', 'C', 'D', 'E', 'P', 'T', 'H'};
constexpr std::uint32_t kDumpVersion = 1;

template <typename T>
void write_le(std::ofstream& os, T value) {
  // Little-endian host assumed; raw write keeps the raster bit-exact.
  os.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_le(std::ifstream& is) {
  T value{};
  is.read(reinterpret_cast<char*>(&value), sizeof(T));
  return value;
}

}  // namespace

void dump_frame(const DepthFrame& frame, const CameraModel& camera,
                const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("dump_frame: cannot open " + path.string());
  os.write(kDumpMagic, sizeof(kDumpMagic));
  write_le(os, kDumpVersion);
  write_le(os, static_cast<std::uint32_t>(frame.width()));
  write_le(os, static_cast<std::uint32_t>(frame.height()));
  write_le(os, camera.fx);
  write_le(os, camera.fy);
  write_le(os, camera.cx);
  write_le(os, camera.cy);
  write_le(os, frame.stamp());
  os.write(reinterpret_cast<const char*>(frame.raster().data()),
           static_cast<std::streamsize>(frame.raster().size() * sizeof(float)));
  if (!os) throw std::runtime_error("dump_frame: write failed for " + path.string());
}

FrameDump load_frame_dump(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("load_frame_dump: cannot open " + path.string());
  char magic[8];
  is.read(magic, sizeof(magic));
  if (std::memcmp(magic, kDumpMagic, sizeof(magic)) != 0)
    throw std::runtime_error("load_frame_dump: bad magic in " + path.string());
  if (read_le<std::uint32_t>(is) != kDumpVersion)
    throw std::runtime_error("load_frame_dump: unsupported version in " + path.string());
  FrameDump d;
  d.width = static_cast<int>(read_le<std::uint32_t>(is));
  d.height = static_cast<int>(read_le<std::uint32_t>(is));
  d.fx = read_le<double>(is);
  d.fy = read_le<double>(is);
  d.cx = read_le<double>(is);
  d.cy = read_le<double>(is);
  d.stamp = read_le<double>(is);
  d.raster.resize(static_cast<std::size_t>(d.width) * d.height);
  is.read(reinterpret_cast<char*>(d.raster.data()),
          static_cast<std::streamsize>(d.raster.size() * sizeof(float)));
  if (!is) throw std::runtime_error("load_frame_dump: truncated file " + path.string());
  return d;
}

}  // namespace arcnav
