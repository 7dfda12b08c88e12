#pragma once

#include <atomic>
#include <bit>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "vcd/pose.hpp"

namespace vcd {

struct PoseSample {
  std::int64_t timestamp_ms = 0;
  ViewerPose pose;
};

/// Pose log: one `timestamp_ms distance_m theta_x_rad theta_y_rad` per line.
/// Blank lines and lines starting with '#' are skipped. Timestamps must not
/// decrease.
std::vector<PoseSample> parse_pose_log(std::istream& in);
std::vector<PoseSample> read_pose_log(const std::filesystem::path& path);
void write_pose_log(std::ostream& out, const std::vector<PoseSample>& samples);

struct FaceBoxSample {
  std::int64_t timestamp_ms = 0;
  FaceObservation face;
  int frame_w_px = 0;
  int frame_h_px = 0;
};

/// Face-box wire format: `timestamp_ms x y w h frame_w frame_h`. Returns
/// nullopt for blank and comment lines; malformed lines throw Validation.
std::optional<FaceBoxSample> parse_face_box_line(const std::string& line);

/// Pose estimate for a face box, using the frame size carried on the wire.
PoseSample estimate_pose(const FaceBoxSample& sample, CameraModel cam);

/// Source of viewer poses. next() returns nullopt when nothing new is
/// available (no face in view, or the source is exhausted).
class FaceProvider {
 public:
  virtual ~FaceProvider() = default;
  virtual std::optional<PoseSample> next() = 0;
  virtual bool exhausted() const = 0;
};

/// Replays a fixed sequence, one sample per call.
class ScriptedFaceProvider final : public FaceProvider {
 public:
  explicit ScriptedFaceProvider(std::vector<PoseSample> samples) : samples_(std::move(samples)) {}
  std::optional<PoseSample> next() override;
  bool exhausted() const override { return cursor_ >= samples_.size(); }

 private:
  std::vector<PoseSample> samples_;
  std::size_t cursor_ = 0;
};

class PoseLogFaceProvider final : public FaceProvider {
 public:
  explicit PoseLogFaceProvider(const std::filesystem::path& path) : inner_(read_pose_log(path)) {}
  std::optional<PoseSample> next() override { return inner_.next(); }
  bool exhausted() const override { return inner_.exhausted(); }

 private:
  ScriptedFaceProvider inner_;
};

/// Reads face boxes from an external detector (a file, FIFO or pipe) and
/// turns each into a pose. Lines with a zero-width box mean "no face".
class FaceBoxStreamProvider final : public FaceProvider {
 public:
  FaceBoxStreamProvider(std::istream& in, CameraModel cam) : in_(in), cam_(cam) {}
  std::optional<PoseSample> next() override;
  bool exhausted() const override { return done_; }

 private:
  std::istream& in_;
  CameraModel cam_;
  bool done_ = false;
};

/// Decides when a pose moved enough to justify a new kernel.
struct HysteresisPolicy {
  double distance_rel = 0.02;
  double angle_rad = deg_to_rad(1.0);

  bool significant(const ViewerPose& current, const ViewerPose& candidate) const noexcept;
};

/// Poses sorted by time with hysteresis applied once up front, so the kernel
/// generation at a media time is a pure function of the log.
class PoseTimeline {
 public:
  PoseTimeline(std::vector<PoseSample> samples, HysteresisPolicy policy = {});

  struct Entry {
    std::int64_t timestamp_ms;
    ViewerPose pose;        // last accepted pose at this time
    std::uint64_t generation;
  };

  /// Accepted pose at time t; times before the first sample use the first.
  const Entry& at(std::int64_t t_ms) const;
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  std::uint64_t generations() const noexcept { return generations_; }

 private:
  std::vector<Entry> entries_;
  std::uint64_t generations_ = 0;
};

struct PoseSnapshot {
  ViewerPose pose;
  std::uint64_t generation = 0;
  std::int64_t timestamp_ms = 0;
};

/// Single-writer seqlock. Readers never block the writer and retry until they
/// see a consistent copy, so a torn pose cannot be observed.
class PoseCell {
 public:
  explicit PoseCell(const PoseSnapshot& initial = {}) { store(initial); }

  void store(const PoseSnapshot& s) noexcept;
  PoseSnapshot load() const noexcept;

 private:
  static std::uint64_t bits(double v) noexcept { return std::bit_cast<std::uint64_t>(v); }
  static double value(std::uint64_t b) noexcept { return std::bit_cast<double>(b); }

  std::atomic<std::uint64_t> seq_{0};
  std::atomic<std::uint64_t> distance_{0};
  std::atomic<std::uint64_t> theta_x_{0};
  std::atomic<std::uint64_t> theta_y_{0};
  std::atomic<std::uint64_t> generation_{0};
  std::atomic<std::int64_t> timestamp_{0};
};

/// Polls a FaceProvider on its own thread and publishes poses that pass the
/// hysteresis policy. step() runs one poll synchronously for tests and
/// deterministic replay.
class PoseTracker {
 public:
  using Listener = std::function<void(const PoseSnapshot&)>;

  PoseTracker(std::unique_ptr<FaceProvider> provider, ViewerPose initial,
              HysteresisPolicy policy = {});
  ~PoseTracker();
  PoseTracker(const PoseTracker&) = delete;
  PoseTracker& operator=(const PoseTracker&) = delete;

  /// Starts the update loop at `rate_hz` (10 Hz by default).
  void start(double rate_hz = 10.0);
  void stop();
  bool running() const noexcept { return thread_.joinable(); }

  /// Returns true when a new generation was published.
  bool step();
  /// Publishes a pose directly, still subject to hysteresis.
  bool offer(const PoseSample& sample);

  PoseSnapshot snapshot() const noexcept { return cell_.load(); }
  /// Called on the tracker thread after each publication.
  void set_listener(Listener listener);

 private:
  std::unique_ptr<FaceProvider> provider_;
  HysteresisPolicy policy_;
  PoseCell cell_;
  std::mutex writer_;  // serializes step() and offer(); readers use the cell
  Listener listener_;
  std::jthread thread_;
};

}  // namespace vcd
