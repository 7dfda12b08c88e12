#include "vcd/pose_tracking.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "vcd/log.hpp"

namespace vcd {
namespace {

bool skippable(const std::string& line) {
  const auto first = line.find_first_not_of(" \t\r");
  return first == std::string::npos || line[first] == '#';
}

}  // namespace

std::vector<PoseSample> parse_pose_log(std::istream& in) {
  std::vector<PoseSample> samples;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (skippable(line)) continue;
    std::istringstream fields(line);
    PoseSample s;
    std::string extra;
    if (!(fields >> s.timestamp_ms >> s.pose.distance_m >> s.pose.theta_x >> s.pose.theta_y) ||
        (fields >> extra)) {
      fail(ErrorKind::Validation, "pose log line " + std::to_string(number) +
                                      ": expected `timestamp_ms distance_m theta_x_rad theta_y_rad`");
    }
    try {
      s.pose.validate();
    } catch (const Error& e) {
      fail(ErrorKind::Validation, "pose log line " + std::to_string(number) + ": " + e.what());
    }
    if (!samples.empty() && s.timestamp_ms < samples.back().timestamp_ms) {
      fail(ErrorKind::Validation,
           "pose log line " + std::to_string(number) + ": timestamp goes backwards");
    }
    samples.push_back(s);
  }
  return samples;
}

std::vector<PoseSample> read_pose_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open pose log " + path.string());
  return parse_pose_log(in);
}

void write_pose_log(std::ostream& out, const std::vector<PoseSample>& samples) {
  const auto precision = out.precision(17);
  for (const auto& s : samples) {
    out << s.timestamp_ms << ' ' << s.pose.distance_m << ' ' << s.pose.theta_x << ' '
        << s.pose.theta_y << '\n';
  }
  out.precision(precision);
}

std::optional<FaceBoxSample> parse_face_box_line(const std::string& line) {
  if (skippable(line)) return std::nullopt;
  std::istringstream fields(line);
  FaceBoxSample s;
  auto& b = s.face.bbox;
  std::string extra;
  if (!(fields >> s.timestamp_ms >> b.x >> b.y >> b.width >> b.height >> s.frame_w_px >>
        s.frame_h_px) ||
      (fields >> extra)) {
    fail(ErrorKind::Validation, "face box line: expected `timestamp_ms x y w h frame_w frame_h`");
  }
  require(s.frame_w_px > 0 && s.frame_h_px > 0, ErrorKind::Validation,
          "face box line: frame size must be positive");
  require(b.width >= 0 && b.height >= 0, ErrorKind::Validation,
          "face box line: box size must be non-negative");
  require(b.x >= 0 && b.y >= 0 && b.x + b.width <= s.frame_w_px && b.y + b.height <= s.frame_h_px,
          ErrorKind::Validation, "face box line: box lies outside the frame");
  return s;
}

PoseSample estimate_pose(const FaceBoxSample& sample, CameraModel cam) {
  cam.frame_w_px = sample.frame_w_px;
  cam.frame_h_px = sample.frame_h_px;
  return {sample.timestamp_ms, estimate_pose(sample.face, cam)};
}

std::optional<PoseSample> ScriptedFaceProvider::next() {
  if (cursor_ >= samples_.size()) return std::nullopt;
  return samples_[cursor_++];
}

std::optional<PoseSample> FaceBoxStreamProvider::next() {
  std::string line;
  while (!done_) {
    if (!std::getline(in_, line)) {
      done_ = true;
      break;
    }
    const auto sample = parse_face_box_line(line);
    if (!sample) continue;
    if (sample->face.bbox.width == 0) return std::nullopt;
    return estimate_pose(*sample, cam_);
  }
  return std::nullopt;
}

bool HysteresisPolicy::significant(const ViewerPose& current,
                                   const ViewerPose& candidate) const noexcept {
  return std::abs(candidate.distance_m - current.distance_m) > distance_rel * current.distance_m ||
         std::abs(candidate.theta_x - current.theta_x) > angle_rad ||
         std::abs(candidate.theta_y - current.theta_y) > angle_rad;
}

PoseTimeline::PoseTimeline(std::vector<PoseSample> samples, HysteresisPolicy policy) {
  require(!samples.empty(), ErrorKind::Validation, "pose timeline needs at least one sample");
  std::stable_sort(samples.begin(), samples.end(),
                   [](const auto& a, const auto& b) { return a.timestamp_ms < b.timestamp_ms; });
  ViewerPose accepted = samples.front().pose;
  std::uint64_t generation = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i > 0 && policy.significant(accepted, samples[i].pose)) {
      accepted = samples[i].pose;
      ++generation;
    }
    entries_.push_back({samples[i].timestamp_ms, accepted, generation});
  }
  generations_ = generation + 1;
}

const PoseTimeline::Entry& PoseTimeline::at(std::int64_t t_ms) const {
  auto it = std::upper_bound(entries_.begin(), entries_.end(), t_ms,
                             [](std::int64_t t, const Entry& e) { return t < e.timestamp_ms; });
  if (it == entries_.begin()) return entries_.front();
  return *std::prev(it);
}

void PoseCell::store(const PoseSnapshot& s) noexcept {
  const std::uint64_t seq = seq_.load(std::memory_order_relaxed);
  seq_.store(seq + 1, std::memory_order_relaxed);
  std::atomic_thread_fence(std::memory_order_release);
  distance_.store(bits(s.pose.distance_m), std::memory_order_relaxed);
  theta_x_.store(bits(s.pose.theta_x), std::memory_order_relaxed);
  theta_y_.store(bits(s.pose.theta_y), std::memory_order_relaxed);
  generation_.store(s.generation, std::memory_order_relaxed);
  timestamp_.store(s.timestamp_ms, std::memory_order_relaxed);
  seq_.store(seq + 2, std::memory_order_release);
}

PoseSnapshot PoseCell::load() const noexcept {
  for (;;) {
    const std::uint64_t before = seq_.load(std::memory_order_acquire);
    if (before & 1U) {
      std::this_thread::yield();
      continue;
    }
    PoseSnapshot s;
    s.pose.distance_m = value(distance_.load(std::memory_order_relaxed));
    s.pose.theta_x = value(theta_x_.load(std::memory_order_relaxed));
    s.pose.theta_y = value(theta_y_.load(std::memory_order_relaxed));
    s.generation = generation_.load(std::memory_order_relaxed);
    s.timestamp_ms = timestamp_.load(std::memory_order_relaxed);
    std::atomic_thread_fence(std::memory_order_acquire);
    if (seq_.load(std::memory_order_relaxed) == before) return s;
  }
}

PoseTracker::PoseTracker(std::unique_ptr<FaceProvider> provider, ViewerPose initial,
                         HysteresisPolicy policy)
    : provider_(std::move(provider)), policy_(policy), cell_({initial, 0, 0}) {
  initial.validate();
}

PoseTracker::~PoseTracker() { stop(); }

void PoseTracker::start(double rate_hz) {
  require(rate_hz > 0.0, ErrorKind::Precondition, "pose update rate must be > 0");
  require(provider_ != nullptr, ErrorKind::Precondition, "pose tracker has no provider");
  stop();
  const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(1.0 / rate_hz));
  thread_ = std::jthread([this, period](std::stop_token stop) {
    auto deadline = std::chrono::steady_clock::now();
    while (!stop.stop_requested()) {
      try {
        step();
      } catch (const std::exception& e) {
        log::warn(std::string("pose update failed: ") + e.what());
      }
      deadline += period;
      std::this_thread::sleep_until(deadline);
    }
  });
}

void PoseTracker::stop() {
  if (thread_.joinable()) {
    thread_.request_stop();
    thread_.join();
  }
}

bool PoseTracker::step() {
  std::optional<PoseSample> sample;
  {
    std::lock_guard lock(writer_);
    if (!provider_) return false;
    sample = provider_->next();
  }
  return sample ? offer(*sample) : false;
}

bool PoseTracker::offer(const PoseSample& sample) {
  sample.pose.validate();
  PoseSnapshot published;
  Listener listener;
  {
    std::lock_guard lock(writer_);
    const PoseSnapshot current = cell_.load();
    if (!policy_.significant(current.pose, sample.pose)) return false;
    published = {sample.pose, current.generation + 1, sample.timestamp_ms};
    cell_.store(published);
    listener = listener_;
  }
  if (listener) listener(published);
  return true;
}

void PoseTracker::set_listener(Listener listener) {
  std::lock_guard lock(writer_);
  listener_ = std::move(listener);
}

}  // namespace vcd
