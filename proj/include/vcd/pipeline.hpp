#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <cstdio>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "vcd/image.hpp"
#include "vcd/kernel.hpp"
#include "vcd/pose_tracking.hpp"
#include "vcd/precorrect.hpp"
#include "vcd/psf.hpp"

namespace vcd {

/// Packed 8-bit RGB frame.
struct Frame {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  Frame() = default;
  Frame(int w, int h) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3) {}
  std::size_t bytes() const noexcept { return rgb.size(); }
  friend bool operator==(const Frame&, const Frame&) = default;
};

RasterImage frame_to_image(const Frame& frame);
Frame image_to_frame(const RasterImage& image);

/// Random-access frame source. read() is only called from the producer
/// thread; it returns nullopt past the end of the stream.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual int width() const = 0;
  virtual int height() const = 0;
  virtual double fps() const = 0;
  /// Known length, or nullopt for a stream whose end has not been seen.
  virtual std::optional<std::int64_t> frame_count() const = 0;
  virtual std::optional<Frame> read(std::int64_t index) = 0;
};

class MemoryFrameSource final : public FrameSource {
 public:
  MemoryFrameSource(std::vector<Frame> frames, double fps);
  int width() const override { return width_; }
  int height() const override { return height_; }
  double fps() const override { return fps_; }
  std::optional<std::int64_t> frame_count() const override {
    return static_cast<std::int64_t>(frames_.size());
  }
  std::optional<Frame> read(std::int64_t index) override;

 private:
  std::vector<Frame> frames_;
  int width_ = 0;
  int height_ = 0;
  double fps_ = 0.0;
};

/// Deterministic moving test pattern (gradients, bars and blocky glyphs),
/// generated on demand so long clips need no memory.
class SyntheticFrameSource final : public FrameSource {
 public:
  SyntheticFrameSource(int width, int height, double fps, std::int64_t count);
  int width() const override { return width_; }
  int height() const override { return height_; }
  double fps() const override { return fps_; }
  std::optional<std::int64_t> frame_count() const override { return count_; }
  std::optional<Frame> read(std::int64_t index) override;

 private:
  int width_;
  int height_;
  double fps_;
  std::int64_t count_;
};

Frame synthetic_frame(int width, int height, std::int64_t index);

/// Raw-frame pipe protocol: an ASCII header line `width height fps`, then
/// packed RGB frames of width*height*3 bytes each, back to back.
struct RawStreamHeader {
  int width = 0;
  int height = 0;
  double fps = 0.0;
};

RawStreamHeader read_raw_header(std::FILE* in);
void write_raw_header(std::FILE* out, const RawStreamHeader& header);

/// Frames from a raw stream. Regular files are read by offset; pipes are read
/// forward and keep a window of recent frames so short backward seeks work.
class RawStreamSource final : public FrameSource {
 public:
  /// Takes ownership of `in` when `owned` is true.
  RawStreamSource(std::FILE* in, bool owned, std::size_t retain_frames = 8);
  ~RawStreamSource() override;
  RawStreamSource(const RawStreamSource&) = delete;
  RawStreamSource& operator=(const RawStreamSource&) = delete;

  int width() const override { return header_.width; }
  int height() const override { return header_.height; }
  double fps() const override { return header_.fps; }
  std::optional<std::int64_t> frame_count() const override { return count_; }
  std::optional<Frame> read(std::int64_t index) override;

 private:
  std::optional<Frame> read_next();

  std::FILE* in_;
  bool owned_;
  RawStreamHeader header_;
  long data_offset_ = 0;
  bool seekable_ = false;
  std::size_t retain_;
  std::int64_t next_index_ = 0;
  std::deque<std::pair<std::int64_t, Frame>> window_;
  std::optional<std::int64_t> count_;
};

class RawFrameWriter {
 public:
  RawFrameWriter(std::FILE* out, const RawStreamHeader& header);
  void write(const Frame& frame);
  std::int64_t frames_written() const noexcept { return written_; }

 private:
  std::FILE* out_;
  RawStreamHeader header_;
  std::int64_t written_ = 0;
};

struct KernelSnapshot {
  std::shared_ptr<const Kernel> kernel;
  std::uint64_t generation = 0;
};

/// Kernel to use for a frame. Sources whose generation can change for a frame
/// that is already cached (live tracking) make the cache re-fill.
class KernelSource {
 public:
  virtual ~KernelSource() = default;
  virtual KernelSnapshot at(std::int64_t frame_index, double media_time_s) = 0;
  /// Generation that at() would report, without building a kernel.
  virtual std::uint64_t generation(std::int64_t frame_index, double media_time_s) {
    return at(frame_index, media_time_s).generation;
  }
};

class FixedKernelSource final : public KernelSource {
 public:
  explicit FixedKernelSource(Kernel kernel)
      : kernel_(std::make_shared<const Kernel>(std::move(kernel))) {}
  KernelSnapshot at(std::int64_t, double) override { return {kernel_, 0}; }
  std::uint64_t generation(std::int64_t, double) override { return 0; }

 private:
  std::shared_ptr<const Kernel> kernel_;
};

/// Kernel keyed on media time through a pose log, so a replay produces the
/// same pixels no matter how fast it runs.
class PoseLogKernelSource final : public KernelSource {
 public:
  PoseLogKernelSource(PoseTimeline timeline, OpticalSpec spec, int base_size = 33);
  KernelSnapshot at(std::int64_t frame_index, double media_time_s) override;
  std::uint64_t generation(std::int64_t, double media_time_s) override;
  const PoseTimeline& timeline() const noexcept { return timeline_; }

 private:
  PoseTimeline timeline_;
  OpticalSpec spec_;
  int base_size_;
  std::mutex mutex_;
  std::map<std::uint64_t, std::shared_ptr<const Kernel>> kernels_;
};

/// Kernel for the latest pose published by a live tracker.
class TrackerKernelSource final : public KernelSource {
 public:
  TrackerKernelSource(const PoseTracker& tracker, OpticalSpec spec, int base_size = 33)
      : tracker_(tracker), spec_(spec), base_size_(base_size) {}
  KernelSnapshot at(std::int64_t frame_index, double media_time_s) override;
  std::uint64_t generation(std::int64_t, double) override { return tracker_.snapshot().generation; }

 private:
  const PoseTracker& tracker_;
  OpticalSpec spec_;
  int base_size_;
  std::mutex mutex_;
  KernelSnapshot last_;
};

/// Default cache depth: about three seconds of video.
int default_cache_capacity(double fps, double seconds = 3.0);

/// Precorrected frames ahead of the playhead. Not synchronized; the session
/// guards it with its own lock.
class FrameCache {
 public:
  struct Entry {
    std::shared_ptr<const Frame> frame;
    std::uint64_t generation = 0;
  };

  explicit FrameCache(int capacity);

  int capacity() const noexcept { return capacity_; }
  int size() const noexcept { return static_cast<int>(entries_.size()); }
  bool full() const noexcept { return size() >= capacity_; }
  bool contains(std::int64_t index) const { return entries_.count(index) != 0; }
  /// Returns false when full or when the index is already cached.
  bool put(std::int64_t index, Entry entry);
  const Entry* find(std::int64_t index) const;
  void erase(std::int64_t index) { entries_.erase(index); }
  /// Drops every entry with index < `index`.
  void evict_before(std::int64_t index);
  void clear() { entries_.clear(); }

 private:
  int capacity_;
  std::map<std::int64_t, Entry> entries_;
};

/// Double buffer. Writers fill back() and swap(); readers take front() and
/// only ever see complete frames.
class PresentSurface {
 public:
  Frame& back();
  void swap();
  std::shared_ptr<const Frame> front() const;

 private:
  mutable std::mutex mutex_;
  std::shared_ptr<Frame> front_;
  std::shared_ptr<Frame> back_ = std::make_shared<Frame>();
};

/// Luma-only precorrection of packed pixels; agrees with precorrect_color up
/// to 8-bit rounding. Tile padding is raised to the kernel diameter when
/// smaller. A delta kernel copies the frame through.
Frame precorrect_frame(const Frame& frame, const Deconvolver& deconvolver,
                       const PrecorrectOptions& options);

enum class PresentMode {
  /// Presenter ticks at the source fps; a missing frame is an underrun.
  RealTime,
  /// Presenter waits for every frame; used for batch output and tests.
  Lockstep,
};

struct PipelineConfig {
  WienerParams params;
  /// Tile padding below the kernel diameter is raised to it.
  PrecorrectOptions options{RangePolicy::Clamp, TileGrid{256, 0}};
  double cache_seconds = 3.0;
  PresentMode mode = PresentMode::RealTime;
  /// Frames cached before the first presentation; -1 fills the whole cache.
  int prefill_frames = -1;
  bool start_paused = false;
};

struct PipelineMetrics {
  std::int64_t frames_presented = 0;
  std::int64_t frames_produced = 0;
  std::int64_t underruns = 0;
  std::int64_t stale_evictions = 0;
  double mean_processing_ms = 0.0;
  int cache_level = 0;
  int cache_capacity = 0;
  double warmup_s = 0.0;
  double presenting_s = 0.0;
};

struct SessionState {
  std::int64_t playhead = 0;
  bool playing = false;
  bool finished = false;
};

struct SeekResult {
  std::int64_t requested = 0;
  std::int64_t applied = 0;
  bool clamped = false;
};

/// One producer thread precorrects frames ahead of the playhead into the
/// cache; one presenter thread swaps them into the surface and hands them to
/// the sink. The sink runs on the presenter thread with the presented index.
class PipelineSession {
 public:
  using Sink = std::function<void(const Frame&, std::int64_t index)>;

  PipelineSession(std::unique_ptr<FrameSource> source, std::shared_ptr<KernelSource> kernels,
                  PipelineConfig config, Sink sink);
  ~PipelineSession();
  PipelineSession(const PipelineSession&) = delete;
  PipelineSession& operator=(const PipelineSession&) = delete;

  void play();
  void pause();
  /// Moves the playhead; targets past the end clamp to the last frame.
  SeekResult seek(std::int64_t frame);
  void stop();

  SessionState state() const;
  PipelineMetrics metrics() const;
  const PresentSurface& surface() const noexcept { return surface_; }
  int cache_level() const;

  /// Blocks until the last frame was presented or the timeout expired.
  bool wait_finished(std::chrono::milliseconds timeout) const;

 private:
  void produce_loop();
  void present_loop();
  bool present_one(std::unique_lock<std::mutex>& lock, bool underrun_if_missing);
  std::optional<std::int64_t> next_to_produce();
  std::int64_t last_index() const;
  double media_time(std::int64_t index) const { return static_cast<double>(index) / fps_; }

  std::unique_ptr<FrameSource> source_;
  std::shared_ptr<KernelSource> kernels_;
  PipelineConfig config_;
  Sink sink_;
  double fps_;
  int prefill_;

  mutable std::mutex mutex_;
  mutable std::condition_variable changed_;
  FrameCache cache_;
  PresentSurface surface_;
  std::optional<std::int64_t> length_;
  std::int64_t playhead_ = 0;
  std::uint64_t epoch_ = 0;  // bumped by seek so in-flight work is dropped
  bool playing_ = true;
  bool finished_ = false;
  bool warmed_up_ = false;
  bool has_presented_ = false;
  bool stopping_ = false;
  PipelineMetrics metrics_;
  double processing_ms_total_ = 0.0;
  std::chrono::steady_clock::time_point created_;
  std::chrono::steady_clock::time_point warm_at_;
  std::chrono::steady_clock::time_point finished_at_;

  // Producer-thread only.
  std::shared_ptr<const Kernel> deconvolver_kernel_;
  std::shared_ptr<const Deconvolver> deconvolver_;

  std::jthread producer_;
  std::jthread presenter_;
};

}  // namespace vcd
