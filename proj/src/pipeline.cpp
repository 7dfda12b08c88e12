#include "vcd/pipeline.hpp"

#include <algorithm>
#include <array>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <sstream>
#include <string>

#include "vcd/color.hpp"
#include "vcd/image_io.hpp"
#include "vcd/log.hpp"
#include "vcd/pose.hpp"

namespace vcd {

RasterImage frame_to_image(const Frame& frame) {
  require(frame.bytes() == static_cast<std::size_t>(frame.width) * frame.height * 3,
          ErrorKind::DimensionMismatch, "frame buffer does not match its size");
  RasterImage image(frame.width, frame.height, ColorSpace::Rgb);
  double* planes[3] = {image.mutable_plane(0).data(), image.mutable_plane(1).data(),
                       image.mutable_plane(2).data()};
  const std::size_t n = static_cast<std::size_t>(frame.width) * frame.height;
  const std::uint8_t* src = frame.rgb.data();
  for (std::size_t i = 0; i < n; ++i) {
    planes[0][i] = src[3 * i] / 255.0;
    planes[1][i] = src[3 * i + 1] / 255.0;
    planes[2][i] = src[3 * i + 2] / 255.0;
  }
  return image;
}

Frame image_to_frame(const RasterImage& image) {
  require(image.colorspace() == ColorSpace::Rgb, ErrorKind::Precondition,
          "frames are built from RGB images");
  Frame frame(image.width(), image.height());
  const double* planes[3] = {image.plane(0).data(), image.plane(1).data(), image.plane(2).data()};
  const std::size_t n = static_cast<std::size_t>(image.width()) * image.height();
  for (std::size_t i = 0; i < n; ++i) {
    frame.rgb[3 * i] = to_byte(planes[0][i]);
    frame.rgb[3 * i + 1] = to_byte(planes[1][i]);
    frame.rgb[3 * i + 2] = to_byte(planes[2][i]);
  }
  return frame;
}

MemoryFrameSource::MemoryFrameSource(std::vector<Frame> frames, double fps)
    : frames_(std::move(frames)), fps_(fps) {
  require(fps > 0.0 && std::isfinite(fps), ErrorKind::Precondition, "fps must be > 0");
  if (!frames_.empty()) {
    width_ = frames_.front().width;
    height_ = frames_.front().height;
  }
  for (const auto& f : frames_) {
    require(f.width == width_ && f.height == height_ &&
                f.bytes() == static_cast<std::size_t>(width_) * height_ * 3,
            ErrorKind::DimensionMismatch, "all frames must share one size");
  }
}

std::optional<Frame> MemoryFrameSource::read(std::int64_t index) {
  if (index < 0 || index >= static_cast<std::int64_t>(frames_.size())) return std::nullopt;
  return frames_[static_cast<std::size_t>(index)];
}

Frame synthetic_frame(int width, int height, std::int64_t index) {
  Frame f(width, height);
  const int shift = static_cast<int>(index % std::max(1, width));
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const int xs = (x + shift) % width;
      std::uint8_t* px = &f.rgb[(static_cast<std::size_t>(y) * width + x) * 3];
      int r = 40 + 160 * xs / std::max(1, width - 1);
      int g = 40 + 160 * y / std::max(1, height - 1);
      int b = 120;
      if ((xs / 24) % 2 == 0 && y % 96 < 12) r = g = b = 230;        // bars
      if ((xs % 40) < 6 && (y % 64) > 20 && (y % 64) < 44) r = g = b = 20;  // glyph strokes
      px[0] = static_cast<std::uint8_t>(r);
      px[1] = static_cast<std::uint8_t>(g);
      px[2] = static_cast<std::uint8_t>(b);
    }
  }
  return f;
}

SyntheticFrameSource::SyntheticFrameSource(int width, int height, double fps, std::int64_t count)
    : width_(width), height_(height), fps_(fps), count_(count) {
  require(width > 0 && height > 0 && count >= 0, ErrorKind::Precondition,
          "synthetic clip needs a positive size");
  require(fps > 0.0 && std::isfinite(fps), ErrorKind::Precondition, "fps must be > 0");
}

std::optional<Frame> SyntheticFrameSource::read(std::int64_t index) {
  if (index < 0 || index >= count_) return std::nullopt;
  return synthetic_frame(width_, height_, index);
}

RawStreamHeader read_raw_header(std::FILE* in) {
  std::string line;
  for (int c; (c = std::fgetc(in)) != EOF && c != '\n';) {
    line.push_back(static_cast<char>(c));
    require(line.size() < 256, ErrorKind::Io, "raw stream header is too long");
  }
  std::istringstream fields(line);
  RawStreamHeader h;
  std::string extra;
  require(static_cast<bool>(fields >> h.width >> h.height >> h.fps) && !(fields >> extra),
          ErrorKind::Io, "raw stream header must be `width height fps`");
  require(h.width > 0 && h.height > 0 && h.fps > 0.0 && std::isfinite(h.fps), ErrorKind::Io,
          "raw stream header has non-positive values");
  return h;
}

void write_raw_header(std::FILE* out, const RawStreamHeader& header) {
  std::ostringstream line;
  line.precision(10);
  line << header.width << ' ' << header.height << ' ' << header.fps << '\n';
  const std::string s = line.str();
  require(std::fwrite(s.data(), 1, s.size(), out) == s.size(), ErrorKind::Io,
          "cannot write raw stream header");
}

RawStreamSource::RawStreamSource(std::FILE* in, bool owned, std::size_t retain_frames)
    : in_(in), owned_(owned), retain_(std::max<std::size_t>(1, retain_frames)) {
  require(in_ != nullptr, ErrorKind::Io, "raw stream is not open");
  header_ = read_raw_header(in_);
  data_offset_ = std::ftell(in_);
  if (data_offset_ >= 0 && std::fseek(in_, 0, SEEK_END) == 0) {
    const long end = std::ftell(in_);
    if (end >= data_offset_ && std::fseek(in_, data_offset_, SEEK_SET) == 0) {
      seekable_ = true;
      const long frame_bytes = static_cast<long>(header_.width) * header_.height * 3;
      count_ = (end - data_offset_) / frame_bytes;
    }
  }
  std::clearerr(in_);
}

RawStreamSource::~RawStreamSource() {
  if (owned_ && in_) std::fclose(in_);
}

std::optional<Frame> RawStreamSource::read_next() {
  Frame f(header_.width, header_.height);
  const std::size_t got = std::fread(f.rgb.data(), 1, f.bytes(), in_);
  if (got == f.bytes()) return f;
  if (got != 0) log::warn("raw stream ends with a partial frame; it is dropped");
  return std::nullopt;
}

std::optional<Frame> RawStreamSource::read(std::int64_t index) {
  if (index < 0) return std::nullopt;
  if (count_ && index >= *count_) return std::nullopt;
  if (seekable_) {
    const long long offset =
        data_offset_ + static_cast<long long>(index) * header_.width * header_.height * 3;
    require(::fseeko(in_, static_cast<off_t>(offset), SEEK_SET) == 0, ErrorKind::Io,
            std::string("cannot seek raw stream: ") + std::strerror(errno));
    return read_next();
  }
  if (index < next_index_) {
    for (const auto& [i, frame] : window_) {
      if (i == index) return frame;
    }
    fail(ErrorKind::Precondition, "frame " + std::to_string(index) +
                                      " is no longer retained by the input stream");
  }
  while (next_index_ <= index) {
    auto f = read_next();
    if (!f) {
      count_ = next_index_;
      return std::nullopt;
    }
    window_.emplace_back(next_index_++, std::move(*f));
    if (window_.size() > retain_) window_.pop_front();
  }
  return window_.back().second;
}

RawFrameWriter::RawFrameWriter(std::FILE* out, const RawStreamHeader& header)
    : out_(out), header_(header) {
  require(out_ != nullptr, ErrorKind::Io, "raw output is not open");
  write_raw_header(out_, header_);
}

void RawFrameWriter::write(const Frame& frame) {
  require(frame.width == header_.width && frame.height == header_.height,
          ErrorKind::DimensionMismatch, "frame size differs from the stream header");
  require(std::fwrite(frame.rgb.data(), 1, frame.bytes(), out_) == frame.bytes(), ErrorKind::Io,
          "cannot write frame to raw output");
  ++written_;
}

PoseLogKernelSource::PoseLogKernelSource(PoseTimeline timeline, OpticalSpec spec, int base_size)
    : timeline_(std::move(timeline)), spec_(spec), base_size_(base_size) {
  spec_.validate();
}

namespace {

std::int64_t to_ms(double seconds) { return static_cast<std::int64_t>(std::floor(seconds * 1000.0 + 1e-6)); }

}  // namespace

std::uint64_t PoseLogKernelSource::generation(std::int64_t, double media_time_s) {
  return timeline_.at(to_ms(media_time_s)).generation;
}

KernelSnapshot PoseLogKernelSource::at(std::int64_t, double media_time_s) {
  const auto& entry = timeline_.at(to_ms(media_time_s));
  std::lock_guard lock(mutex_);
  auto& slot = kernels_[entry.generation];
  if (!slot) slot = std::make_shared<const Kernel>(pose_to_kernel(entry.pose, spec_, base_size_));
  return {slot, entry.generation};
}

KernelSnapshot TrackerKernelSource::at(std::int64_t, double) {
  const PoseSnapshot snap = tracker_.snapshot();
  std::lock_guard lock(mutex_);
  if (!last_.kernel || last_.generation != snap.generation) {
    last_ = {std::make_shared<const Kernel>(pose_to_kernel(snap.pose, spec_, base_size_)),
             snap.generation};
  }
  return last_;
}

int default_cache_capacity(double fps, double seconds) {
  require(fps > 0.0 && seconds > 0.0, ErrorKind::Precondition, "fps and cache seconds must be > 0");
  return std::max(1, static_cast<int>(std::ceil(fps * seconds - 1e-9)));
}

FrameCache::FrameCache(int capacity) : capacity_(capacity) {
  require(capacity > 0, ErrorKind::Precondition, "cache capacity must be > 0");
}

bool FrameCache::put(std::int64_t index, Entry entry) {
  if (full() || contains(index)) return false;
  entries_.emplace(index, std::move(entry));
  return true;
}

const FrameCache::Entry* FrameCache::find(std::int64_t index) const {
  const auto it = entries_.find(index);
  return it == entries_.end() ? nullptr : &it->second;
}

void FrameCache::evict_before(std::int64_t index) {
  entries_.erase(entries_.begin(), entries_.lower_bound(index));
}

Frame& PresentSurface::back() {
  std::lock_guard lock(mutex_);
  // A reader may still hold the old front; never write into it.
  if (back_.use_count() > 1) back_ = std::make_shared<Frame>();
  return *back_;
}

void PresentSurface::swap() {
  std::lock_guard lock(mutex_);
  std::swap(front_, back_);
  if (!back_) back_ = std::make_shared<Frame>();
}

std::shared_ptr<const Frame> PresentSurface::front() const {
  std::lock_guard lock(mutex_);
  return front_;
}

Frame precorrect_frame(const Frame& frame, const Deconvolver& deconvolver,
                       const PrecorrectOptions& options) {
  if (deconvolver.kernel().is_delta()) return frame;
  require(frame.bytes() == static_cast<std::size_t>(frame.width) * frame.height * 3,
          ErrorKind::DimensionMismatch, "frame buffer does not match its size");
  const std::size_t n = static_cast<std::size_t>(frame.width) * frame.height;
  static const auto unit = [] {
    std::array<double, 256> t{};
    for (int v = 0; v < 256; ++v) t[static_cast<std::size_t>(v)] = v / 255.0;
    return t;
  }();
  const std::uint8_t* src = frame.rgb.data();
  Plane y(frame.width, frame.height);
  for (std::size_t i = 0; i < n; ++i) {
    y.data()[i] =
        (kLumaR * src[3 * i] + kLumaG * src[3 * i + 1] + kLumaB * src[3 * i + 2]) / 255.0;
  }
  Plane corrected;
  if (options.tiles) {
    TileGrid grid = *options.tiles;
    grid.pad_px = std::max(grid.pad_px, deconvolver.pad());
    corrected = deconvolver.apply_tiled(y, grid);
  } else {
    corrected = deconvolver.apply(y);
  }
  corrected = normalize_range(std::move(corrected), options.range);

  // With U and V fixed, the YUV -> RGB inverse moves every channel by the
  // luma change, so the round trip through planar YUV is not needed.
  Frame out(frame.width, frame.height);
  std::uint8_t* dst = out.rgb.data();
  for (std::size_t i = 0; i < n; ++i) {
    const double delta = corrected.data()[i] - y.data()[i];
    for (std::size_t c = 0; c < 3; ++c) dst[3 * i + c] = to_byte(unit[src[3 * i + c]] + delta);
  }
  return out;
}

PipelineSession::PipelineSession(std::unique_ptr<FrameSource> source,
                                 std::shared_ptr<KernelSource> kernels, PipelineConfig config,
                                 Sink sink)
    : source_(std::move(source)),
      kernels_(std::move(kernels)),
      config_(config),
      sink_(std::move(sink)),
      fps_(source_ ? source_->fps() : 0.0),
      prefill_(0),
      cache_(default_cache_capacity(fps_ > 0.0 ? fps_ : 1.0, config.cache_seconds)) {
  require(source_ != nullptr && kernels_ != nullptr, ErrorKind::Precondition,
          "pipeline needs a frame source and a kernel source");
  require(fps_ > 0.0, ErrorKind::Precondition, "frame source fps must be > 0");
  config_.params.validate();
  prefill_ = config_.prefill_frames < 0 ? cache_.capacity()
                                        : std::min(config_.prefill_frames, cache_.capacity());
  length_ = source_->frame_count();
  playing_ = !config_.start_paused;
  metrics_.cache_capacity = cache_.capacity();
  created_ = std::chrono::steady_clock::now();
  producer_ = std::jthread([this] { produce_loop(); });
  presenter_ = std::jthread([this] { present_loop(); });
}

PipelineSession::~PipelineSession() { stop(); }

void PipelineSession::stop() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  changed_.notify_all();
  if (producer_.joinable()) producer_.join();
  if (presenter_.joinable()) presenter_.join();
}

void PipelineSession::play() {
  {
    std::lock_guard lock(mutex_);
    playing_ = true;
  }
  changed_.notify_all();
}

void PipelineSession::pause() {
  {
    std::lock_guard lock(mutex_);
    playing_ = false;
  }
  changed_.notify_all();
}

std::int64_t PipelineSession::last_index() const {
  return length_ ? std::max<std::int64_t>(0, *length_ - 1) : INT64_MAX;
}

SeekResult PipelineSession::seek(std::int64_t frame) {
  SeekResult r;
  r.requested = frame;
  {
    std::lock_guard lock(mutex_);
    r.applied = std::clamp<std::int64_t>(frame, 0, last_index());
    r.clamped = r.applied != frame;
    playhead_ = r.applied;
    cache_.evict_before(playhead_);
    ++epoch_;
    finished_ = false;
  }
  if (r.clamped) {
    log::info("seek to frame " + std::to_string(frame) + " clamped to " + std::to_string(r.applied));
  }
  changed_.notify_all();
  return r;
}

SessionState PipelineSession::state() const {
  std::lock_guard lock(mutex_);
  return {playhead_, playing_, finished_};
}

int PipelineSession::cache_level() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

PipelineMetrics PipelineSession::metrics() const {
  std::lock_guard lock(mutex_);
  PipelineMetrics m = metrics_;
  m.cache_level = cache_.size();
  m.mean_processing_ms =
      m.frames_produced > 0 ? processing_ms_total_ / static_cast<double>(m.frames_produced) : 0.0;
  if (warmed_up_) {
    const auto end = finished_ ? finished_at_ : std::chrono::steady_clock::now();
    m.presenting_s = std::chrono::duration<double>(end - warm_at_).count();
  }
  return m;
}

bool PipelineSession::wait_finished(std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mutex_);
  return changed_.wait_for(lock, timeout, [this] { return finished_ || stopping_; }) && finished_;
}

std::optional<std::int64_t> PipelineSession::next_to_produce() {
  const std::int64_t end =
      std::min<std::int64_t>(playhead_ + cache_.capacity(), length_ ? *length_ : INT64_MAX);
  for (std::int64_t i = playhead_; i < end; ++i) {
    if (const auto* e = cache_.find(i)) {
      if (e->generation == kernels_->generation(i, media_time(i))) continue;
      cache_.erase(i);
      ++metrics_.stale_evictions;
    }
    if (cache_.full()) return std::nullopt;
    return i;
  }
  return std::nullopt;
}

void PipelineSession::produce_loop() {
  std::unique_lock lock(mutex_);
  while (!stopping_) {
    const auto index = next_to_produce();
    if (!index) {
      // Live kernel sources can go stale without a notification.
      changed_.wait_for(lock, std::chrono::milliseconds(20));
      continue;
    }
    const std::uint64_t epoch = epoch_;
    lock.unlock();

    std::optional<Frame> out;
    std::uint64_t generation = 0;
    double elapsed_ms = 0.0;
    bool end_of_stream = false;
    try {
      const auto frame = source_->read(*index);
      if (!frame) {
        end_of_stream = true;
      } else {
        const KernelSnapshot ks = kernels_->at(*index, media_time(*index));
        generation = ks.generation;
        if (ks.kernel != deconvolver_kernel_) {
          deconvolver_ = std::make_shared<const Deconvolver>(*ks.kernel, config_.params.rho,
                                                             config_.params.spectrum_floor);
          deconvolver_kernel_ = ks.kernel;
        }
        const auto t0 = std::chrono::steady_clock::now();
        out = precorrect_frame(*frame, *deconvolver_, config_.options);
        elapsed_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                         .count();
      }
    } catch (const std::exception& e) {
      log::warn(std::string("frame producer stopped: ") + e.what());
      lock.lock();
      length_ = std::min(length_.value_or(INT64_MAX), *index);
      changed_.notify_all();
      continue;
    }

    lock.lock();
    if (end_of_stream) {
      length_ = *index;
    } else {
      ++metrics_.frames_produced;
      processing_ms_total_ += elapsed_ms;
      if (epoch == epoch_ && *index >= playhead_) {
        cache_.put(*index, {std::make_shared<const Frame>(std::move(*out)), generation});
      }
    }
    changed_.notify_all();
  }
}

bool PipelineSession::present_one(std::unique_lock<std::mutex>& lock, bool underrun_if_missing) {
  if (finished_) return false;
  const std::int64_t index = playhead_;
  if (length_ && index >= *length_) {
    finished_ = true;
    finished_at_ = std::chrono::steady_clock::now();
    changed_.notify_all();
    return false;
  }
  const FrameCache::Entry* entry = cache_.find(index);
  if (entry && entry->generation != kernels_->generation(index, media_time(index))) {
    cache_.erase(index);
    ++metrics_.stale_evictions;
    entry = nullptr;
    changed_.notify_all();
  }
  std::shared_ptr<const Frame> shown;
  std::int64_t shown_index = index - 1;
  if (entry) {
    const auto frame = entry->frame;
    cache_.erase(index);
    Frame& back = surface_.back();
    back = *frame;
    surface_.swap();
    shown = surface_.front();
    shown_index = index;
    ++playhead_;
    ++metrics_.frames_presented;
    has_presented_ = true;
    changed_.notify_all();
  } else {
    if (!underrun_if_missing) return false;
    ++metrics_.underruns;
    if (has_presented_) shown = surface_.front();  // repeat the last frame
  }
  if (shown && sink_) {
    lock.unlock();
    sink_(*shown, shown_index);
    lock.lock();
  }
  return entry != nullptr;
}

void PipelineSession::present_loop() {
  std::unique_lock lock(mutex_);
  if (config_.mode == PresentMode::Lockstep) {
    warmed_up_ = true;
    warm_at_ = std::chrono::steady_clock::now();
    while (!stopping_) {
      changed_.wait(lock, [this] {
        if (stopping_) return true;
        if (!playing_ || finished_) return false;
        return cache_.contains(playhead_) || (length_ && playhead_ >= *length_);
      });
      if (stopping_) break;
      present_one(lock, false);
    }
    return;
  }

  // Warm up: fill the cache (or the whole clip when it is shorter).
  changed_.wait(lock, [this] {
    if (stopping_) return true;
    const std::int64_t remaining = length_ ? *length_ - playhead_ : prefill_;
    return cache_.size() >= std::min<std::int64_t>(prefill_, std::max<std::int64_t>(0, remaining));
  });
  warmed_up_ = true;
  warm_at_ = std::chrono::steady_clock::now();
  metrics_.warmup_s = std::chrono::duration<double>(warm_at_ - created_).count();

  const auto period = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
      std::chrono::duration<double>(1.0 / fps_));
  auto next_tick = std::chrono::steady_clock::now();
  while (!stopping_) {
    changed_.wait_until(lock, next_tick, [this] { return stopping_; });
    if (stopping_) break;
    if (playing_) present_one(lock, true);
    next_tick += period;
    const auto now = std::chrono::steady_clock::now();
    // After a long stall, resume the cadence instead of bursting.
    if (now > next_tick + 4 * period) next_tick = now;
  }
}

}  // namespace vcd
