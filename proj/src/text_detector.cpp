#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <array>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <deque>
#include <numeric>

#include "vcd/color.hpp"
#include "vcd/image_io.hpp"
#include "vcd/ringing.hpp"

extern char** environ;

namespace vcd {
namespace {

double otsu_threshold(const Plane& p) {
  std::array<double, 256> hist{};
  for (double v : p.values()) hist[std::min<std::size_t>(255, static_cast<std::size_t>(v * 255.0))] += 1.0;
  const double total = static_cast<double>(p.size());
  double sum_all = 0.0;
  for (int i = 0; i < 256; ++i) sum_all += i * hist[i];
  double weight_bg = 0.0, sum_bg = 0.0, best = -1.0;
  int best_t = 0;
  for (int t = 0; t < 256; ++t) {
    weight_bg += hist[t];
    if (weight_bg == 0.0) continue;
    const double weight_fg = total - weight_bg;
    if (weight_fg == 0.0) break;
    sum_bg += t * hist[t];
    const double mean_bg = sum_bg / weight_bg;
    const double mean_fg = (sum_all - sum_bg) / weight_fg;
    const double between = weight_bg * weight_fg * (mean_bg - mean_fg) * (mean_bg - mean_fg);
    if (between > best) {
      best = between;
      best_t = t;
    }
  }
  return (best_t + 0.5) / 255.0;
}

}  // namespace

std::string HeuristicTextDetector::detect(const RasterImage& region) {
  const Plane y = luma(region);
  const int w = y.width();
  const int h = y.height();
  if (w < 8 || h < 8) return {};

  const auto [lo, hi] = std::minmax_element(y.values().begin(), y.values().end());
  if (*hi - *lo < 0.1) return {};
  const double threshold = otsu_threshold(y);

  // Foreground is the minority polarity: dark ink on a light card or the reverse.
  std::size_t dark = 0;
  for (double v : y.values()) dark += v < threshold;
  const bool ink_is_dark = dark * 2 <= y.size();
  Grid<std::uint8_t> ink(w, h);
  for (std::size_t i = 0; i < y.size(); ++i) {
    ink.data()[i] = ink_is_dark ? y.data()[i] < threshold : y.data()[i] >= threshold;
  }

  std::vector<double> stroke_widths;
  Grid<std::uint8_t> seen(w, h);
  std::deque<std::pair<int, int>> queue;
  for (int y0 = 0; y0 < h; ++y0) {
    for (int x0 = 0; x0 < w; ++x0) {
      if (!ink(x0, y0) || seen(x0, y0)) continue;
      int x_min = x0, x_max = x0, y_min = y0, y_max = y0;
      std::vector<std::pair<int, int>> pixels;
      seen(x0, y0) = 1;
      queue.emplace_back(x0, y0);
      while (!queue.empty()) {
        const auto [x, yy] = queue.front();
        queue.pop_front();
        pixels.emplace_back(x, yy);
        x_min = std::min(x_min, x);
        x_max = std::max(x_max, x);
        y_min = std::min(y_min, yy);
        y_max = std::max(y_max, yy);
        for (int j = -1; j <= 1; ++j) {
          for (int i = -1; i <= 1; ++i) {
            const int nx = x + i, ny = yy + j;
            if (nx >= 0 && ny >= 0 && nx < w && ny < h && ink(nx, ny) && !seen(nx, ny)) {
              seen(nx, ny) = 1;
              queue.emplace_back(nx, ny);
            }
          }
        }
      }
      const int bw = x_max - x_min + 1;
      const int bh = y_max - y_min + 1;
      const double aspect = static_cast<double>(bw) / bh;
      const double fill = static_cast<double>(pixels.size()) / (static_cast<double>(bw) * bh);
      if (bh < params_.min_glyph_height || aspect < params_.min_aspect ||
          aspect > params_.max_aspect || fill < params_.min_fill || fill > params_.max_fill) {
        continue;
      }
      // Mean horizontal run length approximates the stroke width.
      std::sort(pixels.begin(), pixels.end(),
                [](auto a, auto b) { return a.second != b.second ? a.second < b.second : a.first < b.first; });
      int runs = 0;
      for (std::size_t i = 0; i < pixels.size(); ++i) {
        if (i == 0 || pixels[i].second != pixels[i - 1].second ||
            pixels[i].first != pixels[i - 1].first + 1) {
          ++runs;
        }
      }
      stroke_widths.push_back(static_cast<double>(pixels.size()) / runs);
    }
  }

  if (static_cast<int>(stroke_widths.size()) < params_.min_glyphs) return {};
  const double mean =
      std::accumulate(stroke_widths.begin(), stroke_widths.end(), 0.0) / stroke_widths.size();
  double var = 0.0;
  for (double s : stroke_widths) var += (s - mean) * (s - mean);
  const double cv = std::sqrt(var / stroke_widths.size()) / mean;
  if (cv > params_.max_stroke_cv) return {};
  // The heuristic locates glyphs but cannot read them.
  return std::string(stroke_widths.size(), '?');
}

namespace {

struct Fd {
  int fd = -1;
  ~Fd() { reset(); }
  void reset() {
    if (fd >= 0) ::close(fd);
    fd = -1;
  }
};

}  // namespace

std::string SubprocessTextDetector::detect(const RasterImage& region) {
  static const bool sigpipe_ignored = [] {
    ::signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)sigpipe_ignored;

  const std::vector<std::uint8_t> png = encode_png(region);

  int in_pipe[2];
  int out_pipe[2];
  require(::pipe2(in_pipe, O_CLOEXEC) == 0, ErrorKind::Detector, "pipe failed");
  Fd child_in{in_pipe[0]}, to_child{in_pipe[1]};
  require(::pipe2(out_pipe, O_CLOEXEC) == 0, ErrorKind::Detector, "pipe failed");
  Fd from_child{out_pipe[0]}, child_out{out_pipe[1]};

  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, child_in.fd, STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, child_out.fd, STDOUT_FILENO);
  const char* argv[] = {"sh", "-c", command_.c_str(), nullptr};
  pid_t pid = 0;
  const int rc = ::posix_spawn(&pid, "/bin/sh", &actions, nullptr, const_cast<char**>(argv), environ);
  posix_spawn_file_actions_destroy(&actions);
  require(rc == 0, ErrorKind::Detector, std::string("cannot start detector: ") + std::strerror(rc));
  child_in.reset();
  child_out.reset();

  ::fcntl(to_child.fd, F_SETFL, ::fcntl(to_child.fd, F_GETFL) | O_NONBLOCK);
  std::string text;
  std::size_t written = 0;
  std::array<char, 4096> buffer{};
  while (from_child.fd >= 0) {
    if (to_child.fd >= 0 && written == png.size()) to_child.reset();
    pollfd fds[2];
    int n = 0;
    fds[n++] = {from_child.fd, POLLIN, 0};
    if (to_child.fd >= 0) fds[n++] = {to_child.fd, POLLOUT, 0};
    if (::poll(fds, static_cast<nfds_t>(n), -1) < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (n == 2 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
      const ssize_t k = ::write(to_child.fd, png.data() + written, png.size() - written);
      if (k > 0) {
        written += static_cast<std::size_t>(k);
      } else if (k < 0 && errno != EAGAIN && errno != EINTR) {
        to_child.reset();  // the detector stopped reading; let its exit status speak
      }
    }
    if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
      const ssize_t k = ::read(from_child.fd, buffer.data(), buffer.size());
      if (k > 0) {
        text.append(buffer.data(), static_cast<std::size_t>(k));
      } else if (k == 0 || (errno != EAGAIN && errno != EINTR)) {
        from_child.reset();
      }
    }
  }
  to_child.reset();

  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  require(WIFEXITED(status) && WEXITSTATUS(status) == 0, ErrorKind::Detector,
          "detector command exited with failure");
  // Trailing whitespace is not text.
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.pop_back();
  return text;
}

}  // namespace vcd
