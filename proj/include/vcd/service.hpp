#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vcd/config.hpp"
#include "vcd/error.hpp"
#include "vcd/image.hpp"
#include "vcd/kernel.hpp"
#include "vcd/metrics.hpp"
#include "vcd/pose.hpp"

namespace vcd {

/// Validation failure naming the offending request fields.
class FieldError : public Error {
 public:
  FieldError(std::vector<std::string> fields, const std::string& message)
      : Error(ErrorKind::Validation, message), fields_(std::move(fields)) {}
  const std::vector<std::string>& fields() const noexcept { return fields_; }

 private:
  std::vector<std::string> fields_;
};

/// Per-session parameters parsed from the POST /session body.
struct SessionParams {
  OpticalSpec optics;
  WienerParams wiener;
  bool ringing = false;
  ViewerPose initial_pose;
};

/// Everything derived from one kernel generation. Immutable once published,
/// so every view and the metrics of a bundle agree.
struct ResultBundle {
  std::uint64_t generation = 0;
  ViewerPose pose;
  Kernel kernel = Kernel::delta();
  RasterImage original;
  RasterImage precorrected;
  RasterImage simulated;
  MetricsReport metrics;
  double processing_ms = 0.0;
};

struct SessionStatus {
  std::uint64_t requested_generation = 0;
  std::uint64_t completed_generation = 0;
  bool has_image = false;
  ViewerPose pose;
  /// Failure of the most recent correction attempt, if it failed.
  std::string last_error;
};

/// One correction worker. Pose and image updates bump the requested
/// generation; the worker always processes the newest request, so updates
/// queued behind a running correction collapse into one.
class CorrectionSession {
 public:
  CorrectionSession(SessionParams params, const Settings& settings);
  ~CorrectionSession();
  CorrectionSession(const CorrectionSession&) = delete;
  CorrectionSession& operator=(const CorrectionSession&) = delete;

  /// Returns the generation that will carry the image.
  std::uint64_t set_image(RasterImage image);
  /// Applies hysteresis against the last accepted pose. Returns the new
  /// generation when accepted, nothing when the change was too small.
  std::optional<std::uint64_t> set_pose(const ViewerPose& pose);

  /// Latest completed bundle; null until the first image is processed.
  std::shared_ptr<const ResultBundle> latest() const;
  SessionStatus status() const;

  /// Blocks until a bundle with generation >= `generation` is published or
  /// the timeout passes.
  std::shared_ptr<const ResultBundle> wait_for(std::uint64_t generation, double timeout_s) const;
  /// Blocks until the completed generation exceeds `seen` or the timeout
  /// passes; returns the bundle then current.
  std::shared_ptr<const ResultBundle> wait_newer(std::uint64_t seen, double timeout_s) const;

  /// Wakes every waiter; the worker exits. Idempotent.
  void close();
  bool closed() const;

 private:
  struct State;
  std::unique_ptr<State> state_;
};

/// Builds the bundle for one image and pose. Pure; used by the session worker.
ResultBundle correct(const RasterImage& image, const ViewerPose& pose, const SessionParams& params,
                     const Settings& settings, std::uint64_t generation);

/// Parse a request body; throw FieldError naming the offending fields.
SessionParams parse_session_params(const std::string& json_body, const Settings& settings);
ViewerPose parse_pose_body(const std::string& json_body);

/// HTTP front end. Sessions live in memory and vanish with the process.
class CorrectionServer {
 public:
  explicit CorrectionServer(Settings settings = {});
  ~CorrectionServer();
  CorrectionServer(const CorrectionServer&) = delete;
  CorrectionServer& operator=(const CorrectionServer&) = delete;

  /// Binds the socket; port 0 picks a free one. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop(). Call bind() first.
  void serve();
  /// bind() then serve() on a background thread.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace vcd
