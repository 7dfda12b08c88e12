#include "vcd/service.hpp"

// Uploads may arrive with any content type; curl defaults to form encoding.
#define CPPHTTPLIB_FORM_URL_ENCODED_PAYLOAD_MAX_LENGTH (64u << 20)
#include <httplib.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <map>
#include <json.hpp>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "vcd/image_io.hpp"
#include "vcd/log.hpp"
#include "vcd/precorrect.hpp"
#include "vcd/ringing.hpp"

namespace vcd {

using nlohmann::json;

// ---------------------------------------------------------------- parsing

namespace {

json parse_object(const std::string& body) {
  json j = json::parse(body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw FieldError({"body"}, "request body must be a JSON object");
  }
  return j;
}

// Collects every bad field before failing so clients can fix them together.
class FieldCheck {
 public:
  explicit FieldCheck(const json& j, std::string prefix = {})
      : j_(j), prefix_(std::move(prefix)) {}

  std::optional<double> number(const std::string& key, bool required) {
    const auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) {
      if (required) bad(key, "is required");
      return std::nullopt;
    }
    if (!it->is_number() || !std::isfinite(it->get<double>())) {
      bad(key, "must be a finite number");
      return std::nullopt;
    }
    return it->get<double>();
  }

  std::optional<bool> boolean(const std::string& key) {
    const auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return std::nullopt;
    if (!it->is_boolean()) {
      bad(key, "must be true or false");
      return std::nullopt;
    }
    return it->get<bool>();
  }

  void bad(const std::string& key, const std::string& why) {
    fields_.push_back(prefix_ + key);
    reasons_.push_back(prefix_ + key + " " + why);
  }

  void merge(const FieldCheck& other) {
    fields_.insert(fields_.end(), other.fields_.begin(), other.fields_.end());
    reasons_.insert(reasons_.end(), other.reasons_.begin(), other.reasons_.end());
  }

  void throw_if_bad() const {
    if (fields_.empty()) return;
    std::string message;
    for (const auto& r : reasons_) message += (message.empty() ? "" : "; ") + r;
    throw FieldError(fields_, message);
  }

 private:
  const json& j_;
  std::string prefix_;
  std::vector<std::string> fields_;
  std::vector<std::string> reasons_;
};

ViewerPose read_pose(FieldCheck& check, bool required) {
  ViewerPose pose;
  const auto d = check.number("distance_m", required);
  const auto tx = check.number("theta_x_rad", required);
  const auto ty = check.number("theta_y_rad", required);
  const double limit = M_PI / 2.0;
  if (d) {
    if (*d > 0.0) pose.distance_m = *d;
    else check.bad("distance_m", "must be > 0");
  }
  if (tx) {
    if (std::abs(*tx) < limit) pose.theta_x = *tx;
    else check.bad("theta_x_rad", "must lie strictly between -pi/2 and pi/2");
  }
  if (ty) {
    if (std::abs(*ty) < limit) pose.theta_y = *ty;
    else check.bad("theta_y_rad", "must lie strictly between -pi/2 and pi/2");
  }
  return pose;
}

}  // namespace

ViewerPose parse_pose_body(const std::string& json_body) {
  const json j = parse_object(json_body);
  FieldCheck check(j);
  const ViewerPose pose = read_pose(check, true);
  check.throw_if_bad();
  return pose;
}

SessionParams parse_session_params(const std::string& json_body, const Settings& settings) {
  const json j = parse_object(json_body);
  FieldCheck check(j);
  SessionParams p;
  p.wiener = settings.wiener;
  p.optics = settings.optics;

  const bool has_sphere = j.contains("sphere_diopters");
  const bool has_spec = j.contains("optical_spec");
  if (has_sphere == has_spec) {
    check.bad("sphere_diopters", "or optical_spec must be given, not both");
    check.bad("optical_spec", "or sphere_diopters must be given, not both");
  } else if (has_sphere) {
    const auto s = check.number("sphere_diopters", true);
    const auto pupil = check.number("pupil_diameter_m", false);
    const auto pitch = check.number("pixel_pitch_m", false);
    if (s && *s == 0.0) check.bad("sphere_diopters", "must be non-zero");
    if (s && *s != 0.0) {
      try {
        p.optics = OpticalSpec::from_sphere_diopters(
            *s, settings.optics.view_distance_m,
            pupil.value_or(settings.optics.pupil_diameter_m),
            pitch.value_or(settings.optics.pixel_pitch_m));
      } catch (const Error& e) {
        check.bad(pupil ? "pupil_diameter_m" : "sphere_diopters", e.what());
      }
    }
  } else {
    const json& spec = j.at("optical_spec");
    if (!spec.is_object()) {
      check.bad("optical_spec", "must be an object");
    } else {
      FieldCheck sc(spec, "optical_spec.");
      auto set = [&](const char* key, double& field) {
        if (auto v = sc.number(key, false)) field = *v;
      };
      set("pupil_diameter_m", p.optics.pupil_diameter_m);
      set("focal_length_m", p.optics.focal_length_m);
      set("eye_depth_m", p.optics.eye_depth_m);
      set("view_distance_m", p.optics.view_distance_m);
      set("pixel_pitch_m", p.optics.pixel_pitch_m);
      if (auto v = sc.number("focus_distance_m", false)) p.optics.focus_distance_m = *v;
      check.merge(sc);
      try {
        p.optics.validate();
        (void)p.optics.focus_distance();
      } catch (const Error& e) {
        check.bad("optical_spec", e.what());
      }
    }
  }

  if (auto v = check.number("rho", false)) {
    if (*v >= 0.0) p.wiener.rho = *v;
    else check.bad("rho", "must be >= 0");
  }
  if (auto v = check.number("rho_text", false)) {
    if (*v >= 0.0) p.wiener.rho_text = *v;
    else check.bad("rho_text", "must be >= 0");
  } else if (j.contains("rho") && p.wiener.rho_text < p.wiener.rho) {
    p.wiener.rho_text = p.wiener.rho;
  }
  if (auto v = check.boolean("ringing")) p.ringing = *v;

  p.initial_pose.distance_m = p.optics.view_distance_m;
  if (j.contains("pose")) {
    if (!j.at("pose").is_object()) {
      check.bad("pose", "must be an object");
    } else {
      FieldCheck pc(j.at("pose"), "pose.");
      ViewerPose pose = read_pose(pc, false);
      if (!j.at("pose").contains("distance_m")) pose.distance_m = p.optics.view_distance_m;
      p.initial_pose = pose;
      check.merge(pc);
    }
  }
  check.throw_if_bad();
  return p;
}

// ---------------------------------------------------------------- correction

ResultBundle correct(const RasterImage& image, const ViewerPose& pose, const SessionParams& params,
                     const Settings& settings, std::uint64_t generation) {
  const auto t0 = std::chrono::steady_clock::now();
  ResultBundle b;
  b.generation = generation;
  b.pose = pose;
  b.kernel = pose_to_kernel(pose, params.optics, settings.kernel_base_size,
                            deg_to_rad(settings.fov_deg));
  b.original = image;
  if (b.kernel.is_delta()) {
    b.precorrected = image;
    b.simulated = image;
  } else {
    PrecorrectOptions options;
    options.range = settings.range;
    if (params.ringing) {
      HeuristicTextDetector detector;
      b.precorrected =
          segment_precorrect(image, b.kernel, params.wiener, detector, settings.edges, options);
    } else {
      b.precorrected = precorrect(
          image, Deconvolver(b.kernel, params.wiener.rho, params.wiener.spectrum_floor), options);
    }
    b.simulated = convolve(b.precorrected, b.kernel);
  }
  b.metrics = compare(b.original, b.simulated);
  b.processing_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return b;
}

// ---------------------------------------------------------------- session

struct CorrectionSession::State {
  SessionParams params;
  Settings settings;

  mutable std::mutex mutex;
  std::condition_variable work_cv;
  mutable std::condition_variable done_cv;

  std::shared_ptr<const RasterImage> image;
  ViewerPose pose;
  std::uint64_t requested = 0;
  std::uint64_t taken = 0;
  std::uint64_t completed = 0;
  std::uint64_t attempted = 0;
  std::string last_error;
  std::shared_ptr<const ResultBundle> bundle;
  bool closing = false;

  std::thread worker;

  void run() {
    std::unique_lock lock(mutex);
    for (;;) {
      work_cv.wait(lock, [&] { return closing || (image && requested > taken); });
      if (closing) return;
      const auto img = image;
      const ViewerPose at = pose;
      const std::uint64_t gen = requested;
      taken = gen;
      lock.unlock();

      std::shared_ptr<const ResultBundle> made;
      std::string error;
      try {
        made = std::make_shared<const ResultBundle>(correct(*img, at, params, settings, gen));
      } catch (const std::exception& e) {
        error = e.what();
        log::warn("session correction failed: " + error);
      }

      lock.lock();
      attempted = gen;
      last_error = error;
      if (made) {
        bundle = std::move(made);
        completed = gen;
      }
      done_cv.notify_all();
    }
  }
};

CorrectionSession::CorrectionSession(SessionParams params, const Settings& settings)
    : state_(std::make_unique<State>()) {
  state_->params = std::move(params);
  state_->settings = settings;
  state_->pose = state_->params.initial_pose;
  state_->worker = std::thread([s = state_.get()] { s->run(); });
}

CorrectionSession::~CorrectionSession() {
  close();
  if (state_->worker.joinable()) state_->worker.join();
}

std::uint64_t CorrectionSession::set_image(RasterImage image) {
  require(!image.empty(), ErrorKind::Precondition, "image is empty");
  auto shared = std::make_shared<const RasterImage>(std::move(image));
  std::lock_guard lock(state_->mutex);
  state_->image = std::move(shared);
  const std::uint64_t gen = ++state_->requested;
  state_->work_cv.notify_one();
  return gen;
}

std::optional<std::uint64_t> CorrectionSession::set_pose(const ViewerPose& pose) {
  pose.validate();
  std::lock_guard lock(state_->mutex);
  if (!state_->settings.hysteresis.significant(state_->pose, pose)) return std::nullopt;
  state_->pose = pose;
  const std::uint64_t gen = ++state_->requested;
  state_->work_cv.notify_one();
  return gen;
}

std::shared_ptr<const ResultBundle> CorrectionSession::latest() const {
  std::lock_guard lock(state_->mutex);
  return state_->bundle;
}

SessionStatus CorrectionSession::status() const {
  std::lock_guard lock(state_->mutex);
  SessionStatus s;
  s.requested_generation = state_->requested;
  s.completed_generation = state_->completed;
  s.has_image = static_cast<bool>(state_->image);
  s.pose = state_->pose;
  s.last_error = state_->last_error;
  return s;
}

std::shared_ptr<const ResultBundle> CorrectionSession::wait_for(std::uint64_t generation,
                                                                double timeout_s) const {
  std::unique_lock lock(state_->mutex);
  state_->done_cv.wait_for(lock, std::chrono::duration<double>(timeout_s), [&] {
    return state_->closing || state_->completed >= generation || state_->attempted >= generation;
  });
  return state_->bundle;
}

std::shared_ptr<const ResultBundle> CorrectionSession::wait_newer(std::uint64_t seen,
                                                                  double timeout_s) const {
  std::unique_lock lock(state_->mutex);
  state_->done_cv.wait_for(lock, std::chrono::duration<double>(timeout_s),
                           [&] { return state_->closing || state_->completed > seen; });
  return state_->bundle;
}

void CorrectionSession::close() {
  std::lock_guard lock(state_->mutex);
  state_->closing = true;
  state_->work_cv.notify_all();
  state_->done_cv.notify_all();
}

bool CorrectionSession::closed() const {
  std::lock_guard lock(state_->mutex);
  return state_->closing;
}

// ---------------------------------------------------------------- HTTP

namespace {

constexpr const char* kJson = "application/json";
constexpr double kMaxWaitS = 30.0;

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void send_error(httplib::Response& res, int status, const std::string& message,
                const std::vector<std::string>& fields = {}) {
  json body{{"error", message}};
  if (!fields.empty()) body["fields"] = fields;
  send_json(res, status, body);
}

int status_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Validation:
    case ErrorKind::Precondition:
    case ErrorKind::Usage:
    case ErrorKind::Io:
    case ErrorKind::OpticalConfig:
    case ErrorKind::PoseOutOfRange:
    case ErrorKind::DimensionMismatch:
      return 400;
    default:
      return 500;
  }
}

json pose_json(const ViewerPose& p) {
  return {{"distance_m", p.distance_m}, {"theta_x_rad", p.theta_x}, {"theta_y_rad", p.theta_y}};
}

std::string event_text(const ResultBundle& b) {
  const json data{{"type", "frame_ready"},
                  {"frame_ready", true},
                  {"generation", b.generation},
                  {"processing_ms", b.processing_ms}};
  return "id: " + std::to_string(b.generation) + "\nevent: frame_ready\ndata: " + data.dump() +
         "\n\n";
}

}  // namespace

struct CorrectionServer::Impl {
  Settings settings;
  httplib::Server http;
  std::mutex mutex;
  std::map<std::string, std::shared_ptr<CorrectionSession>> sessions;
  std::mt19937_64 ids{std::random_device{}()};
  std::thread thread;
  std::atomic<bool> stopping{false};

  std::shared_ptr<CorrectionSession> find(const std::string& id) {
    std::lock_guard lock(mutex);
    const auto it = sessions.find(id);
    return it == sessions.end() ? nullptr : it->second;
  }

  // Resolves the session in the first path capture or answers 404.
  template <class F>
  httplib::Server::Handler with_session(F body) {
    return [this, body](const httplib::Request& req, httplib::Response& res) {
      const auto session = find(req.matches[1]);
      if (!session) {
        send_error(res, 404, "unknown session " + std::string(req.matches[1]));
        return;
      }
      body(*session, req, res);
    };
  }

  // Honors ?min_generation=N by waiting for that generation.
  static std::shared_ptr<const ResultBundle> bundle_for(const CorrectionSession& s,
                                                        const httplib::Request& req) {
    if (req.has_param("min_generation")) {
      std::uint64_t g = 0;
      try {
        g = std::stoull(req.get_param_value("min_generation"));
      } catch (const std::exception&) {
        throw FieldError({"min_generation"}, "min_generation must be a non-negative integer");
      }
      double timeout = kMaxWaitS;
      if (req.has_param("timeout_s")) {
        try {
          timeout = std::clamp(std::stod(req.get_param_value("timeout_s")), 0.0, kMaxWaitS);
        } catch (const std::exception&) {
          throw FieldError({"timeout_s"}, "timeout_s must be a number");
        }
      }
      return s.wait_for(g, timeout);
    }
    return s.latest();
  }

  void routes() {
    http.set_exception_handler(
        [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
          try {
            std::rethrow_exception(ep);
          } catch (const FieldError& e) {
            send_error(res, 400, e.what(), e.fields());
          } catch (const Error& e) {
            send_error(res, status_for(e.kind()), e.what());
          } catch (const std::exception& e) {
            send_error(res, 500, e.what());
          }
        });

    http.Get("/health", [](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, {{"status", "ok"}});
    });

    http.Post("/session", [this](const httplib::Request& req, httplib::Response& res) {
      SessionParams params = parse_session_params(req.body, settings);
      auto session = std::make_shared<CorrectionSession>(params, settings);
      std::string id;
      {
        std::lock_guard lock(mutex);
        do {
          std::ostringstream s;
          s << std::hex << ids();
          id = s.str();
        } while (sessions.count(id) != 0);
        sessions.emplace(id, std::move(session));
      }
      send_json(res, 201,
                {{"id", id},
                 {"focus_distance_m", params.optics.focus_distance()},
                 {"pose", pose_json(params.initial_pose)}});
    });

    http.Get(R"(/session/([0-9a-f]+))",
             with_session([](CorrectionSession& s, const httplib::Request&, httplib::Response& res) {
               const SessionStatus st = s.status();
               json body{{"requested_generation", st.requested_generation},
                         {"completed_generation", st.completed_generation},
                         {"has_image", st.has_image},
                         {"pose", pose_json(st.pose)}};
               if (!st.last_error.empty()) body["last_error"] = st.last_error;
               send_json(res, 200, body);
             }));

    http.Delete(R"(/session/([0-9a-f]+))",
                [this](const httplib::Request& req, httplib::Response& res) {
                  std::shared_ptr<CorrectionSession> gone;
                  {
                    std::lock_guard lock(mutex);
                    const auto it = sessions.find(req.matches[1]);
                    if (it != sessions.end()) {
                      gone = it->second;
                      sessions.erase(it);
                    }
                  }
                  if (!gone) {
                    send_error(res, 404, "unknown session " + std::string(req.matches[1]));
                    return;
                  }
                  gone->close();
                  res.status = 204;
                });

    http.Put(R"(/session/([0-9a-f]+)/image)",
             with_session([](CorrectionSession& s, const httplib::Request& req,
                             httplib::Response& res) {
               RasterImage image;
               try {
                 const auto* p = reinterpret_cast<const std::uint8_t*>(req.body.data());
                 image = decode_png({p, req.body.size()});
               } catch (const Error& e) {
                 throw FieldError({"body"}, std::string("body is not a readable PNG: ") + e.what());
               }
               const std::uint64_t gen = s.set_image(std::move(image));
               send_json(res, 202, {{"generation", gen}});
             }));

    http.Put(R"(/session/([0-9a-f]+)/pose)",
             with_session([](CorrectionSession& s, const httplib::Request& req,
                             httplib::Response& res) {
               const ViewerPose pose = parse_pose_body(req.body);
               const auto gen = s.set_pose(pose);
               const SessionStatus st = s.status();
               send_json(res, gen ? 202 : 200,
                         {{"accepted", gen.has_value()},
                          {"generation", st.requested_generation},
                          {"pose", pose_json(st.pose)}});
             }));

    http.Get(R"(/session/([0-9a-f]+)/frame)",
             with_session([](CorrectionSession& s, const httplib::Request& req,
                             httplib::Response& res) {
               const std::string view =
                   req.has_param("view") ? req.get_param_value("view") : "precorrected";
               if (view != "precorrected" && view != "simulated" && view != "original" &&
                   view != "psf" && view != "diff") {
                 throw FieldError({"view"},
                                  "view must be precorrected, simulated, original, psf or diff");
               }
               double threshold = 1.0 / 255.0;
               if (req.has_param("threshold")) {
                 try {
                   threshold = std::stod(req.get_param_value("threshold"));
                 } catch (const std::exception&) {
                   throw FieldError({"threshold"}, "threshold must be a number");
                 }
               }
               const auto b = bundle_for(s, req);
               if (!b) {
                 send_error(res, 409, "no frame yet; upload an image first");
                 return;
               }
               std::vector<std::uint8_t> png;
               if (view == "precorrected") png = encode_png(b->precorrected);
               else if (view == "simulated") png = encode_png(b->simulated);
               else if (view == "original") png = encode_png(b->original);
               else if (view == "psf") png = encode_png(kernel_preview(b->kernel));
               else png = encode_png(diff_map(b->original, b->simulated, threshold));
               res.set_header("X-Generation", std::to_string(b->generation));
               res.set_content(std::string(png.begin(), png.end()), "image/png");
             }));

    http.Get(R"(/session/([0-9a-f]+)/metrics)",
             with_session([](CorrectionSession& s, const httplib::Request& req,
                             httplib::Response& res) {
               const auto b = bundle_for(s, req);
               if (!b) {
                 send_error(res, 409, "no frame yet; upload an image first");
                 return;
               }
               auto body = nlohmann::ordered_json::parse(b->metrics.to_json());
               body["generation"] = b->generation;
               body["processing_ms"] = b->processing_ms;
               res.set_header("X-Generation", std::to_string(b->generation));
               send_json(res, 200, body);
             }));

    http.Get(R"(/session/([0-9a-f]+)/events)",
             [this](const httplib::Request& req, httplib::Response& res) {
               const auto session = find(req.matches[1]);
               if (!session) {
                 send_error(res, 404, "unknown session " + std::string(req.matches[1]));
                 return;
               }
               long limit = -1;
               if (req.has_param("limit")) {
                 try {
                   limit = std::stol(req.get_param_value("limit"));
                 } catch (const std::exception&) {
                   throw FieldError({"limit"}, "limit must be an integer");
                 }
               }
               struct Cursor {
                 std::uint64_t seen = 0;
                 long sent = 0;
               };
               auto cursor = std::make_shared<Cursor>();
               res.set_header("Cache-Control", "no-cache");
               res.set_chunked_content_provider(
                   "text/event-stream",
                   [this, session, cursor, limit](std::size_t, httplib::DataSink& sink) {
                     if (stopping || session->closed()) {
                       sink.done();
                       return true;
                     }
                     if (!sink.is_writable()) return false;
                     const auto b = session->wait_newer(cursor->seen, 0.2);
                     if (b && b->generation > cursor->seen) {
                       const std::string text = event_text(*b);
                       if (!sink.write(text.data(), text.size())) return false;
                       cursor->seen = b->generation;
                       if (limit >= 0 && ++cursor->sent >= limit) sink.done();
                     } else {
                       // Comment line keeps idle connections alive and detects
                       // closed peers.
                       static constexpr char kPing[] = ":\n\n";
                       if (!sink.write(kPing, sizeof kPing - 1)) return false;
                     }
                     return true;
                   });
             });
  }
};

CorrectionServer::CorrectionServer(Settings settings) : impl_(std::make_unique<Impl>()) {
  settings.validate();
  impl_->settings = std::move(settings);
  impl_->routes();
}

CorrectionServer::~CorrectionServer() { stop(); }

int CorrectionServer::bind(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->http.bind_to_any_port(host)
                              : (impl_->http.bind_to_port(host, port) ? port : -1);
  require(bound > 0, ErrorKind::Io, "cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void CorrectionServer::serve() { impl_->http.listen_after_bind(); }

int CorrectionServer::start(const std::string& host, int port) {
  const int bound = bind(host, port);
  impl_->thread = std::thread([this] { serve(); });
  impl_->http.wait_until_ready();
  return bound;
}

void CorrectionServer::stop() {
  if (impl_->stopping.exchange(true)) return;
  {
    std::lock_guard lock(impl_->mutex);
    for (auto& [id, s] : impl_->sessions) s->close();
  }
  impl_->http.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
  std::lock_guard lock(impl_->mutex);
  impl_->sessions.clear();
}

}  // namespace vcd
