#include "vcd/cli.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vcd/color.hpp"
#include "vcd/config.hpp"
#include "vcd/image_io.hpp"
#include "vcd/kernel.hpp"
#include "vcd/log.hpp"
#include "vcd/metrics.hpp"
#include "vcd/pipeline.hpp"
#include "vcd/pose.hpp"
#include "vcd/pose_tracking.hpp"
#include "vcd/precorrect.hpp"
#include "vcd/psf.hpp"
#include "vcd/ringing.hpp"

namespace vcd {

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Usage:
    case ErrorKind::Validation:
    case ErrorKind::Precondition:
      return 2;
    case ErrorKind::Io:
    case ErrorKind::Detector:
      return 3;
    default:
      return 4;
  }
}

namespace {

namespace fs = std::filesystem;

// Flags shared by every command that needs a PSF.
struct KernelFlags {
  std::optional<double> radius_px;
  std::optional<double> sphere_diopters;
  std::vector<std::string> zernike;
  std::optional<std::string> kernel_file;
  std::optional<int> size;
  std::optional<int> zernike_grid;
  std::optional<double> distance;
  std::optional<double> pupil_mm;
  std::optional<double> pitch;
  double angle_x_deg = 0.0;
  double angle_y_deg = 0.0;

  void add(CLI::App* app, bool with_angles = true) {
    auto* radius = app->add_option("--radius-px", radius_px, "disk PSF radius in pixels");
    auto* sphere = app->add_option("--sphere-diopters", sphere_diopters,
                                   "sphere prescription; focus plane at 1/|S| meters");
    auto* zern = app->add_option("--zernike", zernike,
                                 "Zernike term n,m,weight_um (repeatable)");
    auto* file = app->add_option("--kernel", kernel_file, "kernel text file");
    radius->excludes(sphere)->excludes(zern)->excludes(file);
    sphere->excludes(zern)->excludes(file);
    zern->excludes(file);
    app->add_option("--size", size, "kernel grid size (odd)");
    app->add_option("--zernike-grid", zernike_grid, "Fourier grid for Zernike PSFs");
    app->add_option("--distance", distance, "viewing distance in meters");
    app->add_option("--pupil-mm", pupil_mm, "pupil diameter in millimeters");
    app->add_option("--pitch", pitch, "display pixel pitch in meters");
    if (with_angles) {
      app->add_option("--angle-x", angle_x_deg, "horizontal viewing angle in degrees");
      app->add_option("--angle-y", angle_y_deg, "vertical viewing angle in degrees");
    }
  }

  OpticalSpec optics(const Settings& s) const {
    OpticalSpec spec = s.optics;
    if (distance) spec.view_distance_m = *distance;
    if (pupil_mm) spec.pupil_diameter_m = *pupil_mm * 1e-3;
    if (pitch) spec.pixel_pitch_m = *pitch;
    if (sphere_diopters) {
      spec = OpticalSpec::from_sphere_diopters(*sphere_diopters, spec.view_distance_m,
                                               spec.pupil_diameter_m, spec.pixel_pitch_m);
    }
    spec.validate();
    return spec;
  }
};

struct KernelInfo {
  Kernel kernel;
  std::optional<OpticalSpec> optics;
  std::optional<BlurRadius> radius;
};

ZernikeTerm parse_zernike_term(const std::string& text) {
  std::istringstream in(text);
  ZernikeTerm t;
  char c1 = 0, c2 = 0;
  std::string extra;
  if (!(in >> t.n >> c1 >> t.m >> c2 >> t.weight_um) || c1 != ',' || c2 != ',' || (in >> extra)) {
    fail(ErrorKind::Usage, "--zernike expects n,m,weight_um, got '" + text + "'");
  }
  return t;
}

KernelInfo build_kernel(const KernelFlags& f, const Settings& s) {
  const double fov = deg_to_rad(s.fov_deg);
  auto finish = [&](Kernel k) {
    return warp_for_angles(k, deg_to_rad(f.angle_x_deg), deg_to_rad(f.angle_y_deg), fov);
  };
  if (f.size && (*f.size < 1 || *f.size % 2 == 0)) fail(ErrorKind::Usage, "--size must be odd");

  if (f.kernel_file) {
    std::ifstream in(*f.kernel_file);
    require(static_cast<bool>(in), ErrorKind::Io, "cannot open kernel file " + *f.kernel_file);
    return {finish(read_kernel_text(in)), std::nullopt, std::nullopt};
  }
  if (!f.zernike.empty()) {
    ZernikeSpec z;
    for (const auto& t : f.zernike) z.terms.push_back(parse_zernike_term(t));
    if (f.zernike_grid) z.grid_size = *f.zernike_grid;
    if (f.pupil_mm) z.pupil_radius_m = *f.pupil_mm * 0.5e-3;
    return {finish(zernike_psf(z)), std::nullopt, std::nullopt};
  }
  if (f.radius_px) {
    const int needed = disk_kernel_size(*f.radius_px);
    int size = f.size.value_or(needed);
    require(size >= needed, ErrorKind::Sizing,
            "--size " + std::to_string(size) + " is too small for the radius");
    const bool angled = f.angle_x_deg != 0.0 || f.angle_y_deg != 0.0;
    if (angled && !f.size) size = std::max(s.kernel_base_size, needed + 2);
    return {finish(disk_psf(*f.radius_px, size)), std::nullopt, std::nullopt};
  }
  const OpticalSpec spec = f.optics(s);
  const BlurRadius r = blur_radius(spec);
  const ViewerPose pose{spec.view_distance_m, deg_to_rad(f.angle_x_deg), deg_to_rad(f.angle_y_deg)};
  const int base = f.size.value_or(disk_kernel_size(r.pixels));
  return {pose_to_kernel(pose, spec, base, fov), spec, r};
}

void print_kernel_info(std::ostream& out, const KernelInfo& info) {
  if (info.optics) {
    out << "focus_distance_m=" << info.optics->focus_distance() << '\n'
        << "view_distance_m=" << info.optics->view_distance_m << '\n';
  }
  if (info.radius) {
    out << "blur_radius_m=" << info.radius->meters << '\n'
        << "blur_radius_px=" << info.radius->pixels << '\n';
  }
  out << "kernel_size=" << info.kernel.width() << 'x' << info.kernel.height() << '\n';
}

bool has_extension(const fs::path& p, std::initializer_list<const char*> exts) {
  std::string e = p.extension().string();
  for (auto& c : e) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (const char* x : exts) {
    if (e == x) return true;
  }
  return false;
}

void write_kernel(const fs::path& path, const Kernel& k) {
  if (has_extension(path, {".png"})) {
    write_png(path, kernel_preview(k));
    return;
  }
  std::ofstream out(path);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
  write_kernel_text(out, k);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot write " + path.string());
}

struct Common {
  std::optional<std::string> config;
  std::optional<double> rho;
  std::optional<double> rho_text;
  std::optional<int> tile;
  std::optional<int> pad;
  std::optional<std::string> range;
  std::optional<double> fov_deg;

  Settings settings() const {
    Settings s;
    if (config) apply_config_file(s, *config);
    if (rho) s.wiener.rho = *rho;
    if (rho_text) s.wiener.rho_text = *rho_text;
    if (tile) s.tiles.tile_px = *tile;
    if (pad) s.tiles.pad_px = *pad;
    if (range) s.range = parse_range_policy(*range);
    if (fov_deg) s.fov_deg = *fov_deg;
    if (rho && !rho_text && s.wiener.rho_text < s.wiener.rho) s.wiener.rho_text = s.wiener.rho;
    s.validate();
    return s;
  }
};

void add_filter_flags(CLI::App* app, Common& c) {
  app->add_option("--rho", c.rho, "baseline Wiener regularization");
  app->add_option("--rho-text", c.rho_text, "regularization for text segments");
  app->add_option("--tile", c.tile, "tile size in pixels (enables tiling)");
  app->add_option("--pad", c.pad, "tile padding in pixels");
  app->add_option("--range", c.range, "clamp or remap")->check(CLI::IsMember({"clamp", "remap"}));
}

PrecorrectOptions precorrect_options(const Common& c, const Settings& s, const Kernel& k) {
  PrecorrectOptions o;
  o.range = s.range;
  if (c.tile) {
    TileGrid g = s.tiles;
    if (g.pad_px == 0) g.pad_px = 2 * k.radius() + 1;
    o.tiles = g;
  }
  return o;
}

std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Vision-correcting display engine"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");
  Common common;
  app.add_option("--config", common.config, "key=value file pinning defaults")
      ->check(CLI::ExistingFile);
  app.add_option("--fov", common.fov_deg, "camera field of view in degrees");

  // psf
  auto* psf_cmd = app.add_subcommand("psf", "render a PSF kernel");
  KernelFlags psf_flags;
  psf_flags.add(psf_cmd);
  std::optional<std::string> psf_out;
  std::optional<std::string> psf_png;
  psf_cmd->add_option("-o,--out", psf_out, "kernel output (.txt grid or .png preview)");
  psf_cmd->add_option("--png", psf_png, "additional PNG preview");

  // precorrect
  auto* pre_cmd = app.add_subcommand("precorrect", "precorrect an image for a viewer");
  KernelFlags pre_flags;
  pre_flags.add(pre_cmd);
  std::string pre_in, pre_out;
  std::string ringing = "off";
  std::optional<std::string> detector_cmd;
  std::optional<std::string> mask_out;
  pre_cmd->add_option("input", pre_in, "input image")->required();
  pre_cmd->add_option("output", pre_out, "output image")->required();
  add_filter_flags(pre_cmd, common);
  pre_cmd->add_option("--ringing", ringing, "edge-masked compositing")
      ->check(CLI::IsMember({"on", "off"}));
  pre_cmd->add_option("--detector", detector_cmd,
                      "OCR command (region PNG on stdin, text on stdout)");
  pre_cmd->add_option("--mask-out", mask_out, "write the edge mask as PNG");

  // simulate
  auto* sim_cmd = app.add_subcommand("simulate", "preview the image as the viewer sees it");
  KernelFlags sim_flags;
  sim_flags.add(sim_cmd);
  std::string sim_in, sim_out;
  sim_cmd->add_option("input", sim_in, "input image")->required();
  sim_cmd->add_option("output", sim_out, "output image")->required();

  // metrics
  auto* met_cmd = app.add_subcommand("metrics", "compare two images");
  std::string met_a, met_b;
  std::string met_format = "json";
  std::optional<std::string> met_out;
  std::optional<std::string> diff_out;
  double diff_threshold = 1.0 / 255.0;
  met_cmd->add_option("reference", met_a, "reference image")->required();
  met_cmd->add_option("test", met_b, "test image")->required();
  met_cmd->add_option("--format", met_format, "json or kv")->check(CLI::IsMember({"json", "kv"}));
  met_cmd->add_option("-o,--out", met_out, "write the report to a file");
  met_cmd->add_option("--diff", diff_out, "write a pixel-difference map PNG");
  met_cmd->add_option("--diff-threshold", diff_threshold, "difference map threshold");

  // video
  auto* vid_cmd = app.add_subcommand("video", "precorrect a raw RGB frame stream");
  KernelFlags vid_flags;
  vid_flags.add(vid_cmd);
  add_filter_flags(vid_cmd, common);
  std::optional<std::string> vid_in, vid_out, vid_pose_log;
  std::optional<double> vid_fps;
  std::optional<double> cache_seconds;
  std::optional<long long> synthetic;
  int syn_w = 1280, syn_h = 720;
  bool realtime = false;
  bool no_tiles = false;
  auto* in_opt = vid_cmd->add_option("-i,--input", vid_in, "raw stream file, or - for stdin");
  auto* syn_opt =
      vid_cmd->add_option("--synthetic", synthetic, "generate this many test frames instead");
  in_opt->excludes(syn_opt);
  vid_cmd->add_option("--width", syn_w, "synthetic frame width");
  vid_cmd->add_option("--height", syn_h, "synthetic frame height");
  vid_cmd->add_option("-o,--output", vid_out, "raw output file, or - for stdout");
  vid_cmd->add_option("--fps", vid_fps, "presentation rate (default: stream header)");
  vid_cmd->add_option("--cache-seconds", cache_seconds, "lookahead cache depth");
  vid_cmd->add_option("--pose-log", vid_pose_log, "drive the kernel from a pose log");
  vid_cmd->add_flag("--realtime", realtime, "present at the stream rate and count underruns");
  vid_cmd->add_flag("--no-tiles", no_tiles, "deconvolve whole frames");

  // pose-replay
  auto* rep_cmd = app.add_subcommand("pose-replay", "kernels and corrected frames per pose sample");
  KernelFlags rep_flags;
  rep_flags.add(rep_cmd, false);
  add_filter_flags(rep_cmd, common);
  std::string rep_log, rep_image, rep_dir = ".";
  rep_cmd->add_option("pose_log", rep_log, "pose log")->required()->check(CLI::ExistingFile);
  rep_cmd->add_option("image", rep_image, "image to correct")->required();
  rep_cmd->add_option("--out-dir", rep_dir, "output directory");

  auto* cfg_cmd = app.add_subcommand("config", "print the effective settings");
  add_filter_flags(cfg_cmd, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    const Settings settings = common.settings();

    if (*cfg_cmd) {
      out << to_config_text(settings);
      return 0;
    }

    if (*psf_cmd) {
      const KernelInfo info = build_kernel(psf_flags, settings);
      print_kernel_info(out, info);
      out << "kernel_sum=" << std::setprecision(12) << info.kernel.sum() << '\n';
      if (psf_out) write_kernel(*psf_out, info.kernel);
      if (psf_png) write_png(*psf_png, kernel_preview(info.kernel));
      if (!psf_out && !psf_png) write_kernel_text(out, info.kernel);
      return 0;
    }

    if (*pre_cmd) {
      const KernelInfo info = build_kernel(pre_flags, settings);
      print_kernel_info(out, info);
      const RasterImage image = read_image(pre_in);
      const PrecorrectOptions options = precorrect_options(common, settings, info.kernel);
      RasterImage result;
      if (ringing == "on") {
        std::unique_ptr<TextDetector> detector;
        if (detector_cmd) {
          detector = std::make_unique<SubprocessTextDetector>(*detector_cmd);
        } else {
          detector = std::make_unique<HeuristicTextDetector>();
        }
        const auto r = segment_precorrect_detailed(image, info.kernel, settings.wiener, *detector,
                                                   settings.edges, options);
        out << "segments=" << r.segments.size() << '\n'
            << "text_segments="
            << std::count_if(r.segments.begin(), r.segments.end(),
                             [](const Segment& s) { return s.has_text; })
            << '\n'
            << "detector_failures=" << r.detector_failures << '\n'
            << "mask_pixels=" << count_set(r.mask) << '\n';
        if (mask_out) {
          Plane m(r.mask.width(), r.mask.height());
          for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = r.mask.data()[i];
          write_png(*mask_out, RasterImage::gray(std::move(m)));
        }
        result = r.image;
      } else {
        require(!mask_out, ErrorKind::Usage, "--mask-out needs --ringing on");
        const Deconvolver d(info.kernel, settings.wiener.rho, settings.wiener.spectrum_floor);
        result = precorrect(image, d, options);
      }
      write_image(pre_out, result);
      out << "output=" << pre_out << '\n';
      return 0;
    }

    if (*sim_cmd) {
      const KernelInfo info = build_kernel(sim_flags, settings);
      print_kernel_info(out, info);
      write_image(sim_out, convolve(read_image(sim_in), info.kernel));
      out << "output=" << sim_out << '\n';
      return 0;
    }

    if (*met_cmd) {
      const RasterImage a = read_image(met_a);
      const RasterImage b = read_image(met_b);
      const MetricsReport report = compare(a, b);
      const std::string text = met_format == "json" ? report.to_json() + "\n" : report.to_key_value();
      if (met_out) {
        std::ofstream f(*met_out);
        require(static_cast<bool>(f << text), ErrorKind::Io, "cannot write " + *met_out);
      } else {
        out << text;
      }
      if (diff_out) write_png(*diff_out, diff_map(a, b, diff_threshold));
      return 0;
    }

    if (*vid_cmd) {
      require(vid_in || synthetic, ErrorKind::Usage, "video needs --input or --synthetic");
      std::unique_ptr<FrameSource> source;
      if (synthetic) {
        source = std::make_unique<SyntheticFrameSource>(syn_w, syn_h, vid_fps.value_or(30.0),
                                                        *synthetic);
      } else if (*vid_in == "-") {
        source = std::make_unique<RawStreamSource>(stdin, false);
      } else {
        std::FILE* f = std::fopen(vid_in->c_str(), "rb");
        require(f != nullptr, ErrorKind::Io, "cannot open " + *vid_in);
        source = std::make_unique<RawStreamSource>(f, true);
      }
      const int width = source->width();
      const int height = source->height();
      const double fps = vid_fps.value_or(source->fps());
      if (vid_fps && !synthetic) {
        // Wrap to override the presentation rate.
        struct Rate final : FrameSource {
          std::unique_ptr<FrameSource> inner;
          double rate;
          int width() const override { return inner->width(); }
          int height() const override { return inner->height(); }
          double fps() const override { return rate; }
          std::optional<std::int64_t> frame_count() const override { return inner->frame_count(); }
          std::optional<Frame> read(std::int64_t i) override { return inner->read(i); }
        };
        auto r = std::make_unique<Rate>();
        r->inner = std::move(source);
        r->rate = fps;
        source = std::move(r);
      }

      std::shared_ptr<KernelSource> kernels;
      if (vid_pose_log) {
        const OpticalSpec spec = vid_flags.optics(settings);
        kernels = std::make_shared<PoseLogKernelSource>(
            PoseTimeline(read_pose_log(*vid_pose_log), settings.hysteresis), spec,
            settings.kernel_base_size);
      } else {
        const KernelInfo info = build_kernel(vid_flags, settings);
        print_kernel_info(vid_out && *vid_out == "-" ? err : out, info);
        kernels = std::make_shared<FixedKernelSource>(info.kernel);
      }

      PipelineConfig config;
      config.params = settings.wiener;
      config.options.range = settings.range;
      config.options.tiles = no_tiles ? std::nullopt : std::optional<TileGrid>(settings.tiles);
      config.cache_seconds = cache_seconds.value_or(settings.cache_seconds);
      config.mode = realtime ? PresentMode::RealTime : PresentMode::Lockstep;

      std::FILE* sink_file = nullptr;
      bool close_sink = false;
      if (vid_out) {
        if (*vid_out == "-") {
          sink_file = stdout;
        } else {
          sink_file = std::fopen(vid_out->c_str(), "wb");
          require(sink_file != nullptr, ErrorKind::Io, "cannot create " + *vid_out);
          close_sink = true;
        }
      }
      std::optional<RawFrameWriter> writer;
      if (sink_file) writer.emplace(sink_file, RawStreamHeader{width, height, fps});
      std::string sink_error;
      std::atomic<bool> sink_failed{false};
      std::int64_t last_written = -1;
      PipelineSession::Sink sink = [&](const Frame& f, std::int64_t index) {
        if (!writer || sink_failed.load() || index == last_written) return;
        try {
          writer->write(f);
          last_written = index;
        } catch (const std::exception& e) {
          sink_error = e.what();
          sink_failed.store(true);
        }
      };

      const auto t0 = std::chrono::steady_clock::now();
      PipelineSession session(std::move(source), kernels, config, sink);
      while (!session.wait_finished(std::chrono::milliseconds(500))) {
        if (sink_failed.load()) break;
      }
      const double seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      const PipelineMetrics m = session.metrics();
      session.stop();
      if (close_sink) std::fclose(sink_file);
      else if (sink_file) std::fflush(sink_file);
      require(sink_error.empty(), ErrorKind::Io, sink_error);

      std::ostream& report = vid_out && *vid_out == "-" ? err : out;
      report << "frames=" << m.frames_presented << '\n'
             << "resolution=" << width << 'x' << height << '\n'
             << "seconds=" << fmt(seconds) << '\n'
             << "throughput_fps=" << fmt(seconds > 0 ? m.frames_presented / seconds : 0.0) << '\n'
             << "mean_processing_ms=" << fmt(m.mean_processing_ms) << '\n'
             << "underruns=" << m.underruns << '\n'
             << "cache_capacity=" << m.cache_capacity << '\n';
      return 0;
    }

    if (*rep_cmd) {
      const OpticalSpec spec = rep_flags.optics(settings);
      const PoseTimeline timeline(read_pose_log(rep_log), settings.hysteresis);
      const RasterImage image = read_image(rep_image);
      fs::create_directories(rep_dir);
      std::optional<std::uint64_t> done_generation;
      RasterImage corrected;
      std::optional<Kernel> kernel;
      int i = 0;
      for (const auto& e : timeline.entries()) {
        if (done_generation != e.generation) {
          kernel = pose_to_kernel(e.pose, spec, settings.kernel_base_size,
                                  deg_to_rad(settings.fov_deg));
          const Deconvolver d(*kernel, settings.wiener.rho, settings.wiener.spectrum_floor);
          corrected = precorrect(image, d, precorrect_options(common, settings, *kernel));
          done_generation = e.generation;
        }
        std::ostringstream stem;
        stem << "sample_" << std::setw(4) << std::setfill('0') << i;
        const fs::path base = fs::path(rep_dir) / stem.str();
        write_kernel(base.string() + "_kernel.txt", *kernel);
        write_png(base.string() + "_psf.png", kernel_preview(*kernel));
        write_png(base.string() + "_corrected.png", corrected);
        OpticalSpec at = spec;
        at.view_distance_m = e.pose.distance_m;
        out << e.timestamp_ms << " generation=" << e.generation
            << " distance_m=" << fmt(e.pose.distance_m)
            << " theta_x_rad=" << fmt(e.pose.theta_x) << " theta_y_rad=" << fmt(e.pose.theta_y)
            << " blur_radius_px=" << fmt(blur_radius(at).pixels)
            << " kernel=" << kernel->width() << 'x' << kernel->height() << '\n';
        ++i;
      }
      out << "samples=" << i << '\n' << "generations=" << timeline.generations() << '\n';
      return 0;
    }
  } catch (const Error& e) {
    err << "error (" << to_string(e.kind()) << "): " << e.what() << '\n';
    return exit_code_for(e.kind());
  } catch (const fs::filesystem_error& e) {
    err << "error (io): " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 4;
  }
  return 0;
}

}  // namespace vcd
