#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "vcd/pose_tracking.hpp"
#include "vcd/precorrect.hpp"
#include "vcd/psf.hpp"
#include "vcd/ringing.hpp"

namespace vcd {

/// Every tunable default. Built-in values can be pinned by a config file and
/// overridden again by command-line flags.
struct Settings {
  WienerParams wiener;
  RangePolicy range = RangePolicy::Clamp;
  /// pad_px 0 means the kernel diameter.
  TileGrid tiles{256, 0};
  OpticalSpec optics;
  double fov_deg = 80.0;
  double face_width_m = 0.15;
  EdgeParams edges;
  double cache_seconds = 3.0;
  int kernel_base_size = 33;
  HysteresisPolicy hysteresis;

  void validate() const;
};

/// Applies `key = value` lines. '#' starts a comment; unknown keys and
/// unparsable values throw Validation naming the line.
void apply_config(Settings& settings, std::istream& in);
void apply_config_file(Settings& settings, const std::filesystem::path& path);

/// The settings as a config file that apply_config reads back.
std::string to_config_text(const Settings& settings);

RangePolicy parse_range_policy(const std::string& name);
const char* to_string(RangePolicy policy) noexcept;

}  // namespace vcd
