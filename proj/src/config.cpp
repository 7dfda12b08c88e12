#include "vcd/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "vcd/pose.hpp"

namespace vcd {
namespace {

double parse_double(const std::string& text) {
  std::size_t used = 0;
  const double v = std::stod(text, &used);
  if (used != text.size() || !std::isfinite(v)) throw std::invalid_argument(text);
  return v;
}

int parse_int(const std::string& text) {
  std::size_t used = 0;
  const int v = std::stoi(text, &used);
  if (used != text.size()) throw std::invalid_argument(text);
  return v;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

using Setter = std::function<void(Settings&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  auto real = [](double Settings::*field) {
    return [field](Settings& s, const std::string& v) { s.*field = parse_double(v); };
  };
  static const std::map<std::string, Setter> table = {
      {"rho", [](Settings& s, const std::string& v) { s.wiener.rho = parse_double(v); }},
      {"rho_text", [](Settings& s, const std::string& v) { s.wiener.rho_text = parse_double(v); }},
      {"spectrum_floor",
       [](Settings& s, const std::string& v) { s.wiener.spectrum_floor = parse_double(v); }},
      {"range", [](Settings& s, const std::string& v) { s.range = parse_range_policy(v); }},
      {"tile_px", [](Settings& s, const std::string& v) { s.tiles.tile_px = parse_int(v); }},
      {"pad_px", [](Settings& s, const std::string& v) { s.tiles.pad_px = parse_int(v); }},
      {"pupil_diameter_m",
       [](Settings& s, const std::string& v) { s.optics.pupil_diameter_m = parse_double(v); }},
      {"focal_length_m",
       [](Settings& s, const std::string& v) { s.optics.focal_length_m = parse_double(v); }},
      {"eye_depth_m",
       [](Settings& s, const std::string& v) { s.optics.eye_depth_m = parse_double(v); }},
      {"view_distance_m",
       [](Settings& s, const std::string& v) { s.optics.view_distance_m = parse_double(v); }},
      {"pixel_pitch_m",
       [](Settings& s, const std::string& v) { s.optics.pixel_pitch_m = parse_double(v); }},
      {"fov_deg", real(&Settings::fov_deg)},
      {"face_width_m", real(&Settings::face_width_m)},
      {"edge_low", [](Settings& s, const std::string& v) { s.edges.low = parse_double(v); }},
      {"edge_high", [](Settings& s, const std::string& v) { s.edges.high = parse_double(v); }},
      {"dilate_px", [](Settings& s, const std::string& v) { s.edges.dilate_px = parse_int(v); }},
      {"cache_seconds", real(&Settings::cache_seconds)},
      {"kernel_base_size",
       [](Settings& s, const std::string& v) { s.kernel_base_size = parse_int(v); }},
      {"hysteresis_distance",
       [](Settings& s, const std::string& v) { s.hysteresis.distance_rel = parse_double(v); }},
      {"hysteresis_angle_deg", [](Settings& s, const std::string& v) {
         s.hysteresis.angle_rad = deg_to_rad(parse_double(v));
       }}};
  return table;
}

}  // namespace

void Settings::validate() const {
  wiener.validate();
  edges.validate();
  optics.validate();
  require(tiles.tile_px >= 32, ErrorKind::Validation, "tile_px must be >= 32");
  require(tiles.pad_px >= 0, ErrorKind::Validation, "pad_px must be >= 0");
  require(fov_deg > 0.0 && fov_deg < 180.0, ErrorKind::Validation, "fov_deg must be in (0, 180)");
  require(face_width_m > 0.0, ErrorKind::Validation, "face_width_m must be > 0");
  require(cache_seconds > 0.0, ErrorKind::Validation, "cache_seconds must be > 0");
  require(kernel_base_size >= 1 && kernel_base_size % 2 == 1, ErrorKind::Validation,
          "kernel_base_size must be odd and >= 1");
  require(hysteresis.distance_rel >= 0.0 && hysteresis.angle_rad >= 0.0, ErrorKind::Validation,
          "hysteresis thresholds must be >= 0");
}

void apply_config(Settings& settings, std::istream& in) {
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "config line " + std::to_string(number);
    require(eq != std::string::npos, ErrorKind::Validation, where + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters().find(key);
    require(it != setters().end(), ErrorKind::Validation, where + ": unknown key '" + key + "'");
    try {
      it->second(settings, value);
    } catch (const Error& e) {
      fail(ErrorKind::Validation, where + ": " + e.what());
    } catch (const std::exception&) {
      fail(ErrorKind::Validation, where + ": bad value '" + value + "' for " + key);
    }
  }
}

void apply_config_file(Settings& settings, const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open config file " + path.string());
  apply_config(settings, in);
}

namespace {

// Shortest text that reads back to the same double.
std::string shortest(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

}  // namespace

std::string to_config_text(const Settings& s) {
  std::ostringstream out;
  out << "rho = " << shortest(s.wiener.rho) << '\n'
      << "rho_text = " << shortest(s.wiener.rho_text) << '\n'
      << "spectrum_floor = " << shortest(s.wiener.spectrum_floor) << '\n'
      << "range = " << to_string(s.range) << '\n'
      << "tile_px = " << s.tiles.tile_px << '\n'
      << "pad_px = " << s.tiles.pad_px << '\n'
      << "pupil_diameter_m = " << shortest(s.optics.pupil_diameter_m) << '\n'
      << "focal_length_m = " << shortest(s.optics.focal_length_m) << '\n'
      << "eye_depth_m = " << shortest(s.optics.eye_depth_m) << '\n'
      << "view_distance_m = " << shortest(s.optics.view_distance_m) << '\n'
      << "pixel_pitch_m = " << shortest(s.optics.pixel_pitch_m) << '\n'
      << "fov_deg = " << shortest(s.fov_deg) << '\n'
      << "face_width_m = " << shortest(s.face_width_m) << '\n'
      << "edge_low = " << shortest(s.edges.low) << '\n'
      << "edge_high = " << shortest(s.edges.high) << '\n'
      << "dilate_px = " << s.edges.dilate_px << '\n'
      << "cache_seconds = " << shortest(s.cache_seconds) << '\n'
      << "kernel_base_size = " << s.kernel_base_size << '\n'
      << "hysteresis_distance = " << shortest(s.hysteresis.distance_rel) << '\n'
      << "hysteresis_angle_deg = " << shortest(rad_to_deg(s.hysteresis.angle_rad)) << '\n';
  return out.str();
}

RangePolicy parse_range_policy(const std::string& name) {
  if (name == "clamp") return RangePolicy::Clamp;
  if (name == "remap") return RangePolicy::AffineRemap;
  fail(ErrorKind::Validation, "range must be 'clamp' or 'remap', got '" + name + "'");
}

const char* to_string(RangePolicy policy) noexcept {
  return policy == RangePolicy::Clamp ? "clamp" : "remap";
}

}  // namespace vcd
