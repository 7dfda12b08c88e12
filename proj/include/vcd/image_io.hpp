#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "vcd/image.hpp"

namespace vcd {

/// Decodes 8- or 16-bit PNG into a gray or RGB image; alpha is dropped.
RasterImage decode_png(std::span<const std::uint8_t> bytes);
/// Encodes an 8-bit PNG. YUV images are converted to RGB first.
std::vector<std::uint8_t> encode_png(const RasterImage& image);

RasterImage read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const RasterImage& image);

// Raw float planar: "VCDF" magic, then little-endian uint32 width, height,
// channel count, color space (0 gray, 1 rgb, 2 yuv), then each plane as
// row-major float32.
std::vector<std::uint8_t> encode_raw_planar(const RasterImage& image);
RasterImage decode_raw_planar(std::span<const std::uint8_t> bytes);
RasterImage read_raw_planar(const std::filesystem::path& path);
void write_raw_planar(const std::filesystem::path& path, const RasterImage& image);

/// Reads PNG or raw planar by extension (.png, .vcdf/.raw).
RasterImage read_image(const std::filesystem::path& path);
void write_image(const std::filesystem::path& path, const RasterImage& image);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

/// 8-bit quantization used by PNG and frame pipes.
inline std::uint8_t to_byte(double v) noexcept {
  const double c = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
  return static_cast<std::uint8_t>(c * 255.0 + 0.5);
}

}  // namespace vcd
