#pragma once

#include <algorithm>
#include <cstddef>
#include <span>
#include <vector>

#include "vcd/error.hpp"

namespace vcd {

/// Dense row-major 2D grid.
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height, T fill = T{})
      : width_(width), height_(height),
        data_(static_cast<std::size_t>(checked(width, height)), fill) {}
  Grid(int width, int height, std::vector<T> data)
      : width_(width), height_(height), data_(std::move(data)) {
    require(data_.size() == static_cast<std::size_t>(checked(width, height)),
            ErrorKind::DimensionMismatch, "grid data does not match its dimensions");
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(int x, int y) noexcept { return data_[index(x, y)]; }
  const T& operator()(int x, int y) const noexcept { return data_[index(x, y)]; }

  std::span<T> row(int y) noexcept {
    return {data_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)};
  }
  std::span<const T> row(int y) const noexcept {
    return {data_.data() + static_cast<std::size_t>(y) * width_, static_cast<std::size_t>(width_)};
  }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }

  bool same_shape(const Grid& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_;
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  static long long checked(int width, int height) {
    require(width >= 0 && height >= 0, ErrorKind::Sizing, "negative grid dimensions");
    return static_cast<long long>(width) * height;
  }
  std::size_t index(int x, int y) const noexcept {
    return static_cast<std::size_t>(y) * width_ + x;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using Plane = Grid<double>;

enum class ColorSpace { Gray, Rgb, Yuv };

int channel_count(ColorSpace cs) noexcept;
const char* to_string(ColorSpace cs) noexcept;

/// Planar image with samples in [0,1]. Factories clamp; mutable plane access
/// is for producers that already honour the range.
class RasterImage {
 public:
  RasterImage() = default;
  RasterImage(int width, int height, ColorSpace cs);

  /// Builds an image from planes, clamping every sample to [0,1].
  static RasterImage from_planes(ColorSpace cs, std::vector<Plane> planes);
  static RasterImage gray(Plane plane) { return from_planes(ColorSpace::Gray, {std::move(plane)}); }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  ColorSpace colorspace() const noexcept { return colorspace_; }
  int channels() const noexcept { return static_cast<int>(planes_.size()); }
  bool empty() const noexcept { return width_ == 0 || height_ == 0; }

  const Plane& plane(int c) const { return planes_.at(static_cast<std::size_t>(c)); }
  Plane& mutable_plane(int c) { return planes_.at(static_cast<std::size_t>(c)); }
  const std::vector<Plane>& planes() const noexcept { return planes_; }

  bool same_shape(const RasterImage& other) const noexcept {
    return width_ == other.width_ && height_ == other.height_ && channels() == other.channels();
  }

  friend bool operator==(const RasterImage&, const RasterImage&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  ColorSpace colorspace_ = ColorSpace::Gray;
  std::vector<Plane> planes_;
};

void clamp_unit(Plane& plane) noexcept;

/// Copies the rectangle [x, x+w) x [y, y+h); the rectangle must lie inside.
Plane crop(const Plane& plane, int x, int y, int w, int h);
RasterImage crop(const RasterImage& image, int x, int y, int w, int h);

void require_same_shape(const RasterImage& a, const RasterImage& b, const char* what);

}  // namespace vcd
