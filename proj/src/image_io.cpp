#include "vcd/image_io.hpp"

#include <png.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "vcd/color.hpp"

namespace vcd {
namespace {

struct ReadCursor {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
};

void png_read_callback(png_structp png, png_bytep out, png_size_t length) {
  auto* cursor = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cursor->offset + length > cursor->bytes.size()) png_error(png, "truncated PNG");
  std::memcpy(out, cursor->bytes.data() + cursor->offset, length);
  cursor->offset += length;
}

void png_write_callback(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void png_flush_callback(png_structp) {}

[[noreturn]] void png_error_callback(png_structp, png_const_charp message) {
  throw Error(ErrorKind::Io, std::string("png: ") + message);
}

void png_warning_callback(png_structp, png_const_charp) {}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(std::span<const std::uint8_t> bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes[offset + i]) << (8 * i);
  return v;
}

}  // namespace

RasterImage decode_png(std::span<const std::uint8_t> bytes) {
  require(bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0, ErrorKind::Io,
          "not a PNG stream");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_callback,
                                           png_warning_callback);
  require(png != nullptr, ErrorKind::Io, "png: cannot allocate reader");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* png;
    png_infop* info;
    ~Guard() { png_destroy_read_struct(png, info, nullptr); }
  } guard{&png, &info};

  ReadCursor cursor{bytes, 0};
  png_set_read_fn(png, &cursor, png_read_callback);
  png_read_info(png, info);

  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS)) {
    png_set_strip_alpha(png);
  }
  if (depth == 16) png_set_swap(png);
  png_read_update_info(png, info);

  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int channels = png_get_channels(png, info);
  const int out_depth = png_get_bit_depth(png, info);
  require(channels == 1 || channels == 3, ErrorKind::Io, "png: unsupported channel layout");

  const std::size_t stride = png_get_rowbytes(png, info);
  std::vector<std::uint8_t> pixels(stride * static_cast<std::size_t>(h));
  std::vector<png_bytep> rows(static_cast<std::size_t>(h));
  for (int y = 0; y < h; ++y) rows[static_cast<std::size_t>(y)] = pixels.data() + stride * y;
  png_read_image(png, rows.data());

  const ColorSpace cs = channels == 1 ? ColorSpace::Gray : ColorSpace::Rgb;
  std::vector<Plane> planes(static_cast<std::size_t>(channels), Plane(w, h));
  for (int y = 0; y < h; ++y) {
    const std::uint8_t* row = rows[static_cast<std::size_t>(y)];
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < channels; ++c) {
        const std::size_t i = static_cast<std::size_t>(x) * channels + c;
        double v;
        if (out_depth == 16) {
          std::uint16_t s;
          std::memcpy(&s, row + 2 * i, 2);
          v = s / 65535.0;
        } else {
          v = row[i] / 255.0;
        }
        planes[static_cast<std::size_t>(c)](x, y) = v;
      }
    }
  }
  return RasterImage::from_planes(cs, std::move(planes));
}

std::vector<std::uint8_t> encode_png(const RasterImage& image) {
  require(!image.empty(), ErrorKind::Io, "cannot encode an empty image");
  if (image.colorspace() == ColorSpace::Yuv) return encode_png(yuv_to_rgb(image));

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_callback,
                                            png_warning_callback);
  require(png != nullptr, ErrorKind::Io, "png: cannot allocate writer");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp* png;
    png_infop* info;
    ~Guard() { png_destroy_write_struct(png, info); }
  } guard{&png, &info};

  std::vector<std::uint8_t> out;
  png_set_write_fn(png, &out, png_write_callback, png_flush_callback);
  const int channels = image.channels();
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width()),
               static_cast<png_uint_32>(image.height()), 8,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<std::uint8_t> row(static_cast<std::size_t>(image.width()) * channels);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < channels; ++c) {
        row[static_cast<std::size_t>(x) * channels + c] = to_byte(image.plane(c)(x, y));
      }
    }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  return out;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::Io, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), ErrorKind::Io, "write failed: " + path.string());
}

RasterImage read_png(const std::filesystem::path& path) { return decode_png(read_file(path)); }

void write_png(const std::filesystem::path& path, const RasterImage& image) {
  write_file(path, encode_png(image));
}

std::vector<std::uint8_t> encode_raw_planar(const RasterImage& image) {
  static_assert(std::endian::native == std::endian::little, "raw planar I/O assumes little endian");
  std::vector<std::uint8_t> out{'V', 'C', 'D', 'F'};
  put_u32(out, static_cast<std::uint32_t>(image.width()));
  put_u32(out, static_cast<std::uint32_t>(image.height()));
  put_u32(out, static_cast<std::uint32_t>(image.channels()));
  put_u32(out, static_cast<std::uint32_t>(image.colorspace()));
  for (const auto& p : image.planes()) {
    for (double v : p.values()) {
      const float f = static_cast<float>(v);
      const auto* b = reinterpret_cast<const std::uint8_t*>(&f);
      out.insert(out.end(), b, b + sizeof f);
    }
  }
  return out;
}

RasterImage decode_raw_planar(std::span<const std::uint8_t> bytes) {
  require(bytes.size() >= 20 && std::memcmp(bytes.data(), "VCDF", 4) == 0, ErrorKind::Io,
          "not a raw planar stream");
  const auto w = static_cast<int>(get_u32(bytes, 4));
  const auto h = static_cast<int>(get_u32(bytes, 8));
  const auto channels = static_cast<int>(get_u32(bytes, 12));
  const auto cs_tag = get_u32(bytes, 16);
  require(cs_tag <= 2, ErrorKind::Io, "raw planar: unknown color space");
  const auto cs = static_cast<ColorSpace>(cs_tag);
  require(channels == channel_count(cs), ErrorKind::Io, "raw planar: channel count mismatch");
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  require(bytes.size() == 20 + n * channels * sizeof(float), ErrorKind::Io,
          "raw planar: size does not match header");
  std::vector<Plane> planes;
  std::size_t offset = 20;
  for (int c = 0; c < channels; ++c) {
    Plane p(w, h);
    for (double& v : p.values()) {
      float f;
      std::memcpy(&f, bytes.data() + offset, sizeof f);
      offset += sizeof f;
      v = f;
    }
    planes.push_back(std::move(p));
  }
  return RasterImage::from_planes(cs, std::move(planes));
}

RasterImage read_raw_planar(const std::filesystem::path& path) {
  return decode_raw_planar(read_file(path));
}

void write_raw_planar(const std::filesystem::path& path, const RasterImage& image) {
  write_file(path, encode_raw_planar(image));
}

namespace {

bool is_raw(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  return ext == ".vcdf" || ext == ".raw";
}

}  // namespace

RasterImage read_image(const std::filesystem::path& path) {
  return is_raw(path) ? read_raw_planar(path) : read_png(path);
}

void write_image(const std::filesystem::path& path, const RasterImage& image) {
  if (is_raw(path)) {
    write_raw_planar(path, image);
  } else {
    write_png(path, image);
  }
}

}  // namespace vcd
