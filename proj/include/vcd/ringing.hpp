#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "vcd/image.hpp"
#include "vcd/kernel.hpp"
#include "vcd/precorrect.hpp"

namespace vcd {

/// Binary mask: 1 selects the deconvolved image, 0 the original.
using Mask = Grid<std::uint8_t>;

Mask complement(const Mask& mask);
std::size_t count_set(const Mask& mask);

/// Canny-style edge detection. Thresholds are fractions of the strongest
/// gradient in the image, so a constant image yields an empty mask.
struct EdgeParams {
  double low = 0.1;
  double high = 0.2;
  int dilate_px = 3;

  void validate() const;
};

/// Sobel gradients, non-maximum suppression, hysteresis, square dilation by
/// `dilate_px`, then filling of regions enclosed by edges.
Mask edge_mask(const Plane& blurred, const EdgeParams& params = {});
Mask edge_mask(const RasterImage& blurred, const EdgeParams& params = {});

/// deconvolved where mask = 1, original where mask = 0.
RasterImage composite(const RasterImage& original, const RasterImage& deconvolved, const Mask& mask);
Plane composite(const Plane& original, const Plane& deconvolved, const Mask& mask);

struct BoundingBox {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
};

struct Segment {
  BoundingBox box;
  /// Linear pixel indices (y * width + x) of the segment.
  std::vector<std::size_t> pixels;
  bool has_text = false;
};

/// 8-connected components of the set pixels, in raster order of their first
/// pixel.
std::vector<Segment> segment_mask(const Mask& mask);

/// Finds text in an image region; an empty string means no text. Throws on
/// detector failure.
class TextDetector {
 public:
  virtual ~TextDetector() = default;
  virtual std::string detect(const RasterImage& region) = 0;
};

/// Glyph-statistics heuristic: counts connected components of the minority
/// polarity with letter-like size, aspect and fill, and checks that their
/// stroke widths are consistent.
class HeuristicTextDetector final : public TextDetector {
 public:
  struct Params {
    int min_glyphs = 3;
    int min_glyph_height = 4;
    double min_aspect = 0.08;
    double max_aspect = 2.5;
    double min_fill = 0.08;
    double max_fill = 0.95;
    double max_stroke_cv = 0.75;
  };

  HeuristicTextDetector() = default;
  explicit HeuristicTextDetector(Params params) : params_(params) {}

  std::string detect(const RasterImage& region) override;

 private:
  Params params_;
};

/// Runs an external OCR command through /bin/sh: the region is written to its
/// stdin as PNG, its stdout is read as UTF-8 text. A nonzero exit status is a
/// detector failure.
class SubprocessTextDetector final : public TextDetector {
 public:
  explicit SubprocessTextDetector(std::string command) : command_(std::move(command)) {}
  std::string detect(const RasterImage& region) override;

 private:
  std::string command_;
};

/// Detector with a fixed answer; useful to collapse the text/non-text split.
class ConstantTextDetector final : public TextDetector {
 public:
  explicit ConstantTextDetector(std::string text) : text_(std::move(text)) {}
  std::string detect(const RasterImage&) override { return text_; }

 private:
  std::string text_;
};

struct SegmentPrecorrectResult {
  RasterImage image;
  Mask mask;
  std::vector<Segment> segments;
  int detector_failures = 0;
};

/// Edge-masked precorrection. The mask comes from the forward-blurred image;
/// each 8-connected segment takes its pixels from a whole-image deconvolution
/// at rho (no text) or rho_text (text). Pixels outside the mask keep the
/// original values. Color images are processed on luma with chroma untouched.
SegmentPrecorrectResult segment_precorrect_detailed(const RasterImage& image, const Kernel& kernel,
                                                    const WienerParams& params,
                                                    TextDetector& detector,
                                                    const EdgeParams& edges = {},
                                                    const PrecorrectOptions& options = {});

RasterImage segment_precorrect(const RasterImage& image, const Kernel& kernel,
                               const WienerParams& params, TextDetector& detector,
                               const EdgeParams& edges = {}, const PrecorrectOptions& options = {});

}  // namespace vcd
