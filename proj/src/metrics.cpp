#include "vcd/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

#include "vcd/color.hpp"

namespace vcd {
namespace {

void require_planes(const Plane& a, const Plane& b, const char* what) {
  require(a.same_shape(b), ErrorKind::DimensionMismatch,
          std::string(what) + ": image dimensions differ");
  require(!a.empty(), ErrorKind::Precondition, std::string(what) + ": images are empty");
}

double mse(const Plane& a, const Plane& b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.data()[i] - b.data()[i];
    sum += d * d;
  }
  return sum / static_cast<double>(a.size());
}

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> w(static_cast<std::size_t>(size));
  const int c = size / 2;
  double sum = 0.0;
  for (int i = 0; i < size; ++i) {
    w[static_cast<std::size_t>(i)] = std::exp(-0.5 * (i - c) * (i - c) / (sigma * sigma));
    sum += w[static_cast<std::size_t>(i)];
  }
  for (double& v : w) v /= sum;
  return w;
}

// Separable weighted sums over every full window ("valid" correlation).
Plane filter_valid(const Plane& p, const std::vector<double>& w) {
  const int n = static_cast<int>(w.size());
  const int ow = p.width() - n + 1;
  const int oh = p.height() - n + 1;
  Plane rows(ow, p.height());
  for (int y = 0; y < p.height(); ++y) {
    const auto src = p.row(y);
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += w[static_cast<std::size_t>(k)] * src[static_cast<std::size_t>(x + k)];
      rows(x, y) = s;
    }
  }
  Plane out(ow, oh);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int k = 0; k < n; ++k) s += w[static_cast<std::size_t>(k)] * rows(x, y + k);
      out(x, y) = s;
    }
  }
  return out;
}

Plane product(const Plane& a, const Plane& b) {
  Plane out(a.width(), a.height());
  for (std::size_t i = 0; i < a.size(); ++i) out.data()[i] = a.data()[i] * b.data()[i];
  return out;
}

double ssim_term(double mu_a, double mu_b, double var_a, double var_b, double cov,
                 const SsimParams& p) {
  return ((2.0 * mu_a * mu_b + p.c1) * (2.0 * cov + p.c2)) /
         ((mu_a * mu_a + mu_b * mu_b + p.c1) * (var_a + var_b + p.c2));
}

RasterImage as_rgb_or_gray(const RasterImage& image) {
  return image.colorspace() == ColorSpace::Yuv ? yuv_to_rgb(image) : image;
}

}  // namespace

double psnr(const Plane& a, const Plane& b) {
  require_planes(a, b, "psnr");
  const double err = mse(a, b);
  if (err == 0.0) return kInfinitePsnr;
  double peak = *std::max_element(a.values().begin(), a.values().end());
  if (peak <= 0.0) peak = 1.0;
  return 10.0 * std::log10(peak * peak / err);
}

PsnrResult psnr(const RasterImage& a, const RasterImage& b) {
  require_same_shape(a, b, "psnr");
  PsnrResult r;
  for (int c = 0; c < a.channels(); ++c) r.channels.push_back(psnr(a.plane(c), b.plane(c)));
  r.combined = a.colorspace() == ColorSpace::Gray ? r.channels[0] : psnr(luma(a), luma(b));
  return r;
}

double rmse(const RasterImage& a, const RasterImage& b) {
  require_same_shape(a, b, "rmse");
  const Plane la = luma(a);
  const Plane lb = luma(b);
  require_planes(la, lb, "rmse");
  return std::sqrt(mse(la, lb));
}

AbsoluteError absolute_error(const RasterImage& a, const RasterImage& b) {
  require_same_shape(a, b, "absolute error");
  require(!a.empty(), ErrorKind::Precondition, "absolute error: images are empty");
  AbsoluteError r;
  const Plane la = luma(a);
  const Plane lb = luma(b);
  r.map = Plane(la.width(), la.height());
  double intensity = 0.0;
  for (std::size_t i = 0; i < la.size(); ++i) {
    const double d = std::abs(la.data()[i] - lb.data()[i]);
    r.map.data()[i] = d;
    r.total += d;
    intensity += la.data()[i];
  }
  if (intensity > 0.0) {
    r.percent = 100.0 * r.total / intensity;
  } else {
    r.percent = r.total == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  for (int c = 0; c < a.channels(); ++c) {
    double t = 0.0;
    const Plane& pa = a.plane(c);
    const Plane& pb = b.plane(c);
    for (std::size_t i = 0; i < pa.size(); ++i) t += std::abs(pa.data()[i] - pb.data()[i]);
    r.channel_totals.push_back(t);
  }
  return r;
}

void SsimParams::validate() const {
  require(window >= 1 && window % 2 == 1, ErrorKind::Precondition, "SSIM window must be odd");
  require(sigma > 0.0, ErrorKind::Precondition, "SSIM sigma must be > 0");
  require(c1 > 0.0 && c2 > 0.0, ErrorKind::Precondition, "SSIM constants must be > 0");
}

double ssim(const Plane& a, const Plane& b, const SsimParams& params) {
  params.validate();
  require_planes(a, b, "ssim");

  if (a.width() < params.window || a.height() < params.window) {
    const double n = static_cast<double>(a.size());
    double mu_a = 0.0, mu_b = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      mu_a += a.data()[i];
      mu_b += b.data()[i];
    }
    mu_a /= n;
    mu_b /= n;
    double var_a = 0.0, var_b = 0.0, cov = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double da = a.data()[i] - mu_a;
      const double db = b.data()[i] - mu_b;
      var_a += da * da;
      var_b += db * db;
      cov += da * db;
    }
    return ssim_term(mu_a, mu_b, var_a / n, var_b / n, cov / n, params);
  }

  const auto w = gaussian_window(params.window, params.sigma);
  const Plane mu_a = filter_valid(a, w);
  const Plane mu_b = filter_valid(b, w);
  const Plane aa = filter_valid(product(a, a), w);
  const Plane bb = filter_valid(product(b, b), w);
  const Plane ab = filter_valid(product(a, b), w);
  double sum = 0.0;
  for (std::size_t i = 0; i < mu_a.size(); ++i) {
    const double ma = mu_a.data()[i];
    const double mb = mu_b.data()[i];
    sum += ssim_term(ma, mb, aa.data()[i] - ma * ma, bb.data()[i] - mb * mb,
                     ab.data()[i] - ma * mb, params);
  }
  return sum / static_cast<double>(mu_a.size());
}

double ssim(const RasterImage& a, const RasterImage& b, const SsimParams& params) {
  require_same_shape(a, b, "ssim");
  return ssim(luma(a), luma(b), params);
}

double ncc(const Plane& a, const Plane& b) {
  require_planes(a, b, "ncc");
  const double n = static_cast<double>(a.size());
  double mu_a = 0.0, mu_b = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    mu_a += a.data()[i];
    mu_b += b.data()[i];
  }
  mu_a /= n;
  mu_b /= n;
  double var_a = 0.0, var_b = 0.0, cov = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a.data()[i] - mu_a;
    const double db = b.data()[i] - mu_b;
    var_a += da * da;
    var_b += db * db;
    cov += da * db;
  }
  require(var_a > 0.0 && var_b > 0.0, ErrorKind::UndefinedCorrelation,
          "ncc: an input has zero variance");
  if (a == b) return 1.0;  // sqrt(v * v) need not round back to v
  return std::clamp(cov / std::sqrt(var_a * var_b), -1.0, 1.0);
}

double ncc(const RasterImage& a, const RasterImage& b) {
  require_same_shape(a, b, "ncc");
  return ncc(luma(a), luma(b));
}

RasterImage diff_map(const RasterImage& a, const RasterImage& b, double threshold) {
  require_same_shape(a, b, "diff map");
  const Plane la = luma(a);
  const Plane lb = luma(b);
  Plane out(la.width(), la.height());
  for (std::size_t i = 0; i < la.size(); ++i) {
    out.data()[i] = std::abs(la.data()[i] - lb.data()[i]) > threshold ? 1.0 : 0.0;
  }
  return RasterImage::gray(std::move(out));
}

double michelson_contrast(const RasterImage& image) {
  require(!image.empty(), ErrorKind::Precondition, "contrast of an empty image");
  const Plane l = luma(image);
  const auto [lo, hi] = std::minmax_element(l.values().begin(), l.values().end());
  return *hi + *lo > 0.0 ? (*hi - *lo) / (*hi + *lo) : 0.0;
}

MetricsReport compare(const RasterImage& reference, const RasterImage& test) {
  const RasterImage ref = as_rgb_or_gray(reference);
  const RasterImage out = as_rgb_or_gray(test);
  require_same_shape(ref, out, "metrics");
  require(ref.colorspace() == out.colorspace(), ErrorKind::DimensionMismatch,
          "metrics: color spaces differ");

  MetricsReport r;
  const PsnrResult p = psnr(ref, out);
  if (p.channels.size() == 3) {
    r.psnr_r = p.channels[0];
    r.psnr_g = p.channels[1];
    r.psnr_b = p.channels[2];
  } else {
    r.psnr_r = r.psnr_g = r.psnr_b = p.channels[0];
  }
  r.psnr_y = p.combined;
  r.rmse = rmse(ref, out);
  const AbsoluteError ae = absolute_error(ref, out);
  r.ae_total = ae.total;
  r.ae_percent = ae.percent;
  try {
    r.ncc = ncc(ref, out);
  } catch (const Error&) {
    r.ncc = std::numeric_limits<double>::quiet_NaN();
  }
  r.ssim = ssim(ref, out);
  const double c_ref = michelson_contrast(ref);
  r.contrast_ratio =
      c_ref > 0.0 ? michelson_contrast(out) / c_ref : std::numeric_limits<double>::quiet_NaN();
  return r;
}

namespace {

nlohmann::json number(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

std::string text(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream s;
  s.precision(10);
  s << v;
  return s.str();
}

}  // namespace

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["psnr_r"] = number(psnr_r);
  j["psnr_g"] = number(psnr_g);
  j["psnr_b"] = number(psnr_b);
  j["psnr_y"] = number(psnr_y);
  j["rmse"] = number(rmse);
  j["ae_total"] = number(ae_total);
  j["ae_percent"] = number(ae_percent);
  j["ncc"] = number(ncc);
  j["ssim"] = number(ssim);
  j["contrast_ratio"] = number(contrast_ratio);
  return j.dump(2);
}

std::string MetricsReport::to_key_value() const {
  std::ostringstream s;
  s << "psnr_r=" << text(psnr_r) << '\n'
    << "psnr_g=" << text(psnr_g) << '\n'
    << "psnr_b=" << text(psnr_b) << '\n'
    << "psnr_y=" << text(psnr_y) << '\n'
    << "rmse=" << text(rmse) << '\n'
    << "ae_total=" << text(ae_total) << '\n'
    << "ae_percent=" << text(ae_percent) << '\n'
    << "ncc=" << text(ncc) << '\n'
    << "ssim=" << text(ssim) << '\n'
    << "contrast_ratio=" << text(contrast_ratio) << '\n';
  return s.str();
}

}  // namespace vcd
