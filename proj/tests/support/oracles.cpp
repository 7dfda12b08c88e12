#include "oracles.hpp"

#include <cmath>
#include <limits>

namespace vcd::testing {

Plane supersampled_disk(double radius, int size, int ss) {
  Plane p(size, size);
  const double c = size / 2;
  double total = 0.0;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      int hits = 0;
      for (int j = 0; j < ss; ++j) {
        for (int i = 0; i < ss; ++i) {
          const double sx = x - 0.5 + (i + 0.5) / ss - c;
          const double sy = y - 0.5 + (j + 0.5) / ss - c;
          if (sx * sx + sy * sy <= radius * radius) ++hits;
        }
      }
      p(x, y) = hits;
      total += hits;
    }
  }
  for (double& v : p.values()) v /= total;
  return p;
}

namespace {

int mirror(int i, int n) {
  while (i < 0 || i >= n) i = i < 0 ? -i - 1 : 2 * n - i - 1;
  return i;
}

}  // namespace

Plane convolve_oracle(const Plane& in, const Kernel& k) {
  Plane out(in.width(), in.height());
  const int rx = k.width() / 2;
  const int ry = k.height() / 2;
  for (int y = 0; y < in.height(); ++y) {
    for (int x = 0; x < in.width(); ++x) {
      double s = 0.0;
      for (int j = -ry; j <= ry; ++j) {
        for (int i = -rx; i <= rx; ++i) {
          s += k(i + rx, j + ry) * in(mirror(x - i, in.width()), mirror(y - j, in.height()));
        }
      }
      out(x, y) = s;
    }
  }
  return out;
}

double mse_oracle(const Plane& a, const Plane& b) {
  double s = 0.0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) s += (a(x, y) - b(x, y)) * (a(x, y) - b(x, y));
  }
  return s / (static_cast<double>(a.width()) * a.height());
}

double psnr_oracle(const Plane& a, const Plane& b) {
  double peak = 0.0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) peak = std::max(peak, a(x, y));
  }
  if (peak == 0.0) peak = 1.0;
  const double m = mse_oracle(a, b);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / m);
}

double ae_total_oracle(const Plane& a, const Plane& b) {
  double s = 0.0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) s += std::abs(a(x, y) - b(x, y));
  }
  return s;
}

double ncc_oracle(const Plane& a, const Plane& b) {
  const double n = static_cast<double>(a.width()) * a.height();
  double ma = 0.0, mb = 0.0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      ma += a(x, y);
      mb += b(x, y);
    }
  }
  ma /= n;
  mb /= n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (int y = 0; y < a.height(); ++y) {
    for (int x = 0; x < a.width(); ++x) {
      sab += (a(x, y) - ma) * (b(x, y) - mb);
      saa += (a(x, y) - ma) * (a(x, y) - ma);
      sbb += (b(x, y) - mb) * (b(x, y) - mb);
    }
  }
  return sab / std::sqrt(saa * sbb);
}

double ssim_oracle(const Plane& a, const Plane& b) {
  const int win = 11;
  const double sigma = 1.5;
  const double c1 = 1e-4;
  const double c2 = 9e-4;
  if (a.width() < win || a.height() < win) {
    // One uniform window over the whole image.
    const double n = static_cast<double>(a.width()) * a.height();
    double mx = 0.0, my = 0.0;
    for (int y = 0; y < a.height(); ++y) {
      for (int x = 0; x < a.width(); ++x) {
        mx += a(x, y) / n;
        my += b(x, y) / n;
      }
    }
    double vx = 0.0, vy = 0.0, cxy = 0.0;
    for (int y = 0; y < a.height(); ++y) {
      for (int x = 0; x < a.width(); ++x) {
        vx += (a(x, y) - mx) * (a(x, y) - mx) / n;
        vy += (b(x, y) - my) * (b(x, y) - my) / n;
        cxy += (a(x, y) - mx) * (b(x, y) - my) / n;
      }
    }
    return ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
  }
  double w[win][win];
  double wsum = 0.0;
  for (int j = 0; j < win; ++j) {
    for (int i = 0; i < win; ++i) {
      const double dx = i - win / 2;
      const double dy = j - win / 2;
      w[j][i] = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      wsum += w[j][i];
    }
  }
  for (auto& row : w) {
    for (double& v : row) v /= wsum;
  }
  double total = 0.0;
  int count = 0;
  for (int y0 = 0; y0 + win <= a.height(); ++y0) {
    for (int x0 = 0; x0 + win <= a.width(); ++x0) {
      double mx = 0.0, my = 0.0;
      for (int j = 0; j < win; ++j) {
        for (int i = 0; i < win; ++i) {
          mx += w[j][i] * a(x0 + i, y0 + j);
          my += w[j][i] * b(x0 + i, y0 + j);
        }
      }
      double vx = 0.0, vy = 0.0, cxy = 0.0;
      for (int j = 0; j < win; ++j) {
        for (int i = 0; i < win; ++i) {
          const double da = a(x0 + i, y0 + j) - mx;
          const double db = b(x0 + i, y0 + j) - my;
          vx += w[j][i] * da * da;
          vy += w[j][i] * db * db;
          cxy += w[j][i] * da * db;
        }
      }
      total += ((2 * mx * my + c1) * (2 * cxy + c2)) /
               ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  }
  return total / count;
}

double axis_ratio(const Plane& p) {
  double m = 0.0, mx = 0.0, my = 0.0;
  for (int y = 0; y < p.height(); ++y) {
    for (int x = 0; x < p.width(); ++x) {
      m += p(x, y);
      mx += p(x, y) * x;
      my += p(x, y) * y;
    }
  }
  mx /= m;
  my /= m;
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (int y = 0; y < p.height(); ++y) {
    for (int x = 0; x < p.width(); ++x) {
      sxx += p(x, y) * (x - mx) * (x - mx);
      syy += p(x, y) * (y - my) * (y - my);
      sxy += p(x, y) * (x - mx) * (y - my);
    }
  }
  const double tr = (sxx + syy) / m;
  const double det = (sxx * syy - sxy * sxy) / (m * m);
  const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
  const double l1 = tr / 2.0 + disc;
  const double l2 = tr / 2.0 - disc;
  return std::sqrt(l2 / l1);
}

double bilinear(const Plane& p, double x, double y) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0;
  const double fy = y - y0;
  auto at = [&](int i, int j) {
    return (i < 0 || j < 0 || i >= p.width() || j >= p.height()) ? 0.0 : p(i, j);
  };
  return (1 - fx) * (1 - fy) * at(x0, y0) + fx * (1 - fy) * at(x0 + 1, y0) +
         (1 - fx) * fy * at(x0, y0 + 1) + fx * fy * at(x0 + 1, y0 + 1);
}

double bicubic(const Plane& p, double x, double y) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  auto at = [&](int i, int j) {
    return (i < 0 || j < 0 || i >= p.width() || j >= p.height()) ? 0.0 : p(i, j);
  };
  auto weights = [](double t, double w[4]) {
    w[0] = ((-0.5 * t + 1.0) * t - 0.5) * t;
    w[1] = (1.5 * t - 2.5) * t * t + 1.0;
    w[2] = ((-1.5 * t + 2.0) * t + 0.5) * t;
    w[3] = (0.5 * t - 0.5) * t * t;
  };
  double wx[4], wy[4];
  weights(x - x0, wx);
  weights(y - y0, wy);
  double s = 0.0;
  for (int j = 0; j < 4; ++j) {
    for (int i = 0; i < 4; ++i) s += wx[i] * wy[j] * at(x0 - 1 + i, y0 - 1 + j);
  }
  return s;
}

Plane rotate(const Plane& p, double radians) {
  Plane out(p.width(), p.height());
  const double cx = p.width() / 2;
  const double cy = p.height() / 2;
  const double c = std::cos(radians);
  const double s = std::sin(radians);
  for (int y = 0; y < p.height(); ++y) {
    for (int x = 0; x < p.width(); ++x) {
      const double dx = x - cx;
      const double dy = y - cy;
      out(x, y) = bicubic(p, cx + c * dx + s * dy, cy - s * dx + c * dy);
    }
  }
  return out;
}

}  // namespace vcd::testing
