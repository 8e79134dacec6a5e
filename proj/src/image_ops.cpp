#include "radmap/image_ops.hpp"

#include <cmath>
#include <limits>

#include "radmap/errors.hpp"

namespace radmap {

namespace {

constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;
constexpr double kSigma = 1.5;

std::vector<double> gaussian_kernel(int window, double sigma) {
  std::vector<double> k(static_cast<std::size_t>(window));
  const int r = window / 2;
  double sum = 0.0;
  for (int i = 0; i < window; ++i) {
    const double d = i - r;
    k[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * sigma * sigma));
    sum += k[static_cast<std::size_t>(i)];
  }
  for (double& v : k) v /= sum;
  return k;
}

int fitted_window(int width, int height) {
  int win = std::min(11, std::min(width, height));
  if (win % 2 == 0) --win;
  return std::max(win, 1);
}

void check_dims(const ImageRGB& a, const ImageRGB& b) {
  if (a.width != b.width || a.height != b.height) {
    throw DimensionMismatch("image dimensions differ");
  }
}

}  // namespace

std::vector<double> gaussian_filter(const std::vector<double>& data, int width, int height,
                                    int channels, int window, double sigma) {
  const auto kernel = gaussian_kernel(window, sigma);
  const int r = window / 2;
  std::vector<double> tmp(data.size(), 0.0);
  std::vector<double> out(data.size(), 0.0);
  // Horizontal pass.
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c) {
        double acc = 0.0;
        for (int k = -r; k <= r; ++k) {
          const int xx = x + k;
          if (xx < 0 || xx >= width) continue;
          acc += kernel[static_cast<std::size_t>(k + r)] *
                 data[static_cast<std::size_t>(channels * (y * width + xx) + c)];
        }
        tmp[static_cast<std::size_t>(channels * (y * width + x) + c)] = acc;
      }
    }
  }
  // Vertical pass.
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c) {
        double acc = 0.0;
        for (int k = -r; k <= r; ++k) {
          const int yy = y + k;
          if (yy < 0 || yy >= height) continue;
          acc += kernel[static_cast<std::size_t>(k + r)] *
                 tmp[static_cast<std::size_t>(channels * (yy * width + x) + c)];
        }
        out[static_cast<std::size_t>(channels * (y * width + x) + c)] = acc;
      }
    }
  }
  return out;
}

double psnr(const ImageRGB& a, const ImageRGB& b) {
  check_dims(a, b);
  double mse = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = a.data[i] - b.data[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.data.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

double ssim(const ImageRGB& a, const ImageRGB& b) {
  check_dims(a, b);
  const int w = a.width, h = a.height;
  const int win = fitted_window(w, h);
  const int r = win / 2;

  std::vector<double> xy(a.data.size()), x2(a.data.size()), y2(a.data.size());
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    xy[i] = a.data[i] * b.data[i];
    x2[i] = a.data[i] * a.data[i];
    y2[i] = b.data[i] * b.data[i];
  }
  const auto mx = gaussian_filter(a.data, w, h, 3, win, kSigma);
  const auto my = gaussian_filter(b.data, w, h, 3, win, kSigma);
  const auto ex2 = gaussian_filter(x2, w, h, 3, win, kSigma);
  const auto ey2 = gaussian_filter(y2, w, h, 3, win, kSigma);
  const auto exy = gaussian_filter(xy, w, h, 3, win, kSigma);

  double sum = 0.0;
  std::size_t count = 0;
  for (int y = r; y < h - r; ++y) {
    for (int x = r; x < w - r; ++x) {
      for (int c = 0; c < 3; ++c) {
        const std::size_t i = static_cast<std::size_t>(3 * (y * w + x) + c);
        const double sx2 = ex2[i] - mx[i] * mx[i];
        const double sy2 = ey2[i] - my[i] * my[i];
        const double sxy = exy[i] - mx[i] * my[i];
        const double a1 = 2.0 * mx[i] * my[i] + kC1;
        const double a2 = 2.0 * sxy + kC2;
        const double b1 = mx[i] * mx[i] + my[i] * my[i] + kC1;
        const double b2 = sx2 + sy2 + kC2;
        sum += (a1 * a2) / (b1 * b2);
        ++count;
      }
    }
  }
  if (count == 0) return 1.0;
  return sum / static_cast<double>(count);
}

SsimResult ssim_with_gradient(const ImageRGB& x, const ImageRGB& y) {
  check_dims(x, y);
  const int w = x.width, h = x.height;
  const int win = fitted_window(w, h);
  const int r = win / 2;

  SsimResult res;
  res.grad.assign(x.data.size(), 0.0);

  std::vector<double> xy(x.data.size()), x2(x.data.size()), y2(x.data.size());
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    xy[i] = x.data[i] * y.data[i];
    x2[i] = x.data[i] * x.data[i];
    y2[i] = y.data[i] * y.data[i];
  }
  const auto mx = gaussian_filter(x.data, w, h, 3, win, kSigma);
  const auto my = gaussian_filter(y.data, w, h, 3, win, kSigma);
  const auto ex2 = gaussian_filter(x2, w, h, 3, win, kSigma);
  const auto ey2 = gaussian_filter(y2, w, h, 3, win, kSigma);
  const auto exy = gaussian_filter(xy, w, h, 3, win, kSigma);

  // Partials of the per-pixel SSIM w.r.t. the filtered quantities; zero
  // outside the valid region so the adjoint blur below handles borders.
  std::vector<double> g_mx(x.data.size(), 0.0);
  std::vector<double> g_ex2(x.data.size(), 0.0);
  std::vector<double> g_exy(x.data.size(), 0.0);

  double sum = 0.0;
  std::size_t count = 0;
  for (int yy = r; yy < h - r; ++yy) {
    for (int xx = r; xx < w - r; ++xx) {
      for (int c = 0; c < 3; ++c) {
        const std::size_t i = static_cast<std::size_t>(3 * (yy * w + xx) + c);
        const double sx2 = ex2[i] - mx[i] * mx[i];
        const double sy2 = ey2[i] - my[i] * my[i];
        const double sxy = exy[i] - mx[i] * my[i];
        const double a1 = 2.0 * mx[i] * my[i] + kC1;
        const double a2 = 2.0 * sxy + kC2;
        const double b1 = mx[i] * mx[i] + my[i] * my[i] + kC1;
        const double b2 = sx2 + sy2 + kC2;
        const double denom = b1 * b2;
        const double s = (a1 * a2) / denom;
        sum += s;
        ++count;
        g_mx[i] = 2.0 * my[i] * (a2 - a1) / denom + 2.0 * mx[i] * s * (1.0 / b2 - 1.0 / b1);
        g_ex2[i] = -s / b2;
        g_exy[i] = 2.0 * a1 / denom;
      }
    }
  }
  if (count == 0) {
    res.mean = 1.0;
    return res;
  }
  res.mean = sum / static_cast<double>(count);

  // The Gaussian window is symmetric, so the adjoint of the blur is the blur.
  const auto bmx = gaussian_filter(g_mx, w, h, 3, win, kSigma);
  const auto bex2 = gaussian_filter(g_ex2, w, h, 3, win, kSigma);
  const auto bexy = gaussian_filter(g_exy, w, h, 3, win, kSigma);
  const double inv_n = 1.0 / static_cast<double>(count);
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    res.grad[i] = inv_n * (bmx[i] + 2.0 * x.data[i] * bex2[i] + y.data[i] * bexy[i]);
  }
  return res;
}

}  // namespace radmap
