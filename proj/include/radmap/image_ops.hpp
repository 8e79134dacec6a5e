#pragma once

#include <vector>

#include "radmap/image.hpp"

namespace radmap {

/// PSNR in dB for images in [0,1]; +inf when the images are identical.
double psnr(const ImageRGB& a, const ImageRGB& b);

/// Mean SSIM over the valid (full-window) region, Gaussian window
/// sigma = 1.5, C1 = 0.01^2, C2 = 0.03^2. The window is 11x11, shrunk to
/// the largest odd size that fits when the image is smaller.
double ssim(const ImageRGB& a, const ImageRGB& b);

struct SsimResult {
  double mean = 1.0;
  std::vector<double> grad;  // d(mean ssim)/d(first image), same layout
};

/// SSIM plus its analytic gradient w.r.t. the first image.
SsimResult ssim_with_gradient(const ImageRGB& x, const ImageRGB& y);

/// Separable Gaussian blur with zero padding, any channel count.
std::vector<double> gaussian_filter(const std::vector<double>& data, int width, int height,
                                    int channels, int window, double sigma);

}  // namespace radmap
