#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace radmap {

/// Row-major interleaved RGB, values in [0, 1].
struct ImageRGB {
  int width = 0;
  int height = 0;
  std::vector<double> data;  // 3 * width * height

  ImageRGB() = default;
  ImageRGB(int w, int h, double fill = 0.0)
      : width(w), height(h), data(static_cast<std::size_t>(3 * w * h), fill) {}

  double& at(int x, int y, int c) {
    return data[static_cast<std::size_t>(3 * (y * width + x) + c)];
  }
  double at(int x, int y, int c) const {
    return data[static_cast<std::size_t>(3 * (y * width + x) + c)];
  }
};

struct ImageGray {
  int width = 0;
  int height = 0;
  std::vector<double> data;

  ImageGray() = default;
  ImageGray(int w, int h, double fill = 0.0)
      : width(w), height(h), data(static_cast<std::size_t>(w * h), fill) {}

  double& at(int x, int y) { return data[static_cast<std::size_t>(y * width + x)]; }
  double at(int x, int y) const { return data[static_cast<std::size_t>(y * width + x)]; }
};

struct ImageMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  ImageMask() = default;
  ImageMask(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), data(static_cast<std::size_t>(w * h), fill) {}

  std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y * width + x)]; }
  std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y * width + x)]; }
};

// PPM (P6, 8-bit) for color, PGM (P5, 0/255) for masks, PFM (little-endian
// float, bottom-up rasters) for depth and normal maps.
ImageRGB read_ppm(const std::string& path);
void write_ppm(const std::string& path, const ImageRGB& img);

ImageMask read_pgm_mask(const std::string& path);
void write_pgm_mask(const std::string& path, const ImageMask& mask);

ImageGray read_pfm_gray(const std::string& path);
void write_pfm_gray(const std::string& path, const ImageGray& img);

ImageRGB read_pfm_rgb(const std::string& path);
void write_pfm_rgb(const std::string& path, const ImageRGB& img);

}  // namespace radmap
