#include "radmap/image.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "radmap/errors.hpp"

namespace radmap {

namespace {

// Reads the PNM-style header tokens, skipping comments and whitespace.
std::string next_token(std::istream& in) {
  std::string tok;
  while (in) {
    const int c = in.peek();
    if (c == '#') {
      std::string line;
      std::getline(in, line);
      continue;
    }
    if (std::isspace(c)) {
      in.get();
      continue;
    }
    break;
  }
  in >> tok;
  return tok;
}

std::uint8_t to_byte(double v) {
  const double clamped = std::max(0.0, std::min(1.0, v));
  return static_cast<std::uint8_t>(std::lround(clamped * 255.0));
}

}  // namespace

ImageRGB read_ppm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("ppm: cannot open " + path);
  if (next_token(in) != "P6") throw IoError("ppm: expected P6 in " + path);
  const int w = std::stoi(next_token(in));
  const int h = std::stoi(next_token(in));
  const int maxval = std::stoi(next_token(in));
  if (maxval != 255) throw IoError("ppm: only maxval 255 supported in " + path);
  in.get();  // single whitespace after header
  std::vector<std::uint8_t> raw(static_cast<std::size_t>(3 * w * h));
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!in) throw IoError("ppm: truncated data in " + path);
  ImageRGB img(w, h);
  for (std::size_t i = 0; i < raw.size(); ++i) img.data[i] = raw[i] / 255.0;
  return img;
}

void write_ppm(const std::string& path, const ImageRGB& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("ppm: cannot write " + path);
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  std::vector<std::uint8_t> raw(img.data.size());
  for (std::size_t i = 0; i < raw.size(); ++i) raw[i] = to_byte(img.data[i]);
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw IoError("ppm: write failed for " + path);
}

ImageMask read_pgm_mask(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("pgm: cannot open " + path);
  if (next_token(in) != "P5") throw IoError("pgm: expected P5 in " + path);
  const int w = std::stoi(next_token(in));
  const int h = std::stoi(next_token(in));
  const int maxval = std::stoi(next_token(in));
  if (maxval != 255) throw IoError("pgm: only maxval 255 supported in " + path);
  in.get();
  ImageMask mask(w, h);
  in.read(reinterpret_cast<char*>(mask.data.data()), static_cast<std::streamsize>(mask.data.size()));
  if (!in) throw IoError("pgm: truncated data in " + path);
  for (std::uint8_t& v : mask.data) v = v >= 128 ? 255 : 0;
  return mask;
}

void write_pgm_mask(const std::string& path, const ImageMask& mask) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("pgm: cannot write " + path);
  out << "P5\n" << mask.width << ' ' << mask.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(mask.data.data()),
            static_cast<std::streamsize>(mask.data.size()));
  if (!out) throw IoError("pgm: write failed for " + path);
}

namespace {

// PFM rasters run bottom-to-top; a negative scale marks little-endian data.
std::vector<float> read_pfm_payload(const std::string& path, int channels_expected, int& w,
                                    int& h) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("pfm: cannot open " + path);
  const std::string magic = next_token(in);
  const int channels = magic == "PF" ? 3 : magic == "Pf" ? 1 : 0;
  if (channels == 0) throw IoError("pfm: bad magic in " + path);
  if (channels != channels_expected) throw IoError("pfm: unexpected channel count in " + path);
  w = std::stoi(next_token(in));
  h = std::stoi(next_token(in));
  const double scale = std::stod(next_token(in));
  if (scale >= 0.0) throw IoError("pfm: big-endian files unsupported: " + path);
  in.get();
  std::vector<float> rows(static_cast<std::size_t>(w * h * channels));
  in.read(reinterpret_cast<char*>(rows.data()),
          static_cast<std::streamsize>(rows.size() * sizeof(float)));
  if (!in) throw IoError("pfm: truncated data in " + path);
  // Flip to top-down.
  std::vector<float> out(rows.size());
  const std::size_t row_elems = static_cast<std::size_t>(w * channels);
  for (int y = 0; y < h; ++y) {
    std::memcpy(&out[static_cast<std::size_t>(y) * row_elems],
                &rows[static_cast<std::size_t>(h - 1 - y) * row_elems],
                row_elems * sizeof(float));
  }
  return out;
}

void write_pfm_payload(const std::string& path, const std::vector<double>& data, int w, int h,
                       int channels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("pfm: cannot write " + path);
  out << (channels == 3 ? "PF" : "Pf") << '\n' << w << ' ' << h << "\n-1.0\n";
  const std::size_t row_elems = static_cast<std::size_t>(w * channels);
  std::vector<float> row(row_elems);
  for (int y = h - 1; y >= 0; --y) {
    for (std::size_t i = 0; i < row_elems; ++i) {
      row[i] = static_cast<float>(data[static_cast<std::size_t>(y) * row_elems + i]);
    }
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row_elems * sizeof(float)));
  }
  if (!out) throw IoError("pfm: write failed for " + path);
}

}  // namespace

ImageGray read_pfm_gray(const std::string& path) {
  int w = 0, h = 0;
  const auto payload = read_pfm_payload(path, 1, w, h);
  ImageGray img(w, h);
  for (std::size_t i = 0; i < payload.size(); ++i) img.data[i] = payload[i];
  return img;
}

void write_pfm_gray(const std::string& path, const ImageGray& img) {
  write_pfm_payload(path, img.data, img.width, img.height, 1);
}

ImageRGB read_pfm_rgb(const std::string& path) {
  int w = 0, h = 0;
  const auto payload = read_pfm_payload(path, 3, w, h);
  ImageRGB img(w, h);
  for (std::size_t i = 0; i < payload.size(); ++i) img.data[i] = payload[i];
  return img;
}

void write_pfm_rgb(const std::string& path, const ImageRGB& img) {
  write_pfm_payload(path, img.data, img.width, img.height, 3);
}

}  // namespace radmap
