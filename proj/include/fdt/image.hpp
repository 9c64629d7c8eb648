#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <vector>

#include "fdt/geometry.hpp"
#include "fdt/tensor.hpp"

namespace fdt {

/// 8-bit interleaved raster, 1 (gray) or 3 (RGB) channels.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 3;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int w, int h, int c, std::uint8_t fill = 0)
      : width(w), height(h), channels(c), pixels(static_cast<std::size_t>(w) * h * c, fill) {}

  std::uint8_t& at(int x, int y, int c) { return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  std::uint8_t at(int x, int y, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  bool operator==(const Image&) const = default;
};

class ImageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reads binary or ASCII PGM/PPM (P2, P3, P5, P6) with maxval <= 255.
Image read_pnm(const std::filesystem::path& path);
/// Writes binary PGM (1 channel) or PPM (3 channels).
void write_pnm(const Image& img, const std::filesystem::path& path);

Image resize_bilinear(const Image& img, int width, int height);

struct PreprocessConfig {
  /// Shorter side after resizing; 0 keeps the native size.
  int working_resolution = 300;
  std::array<double, 3> mean = {123.68, 116.78, 103.94};
};

struct PreparedFrame {
  Tensor<float> tensor;  // 1 x 3 x H x W, mean subtracted
  /// Working-resolution pixels per source pixel.
  double scale = 1.0;
  int width = 0;
  int height = 0;
};

PreparedFrame prepare_frame(const Image& img, const PreprocessConfig& cfg);

/// Crops `region` (source pixels, zero padded outside), resizes it to
/// size x size and converts to a mean-subtracted 1 x 3 x size x size tensor.
Tensor<float> crop_to_tensor(const Image& img, const BoundingBox& region, int size, const std::array<double, 3>& mean);

BoundingBox scale_box(const BoundingBox& b, double s);

}  // namespace fdt
