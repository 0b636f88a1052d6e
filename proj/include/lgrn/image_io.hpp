#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "lgrn/tensor.hpp"

namespace lgrn {

/// Lossless 16-bit grayscale PNG; values in [0,1] map to round(v * 65535).
void write_png_gray16(const std::filesystem::path& path, const Tensor<float>& grid);

/// 8-bit grayscale PNG (debug heatmap dumps); values are clamped to [0,1].
void write_png_gray8(const std::filesystem::path& path, const Tensor<float>& grid);

/// Reads 8- or 16-bit grayscale PNGs into [0,1] (q / 255 or q / 65535).
Tensor<float> read_png_gray(const std::filesystem::path& path);

struct RgbImage {
  int width = 0;
  int height = 0;
  std::vector<std::array<std::uint8_t, 3>> pixels;

  RgbImage() = default;
  RgbImage(int w, int h) : width(w), height(h), pixels(static_cast<std::size_t>(w) * h) {}
  std::array<std::uint8_t, 3>& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

void write_png_rgb(const std::filesystem::path& path, const RgbImage& image);

}  // namespace lgrn
