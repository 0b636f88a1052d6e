#include "lgrn/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "lgrn/error.hpp"

namespace lgrn {

namespace fs = std::filesystem;

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// Writes rows of `bytes_per_row` to a temp file, then renames over `path`.
void write_png(const fs::path& path, int width, int height, int bit_depth, int color_type,
               const std::vector<std::uint8_t>& buffer, std::size_t bytes_per_row) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    FilePtr fp(std::fopen(tmp.c_str(), "wb"));
    if (!fp) throw DataError("cannot open " + tmp.string() + " for writing");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
      png_destroy_write_struct(&png, &info);
      throw DataError("libpng initialisation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
      png_destroy_write_struct(&png, &info);
      throw DataError("failed to encode " + path.string());
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < height; ++y)
      png_write_row(png, const_cast<png_bytep>(buffer.data() + y * bytes_per_row));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
  }
  fs::rename(tmp, path);
}

}  // namespace

void write_png_gray16(const fs::path& path, const Tensor<float>& grid) {
  const int w = grid.width(), h = grid.height();
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(w) * h * 2);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const auto q = static_cast<std::uint16_t>(std::lround(std::clamp(grid.at(y, x), 0.0f, 1.0f) * 65535.0));
      const std::size_t o = (static_cast<std::size_t>(y) * w + x) * 2;
      buf[o] = static_cast<std::uint8_t>(q >> 8);  // PNG is big-endian
      buf[o + 1] = static_cast<std::uint8_t>(q & 0xff);
    }
  write_png(path, w, h, 16, PNG_COLOR_TYPE_GRAY, buf, static_cast<std::size_t>(w) * 2);
}

void write_png_gray8(const fs::path& path, const Tensor<float>& grid) {
  const int w = grid.width(), h = grid.height();
  std::vector<std::uint8_t> buf(static_cast<std::size_t>(w) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      buf[static_cast<std::size_t>(y) * w + x] =
          static_cast<std::uint8_t>(std::lround(std::clamp(grid.at(y, x), 0.0f, 1.0f) * 255.0));
  write_png(path, w, h, 8, PNG_COLOR_TYPE_GRAY, buf, static_cast<std::size_t>(w));
}

void write_png_rgb(const fs::path& path, const RgbImage& image) {
  std::vector<std::uint8_t> buf(image.pixels.size() * 3);
  for (std::size_t i = 0; i < image.pixels.size(); ++i)
    std::copy(image.pixels[i].begin(), image.pixels[i].end(), buf.begin() + 3 * i);
  write_png(path, image.width, image.height, 8, PNG_COLOR_TYPE_RGB, buf,
            static_cast<std::size_t>(image.width) * 3);
}

Tensor<float> read_png_gray(const fs::path& path) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw DataError("cannot open image " + path.string());
  png_byte sig[8];
  if (std::fread(sig, 1, 8, fp.get()) != 8 || png_sig_cmp(sig, 0, 8))
    throw DataError(path.string() + ": not a PNG file");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError(path.string() + ": corrupt PNG data");
  }
  png_init_io(png, fp.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int depth = png_get_bit_depth(png, info);
  const int type = png_get_color_type(png, info);
  if (type != PNG_COLOR_TYPE_GRAY || (depth != 8 && depth != 16)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError(path.string() + ": expected 8- or 16-bit grayscale PNG");
  }
  const std::size_t row_bytes = png_get_rowbytes(png, info);
  std::vector<std::uint8_t> row(row_bytes);
  Tensor<float> out(1, h, w);
  for (int y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < w; ++x) {
      if (depth == 16) {
        const unsigned q = (static_cast<unsigned>(row[2 * x]) << 8) | row[2 * x + 1];
        out.at(y, x) = static_cast<float>(q / 65535.0);
      } else {
        out.at(y, x) = static_cast<float>(row[x] / 255.0);
      }
    }
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return out;
}

}  // namespace lgrn
