// SPDX-License-Identifier: Apache-2.0
#include "voxcap/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <png.h>

namespace voxcap {

namespace {

void write_png(const std::string& path, int width, int height, int color_type,
               int channels, const std::vector<std::uint8_t>& data) {
  if (width <= 0 || height <= 0) throw DegenerateInput("png dimensions must be positive");
  if (data.size() != static_cast<std::size_t>(width) * height * channels) {
    throw DegenerateInput("png payload size mismatch");
  }
  std::FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw IoError("cannot open " + path + " for writing");

  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoError("libpng write failed for " + path);
  }

  png_init_io(png, fp);
  png_set_IHDR(png, info, width, height, 8, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < height; ++y) {
    png_write_row(png, const_cast<png_bytep>(data.data() + static_cast<std::size_t>(y) *
                                                               width * channels));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

}  // namespace

void write_png_rgb8(const std::string& path, int width, int height,
                    const std::vector<std::uint8_t>& rgb) {
  write_png(path, width, height, PNG_COLOR_TYPE_RGB, 3, rgb);
}

void write_png_gray8(const std::string& path, int width, int height,
                     const std::vector<std::uint8_t>& gray) {
  write_png(path, width, height, PNG_COLOR_TYPE_GRAY, 1, gray);
}

std::vector<std::uint8_t> to_rgb8(const std::vector<Vec3>& image) {
  std::vector<std::uint8_t> out;
  out.reserve(3 * image.size());
  auto q = [](double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
  };
  for (const Vec3& c : image) {
    out.push_back(q(c.x));
    out.push_back(q(c.y));
    out.push_back(q(c.z));
  }
  return out;
}

void write_render_png(const std::string& path, const RenderOutput& render) {
  write_png_rgb8(path, render.width, render.height, to_rgb8(render.color));
}

}  // namespace voxcap
