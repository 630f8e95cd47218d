// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "voxcap/radiance_field.hpp"

namespace voxcap {

void write_png_rgb8(const std::string& path, int width, int height,
                    const std::vector<std::uint8_t>& rgb);

void write_png_gray8(const std::string& path, int width, int height,
                     const std::vector<std::uint8_t>& gray);

// Clamps to [0,1] and quantizes with round-to-nearest.
std::vector<std::uint8_t> to_rgb8(const std::vector<Vec3>& image);

void write_render_png(const std::string& path, const RenderOutput& render);

}  // namespace voxcap
