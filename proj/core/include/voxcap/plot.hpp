// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace voxcap {

struct PlotSeries {
  std::string label;
  std::vector<double> xs;
  std::vector<double> ys;
  std::array<std::uint8_t, 3> color{0, 0, 0};
};

// Deterministic rasterized line chart; text uses an embedded 5x7 glyph set
// (digits, upper/lowercase letters, basic punctuation; others render blank).
void write_line_chart(const std::string& path, const std::string& title,
                      const std::string& x_label, const std::string& y_label,
                      const std::vector<PlotSeries>& series, int width = 640,
                      int height = 420);

}  // namespace voxcap
