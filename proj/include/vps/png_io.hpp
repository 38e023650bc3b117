#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace vps {

struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;  // row-major
};

// 8-bit grayscale PNG. Any readable grayscale/paletted/rgb input is
// converted to 8-bit gray on load. Errors carry the file path.
void write_gray_png(const std::string& path, const GrayImage& img);
GrayImage read_gray_png(const std::string& path);

}  // namespace vps
