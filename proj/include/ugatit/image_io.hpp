#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ugatit {

// 8-bit interleaved image; channels is 1 (gray) or 3 (RGB).
struct ImageU8 {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;  // row-major, interleaved

  std::size_t expected_size() const {
    return static_cast<std::size_t>(width) * height * channels;
  }
};

// Dispatches on file magic: PNG (8-bit gray/RGB, non-interlaced) or
// binary PPM/PGM. Throws std::runtime_error on malformed input.
ImageU8 read_image(const std::string& path);

void write_png(const std::string& path, const ImageU8& img);
void write_ppm(const std::string& path, const ImageU8& img);

// [-1,1] float planes <-> 8-bit pixels via p/127.5 - 1.
std::vector<float> to_unit_range(const ImageU8& img);       // [C,H,W] planes
ImageU8 from_unit_range(const std::vector<float>& planes, int channels,
                        int height, int width);

}  // namespace ugatit
