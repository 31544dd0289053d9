#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace detfuse {

/// Row-major interleaved RGB, 8 bits per channel.
struct RasterImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  RasterImage() = default;
  RasterImage(int w, int h);  // black

  std::uint8_t* at(int x, int y) {
    return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
  const std::uint8_t* at(int x, int y) const {
    return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }

  /// Throws ContractError unless the buffer holds width*height*3 bytes.
  void validate() const;

  friend bool operator==(const RasterImage&, const RasterImage&) = default;
};

/// Binary PPM (P6, maxval 255). Header comments are skipped on read.
RasterImage read_ppm(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, const RasterImage& image);

}  // namespace detfuse
