#pragma once

#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <optional>
#include <string>

#include "drowsegate/imgcore.hpp"

namespace drowsegate {

// Netpbm binary rasters, maxval 255 only.
GrayImage read_pgm(std::istream& in);
GrayImage read_pgm(const std::filesystem::path& path);
ColorImage read_ppm(std::istream& in);
ColorImage read_ppm(const std::filesystem::path& path);

/// Reads a P5 or P6 file; color input is converted to luma.
GrayImage read_gray(const std::filesystem::path& path);

void write_pgm(std::ostream& out, const GrayImage& img);
void write_pgm(const std::filesystem::path& path, const GrayImage& img);

/// Uncompressed YUV4MPEG2 reader. Only the luma plane is returned; chroma is
/// skipped. Accepts 4:2:0 (any siting variant) and 4:4:4.
class Y4mReader {
 public:
  explicit Y4mReader(const std::filesystem::path& path);

  int width() const { return width_; }
  int height() const { return height_; }
  /// Frame rate from the F tag, or nullopt when absent.
  std::optional<double> frame_rate() const { return frame_rate_; }

  /// Next luma plane, nullopt at clean end of stream. A truncated frame throws
  /// FrameDecodeError.
  std::optional<GrayImage> next();

 private:
  std::ifstream in_;
  int width_ = 0;
  int height_ = 0;
  std::size_t chroma_bytes_ = 0;
  std::optional<double> frame_rate_;
};

}  // namespace drowsegate
