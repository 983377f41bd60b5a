#include "drowsegate/raster_io.hpp"

#include <array>
#include <cctype>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace drowsegate {
namespace {

struct NetpbmHeader {
  std::string magic;
  int width = 0;
  int height = 0;
};

// Reads one whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in) {
  std::string token;
  for (int c = in.get(); c != EOF; c = in.get()) {
    if (c == '#') {
      std::string discard;
      std::getline(in, discard);
      if (!token.empty()) break;
      continue;
    }
    if (std::isspace(c)) {
      if (!token.empty()) break;
      continue;
    }
    token.push_back(static_cast<char>(c));
  }
  return token;
}

int header_int(std::istream& in, const char* what) {
  const std::string token = header_token(in);
  try {
    std::size_t used = 0;
    const int v = std::stoi(token, &used);
    if (used != token.size()) throw std::invalid_argument(token);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::FrameDecodeError, std::string("netpbm: bad ") + what + " '" + token + "'");
  }
}

NetpbmHeader read_header(std::istream& in, std::string_view expected_magic) {
  NetpbmHeader h;
  h.magic = header_token(in);
  if (h.magic != expected_magic) {
    fail(ErrorCode::FrameDecodeError,
         "netpbm: expected magic " + std::string(expected_magic) + ", got '" + h.magic + "'");
  }
  h.width = header_int(in, "width");
  h.height = header_int(in, "height");
  const int maxval = header_int(in, "maxval");
  if (h.width < 1 || h.height < 1) fail(ErrorCode::FrameDecodeError, "netpbm: empty raster");
  if (maxval != 255) fail(ErrorCode::FrameDecodeError, "netpbm: only maxval 255 is supported");
  // header_token consumed exactly one whitespace byte after maxval
  return h;
}

std::ifstream open_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  return in;
}

std::string peek_magic(const std::filesystem::path& path) {
  std::ifstream in = open_binary(path);
  std::array<char, 2> magic{};
  in.read(magic.data(), 2);
  return std::string(magic.data(), static_cast<std::size_t>(in.gcount()));
}

}  // namespace

GrayImage read_pgm(std::istream& in) {
  const NetpbmHeader h = read_header(in, "P5");
  GrayImage img(h.height, h.width);
  in.read(reinterpret_cast<char*>(img.data()), static_cast<std::streamsize>(img.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.size())) {
    fail(ErrorCode::FrameDecodeError, "pgm: truncated pixel data");
  }
  return img;
}

GrayImage read_pgm(const std::filesystem::path& path) {
  std::ifstream in = open_binary(path);
  return read_pgm(in);
}

ColorImage read_ppm(std::istream& in) {
  const NetpbmHeader h = read_header(in, "P6");
  std::vector<std::uint8_t> packed(static_cast<std::size_t>(h.width) * h.height * 3);
  in.read(reinterpret_cast<char*>(packed.data()), static_cast<std::streamsize>(packed.size()));
  if (in.gcount() != static_cast<std::streamsize>(packed.size())) {
    fail(ErrorCode::FrameDecodeError, "ppm: truncated pixel data");
  }
  using Interleaved = Eigen::Map<const Eigen::Array<std::uint8_t, Eigen::Dynamic, 3, Eigen::RowMajor>>;
  const Interleaved px(packed.data(), static_cast<Eigen::Index>(h.width) * h.height, 3);
  ColorImage out;
  out.r = Eigen::Map<const GrayImage>(px.col(0).eval().data(), h.height, h.width);
  out.g = Eigen::Map<const GrayImage>(px.col(1).eval().data(), h.height, h.width);
  out.b = Eigen::Map<const GrayImage>(px.col(2).eval().data(), h.height, h.width);
  return out;
}

ColorImage read_ppm(const std::filesystem::path& path) {
  std::ifstream in = open_binary(path);
  return read_ppm(in);
}

GrayImage read_gray(const std::filesystem::path& path) {
  const std::string magic = peek_magic(path);
  if (magic == "P5") return read_pgm(path);
  if (magic == "P6") return to_grayscale(read_ppm(path));
  fail(ErrorCode::FrameDecodeError, "unsupported raster format in " + path.string());
}

void write_pgm(std::ostream& out, const GrayImage& img) {
  out << "P5\n" << width(img) << ' ' << height(img) << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.data()), static_cast<std::streamsize>(img.size()));
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  write_pgm(out, img);
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

Y4mReader::Y4mReader(const std::filesystem::path& path) : in_(open_binary(path)) {
  std::string header;
  std::getline(in_, header);
  std::istringstream fields(header);
  std::string tag;
  fields >> tag;
  if (tag != "YUV4MPEG2") fail(ErrorCode::FrameDecodeError, "y4m: missing YUV4MPEG2 signature");

  std::string colorspace = "420jpeg";
  while (fields >> tag) {
    const char key = tag[0];
    const std::string value = tag.substr(1);
    try {
      if (key == 'W') width_ = std::stoi(value);
      if (key == 'H') height_ = std::stoi(value);
      if (key == 'C') colorspace = value;
      if (key == 'F') {
        const auto colon = value.find(':');
        const double num = std::stod(value.substr(0, colon));
        const double den = colon == std::string::npos ? 1.0 : std::stod(value.substr(colon + 1));
        if (num > 0 && den > 0) frame_rate_ = num / den;
      }
    } catch (const std::exception&) {
      fail(ErrorCode::FrameDecodeError, "y4m: malformed header field '" + tag + "'");
    }
  }
  if (width_ < 1 || height_ < 1) fail(ErrorCode::FrameDecodeError, "y4m: missing frame size");

  const std::size_t cw = static_cast<std::size_t>(width_ + 1) / 2;
  const std::size_t ch = static_cast<std::size_t>(height_ + 1) / 2;
  if (colorspace.rfind("420", 0) == 0) {
    chroma_bytes_ = 2 * cw * ch;
  } else if (colorspace == "444") {
    chroma_bytes_ = 2 * static_cast<std::size_t>(width_) * height_;
  } else {
    fail(ErrorCode::FrameDecodeError, "y4m: unsupported colorspace C" + colorspace);
  }
}

std::optional<GrayImage> Y4mReader::next() {
  std::string marker;
  if (!std::getline(in_, marker)) return std::nullopt;
  if (marker.rfind("FRAME", 0) != 0) fail(ErrorCode::FrameDecodeError, "y4m: expected FRAME marker");

  GrayImage luma(height_, width_);
  in_.read(reinterpret_cast<char*>(luma.data()), static_cast<std::streamsize>(luma.size()));
  if (in_.gcount() != static_cast<std::streamsize>(luma.size())) {
    fail(ErrorCode::FrameDecodeError, "y4m: truncated luma plane");
  }
  in_.ignore(static_cast<std::streamsize>(chroma_bytes_));
  if (in_.gcount() != static_cast<std::streamsize>(chroma_bytes_)) {
    fail(ErrorCode::FrameDecodeError, "y4m: truncated chroma planes");
  }
  return luma;
}

}  // namespace drowsegate
