#include "fixtures.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace fixtures {
namespace fs = std::filesystem;

fs::path data_dir() { return fs::path(DROWSEGATE_TEST_DATA); }

std::string cascade_path() { return (data_dir() / "haarcascade_frontalface_default.xml").string(); }

const CascadeModel& frontal_cascade() {
  static const CascadeModel model = load_cascade(cascade_path());
  return model;
}

const GrayImage& astronaut() {
  static const GrayImage img = read_pgm(data_dir() / "astronaut.pgm");
  return img;
}

TempDir::TempDir(const std::string& tag) {
  static std::atomic<int> counter{0};
  const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
  path_ = fs::temp_directory_path() /
          ("drowsegate_" + tag + "_" + std::to_string(stamp) + "_" + std::to_string(counter++));
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

GrayImage random_image(std::mt19937& rng, int w, int h) {
  std::uniform_int_distribution<int> value(0, 255);
  GrayImage img(h, w);
  for (Eigen::Index i = 0; i < img.size(); ++i) img.data()[i] = static_cast<std::uint8_t>(value(rng));
  return img;
}

namespace {

template <typename Inside>
GrayImage supersampled(int w, int h, int fg, int bg, Inside inside) {
  GrayImage img(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int hits = 0;
      for (int sy = 0; sy < 4; ++sy) {
        for (int sx = 0; sx < 4; ++sx) {
          if (inside(x - 0.375 + 0.25 * sx, y - 0.375 + 0.25 * sy)) ++hits;
        }
      }
      img(y, x) = static_cast<std::uint8_t>(std::lround(bg + (fg - bg) * hits / 16.0));
    }
  }
  return img;
}

}  // namespace

GrayImage disk(int w, int h, PointF c, double r, int fg, int bg) {
  return supersampled(w, h, fg, bg, [&](double x, double y) {
    return (x - c.x) * (x - c.x) + (y - c.y) * (y - c.y) <= r * r;
  });
}

GrayImage annulus(int w, int h, PointF c, double r_in, double r_out, int fg, int bg) {
  return supersampled(w, h, fg, bg, [&](double x, double y) {
    const double d2 = (x - c.x) * (x - c.x) + (y - c.y) * (y - c.y);
    return d2 >= r_in * r_in && d2 <= r_out * r_out;
  });
}

void add_gaussian_noise(GrayImage& img, std::mt19937& rng, double sigma) {
  std::normal_distribution<double> noise(0.0, sigma);
  for (Eigen::Index i = 0; i < img.size(); ++i) {
    img.data()[i] = saturate_u8(img.data()[i] + noise(rng));
  }
}

EyeCorpus eye_window_corpus(std::uint32_t seed) {
  std::mt19937 rng(seed);
  EyeCorpus corpus;
  for (int b = 80; b <= 200; b += 10) {
    for (const PointF center : {PointF{12.0, 10.0}, PointF{11.5, 10.5}}) {
      GrayImage open = disk(kEyeWindowWidth, kEyeWindowHeight, center, 6.0, static_cast<int>(std::lround(0.25 * b)), b);
      add_gaussian_noise(open, rng, 2.0);
      GrayImage closed = GrayImage::Constant(kEyeWindowHeight, kEyeWindowWidth, static_cast<std::uint8_t>(b));
      add_gaussian_noise(closed, rng, 2.0);
      corpus.open.push_back(std::move(open));
      corpus.closed.push_back(std::move(closed));
    }
  }
  return corpus;
}

DriverScene::DriverScene(int frame_width, int frame_height, double face_scale) {
  // Face of the portrait in source coordinates.
  const Rect source_face{174, 64, 100, 100};
  const GrayImage& src = astronaut();
  const int sw = static_cast<int>(std::lround(drowsegate::width(src) * face_scale));
  const int sh = static_cast<int>(std::lround(drowsegate::height(src) * face_scale));
  const GrayImage scaled = resize_bilinear(src, sw, sh);

  const int side = static_cast<int>(std::lround(source_face.w * face_scale));
  const int fx = static_cast<int>(std::lround(source_face.x * face_scale));
  const int fy = static_cast<int>(std::lround(source_face.y * face_scale));
  face_ = {frame_width / 2 - side / 2, frame_height * 45 / 100 - side / 2, side, side};
  const int ox = fx - face_.x;
  const int oy = fy - face_.y;

  // Only the columns around the head and shoulders are kept. The rest of the
  // portrait holds a flag and a launch vehicle, and the cascade fires on the
  // vehicle at large scales.
  const int keep_x0 = static_cast<int>(std::lround((source_face.x - 0.6 * source_face.w) * face_scale));
  const int keep_x1 = static_cast<int>(std::lround((source_face.x + 1.6 * source_face.w) * face_scale));
  base_ = GrayImage::Constant(frame_height, frame_width, 100);
  for (int y = 0; y < frame_height; ++y) {
    for (int x = 0; x < frame_width; ++x) {
      const int sx = x + ox;
      const int sy = y + oy;
      if (sx >= keep_x0 && sx < std::min(sw, keep_x1) && sy >= 0 && sy < sh) base_(y, x) = scaled(sy, sx);
    }
  }

  closed_ = base_;
  const EyeRegions regions = eye_regions_from_face(face_);
  for (const Rect& r : {regions.left, regions.right}) {
    closed_.block(r.y, r.x, r.h, r.w) = gaussian_smooth(crop(base_, r), 0.07 * side);
  }
}

GrayImage DriverScene::frame(bool eyes_closed, std::uint32_t seed, int brightness) const {
  GrayImage out = eyes_closed ? closed_ : base_;
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> noise(-2, 2);
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    out.data()[i] = saturate_u8(static_cast<double>(out.data()[i]) + brightness + noise(rng));
  }
  return out;
}

void write_y4m(const fs::path& path, const std::vector<GrayImage>& frames) {
  std::ofstream out(path, std::ios::binary);
  const int w = width(frames.at(0));
  const int h = height(frames.at(0));
  out << "YUV4MPEG2 W" << w << " H" << h << " F30:1 Ip A1:1 C420jpeg\n";
  const std::string chroma(2 * static_cast<std::size_t>((w + 1) / 2) * ((h + 1) / 2), static_cast<char>(128));
  for (const GrayImage& f : frames) {
    out << "FRAME\n";
    out.write(reinterpret_cast<const char*>(f.data()), static_cast<std::streamsize>(f.size()));
    out.write(chroma.data(), static_cast<std::streamsize>(chroma.size()));
  }
}

std::vector<FrameObservation> stream(const std::vector<std::pair<int, std::optional<double>>>& runs, double fps) {
  std::vector<FrameObservation> out;
  long long index = 0;
  for (const auto& [count, w] : runs) {
    for (int i = 0; i < count; ++i, ++index) {
      FrameObservation obs;
      obs.frame_index = index;
      obs.timestamp = static_cast<double>(index) / fps;
      obs.w_combined = w;
      out.push_back(obs);
    }
  }
  return out;
}

CalibrationCorpus calibration_corpus(std::uint32_t seed, double noise) {
  CalibrationCorpus corpus;
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> jitter(-noise, noise);

  enum class Kind { Baseline, Distractor, Closure };
  const std::vector<std::pair<Kind, int>> layout = {
      {Kind::Baseline, 400}, {Kind::Distractor, 60}, {Kind::Baseline, 300}, {Kind::Closure, 90},
      {Kind::Baseline, 300}, {Kind::Distractor, 60}, {Kind::Baseline, 300}, {Kind::Closure, 90},
      {Kind::Baseline, 60},
  };
  for (int s = 0; s < 4; ++s) {
    LabeledSequence seq;
    long long index = 0;
    for (const auto& [kind, count] : layout) {
      const double level = corpus.baseline + (kind == Kind::Distractor ? corpus.distractor
                                              : kind == Kind::Closure  ? corpus.gap
                                                                       : 0.0);
      if (kind == Kind::Closure) seq.closures.push_back({index, index + count - 1});
      for (int i = 0; i < count; ++i, ++index) {
        FrameObservation obs;
        obs.frame_index = index;
        obs.timestamp = static_cast<double>(index) / 30.0;
        obs.w_combined = level + (noise > 0.0 ? jitter(rng) : 0.0);
        seq.observations.push_back(obs);
      }
    }
    corpus.sequences.push_back(std::move(seq));
  }
  return corpus;
}

}  // namespace fixtures
