#pragma once

// Synthetic inputs shared by the unit and acceptance tests.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "drowsegate/pipeline.hpp"

namespace fixtures {

using namespace drowsegate;

std::filesystem::path data_dir();
std::string cascade_path();
const CascadeModel& frontal_cascade();
const GrayImage& astronaut();

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag);
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

GrayImage random_image(std::mt19937& rng, int w, int h);

/// Disk of intensity `fg` on `bg`, 4x4 supersampled so sub-pixel centers
/// shift the rendered edge.
GrayImage disk(int w, int h, PointF center, double radius, int fg, int bg);
GrayImage annulus(int w, int h, PointF center, double r_in, double r_out, int fg, int bg);
void add_gaussian_noise(GrayImage& img, std::mt19937& rng, double sigma);

/// 25x21 eye windows over a brightness sweep 80..200 in steps of 10: open
/// windows carry a dark iris disk, closed windows are a uniform lid.
struct EyeCorpus {
  std::vector<GrayImage> open;
  std::vector<GrayImage> closed;
};
EyeCorpus eye_window_corpus(std::uint32_t seed = 7);

/// A driver-facing camera view built from the astronaut portrait. Closed eyes
/// are rendered by smoothing the eye regions flat, the way a lowered lid
/// removes the iris edge.
class DriverScene {
 public:
  DriverScene(int frame_width = 640, int frame_height = 480, double face_scale = 1.7);

  /// Face rectangle in frame coordinates (placement, not a detection).
  Rect face() const { return face_; }
  int width() const { return drowsegate::width(base_); }
  int height() const { return drowsegate::height(base_); }

  /// Frame with per-frame noise in [-2, 2] drawn from `seed`, plus a global
  /// brightness offset.
  GrayImage frame(bool eyes_closed, std::uint32_t seed, int brightness = 0) const;

 private:
  GrayImage base_;
  GrayImage closed_;
  Rect face_;
};

/// Writes frame_%06d.pgm files; `closed(i)` selects eye state per frame.
template <typename ClosedFn, typename BrightnessFn>
void write_scene(const std::filesystem::path& dir, const DriverScene& scene, int frames, ClosedFn closed,
                 BrightnessFn brightness) {
  std::filesystem::create_directories(dir);
  for (int i = 0; i < frames; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%06d.pgm", i);
    write_pgm(dir / name, scene.frame(closed(i), static_cast<std::uint32_t>(1000 + i), brightness(i)));
  }
}

/// Writes a 4:2:0 YUV4MPEG2 file at 30 fps with neutral chroma.
void write_y4m(const std::filesystem::path& path, const std::vector<GrayImage>& frames);

/// Observations from runs of (frame count, w); nullopt marks an absent w.
std::vector<FrameObservation> stream(const std::vector<std::pair<int, std::optional<double>>>& runs, double fps = 30.0);

/// Labeled sequences for the coefficient sweep. Baseline w = 30, unlabeled
/// distractor episodes at 30 + `distractor`, labeled closures at 30 + `gap`;
/// every frame carries uniform noise in [-noise, noise].
struct CalibrationCorpus {
  std::vector<LabeledSequence> sequences;
  double baseline = 30.0;
  double distractor = 10.6;
  double gap = 15.0;
};
CalibrationCorpus calibration_corpus(std::uint32_t seed, double noise);

}  // namespace fixtures
