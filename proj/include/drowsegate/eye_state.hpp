#pragma once

#include <optional>
#include <span>
#include <vector>

#include "drowsegate/eye_center.hpp"
#include "drowsegate/thresholding.hpp"

namespace drowsegate {

inline constexpr int kFaceChipSize = 100;
inline constexpr int kEyeWindowWidth = 25;
inline constexpr int kEyeWindowHeight = 21;

struct EyeWindow {
  GrayImage pixels;  // exactly 25 x 21
  Point source_center;
};

/// 25x21 window centered on `center`, shifted (never shrunk) to stay inside
/// the face chip. Throws InvalidInput when the center is outside the face.
EyeWindow extract_eye_window(const GrayImage& face, Point center);

struct FrameObservation {
  long long frame_index = 0;
  double timestamp = 0.0;  // seconds
  std::optional<double> w_left;
  std::optional<double> w_right;
  std::optional<double> w_combined;  // mean of the present eyes
};

/// White percentage per tracked eye after binarization. Pure per frame.
FrameObservation observe_frame(const GrayImage& face, const EyeCenters& centers, const ThresholdMethod& method,
                               long long frame_index = 0, double fps = 30.0);

enum class EyeState { Open, Closed };

struct StaticOptions {
  EyeCenterOptions eye;
  ThresholdMethod method = threshold::AdaptiveGaussian{};
};

/// Face chip resized to 100x100, eyes tracked and observed. Throws
/// Unclassifiable when the chip carries no gradient at all.
FrameObservation observe_chip(const GrayImage& chip, const StaticOptions& opts = {});

/// Closed when no eye is tracked or w_combined >= tau; open otherwise.
EyeState decide_static(const FrameObservation& obs, double tau);

EyeState classify_static(const GrayImage& chip, double tau, const StaticOptions& opts = {});

struct LabeledScore {
  std::optional<double> w_combined;  // nullopt: no eye tracked
  EyeState label = EyeState::Open;
  bool unclassifiable = false;
};

struct StaticCalibration {
  double tau = 0.0;
  double accuracy = 0.0;
};

/// Grid search over tau in {0.0, 0.5, ..., 100.0}; smallest maximizer wins.
/// Unclassifiable rows count as errors. Throws InvalidInput unless both labels
/// are present.
StaticCalibration calibrate_static_threshold(std::span<const LabeledScore> rows);

struct LabeledChip {
  GrayImage chip;
  EyeState label = EyeState::Open;
};

LabeledScore score_chip(const LabeledChip& item, const StaticOptions& opts = {});
StaticCalibration calibrate_static_threshold(std::span<const LabeledChip> items, const StaticOptions& opts = {});

}  // namespace drowsegate
