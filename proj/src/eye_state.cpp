#include "drowsegate/eye_state.hpp"

namespace drowsegate {

EyeWindow extract_eye_window(const GrayImage& face, Point center) {
  const int w = width(face);
  const int h = height(face);
  if (center.x < 0 || center.y < 0 || center.x >= w || center.y >= h) {
    fail(ErrorCode::InvalidInput, "eye center outside the face chip");
  }
  if (w < kEyeWindowWidth || h < kEyeWindowHeight) fail(ErrorCode::InvalidInput, "face chip smaller than an eye window");
  const int x0 = std::clamp(center.x - kEyeWindowWidth / 2, 0, w - kEyeWindowWidth);
  const int y0 = std::clamp(center.y - kEyeWindowHeight / 2, 0, h - kEyeWindowHeight);
  return {crop(face, {x0, y0, kEyeWindowWidth, kEyeWindowHeight}), center};
}

FrameObservation observe_frame(const GrayImage& face, const EyeCenters& centers, const ThresholdMethod& method,
                               long long frame_index, double fps) {
  FrameObservation obs;
  obs.frame_index = frame_index;
  obs.timestamp = static_cast<double>(frame_index) / fps;
  const auto measure = [&](const std::optional<Point>& c) -> std::optional<double> {
    if (!c) return std::nullopt;
    return white_percentage(apply_threshold(extract_eye_window(face, *c).pixels, method));
  };
  obs.w_left = measure(centers.left);
  obs.w_right = measure(centers.right);
  if (obs.w_left && obs.w_right) {
    obs.w_combined = (*obs.w_left + *obs.w_right) / 2.0;
  } else if (obs.w_left) {
    obs.w_combined = obs.w_left;
  } else if (obs.w_right) {
    obs.w_combined = obs.w_right;
  }
  return obs;
}

FrameObservation observe_chip(const GrayImage& chip, const StaticOptions& opts) {
  if (chip.size() == 0) fail(ErrorCode::Unclassifiable, "empty face chip");
  const GrayImage face = (width(chip) == kFaceChipSize && height(chip) == kFaceChipSize)
                             ? chip
                             : resize_bilinear(chip, kFaceChipSize, kFaceChipSize);
  if (face.maxCoeff() == face.minCoeff()) fail(ErrorCode::Unclassifiable, "face chip has no gradients");
  const EyeRegions regions = eye_regions_from_face({0, 0, kFaceChipSize, kFaceChipSize});
  const EyeCenters centers = track_eyes(face, regions, opts.eye);
  return observe_frame(face, centers, opts.method);
}

EyeState decide_static(const FrameObservation& obs, double tau) {
  if (!obs.w_combined) return EyeState::Closed;
  return *obs.w_combined >= tau ? EyeState::Closed : EyeState::Open;
}

EyeState classify_static(const GrayImage& chip, double tau, const StaticOptions& opts) {
  return decide_static(observe_chip(chip, opts), tau);
}

StaticCalibration calibrate_static_threshold(std::span<const LabeledScore> rows) {
  bool any_open = false;
  bool any_closed = false;
  for (const LabeledScore& r : rows) {
    (r.label == EyeState::Open ? any_open : any_closed) = true;
  }
  if (!any_open || !any_closed) fail(ErrorCode::InvalidInput, "calibration needs both open and closed samples");

  StaticCalibration best{0.0, -1.0};
  for (int step = 0; step <= 200; ++step) {
    const double tau = step * 0.5;
    long long correct = 0;
    for (const LabeledScore& r : rows) {
      if (r.unclassifiable) continue;
      FrameObservation obs;
      obs.w_combined = r.w_combined;
      if (decide_static(obs, tau) == r.label) ++correct;
    }
    const double accuracy = static_cast<double>(correct) / static_cast<double>(rows.size());
    if (accuracy > best.accuracy) best = {tau, accuracy};
  }
  return best;
}

LabeledScore score_chip(const LabeledChip& item, const StaticOptions& opts) {
  LabeledScore s;
  s.label = item.label;
  try {
    s.w_combined = observe_chip(item.chip, opts).w_combined;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::Unclassifiable) throw;
    s.unclassifiable = true;
  }
  return s;
}

StaticCalibration calibrate_static_threshold(std::span<const LabeledChip> items, const StaticOptions& opts) {
  std::vector<LabeledScore> rows;
  rows.reserve(items.size());
  for (const LabeledChip& item : items) rows.push_back(score_chip(item, opts));
  return calibrate_static_threshold(rows);
}

}  // namespace drowsegate
