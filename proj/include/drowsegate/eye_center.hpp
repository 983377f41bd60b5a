#pragma once

#include <optional>

#include "drowsegate/imgcore.hpp"

namespace drowsegate {

/// Anatomical-prior eye search regions inside a face rectangle.
struct EyeRegions {
  Rect left;   // image-left eye
  Rect right;  // image-right eye
};

/// Left region spans rows [0.20, 0.55) x cols [0.10, 0.48) of the face; the
/// right region is its horizontal mirror. Throws FaceTooSmall below 40x40.
EyeRegions eye_regions_from_face(const Rect& face);

enum class WeightPolarity {
  Inverted,  // w_c = 255 - I(c): dark candidates weigh more
  Literal,   // w_c = I(c)
  None,      // w_c = 1 (plain gradient-agreement objective)
};

struct EyeCenterOptions {
  double smoothing_sigma = 1.0;
  /// Samples participate when |g| > mean|g| + factor * stddev|g|.
  double gradient_threshold_factor = 0.3;
  WeightPolarity polarity = WeightPolarity::Inverted;
  /// Clamp d.g at zero before squaring so only outward-pointing gradients
  /// contribute.
  bool clamp_negative_dot = true;
  /// Regions wider than this are downscaled before the quadratic search and
  /// the result mapped back. 0 disables downscaling.
  int max_region_width = 50;
};

/// Unit gradient samples that take part in the objective, drawn from the
/// smoothed region.
struct GradientField {
  GrayImage smoothed;
  Eigen::ArrayXd x;   // sample positions
  Eigen::ArrayXd y;
  Eigen::ArrayXd gx;  // unit directions
  Eigen::ArrayXd gy;

  Eigen::Index size() const { return x.size(); }
};

/// Throws InvalidInput for regions under 8x8, NoGradients when no sample
/// passes the magnitude threshold.
GradientField gradient_field(const GrayImage& region, const EyeCenterOptions& opts = {});

/// Per-candidate weight image for the configured polarity.
FloatImage center_weights(const GrayImage& smoothed, WeightPolarity polarity);

/// Weighted mean squared agreement between displacement and gradient
/// directions, evaluated at every pixel of the region. All values >= 0.
FloatImage objective_map(const GrayImage& region, const EyeCenterOptions& opts = {});

struct LocatedCenter {
  Point center;
  double confidence = 0.0;  // objective value at the center
};

/// Highest local-maximum plateau of a map that does not touch the border.
/// Ties break toward the smallest (y, x). Throws NoInteriorMaximum when every
/// maximum is border-attached or the map is identically zero.
LocatedCenter interior_argmax(const FloatImage& map);

/// Pupil center of a single eye region, in region coordinates.
LocatedCenter locate_center(const GrayImage& region, const EyeCenterOptions& opts = {});

struct EyeCenters {
  std::optional<Point> left;
  std::optional<Point> right;
  double left_confidence = 0.0;
  double right_confidence = 0.0;
};

/// Runs locate_center on both regions of a face chip. An eye whose region has
/// no usable gradients or no interior maximum is reported as absent.
EyeCenters track_eyes(const GrayImage& face, const EyeRegions& regions, const EyeCenterOptions& opts = {});

/// Draws a 5-pixel plus sign (center +/- 2 px) in `value`, clipped to the image.
void draw_crosshair(GrayImage& img, Point center, std::uint8_t value = 255);

}  // namespace drowsegate
