#pragma once

#include <span>
#include <string>
#include <variant>

#include "drowsegate/imgcore.hpp"

namespace drowsegate {

namespace threshold {

/// Global threshold: white iff I > level.
struct SimpleBinary {
  int level = 127;
};

/// Global threshold chosen by maximizing between-class variance.
struct Otsu {};

/// T = local mean + k * local stddev.
struct Niblack {
  int window = 15;
  double k = -0.2;
};

/// T = (local min + local max) / 2 when the local contrast is at least
/// contrast_min; otherwise the local mid-gray is compared to fallback_level.
struct Bernsen {
  int window = 15;
  int contrast_min = 15;
  int fallback_level = 128;
};

/// T = unweighted local mean - c.
struct AdaptiveMean {
  int block = 11;
  double c = 2.0;
};

/// T = Gaussian-weighted local mean - c (AGBT).
struct AdaptiveGaussian {
  int block = 11;
  double sigma = 11.0 / 6.0;
  double c = 2.0;
};

}  // namespace threshold

using ThresholdMethod =
    std::variant<threshold::SimpleBinary, threshold::Otsu, threshold::Niblack, threshold::Bernsen,
                 threshold::AdaptiveMean, threshold::AdaptiveGaussian>;

std::string method_name(const ThresholdMethod& method);

/// Throws InvalidInput when window/block sizes are even or < 3, or a level is
/// outside [0, 255].
void validate(const ThresholdMethod& method);

/// Otsu's threshold: smallest level maximizing between-class variance, where
/// the classes are I <= level and I > level.
int otsu_level(const GrayImage& img);

BinaryImage apply_threshold(const GrayImage& img, const ThresholdMethod& method);

/// Percent of white pixels, in [0, 100].
double white_percentage(const BinaryImage& b);

/// Mean white percentage over `closed` minus the mean over `open`.
double method_gap(std::span<const GrayImage> open, std::span<const GrayImage> closed,
                  const ThresholdMethod& method);

}  // namespace drowsegate
