#pragma once

#include <algorithm>
#include <cstdint>

#include <Eigen/Core>

#include "drowsegate/error.hpp"

namespace drowsegate {

/// Dense row-major raster. Eigen's (row, col) indexing maps to (y, x).
template <typename Scalar>
using Image = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using GrayImage = Image<std::uint8_t>;
using FloatImage = Image<double>;
/// true = white, false = black.
using BinaryImage = Image<bool>;

template <typename Derived>
inline int width(const Eigen::DenseBase<Derived>& img) {
  return static_cast<int>(img.cols());
}

template <typename Derived>
inline int height(const Eigen::DenseBase<Derived>& img) {
  return static_cast<int>(img.rows());
}

template <typename T>
struct PointT {
  T x{};
  T y{};

  friend bool operator==(const PointT&, const PointT&) = default;
};

using Point = PointT<int>;
using PointF = PointT<double>;

struct Rect {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  long long area() const { return static_cast<long long>(w) * h; }
  int right() const { return x + w; }    // exclusive
  int bottom() const { return y + h; }   // exclusive
  bool contains(Point p) const {
    return p.x >= x && p.x < right() && p.y >= y && p.y < bottom();
  }

  friend bool operator==(const Rect&, const Rect&) = default;
};

/// True when r is non-empty and lies fully inside a width x height raster.
inline bool fits_within(const Rect& r, int img_width, int img_height) {
  return r.w >= 1 && r.h >= 1 && r.x >= 0 && r.y >= 0 &&
         r.right() <= img_width && r.bottom() <= img_height;
}

/// Three equally sized 8-bit planes.
struct ColorImage {
  GrayImage r;
  GrayImage g;
  GrayImage b;
};

GrayImage to_grayscale(const ColorImage& rgb);

/// Normalized 1-D Gaussian of radius ceil(3 sigma). Index `radius` is the
/// center tap.
Eigen::VectorXd gaussian_kernel(double sigma);

/// Separable convolution with edge replication. `kernel` must have odd length.
FloatImage convolve_separable(const FloatImage& img, const Eigen::VectorXd& kernel);

GrayImage gaussian_smooth(const GrayImage& img, double sigma);

struct Gradients {
  FloatImage gx;
  FloatImage gy;
};

/// Central differences inside, one-sided differences on the border.
Gradients gradients(const GrayImage& img);

/// Summed-area tables of intensity and squared intensity, (h+1) x (w+1) with
/// a zero first row and column.
class IntegralImage {
 public:
  using Table = Image<std::int64_t>;

  explicit IntegralImage(const GrayImage& img);

  int width() const { return static_cast<int>(sums_.cols()) - 1; }
  int height() const { return static_cast<int>(sums_.rows()) - 1; }

  const Table& sums() const { return sums_; }
  const Table& squared_sums() const { return squared_sums_; }

  std::int64_t sum(const Rect& r) const { return corner_sum(sums_, r); }
  std::int64_t squared_sum(const Rect& r) const { return corner_sum(squared_sums_, r); }

 private:
  static std::int64_t corner_sum(const Table& t, const Rect& r) {
    return t(r.bottom(), r.right()) - t(r.y, r.right()) - t(r.bottom(), r.x) + t(r.y, r.x);
  }

  Table sums_;
  Table squared_sums_;
};

inline IntegralImage integral(const GrayImage& img) { return IntegralImage(img); }

template <typename Scalar>
Image<Scalar> crop(const Image<Scalar>& img, const Rect& r) {
  if (!fits_within(r, width(img), height(img))) {
    fail(ErrorCode::InvalidInput, "crop rectangle outside image bounds");
  }
  return img.block(r.y, r.x, r.h, r.w);
}

/// Bilinear resampling with corner-aligned mapping (source corners land on
/// destination corners).
GrayImage resize_bilinear(const GrayImage& img, int new_width, int new_height);

inline std::uint8_t saturate_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

}  // namespace drowsegate
