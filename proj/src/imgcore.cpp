#include "drowsegate/imgcore.hpp"

#include <cmath>

namespace drowsegate {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UnsupportedCascade: return "UnsupportedCascade";
    case ErrorCode::FaceTooSmall: return "FaceTooSmall";
    case ErrorCode::NoGradients: return "NoGradients";
    case ErrorCode::NoInteriorMaximum: return "NoInteriorMaximum";
    case ErrorCode::Unclassifiable: return "Unclassifiable";
    case ErrorCode::OrderingViolation: return "OrderingViolation";
    case ErrorCode::FrameDecodeError: return "FrameDecodeError";
    case ErrorCode::InvalidDataset: return "InvalidDataset";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

GrayImage to_grayscale(const ColorImage& rgb) {
  const auto same_shape = [&](const GrayImage& p) {
    return p.rows() == rgb.r.rows() && p.cols() == rgb.r.cols();
  };
  if (!same_shape(rgb.g) || !same_shape(rgb.b)) {
    fail(ErrorCode::InvalidInput, "color planes differ in size");
  }
  if (rgb.r.size() == 0) fail(ErrorCode::InvalidInput, "empty color image");

  // Fixed-point 0.299 / 0.587 / 0.114 with round-half-up.
  const Image<std::int32_t> luma = (299 * rgb.r.cast<std::int32_t>() +
                                    587 * rgb.g.cast<std::int32_t>() +
                                    114 * rgb.b.cast<std::int32_t>() + 500) /
                                   1000;
  return luma.min(255).cast<std::uint8_t>();
}

Eigen::VectorXd gaussian_kernel(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    fail(ErrorCode::InvalidInput, "gaussian sigma must be positive");
  }
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  Eigen::VectorXd k(2 * radius + 1);
  for (int i = -radius; i <= radius; ++i) {
    k(i + radius) = std::exp(-(i * i) / (2.0 * sigma * sigma));
  }
  return k / k.sum();
}

FloatImage convolve_separable(const FloatImage& img, const Eigen::VectorXd& kernel) {
  if (kernel.size() % 2 == 0) fail(ErrorCode::InvalidInput, "kernel length must be odd");
  const int radius = static_cast<int>(kernel.size() / 2);
  const int w = width(img);
  const int h = height(img);

  FloatImage horizontal(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        acc += kernel(k + radius) * img(y, std::clamp(x + k, 0, w - 1));
      }
      horizontal(y, x) = acc;
    }
  }

  FloatImage out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int k = -radius; k <= radius; ++k) {
        acc += kernel(k + radius) * horizontal(std::clamp(y + k, 0, h - 1), x);
      }
      out(y, x) = acc;
    }
  }
  return out;
}

GrayImage gaussian_smooth(const GrayImage& img, double sigma) {
  const Eigen::VectorXd kernel = gaussian_kernel(sigma);
  const FloatImage blurred = convolve_separable(img.cast<double>(), kernel);
  return blurred.unaryExpr([](double v) { return saturate_u8(v); });
}

Gradients gradients(const GrayImage& img) {
  const int w = width(img);
  const int h = height(img);
  if (w < 3 || h < 3) fail(ErrorCode::InvalidInput, "gradients need at least 3x3 pixels");

  const FloatImage f = img.cast<double>();
  Gradients g{FloatImage(h, w), FloatImage(h, w)};

  g.gx.middleCols(1, w - 2) = (f.rightCols(w - 2) - f.leftCols(w - 2)) / 2.0;
  g.gx.col(0) = f.col(1) - f.col(0);
  g.gx.col(w - 1) = f.col(w - 1) - f.col(w - 2);

  g.gy.middleRows(1, h - 2) = (f.bottomRows(h - 2) - f.topRows(h - 2)) / 2.0;
  g.gy.row(0) = f.row(1) - f.row(0);
  g.gy.row(h - 1) = f.row(h - 1) - f.row(h - 2);
  return g;
}

IntegralImage::IntegralImage(const GrayImage& img)
    : sums_(Table::Zero(img.rows() + 1, img.cols() + 1)),
      squared_sums_(Table::Zero(img.rows() + 1, img.cols() + 1)) {
  for (Eigen::Index y = 0; y < img.rows(); ++y) {
    std::int64_t row = 0;
    std::int64_t row_sq = 0;
    for (Eigen::Index x = 0; x < img.cols(); ++x) {
      const std::int64_t v = img(y, x);
      row += v;
      row_sq += v * v;
      sums_(y + 1, x + 1) = sums_(y, x + 1) + row;
      squared_sums_(y + 1, x + 1) = squared_sums_(y, x + 1) + row_sq;
    }
  }
}

GrayImage resize_bilinear(const GrayImage& img, int new_width, int new_height) {
  if (new_width < 1 || new_height < 1) fail(ErrorCode::InvalidInput, "resize target must be >= 1x1");
  if (img.size() == 0) fail(ErrorCode::InvalidInput, "cannot resize an empty image");
  const int w = width(img);
  const int h = height(img);

  const auto source_coord = [](int dst, int dst_len, int src_len) {
    if (dst_len == 1) return (src_len - 1) / 2.0;
    return dst * static_cast<double>(src_len - 1) / (dst_len - 1);
  };

  GrayImage out(new_height, new_width);
  for (int y = 0; y < new_height; ++y) {
    const double sy = source_coord(y, new_height, h);
    const int y0 = std::min(static_cast<int>(sy), h - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const double fy = sy - y0;
    for (int x = 0; x < new_width; ++x) {
      const double sx = source_coord(x, new_width, w);
      const int x0 = std::min(static_cast<int>(sx), w - 1);
      const int x1 = std::min(x0 + 1, w - 1);
      const double fx = sx - x0;
      const double top = (1.0 - fx) * img(y0, x0) + fx * img(y0, x1);
      const double bottom = (1.0 - fx) * img(y1, x0) + fx * img(y1, x1);
      out(y, x) = saturate_u8((1.0 - fy) * top + fy * bottom);
    }
  }
  return out;
}

}  // namespace drowsegate
