#include "drowsegate/thresholding.hpp"

#include <array>
#include <cmath>
#include <numeric>

namespace drowsegate {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void require_window(int size, const char* what) {
  if (size < 3 || size % 2 == 0) {
    fail(ErrorCode::InvalidInput, std::string(what) + " must be odd and >= 3");
  }
}

void require_local_input(const GrayImage& img) {
  if (width(img) < 3 || height(img) < 3) {
    fail(ErrorCode::InvalidInput, "local thresholding needs at least a 3x3 image");
  }
}

// Window of side `size` centered on (x, y), clipped to the image.
Rect clipped_window(int x, int y, int size, int w, int h) {
  const int r = size / 2;
  const int x0 = std::max(0, x - r);
  const int y0 = std::max(0, y - r);
  const int x1 = std::min(w, x + r + 1);
  const int y1 = std::min(h, y + r + 1);
  return {x0, y0, x1 - x0, y1 - y0};
}

// Local mean and population variance over clipped windows.
void local_moments(const GrayImage& img, int size, FloatImage& mean, FloatImage& variance) {
  const IntegralImage ii(img);
  const int w = width(img);
  const int h = height(img);
  mean.resize(h, w);
  variance.resize(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Rect r = clipped_window(x, y, size, w, h);
      const double n = static_cast<double>(r.area());
      const double m = ii.sum(r) / n;
      mean(y, x) = m;
      variance(y, x) = std::max(0.0, ii.squared_sum(r) / n - m * m);
    }
  }
}

// Separable running extremum over clipped windows.
template <typename Pick>
GrayImage local_extremum(const GrayImage& img, int size, Pick pick) {
  const int r = size / 2;
  const int w = width(img);
  const int h = height(img);
  GrayImage rows(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::uint8_t v = img(y, std::max(0, x - r));
      for (int k = std::max(0, x - r) + 1; k <= std::min(w - 1, x + r); ++k) v = pick(v, img(y, k));
      rows(y, x) = v;
    }
  }
  GrayImage out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::uint8_t v = rows(std::max(0, y - r), x);
      for (int k = std::max(0, y - r) + 1; k <= std::min(h - 1, y + r); ++k) v = pick(v, rows(k, x));
      out(y, x) = v;
    }
  }
  return out;
}

BinaryImage above(const GrayImage& img, const FloatImage& level) {
  return img.cast<double>() > level;
}

}  // namespace

std::string method_name(const ThresholdMethod& method) {
  return std::visit(overloaded{
                        [](const threshold::SimpleBinary&) { return std::string("SimpleBinary"); },
                        [](const threshold::Otsu&) { return std::string("Otsu"); },
                        [](const threshold::Niblack&) { return std::string("Niblack"); },
                        [](const threshold::Bernsen&) { return std::string("Bernsen"); },
                        [](const threshold::AdaptiveMean&) { return std::string("AdaptiveMean"); },
                        [](const threshold::AdaptiveGaussian&) { return std::string("AdaptiveGaussian"); },
                    },
                    method);
}

void validate(const ThresholdMethod& method) {
  std::visit(overloaded{
                 [](const threshold::SimpleBinary& m) {
                   if (m.level < 0 || m.level > 255) fail(ErrorCode::InvalidInput, "threshold level outside [0,255]");
                 },
                 [](const threshold::Otsu&) {},
                 [](const threshold::Niblack& m) { require_window(m.window, "Niblack window"); },
                 [](const threshold::Bernsen& m) {
                   require_window(m.window, "Bernsen window");
                   if (m.fallback_level < 0 || m.fallback_level > 255) {
                     fail(ErrorCode::InvalidInput, "Bernsen fallback level outside [0,255]");
                   }
                 },
                 [](const threshold::AdaptiveMean& m) { require_window(m.block, "AdaptiveMean block"); },
                 [](const threshold::AdaptiveGaussian& m) {
                   require_window(m.block, "AdaptiveGaussian block");
                   if (!(m.sigma > 0.0)) fail(ErrorCode::InvalidInput, "AdaptiveGaussian sigma must be positive");
                 },
             },
             method);
}

int otsu_level(const GrayImage& img) {
  std::array<std::int64_t, 256> hist{};
  for (Eigen::Index i = 0; i < img.size(); ++i) ++hist[img.data()[i]];

  const double total = static_cast<double>(img.size());
  std::int64_t total_sum = 0;
  for (int v = 0; v < 256; ++v) total_sum += hist[v] * v;

  std::int64_t n0 = 0;
  std::int64_t s0 = 0;
  int best_level = 0;
  double best_variance = -1.0;
  for (int t = 0; t < 256; ++t) {
    n0 += hist[t];
    s0 += hist[t] * t;
    const std::int64_t n1 = img.size() - n0;
    double variance = 0.0;
    if (n0 > 0 && n1 > 0) {
      const double w0 = n0 / total;
      const double w1 = n1 / total;
      const double mu0 = static_cast<double>(s0) / n0;
      const double mu1 = static_cast<double>(total_sum - s0) / n1;
      variance = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    }
    if (variance > best_variance) {
      best_variance = variance;
      best_level = t;
    }
  }
  return best_level;
}

BinaryImage apply_threshold(const GrayImage& img, const ThresholdMethod& method) {
  validate(method);
  if (img.size() == 0) fail(ErrorCode::InvalidInput, "cannot threshold an empty image");

  return std::visit(
      overloaded{
          [&](const threshold::SimpleBinary& m) -> BinaryImage {
            return img > static_cast<std::uint8_t>(m.level);
          },
          [&](const threshold::Otsu&) -> BinaryImage {
            return img > static_cast<std::uint8_t>(otsu_level(img));
          },
          [&](const threshold::Niblack& m) -> BinaryImage {
            require_local_input(img);
            FloatImage mean;
            FloatImage variance;
            local_moments(img, m.window, mean, variance);
            return above(img, mean + m.k * variance.sqrt());
          },
          [&](const threshold::Bernsen& m) -> BinaryImage {
            require_local_input(img);
            const GrayImage lo = local_extremum(img, m.window, [](auto a, auto b) { return std::min(a, b); });
            const GrayImage hi = local_extremum(img, m.window, [](auto a, auto b) { return std::max(a, b); });
            BinaryImage out(img.rows(), img.cols());
            for (Eigen::Index i = 0; i < img.size(); ++i) {
              const int mn = lo.data()[i];
              const int mx = hi.data()[i];
              const double mid = (mn + mx) / 2.0;
              out.data()[i] = (mx - mn >= m.contrast_min) ? img.data()[i] > mid : mid > m.fallback_level;
            }
            return out;
          },
          [&](const threshold::AdaptiveMean& m) -> BinaryImage {
            require_local_input(img);
            FloatImage mean;
            FloatImage variance;
            local_moments(img, m.block, mean, variance);
            return above(img, mean - m.c);
          },
          [&](const threshold::AdaptiveGaussian& m) -> BinaryImage {
            require_local_input(img);
            const int r = m.block / 2;
            Eigen::VectorXd kernel(m.block);
            for (int i = -r; i <= r; ++i) kernel(i + r) = std::exp(-(i * i) / (2.0 * m.sigma * m.sigma));
            kernel /= kernel.sum();
            return above(img, convolve_separable(img.cast<double>(), kernel) - m.c);
          },
      },
      method);
}

double white_percentage(const BinaryImage& b) {
  if (b.size() == 0) return 0.0;
  return 100.0 * static_cast<double>(b.count()) / static_cast<double>(b.size());
}

double method_gap(std::span<const GrayImage> open, std::span<const GrayImage> closed,
                  const ThresholdMethod& method) {
  if (open.empty() || closed.empty()) fail(ErrorCode::InvalidInput, "method_gap needs non-empty sets");
  const auto mean_white = [&](std::span<const GrayImage> set) {
    double acc = 0.0;
    for (const GrayImage& img : set) acc += white_percentage(apply_threshold(img, method));
    return acc / static_cast<double>(set.size());
  };
  return mean_white(closed) - mean_white(open);
}

}  // namespace drowsegate
