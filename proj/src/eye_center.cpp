#include "drowsegate/eye_center.hpp"

#include <cmath>
#include <vector>

namespace drowsegate {

EyeRegions eye_regions_from_face(const Rect& face) {
  if (face.w < 40 || face.h < 40) fail(ErrorCode::FaceTooSmall, "face must be at least 40x40 for eye regions");
  // Integer fractions keep the boundaries exact: cols [10%, 48%), rows [20%, 55%).
  const int x0 = face.w * 10 / 100;
  const int x1 = face.w * 48 / 100;
  const int y0 = face.h * 20 / 100;
  const int y1 = face.h * 55 / 100;
  EyeRegions r;
  r.left = {face.x + x0, face.y + y0, x1 - x0, y1 - y0};
  r.right = {face.x + (face.w - x1), face.y + y0, x1 - x0, y1 - y0};
  return r;
}

GradientField gradient_field(const GrayImage& region, const EyeCenterOptions& opts) {
  if (width(region) < 8 || height(region) < 8) {
    fail(ErrorCode::InvalidInput, "eye region must be at least 8x8");
  }
  GradientField field;
  field.smoothed = gaussian_smooth(region, opts.smoothing_sigma);
  const Gradients g = gradients(field.smoothed);
  const FloatImage magnitude = (g.gx.square() + g.gy.square()).sqrt();

  const double mean = magnitude.mean();
  const double stddev = std::sqrt((magnitude - mean).square().mean());
  const double cutoff = mean + opts.gradient_threshold_factor * stddev;

  std::vector<double> xs, ys, gxs, gys;
  for (int y = 0; y < height(region); ++y) {
    for (int x = 0; x < width(region); ++x) {
      const double m = magnitude(y, x);
      if (m > cutoff && m > 0.0) {
        xs.push_back(x);
        ys.push_back(y);
        gxs.push_back(g.gx(y, x) / m);
        gys.push_back(g.gy(y, x) / m);
      }
    }
  }
  if (xs.empty()) fail(ErrorCode::NoGradients, "eye region has no usable gradients");

  const auto to_array = [](const std::vector<double>& v) {
    return Eigen::ArrayXd(Eigen::Map<const Eigen::ArrayXd>(v.data(), static_cast<Eigen::Index>(v.size())));
  };
  field.x = to_array(xs);
  field.y = to_array(ys);
  field.gx = to_array(gxs);
  field.gy = to_array(gys);
  return field;
}

FloatImage center_weights(const GrayImage& smoothed, WeightPolarity polarity) {
  switch (polarity) {
    case WeightPolarity::Inverted: return 255.0 - smoothed.cast<double>();
    case WeightPolarity::Literal: return smoothed.cast<double>();
    case WeightPolarity::None: break;
  }
  return FloatImage::Ones(smoothed.rows(), smoothed.cols());
}

FloatImage objective_map(const GrayImage& region, const EyeCenterOptions& opts) {
  const GradientField field = gradient_field(region, opts);
  const Eigen::Index h = region.rows();
  const Eigen::Index w = region.cols();

  // Candidate coordinate grids.
  const FloatImage cx = Eigen::RowVectorXd::LinSpaced(w, 0, static_cast<double>(w - 1)).replicate(h, 1).array();
  const FloatImage cy = Eigen::VectorXd::LinSpaced(h, 0, static_cast<double>(h - 1)).replicate(1, w).array();

  FloatImage acc = FloatImage::Zero(h, w);
  for (Eigen::Index i = 0; i < field.size(); ++i) {
    // Lazy expressions, fused into one pass over the candidate grid.
    const auto dx = field.x(i) - cx;
    const auto dy = field.y(i) - cy;
    const auto dist2 = dx.square() + dy.square();
    const auto dot = dx * field.gx(i) + dy * field.gy(i);
    // (d.g)^2 with d = (x_i - c) / |x_i - c|; the sample's own pixel is skipped.
    if (opts.clamp_negative_dot) {
      acc += (dist2 > 0.0).select(dot.max(0.0).square() / dist2, 0.0);
    } else {
      acc += (dist2 > 0.0).select(dot.square() / dist2, 0.0);
    }
  }
  return center_weights(field.smoothed, opts.polarity) * acc / static_cast<double>(field.size());
}

LocatedCenter interior_argmax(const FloatImage& map) {
  const int h = height(map);
  const int w = width(map);
  Image<bool> visited = Image<bool>::Constant(h, w, false);
  std::vector<Point> stack;
  std::vector<Point> plateau;

  LocatedCenter best{{-1, -1}, 0.0};
  bool found = false;
  for (int y0 = 0; y0 < h; ++y0) {
    for (int x0 = 0; x0 < w; ++x0) {
      if (visited(y0, x0)) continue;
      const double v = map(y0, x0);
      bool is_max = true;
      bool on_border = false;
      stack.assign(1, {x0, y0});
      visited(y0, x0) = true;
      while (!stack.empty()) {
        const Point p = stack.back();
        stack.pop_back();
        if (p.x == 0 || p.y == 0 || p.x == w - 1 || p.y == h - 1) on_border = true;
        for (int ny = std::max(0, p.y - 1); ny <= std::min(h - 1, p.y + 1); ++ny) {
          for (int nx = std::max(0, p.x - 1); nx <= std::min(w - 1, p.x + 1); ++nx) {
            const double nv = map(ny, nx);
            if (nv > v) {
              is_max = false;
            } else if (nv == v && !visited(ny, nx)) {
              visited(ny, nx) = true;
              stack.push_back({nx, ny});
            }
          }
        }
      }
      // Row-major scan: (x0, y0) is the plateau's smallest (y, x) pixel, and
      // strict comparison keeps the earliest plateau on ties.
      if (is_max && !on_border && v > 0.0 && (!found || v > best.confidence)) {
        best = {{x0, y0}, v};
        found = true;
      }
    }
  }
  if (!found) fail(ErrorCode::NoInteriorMaximum, "no interior maximum in objective map");
  return best;
}

LocatedCenter locate_center(const GrayImage& region, const EyeCenterOptions& opts) {
  const int w = width(region);
  const int h = height(region);
  if (opts.max_region_width > 0 && w > opts.max_region_width) {
    const int sw = opts.max_region_width;
    const int sh = std::max(8, static_cast<int>(std::lround(h * static_cast<double>(sw) / w)));
    const LocatedCenter small = interior_argmax(objective_map(resize_bilinear(region, sw, sh), opts));
    // Corner-aligned mapping back to full resolution.
    const auto back = [](int v, int from, int to) {
      return static_cast<int>(std::lround(v * static_cast<double>(to - 1) / (from - 1)));
    };
    return {{back(small.center.x, sw, w), back(small.center.y, sh, h)}, small.confidence};
  }
  return interior_argmax(objective_map(region, opts));
}

EyeCenters track_eyes(const GrayImage& face, const EyeRegions& regions, const EyeCenterOptions& opts) {
  const auto one = [&](const Rect& r, std::optional<Point>& center, double& confidence) {
    try {
      const LocatedCenter c = locate_center(crop(face, r), opts);
      center = Point{r.x + c.center.x, r.y + c.center.y};
      confidence = c.confidence;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NoGradients && e.code() != ErrorCode::NoInteriorMaximum) throw;
    }
  };
  EyeCenters out;
  one(regions.left, out.left, out.left_confidence);
  one(regions.right, out.right, out.right_confidence);
  return out;
}

void draw_crosshair(GrayImage& img, Point center, std::uint8_t value) {
  for (int d = -2; d <= 2; ++d) {
    const Point hp{center.x + d, center.y};
    const Point vp{center.x, center.y + d};
    if (hp.x >= 0 && hp.x < width(img) && hp.y >= 0 && hp.y < height(img)) img(hp.y, hp.x) = value;
    if (vp.x >= 0 && vp.x < width(img) && vp.y >= 0 && vp.y < height(img)) img(vp.y, vp.x) = value;
  }
}

}  // namespace drowsegate
