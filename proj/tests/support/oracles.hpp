#pragma once

// Independent reference implementations used as test oracles. They favour
// directness over speed and share no code paths with the library beyond the
// plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "drowsegate/drowsiness.hpp"
#include "drowsegate/eye_center.hpp"
#include "drowsegate/imgcore.hpp"

namespace oracle {

using namespace drowsegate;

// Otsu by exhaustive search with exact integer arithmetic. Between-class
// variance for classes I <= t and I > t is proportional to
// (N*S0 - n0*S)^2 / (n0*n1); the first maximum wins.
inline int otsu_exhaustive(const GrayImage& img) {
  const std::int64_t n = img.size();
  std::int64_t total = 0;
  for (Eigen::Index i = 0; i < img.size(); ++i) total += img.data()[i];
  __int128 best_num = -1;
  __int128 best_den = 1;
  int best = 0;
  for (int t = 0; t < 256; ++t) {
    std::int64_t n0 = 0;
    std::int64_t s0 = 0;
    for (Eigen::Index i = 0; i < img.size(); ++i) {
      if (img.data()[i] <= t) {
        ++n0;
        s0 += img.data()[i];
      }
    }
    const std::int64_t n1 = n - n0;
    __int128 num = 0;
    __int128 den = 1;
    if (n0 > 0 && n1 > 0) {
      const __int128 d = static_cast<__int128>(n) * s0 - static_cast<__int128>(n0) * total;
      num = d * d;
      den = static_cast<__int128>(n0) * n1;
    }
    if (num * best_den > best_num * den) {
      best_num = num;
      best_den = den;
      best = t;
    }
  }
  return best;
}

inline std::int64_t rect_sum(const GrayImage& img, const Rect& r, bool squared = false) {
  std::int64_t s = 0;
  for (int y = r.y; y < r.bottom(); ++y) {
    for (int x = r.x; x < r.right(); ++x) {
      const std::int64_t v = img(y, x);
      s += squared ? v * v : v;
    }
  }
  return s;
}

// Weighted average written with explicit span boundaries: frame j of n belongs
// to span i when ceil(i*n/K) <= j < ceil((i+1)*n/K).
inline double weighted_average(const std::vector<double>& frames, const DrowsinessConfig& cfg) {
  const long long n = static_cast<long long>(frames.size());
  const long long k = cfg.intervals;
  double weighted = 0.0;
  double weights = 0.0;
  for (long long i = 0; i < k; ++i) {
    const long long begin = (i * n + k - 1) / k;
    const long long end = ((i + 1) * n + k - 1) / k;
    for (long long j = begin; j < end; ++j) {
      weighted += cfg.interval_weights(i) * frames[static_cast<std::size_t>(j)];
      weights += cfg.interval_weights(i);
    }
  }
  return cfg.average_mode == AverageMode::Literal ? weighted / cfg.window_frames : weighted / weights;
}

inline std::vector<double> last_n(const std::vector<double>& pushed, std::size_t n) {
  const std::size_t from = pushed.size() > n ? pushed.size() - n : 0;
  return {pushed.begin() + static_cast<std::ptrdiff_t>(from), pushed.end()};
}

// Objective evaluated candidate by candidate with scalar loops over the
// library's gradient samples.
inline FloatImage objective(const GradientField& field, const EyeCenterOptions& opts) {
  const int h = height(field.smoothed);
  const int w = width(field.smoothed);
  FloatImage out(h, w);
  for (int cy = 0; cy < h; ++cy) {
    for (int cx = 0; cx < w; ++cx) {
      double acc = 0.0;
      for (Eigen::Index i = 0; i < field.size(); ++i) {
        const double dx = field.x(i) - cx;
        const double dy = field.y(i) - cy;
        const double len = std::sqrt(dx * dx + dy * dy);
        if (len == 0.0) continue;
        double dot = (dx * field.gx(i) + dy * field.gy(i)) / len;
        if (opts.clamp_negative_dot && dot < 0.0) dot = 0.0;
        acc += dot * dot;
      }
      double weight = 1.0;
      if (opts.polarity == WeightPolarity::Inverted) weight = 255.0 - field.smoothed(cy, cx);
      if (opts.polarity == WeightPolarity::Literal) weight = field.smoothed(cy, cx);
      out(cy, cx) = weight * acc / static_cast<double>(field.size());
    }
  }
  return out;
}

// Straight transcription of the temporal decision rules, one frame at a time.
struct DetectorTrace {
  std::vector<std::pair<long long, bool>> events;  // (frame, raised?)
};

inline DetectorTrace trace_detector(const std::vector<std::optional<double>>& ws, const DrowsinessConfig& cfg) {
  DetectorTrace out;
  std::vector<double> pushed;
  double pth = 0.0;
  int k = 0;
  bool alarm = false;
  double last = 0.0;
  for (std::size_t f = 0; f < ws.size(); ++f) {
    double w = ws[f] ? *ws[f] : (cfg.absent_policy == AbsentPolicy::TreatAsClosed ? 100.0 : last);
    last = w;
    pushed.push_back(w);
    if (k == 0 || !cfg.freeze_pth_during_candidate) {
      const double a10 = weighted_average(last_n(pushed, static_cast<std::size_t>(cfg.window_frames)), cfg);
      pth = std::min(100.0, std::max(0.0, a10 + cfg.coeff_c * cfg.gap_d));
    }
    if (pushed.size() < static_cast<std::size_t>(cfg.window_frames)) continue;
    if (w >= pth) {
      ++k;
      if (k >= cfg.fth_frames && !alarm) {
        alarm = true;
        out.events.emplace_back(static_cast<long long>(f), true);
      }
    } else {
      k = 0;
      if (alarm) {
        alarm = false;
        out.events.emplace_back(static_cast<long long>(f), false);
      }
    }
  }
  return out;
}

}  // namespace oracle
