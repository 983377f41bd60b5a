#include "drowsegate/face_haar.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <thread>
#include <tuple>

namespace drowsegate {
namespace {

// A stump with its rects as flat offsets into the integral table, relative to
// the window origin. Unused rect slots carry zero offsets and zero weight.
struct Stump {
  std::array<std::array<std::int32_t, 4>, 3> taps;  // tl, tr, bl, br
  std::array<float, 3> weights;
  float threshold;
  float left;
  float right;
  std::int32_t rect_count;
};

struct Stage {
  float threshold;
  std::int32_t first_stump;
  std::int32_t stump_count;
};

class ScaledCascade {
 public:
  ScaledCascade(const CascadeModel& model, double scale, int table_stride) {
    window_w_ = static_cast<int>(std::lround(model.base_width * scale));
    window_h_ = static_cast<int>(std::lround(model.base_height * scale));
    const auto at = [&](int x, int y) { return static_cast<std::int32_t>(y * table_stride + x); };

    const int inset = static_cast<int>(std::lround(scale));
    Rect norm{inset, inset, std::max(1, window_w_ - 2 * inset), std::max(1, window_h_ - 2 * inset)};
    if (norm.right() > window_w_ || norm.bottom() > window_h_) norm = {0, 0, window_w_, window_h_};
    norm_ = {at(norm.x, norm.y), at(norm.right(), norm.y), at(norm.x, norm.bottom()), at(norm.right(), norm.bottom())};
    norm_area_ = norm.area();

    const auto scaled_rect = [&](const Rect& r) {
      const int x0 = std::min(static_cast<int>(std::lround(r.x * scale)), window_w_ - 1);
      const int y0 = std::min(static_cast<int>(std::lround(r.y * scale)), window_h_ - 1);
      const int x1 = std::clamp(static_cast<int>(std::lround((r.x + r.w) * scale)), x0 + 1, window_w_);
      const int y1 = std::clamp(static_cast<int>(std::lround((r.y + r.h) * scale)), y0 + 1, window_h_);
      return Rect{x0, y0, x1 - x0, y1 - y0};
    };

    for (const CascadeStage& stage : model.stages) {
      stages_.push_back({static_cast<float>(stage.stage_threshold), static_cast<std::int32_t>(stumps_.size()),
                         static_cast<std::int32_t>(stage.weak.size())});
      for (const WeakClassifier& wc : stage.weak) {
        const int count = static_cast<int>(wc.feature.rects.size());
        // Rounding breaks the zero-sum balance of multi-rect features; restore
        // it through the first rect's weight, as the rect-scaling detectors
        // these cascades were published with do.
        std::array<Rect, 3> rects{};
        double balance = 0.0;
        for (int i = 0; i < count; ++i) {
          rects[i] = scaled_rect(wc.feature.rects[i].rect);
          if (i > 0) balance += wc.feature.rects[i].weight * static_cast<double>(rects[i].area());
        }
        Stump st{};
        st.threshold = static_cast<float>(wc.node_threshold);
        st.left = static_cast<float>(wc.left_value);
        st.right = static_cast<float>(wc.right_value);
        st.rect_count = count;
        for (int i = 0; i < count; ++i) {
          const Rect& r = rects[i];
          st.taps[i] = {at(r.x, r.y), at(r.right(), r.y), at(r.x, r.bottom()), at(r.right(), r.bottom())};
          st.weights[i] = static_cast<float>((i == 0 && count > 1) ? -balance / static_cast<double>(r.area())
                                                                   : wc.feature.rects[i].weight);
        }
        stumps_.push_back(st);
      }
    }
  }

  int window_width() const { return window_w_; }
  int window_height() const { return window_h_; }

  // `sums` and `squares` point at the window origin inside tables sharing the
  // stride the cascade was built for. Features are compared unnormalized
  // against threshold * area * stddev, which equals the normalized test.
  template <typename T>
  float norm_factor(const T* sums, const std::int64_t* squares) const {
    const std::int64_t s = box(sums, norm_);  // widened before squaring
    const std::int64_t nf = norm_area_ * box(squares, norm_) - s * s;
    return static_cast<float>(nf > 0 ? std::sqrt(static_cast<double>(nf)) : static_cast<double>(norm_area_));
  }

  std::size_t stage_count() const { return stages_.size(); }

  template <typename T>
  bool stage_passes(std::size_t index, const T* sums, float factor) const {
    const Stage& stage = stages_[index];
    float stage_sum = 0.0F;
    const Stump* end = stumps_.data() + stage.first_stump + stage.stump_count;
    for (const Stump* st = stumps_.data() + stage.first_stump; st != end; ++st) {
      float feature = st->weights[0] * static_cast<float>(box(sums, st->taps[0])) +
                      st->weights[1] * static_cast<float>(box(sums, st->taps[1]));
      if (st->rect_count > 2) feature += st->weights[2] * static_cast<float>(box(sums, st->taps[2]));
      stage_sum += feature < st->threshold * factor ? st->left : st->right;
    }
    return stage_sum >= stage.threshold;
  }

  template <typename T>
  bool accepts(const T* sums, const std::int64_t* squares) const {
    const float factor = norm_factor(sums, squares);
    for (std::size_t i = 0; i < stages_.size(); ++i) {
      if (!stage_passes(i, sums, factor)) return false;
    }
    return true;
  }

  // Evaluates every window of one row stage by stage, and within a stage one
  // stump across all surviving windows. Per window the stump responses are
  // accumulated in the same order as stage_passes(), so decisions match
  // accepts() exactly.
  template <typename T>
  void scan_row(const T* sums, const std::int64_t* squares, int step, int count, std::vector<int>& alive,
                std::vector<float>& factors, std::vector<float>& stage_sums, std::vector<int>& passed) const {
    alive.clear();
    factors.clear();
    for (int i = 0; i < count; ++i) {
      alive.push_back(i * step);
      factors.push_back(norm_factor(sums + i * step, squares + i * step));
    }
    for (std::size_t index = 0; index < stages_.size() && !alive.empty(); ++index) {
      const Stage& stage = stages_[index];
      const std::size_t n = alive.size();
      stage_sums.assign(n, 0.0F);
      const Stump* end = stumps_.data() + stage.first_stump + stage.stump_count;
      for (const Stump* st = stumps_.data() + stage.first_stump; st != end; ++st) {
        if (st->rect_count > 2) {
          accumulate<T, 3>(*st, sums, alive.data(), factors.data(), stage_sums.data(), n);
        } else {
          accumulate<T, 2>(*st, sums, alive.data(), factors.data(), stage_sums.data(), n);
        }
      }
      std::size_t kept = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (stage_sums[j] >= stage.threshold) {
          alive[kept] = alive[j];
          factors[kept] = factors[j];
          ++kept;
        }
      }
      alive.resize(kept);
      factors.resize(kept);
    }
    passed = alive;
  }

 private:
  template <typename T, int Rects>
  static void accumulate(const Stump& st, const T* sums, const int* offsets, const float* factors, float* out,
                         std::size_t n) {
    const auto t0 = st.taps[0];
    const auto t1 = st.taps[1];
    const auto t2 = st.taps[2];
    for (std::size_t j = 0; j < n; ++j) {
      const T* base = sums + offsets[j];
      float feature = st.weights[0] * static_cast<float>(box(base, t0)) + st.weights[1] * static_cast<float>(box(base, t1));
      if constexpr (Rects > 2) feature += st.weights[2] * static_cast<float>(box(base, t2));
      out[j] += feature < st.threshold * factors[j] ? st.left : st.right;
    }
  }

  static std::int64_t box(const std::int64_t* t, const std::array<std::int32_t, 4>& q) {
    return t[q[3]] - t[q[1]] - t[q[2]] + t[q[0]];
  }
  // Every box sum of a narrow table fits in 32 bits, so wrapping arithmetic
  // yields it exactly.
  static std::int32_t box(const std::int32_t* t, const std::array<std::int32_t, 4>& q) {
    return static_cast<std::int32_t>(static_cast<std::uint32_t>(t[q[3]]) - static_cast<std::uint32_t>(t[q[1]]) -
                                     static_cast<std::uint32_t>(t[q[2]]) + static_cast<std::uint32_t>(t[q[0]]));
  }

  int window_w_ = 0;
  int window_h_ = 0;
  std::array<std::int32_t, 4> norm_{};
  std::int64_t norm_area_ = 1;
  std::vector<Stage> stages_;
  std::vector<Stump> stumps_;
};

bool similar(const Rect& a, const Rect& b, double eps) {
  const double delta = eps * (std::min(a.w, b.w) + std::min(a.h, b.h)) * 0.5;
  return std::abs(a.x - b.x) <= delta && std::abs(a.y - b.y) <= delta &&
         std::abs(a.right() - b.right()) <= delta && std::abs(a.bottom() - b.bottom()) <= delta;
}

int find_root(std::vector<int>& parent, int i) {
  while (parent[i] != i) {
    parent[i] = parent[parent[i]];
    i = parent[i];
  }
  return i;
}

long long rounded_mean(long long sum, long long n) { return (2 * sum + n) / (2 * n); }

}  // namespace

bool evaluate_window(const CascadeModel& model, const IntegralImage& ii, const Rect& window, double scale) {
  const ScaledCascade scaled(model, scale, static_cast<int>(ii.sums().cols()));
  if (window.x < 0 || window.y < 0 || window.x + scaled.window_width() > ii.width() ||
      window.y + scaled.window_height() > ii.height()) {
    fail(ErrorCode::InvalidInput, "evaluation window outside the image");
  }
  const std::ptrdiff_t origin = static_cast<std::ptrdiff_t>(window.y) * ii.sums().cols() + window.x;
  return scaled.accepts(ii.sums().data() + origin, ii.squared_sums().data() + origin);
}

struct CascadeScanner::Cache {
  double scale_factor = 0.0;
  int stride = 0;
  std::vector<std::unique_ptr<ScaledCascade>> levels;  // index k holds scale factor^k
};

CascadeScanner::CascadeScanner(CascadeModel model) : model_(std::move(model)), cache_(std::make_unique<Cache>()) {}
CascadeScanner::~CascadeScanner() = default;
CascadeScanner::CascadeScanner(CascadeScanner&&) noexcept = default;
CascadeScanner& CascadeScanner::operator=(CascadeScanner&&) noexcept = default;

std::vector<Rect> CascadeScanner::scan(const GrayImage& img, const DetectOptions& opts) {
  if (!(opts.scale_factor > 1.0)) fail(ErrorCode::InvalidInput, "scale_factor must exceed 1");
  std::vector<Rect> hits;
  const int w = width(img);
  const int h = height(img);
  if (w < model_.base_width || h < model_.base_height) return hits;

  const IntegralImage ii(img);
  const int stride = static_cast<int>(ii.sums().cols());
  const int min_side = std::max(opts.min_size, std::max(model_.base_width, model_.base_height));
  // A 32-bit copy of the sum table halves the memory traffic of the scan.
  const bool narrow = static_cast<std::int64_t>(w) * h * 255 < std::numeric_limits<std::int32_t>::max();
  const Image<std::int32_t> sums32 = narrow ? ii.sums().cast<std::int32_t>().eval() : Image<std::int32_t>();

  if (cache_->scale_factor != opts.scale_factor || cache_->stride != stride) {
    cache_->levels.clear();
    cache_->scale_factor = opts.scale_factor;
    cache_->stride = stride;
  }

  // Every (scale, row) pair is an independent work item. Rows are handed out
  // through an atomic cursor and their hits concatenated in item order, so the
  // result does not depend on the number of workers.
  struct Row {
    const ScaledCascade* cascade;
    int y;
    int step;
  };
  std::vector<Row> rows;
  double scale = 1.0;
  for (std::size_t k = 0;; ++k, scale *= opts.scale_factor) {
    const int ww = static_cast<int>(std::lround(model_.base_width * scale));
    const int wh = static_cast<int>(std::lround(model_.base_height * scale));
    if (ww > w || wh > h) break;
    if (opts.max_size > 0 && std::max(ww, wh) > opts.max_size) break;
    if (std::min(ww, wh) < min_side) continue;

    if (cache_->levels.size() <= k) cache_->levels.resize(k + 1);
    if (!cache_->levels[k]) cache_->levels[k] = std::make_unique<ScaledCascade>(model_, scale, stride);
    const int step = std::max(1, static_cast<int>(std::lround(scale)));
    for (int y = 0; y + wh <= h; y += step) rows.push_back({cache_->levels[k].get(), y, step});
  }

  std::vector<std::vector<Rect>> row_hits(rows.size());
  std::atomic<std::size_t> cursor{0};
  const auto work = [&] {
    std::vector<int> alive;
    std::vector<float> factors;
    std::vector<float> stage_sums;
    std::vector<int> passed;
    for (std::size_t i = cursor++; i < rows.size(); i = cursor++) {
      const Row& r = rows[i];
      const int ww = r.cascade->window_width();
      const int wh = r.cascade->window_height();
      const int count = (w - ww) / r.step + 1;
      const std::ptrdiff_t offset = static_cast<std::ptrdiff_t>(r.y) * stride;
      const std::int64_t* squares = ii.squared_sums().data() + offset;
      if (narrow) {
        r.cascade->scan_row(sums32.data() + offset, squares, r.step, count, alive, factors, stage_sums, passed);
      } else {
        r.cascade->scan_row(ii.sums().data() + offset, squares, r.step, count, alive, factors, stage_sums, passed);
      }
      for (int x : passed) row_hits[i].push_back({x, r.y, ww, wh});
    }
  };
  const unsigned workers = std::min<unsigned>(std::max(1U, std::thread::hardware_concurrency()), 8U);
  std::vector<std::jthread> pool;
  for (unsigned t = 1; t < workers && t < rows.size(); ++t) pool.emplace_back(work);
  work();
  pool.clear();

  for (const std::vector<Rect>& r : row_hits) hits.insert(hits.end(), r.begin(), r.end());
  return hits;
}

std::vector<Detection> CascadeScanner::detect(const GrayImage& img, const DetectOptions& opts) {
  if (opts.min_neighbors < 0) fail(ErrorCode::InvalidInput, "min_neighbors must be >= 0");
  const std::vector<Rect> hits = scan(img, opts);
  return group_rectangles(hits, opts.min_neighbors, opts.group_eps);
}

std::vector<Rect> scan_multiscale(const CascadeModel& model, const GrayImage& img, const DetectOptions& opts) {
  return CascadeScanner(model).scan(img, opts);
}

std::vector<Detection> group_rectangles(std::span<const Rect> hits, int min_neighbors, double eps) {
  const int n = static_cast<int>(hits.size());
  std::vector<int> parent(n);
  std::iota(parent.begin(), parent.end(), 0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (similar(hits[i], hits[j], eps)) parent[find_root(parent, i)] = find_root(parent, j);
    }
  }

  struct Accum {
    long long x = 0, y = 0, w = 0, h = 0, n = 0;
  };
  std::vector<Accum> acc(n);
  for (int i = 0; i < n; ++i) {
    Accum& a = acc[find_root(parent, i)];
    a.x += hits[i].x;
    a.y += hits[i].y;
    a.w += hits[i].w;
    a.h += hits[i].h;
    ++a.n;
  }

  std::vector<Detection> out;
  for (const Accum& a : acc) {
    if (a.n == 0 || a.n < min_neighbors) continue;
    out.push_back({{static_cast<int>(rounded_mean(a.x, a.n)), static_cast<int>(rounded_mean(a.y, a.n)),
                    static_cast<int>(rounded_mean(a.w, a.n)), static_cast<int>(rounded_mean(a.h, a.n))},
                   static_cast<int>(a.n)});
  }
  std::sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) {
    return std::make_tuple(-a.rect.area(), a.rect.y, a.rect.x, a.rect.w, a.neighbors) <
           std::make_tuple(-b.rect.area(), b.rect.y, b.rect.x, b.rect.w, b.neighbors);
  });
  return out;
}

std::vector<Detection> detect_multiscale(const CascadeModel& model, const GrayImage& img, const DetectOptions& opts) {
  return CascadeScanner(model).detect(img, opts);
}

std::optional<Rect> primary_face(std::span<const Detection> dets) {
  if (dets.empty()) return std::nullopt;
  const auto best = std::min_element(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
    return std::make_tuple(-a.rect.area(), a.rect.y, a.rect.x) < std::make_tuple(-b.rect.area(), b.rect.y, b.rect.x);
  });
  return best->rect;
}

}  // namespace drowsegate
