#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "drowsegate/imgcore.hpp"

namespace drowsegate {

struct WeightedRect {
  Rect rect;  // base-window coordinates
  double weight = 0.0;

  friend bool operator==(const WeightedRect&, const WeightedRect&) = default;
};

struct HaarFeature {
  std::vector<WeightedRect> rects;  // 1 to 3 entries

  friend bool operator==(const HaarFeature&, const HaarFeature&) = default;
};

/// Decision stump over one Haar feature.
struct WeakClassifier {
  HaarFeature feature;
  double node_threshold = 0.0;
  double left_value = 0.0;
  double right_value = 0.0;

  friend bool operator==(const WeakClassifier&, const WeakClassifier&) = default;
};

struct CascadeStage {
  double stage_threshold = 0.0;
  std::vector<WeakClassifier> weak;

  friend bool operator==(const CascadeStage&, const CascadeStage&) = default;
};

struct CascadeModel {
  int base_width = 24;
  int base_height = 24;
  std::vector<CascadeStage> stages;

  friend bool operator==(const CascadeModel&, const CascadeModel&) = default;
};

/// Parses a stump-based Haar cascade in the classic XML interchange layout
/// (`<size>`, `<stages>` of `<trees>` of single-node `<feature>` trees). The
/// later `<cascade>` layout with a shared `<features>` table is also read when
/// every weak classifier is a stump.
///
/// Throws ParseError (malformed markup, out-of-window rects, empty stages) or
/// UnsupportedCascade (multi-node trees, tilted features, non-Haar cascades).
CascadeModel parse_cascade(std::string_view text);
CascadeModel load_cascade(const std::string& path);

/// Canonical classic-layout text. parse_cascade(serialize_cascade(m)) == m.
std::string serialize_cascade(const CascadeModel& model);

/// Runs the cascade on one window of size round(base * scale) at window.x/y.
/// Rejects at the first failing stage.
bool evaluate_window(const CascadeModel& model, const IntegralImage& ii, const Rect& window, double scale);

struct Detection {
  Rect rect;
  int neighbors = 0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct DetectOptions {
  double scale_factor = 1.1;
  int min_neighbors = 4;
  int min_size = 100;  // pixels; raised to the base window when smaller
  int max_size = 0;    // 0 = unbounded
  double group_eps = 0.2;
};

/// Raw sliding-window hits over all scales (no grouping).
std::vector<Rect> scan_multiscale(const CascadeModel& model, const GrayImage& img, const DetectOptions& opts);

/// Clusters similar rectangles (union of pairwise-similar pairs), averages
/// each cluster and drops clusters with fewer than min_neighbors members.
/// Output is sorted by area descending, then by (y, x).
std::vector<Detection> group_rectangles(std::span<const Rect> hits, int min_neighbors, double eps);

std::vector<Detection> detect_multiscale(const CascadeModel& model, const GrayImage& img,
                                         const DetectOptions& opts = {});

/// Detector bound to one cascade. Rescaled copies of the cascade are built
/// once per scale and image stride and reused across calls, which matters
/// when scanning a video stream frame after frame. Not thread-safe.
class CascadeScanner {
 public:
  explicit CascadeScanner(CascadeModel model);
  ~CascadeScanner();
  CascadeScanner(CascadeScanner&&) noexcept;
  CascadeScanner& operator=(CascadeScanner&&) noexcept;

  const CascadeModel& model() const { return model_; }

  std::vector<Rect> scan(const GrayImage& img, const DetectOptions& opts);
  std::vector<Detection> detect(const GrayImage& img, const DetectOptions& opts = {});

 private:
  struct Cache;
  CascadeModel model_;
  std::unique_ptr<Cache> cache_;
};

/// Largest detection; ties go to the smallest (y, x).
std::optional<Rect> primary_face(std::span<const Detection> dets);

}  // namespace drowsegate
