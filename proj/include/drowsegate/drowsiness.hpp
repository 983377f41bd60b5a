#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "drowsegate/error.hpp"
#include "drowsegate/eye_state.hpp"

namespace drowsegate {

/// Fixed-capacity circular buffer; pushing into a full buffer evicts the
/// oldest entry.
template <typename T>
class RingBuffer {
 public:
  explicit RingBuffer(std::size_t capacity) : slots_(capacity) {
    if (capacity == 0) fail(ErrorCode::InvalidInput, "ring buffer capacity must be positive");
  }

  void push(const T& value) {
    slots_[head_] = value;
    head_ = (head_ + 1) % slots_.size();
    if (fill_ < slots_.size()) ++fill_;
  }

  std::size_t capacity() const { return slots_.size(); }
  std::size_t size() const { return fill_; }
  bool empty() const { return fill_ == 0; }
  bool full() const { return fill_ == slots_.size(); }

  /// i = 0 is the oldest stored value.
  const T& operator[](std::size_t i) const {
    return slots_[(head_ + slots_.size() - fill_ + i) % slots_.size()];
  }

  std::vector<T> values() const {
    std::vector<T> out;
    out.reserve(fill_);
    for (std::size_t i = 0; i < fill_; ++i) out.push_back((*this)[i]);
    return out;
  }

 private:
  std::vector<T> slots_;
  std::size_t head_ = 0;
  std::size_t fill_ = 0;
};

enum class AverageMode {
  Literal,     // sum(weight * W) / window_frames
  Normalized,  // sum(weight * W) / sum(weight)
};

enum class AbsentPolicy {
  TreatAsClosed,  // w = 100
  HoldLast,       // w = previous value
};

struct DrowsinessConfig {
  double fps = 30.0;
  int window_frames = 300;
  int intervals = 5;
  Eigen::VectorXd interval_weights = Eigen::VectorXd::LinSpaced(5, 0.2, 1.0);  // oldest -> newest
  double gap_d = 15.0;
  double coeff_c = 0.72;
  int fth_frames = 24;
  AverageMode average_mode = AverageMode::Normalized;
  bool freeze_pth_during_candidate = true;
  AbsentPolicy absent_policy = AbsentPolicy::TreatAsClosed;
};

/// Throws InvalidInput on any violated invariant.
void validate(const DrowsinessConfig& cfg);

/// Weighted moving average of the buffered white percentages. Buffered frames
/// are split oldest -> newest into `intervals` equal spans, span i weighted by
/// interval_weights[i]. Throws InvalidInput on an empty buffer.
double weighted_moving_average(const RingBuffer<double>& buffer, const DrowsinessConfig& cfg);

/// a10 + coeff_c * gap_d, clamped to [0, 100].
double percentage_threshold(double a10_reference, const DrowsinessConfig& cfg);

enum class AlarmKind { Raised, Cleared };

struct AlarmEvent {
  AlarmKind kind = AlarmKind::Raised;
  long long frame_index = 0;
  double timestamp = 0.0;
  double a10 = 0.0;
  double pth = 0.0;
  double w = 0.0;

  friend bool operator==(const AlarmEvent&, const AlarmEvent&) = default;
};

/// One key=value line, no trailing newline:
/// `event=raised frame_index=323 timestamp_s=10.766667 a10=30.138889 pth=40.938889 w=55.000000`
std::string format_event(const AlarmEvent& e);

struct DrowsinessState {
  explicit DrowsinessState(const DrowsinessConfig& cfg)
      : buffer(static_cast<std::size_t>(cfg.window_frames)) {}

  RingBuffer<double> buffer;
  double a10 = 0.0;
  double pth = 0.0;
  int counter_k = 0;
  bool alarm_active = false;
  long long frames_seen = 0;
  std::optional<long long> last_frame_index;
  std::optional<double> last_w;
};

/// Single-owner temporal detector: double thresholding on the instantaneous
/// white percentage (PTh) and on the run length of closure frames (FTh).
class DrowsinessDetector {
 public:
  explicit DrowsinessDetector(DrowsinessConfig cfg);

  /// Consumes one observation. Frame indices must strictly increase
  /// (OrderingViolation otherwise).
  std::optional<AlarmEvent> step(const FrameObservation& obs);

  const DrowsinessState& state() const { return state_; }
  const DrowsinessConfig& config() const { return cfg_; }

 private:
  DrowsinessConfig cfg_;
  DrowsinessState state_;
};

/// Runs a whole stream through a fresh detector and returns the events.
std::vector<AlarmEvent> run_detector(std::span<const FrameObservation> stream, const DrowsinessConfig& cfg);

/// Inclusive frame range of a labeled closure.
struct ClosureInterval {
  long long start = 0;
  long long end = 0;
};

struct LabeledSequence {
  std::vector<FrameObservation> observations;
  std::vector<ClosureInterval> closures;
};

struct CoefficientRow {
  double coeff_c = 0.0;
  int true_positives = 0;
  int false_positives = 0;
  int false_negatives = 0;
  double f1 = 0.0;
  double mean_latency_s = 0.0;
  double score = 0.0;
};

struct CalibrationReport {
  double best_c = 0.0;
  std::vector<CoefficientRow> rows;  // one per grid value, ascending C
};

/// Event-level F1 and latency for one configuration. A Raised event inside a
/// labeled interval is a hit for the first such event only; any other Raised
/// event is a false positive. Missed intervals carry a latency of
/// window_frames / fps.
CoefficientRow score_configuration(std::span<const LabeledSequence> sequences, const DrowsinessConfig& cfg);

/// Sweeps C over {0.00, 0.02, ..., 1.00}, scoring F1 - 0.1 * mean latency (s).
/// The smallest C wins ties. Throws InvalidInput when no sequence carries a
/// closure of at least fth_frames frames.
CalibrationReport calibrate_coefficient(std::span<const LabeledSequence> sequences, const DrowsinessConfig& base);

inline constexpr double kLatencyPenalty = 0.1;
inline constexpr int kCoefficientSteps = 50;

}  // namespace drowsegate
