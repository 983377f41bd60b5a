#include "drowsegate/drowsiness.hpp"

#include <algorithm>
#include <cstdio>

namespace drowsegate {

void validate(const DrowsinessConfig& cfg) {
  if (!(cfg.fps > 0.0)) fail(ErrorCode::InvalidInput, "fps must be positive");
  if (cfg.window_frames < 1 || cfg.intervals < 1) fail(ErrorCode::InvalidInput, "window and intervals must be positive");
  if (cfg.window_frames % cfg.intervals != 0) {
    fail(ErrorCode::InvalidInput, "window_frames must be divisible by intervals");
  }
  if (cfg.interval_weights.size() != cfg.intervals) {
    fail(ErrorCode::InvalidInput, "need one weight per interval");
  }
  if (!(cfg.coeff_c >= 0.0 && cfg.coeff_c <= 1.0)) fail(ErrorCode::InvalidInput, "coeff_c must lie in [0, 1]");
  if (cfg.fth_frames < 1) fail(ErrorCode::InvalidInput, "fth_frames must be >= 1");
  if (!(cfg.gap_d > 0.0)) fail(ErrorCode::InvalidInput, "gap_d must be positive");
}

double weighted_moving_average(const RingBuffer<double>& buffer, const DrowsinessConfig& cfg) {
  if (buffer.empty()) fail(ErrorCode::InvalidInput, "weighted average of an empty buffer");
  const std::size_t n = buffer.size();
  const auto spans = static_cast<std::size_t>(cfg.intervals);
  double weighted = 0.0;
  double weight_total = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    // Proportional partition: a full buffer gives spans of window/intervals.
    const double weight = cfg.interval_weights(static_cast<Eigen::Index>(j * spans / n));
    weighted += weight * buffer[j];
    weight_total += weight;
  }
  if (cfg.average_mode == AverageMode::Literal) return weighted / cfg.window_frames;
  return weighted / weight_total;
}

double percentage_threshold(double a10_reference, const DrowsinessConfig& cfg) {
  return std::clamp(a10_reference + cfg.coeff_c * cfg.gap_d, 0.0, 100.0);
}

std::string format_event(const AlarmEvent& e) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "event=%s frame_index=%lld timestamp_s=%.6f a10=%.6f pth=%.6f w=%.6f",
                e.kind == AlarmKind::Raised ? "raised" : "cleared", e.frame_index, e.timestamp, e.a10, e.pth, e.w);
  return buf;
}

DrowsinessDetector::DrowsinessDetector(DrowsinessConfig cfg) : cfg_(std::move(cfg)), state_(cfg_) {
  validate(cfg_);
}

std::optional<AlarmEvent> DrowsinessDetector::step(const FrameObservation& obs) {
  DrowsinessState& s = state_;
  if (s.last_frame_index && obs.frame_index <= *s.last_frame_index) {
    fail(ErrorCode::OrderingViolation, "frame " + std::to_string(obs.frame_index) + " arrived after frame " +
                                           std::to_string(*s.last_frame_index));
  }
  s.last_frame_index = obs.frame_index;

  double w = 0.0;
  if (obs.w_combined) {
    w = *obs.w_combined;
  } else if (cfg_.absent_policy == AbsentPolicy::TreatAsClosed) {
    w = 100.0;
  } else {
    w = s.last_w.value_or(0.0);
  }
  s.last_w = w;
  s.buffer.push(w);
  ++s.frames_seen;

  if (s.counter_k == 0 || !cfg_.freeze_pth_during_candidate) {
    s.a10 = weighted_moving_average(s.buffer, cfg_);
    s.pth = percentage_threshold(s.a10, cfg_);
  }
  if (s.frames_seen < cfg_.window_frames) return std::nullopt;

  const auto event = [&](AlarmKind kind) {
    return AlarmEvent{kind, obs.frame_index, static_cast<double>(obs.frame_index) / cfg_.fps, s.a10, s.pth, w};
  };

  if (w >= s.pth) {
    ++s.counter_k;
    if (s.counter_k >= cfg_.fth_frames && !s.alarm_active) {
      s.alarm_active = true;
      return event(AlarmKind::Raised);
    }
    return std::nullopt;
  }

  s.counter_k = 0;
  if (s.alarm_active) {
    s.alarm_active = false;
    return event(AlarmKind::Cleared);
  }
  return std::nullopt;
}

std::vector<AlarmEvent> run_detector(std::span<const FrameObservation> stream, const DrowsinessConfig& cfg) {
  DrowsinessDetector detector(cfg);
  std::vector<AlarmEvent> events;
  for (const FrameObservation& obs : stream) {
    if (auto e = detector.step(obs)) events.push_back(*e);
  }
  return events;
}

CoefficientRow score_configuration(std::span<const LabeledSequence> sequences, const DrowsinessConfig& cfg) {
  CoefficientRow row;
  row.coeff_c = cfg.coeff_c;
  double latency_sum = 0.0;
  int intervals = 0;
  const double miss_latency = cfg.window_frames / cfg.fps;

  for (const LabeledSequence& seq : sequences) {
    const std::vector<AlarmEvent> events = run_detector(seq.observations, cfg);
    std::vector<std::optional<long long>> hit(seq.closures.size());
    for (const AlarmEvent& e : events) {
      if (e.kind != AlarmKind::Raised) continue;
      bool matched = false;
      for (std::size_t i = 0; i < seq.closures.size(); ++i) {
        const ClosureInterval& c = seq.closures[i];
        if (e.frame_index >= c.start && e.frame_index <= c.end && !hit[i]) {
          hit[i] = e.frame_index;
          matched = true;
          break;
        }
      }
      if (!matched) ++row.false_positives;
    }
    for (std::size_t i = 0; i < seq.closures.size(); ++i) {
      ++intervals;
      if (hit[i]) {
        ++row.true_positives;
        latency_sum += static_cast<double>(*hit[i] - seq.closures[i].start) / cfg.fps;
      } else {
        ++row.false_negatives;
        latency_sum += miss_latency;
      }
    }
  }

  const int denom = 2 * row.true_positives + row.false_positives + row.false_negatives;
  row.f1 = denom > 0 ? 2.0 * row.true_positives / denom : 0.0;
  row.mean_latency_s = intervals > 0 ? latency_sum / intervals : 0.0;
  row.score = row.f1 - kLatencyPenalty * row.mean_latency_s;
  return row;
}

CalibrationReport calibrate_coefficient(std::span<const LabeledSequence> sequences, const DrowsinessConfig& base) {
  validate(base);
  const bool usable = std::any_of(sequences.begin(), sequences.end(), [&](const LabeledSequence& s) {
    return std::any_of(s.closures.begin(), s.closures.end(),
                       [&](const ClosureInterval& c) { return c.end - c.start + 1 >= base.fth_frames; });
  });
  if (!usable) fail(ErrorCode::InvalidInput, "calibration needs a labeled closure of at least fth_frames frames");

  CalibrationReport report;
  bool first = true;
  double best_score = 0.0;
  for (int i = 0; i <= kCoefficientSteps; ++i) {
    DrowsinessConfig cfg = base;
    cfg.coeff_c = static_cast<double>(i) / kCoefficientSteps;
    CoefficientRow row = score_configuration(sequences, cfg);
    if (first || row.score > best_score) {
      best_score = row.score;
      report.best_c = cfg.coeff_c;
      first = false;
    }
    report.rows.push_back(row);
  }
  return report;
}

}  // namespace drowsegate
