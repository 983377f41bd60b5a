#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "drowsegate/drowsiness.hpp"
#include "drowsegate/eye_state.hpp"
#include "drowsegate/face_haar.hpp"
#include "drowsegate/raster_io.hpp"

namespace drowsegate {

struct PipelineConfig {
  std::string cascade_path;
  double fps = 30.0;
  int detect_every = 1;
  DetectOptions detect;
  EyeCenterOptions eye;
  threshold::AdaptiveGaussian agbt;
  DrowsinessConfig drowsiness;
  std::optional<std::filesystem::path> annotate_dir;
  double budget_ms = 33.0;
  std::optional<double> tau;
  double calibrate_split = 0.5;
};

/// Throws InvalidInput for inconsistent settings.
void validate(const PipelineConfig& cfg);

/// key=value lines describing the effective configuration.
std::vector<std::string> describe(const PipelineConfig& cfg);

/// Ordered frames from a directory of PGM or PPM files (lexicographic) or a
/// Y4M file. All frames must share one size.
class FrameSource {
 public:
  enum class Kind { PgmDir, PpmDir, Y4mFile };

  explicit FrameSource(const std::filesystem::path& path);

  Kind kind() const { return kind_; }
  /// Next frame as grayscale, nullopt at end. Throws FrameDecodeError.
  std::optional<GrayImage> next();
  long long frames_read() const { return index_; }
  int width() const { return width_; }
  int height() const { return height_; }

 private:
  Kind kind_;
  std::vector<std::filesystem::path> files_;
  std::unique_ptr<Y4mReader> y4m_;
  long long index_ = 0;
  int width_ = 0;
  int height_ = 0;
};

struct StageTimes {
  double decode_ms = 0.0;
  double face_ms = 0.0;
  double eye_ms = 0.0;
  double observe_ms = 0.0;
  double step_ms = 0.0;

  double total() const { return decode_ms + face_ms + eye_ms + observe_ms + step_ms; }
};

struct FrameResult {
  long long frame_index = 0;
  std::optional<Rect> face;      // in frame coordinates; nullopt = frame skipped
  bool face_reused = false;
  GrayImage chip;                // 100x100 face chip when a face is present
  EyeCenters centers;            // chip coordinates
  std::optional<FrameObservation> observation;
  std::optional<AlarmEvent> event;
  StageTimes times;
};

/// Per-frame composition: face detection (with reuse of the last face for up
/// to `fps` missed frames), eye tracking on a 100x100 chip, observation and a
/// detector step.
class FramePipeline {
 public:
  FramePipeline(const PipelineConfig& cfg, CascadeModel cascade);

  FrameResult process(const GrayImage& frame, long long frame_index);

  const DrowsinessDetector& detector() const { return detector_; }
  const CascadeModel& cascade() const { return scanner_.model(); }

 private:
  PipelineConfig cfg_;
  CascadeScanner scanner_;
  DrowsinessDetector detector_;
  std::optional<Rect> last_face_;
  long long miss_streak_ = 0;
};

/// Frame-space copy of `frame` with the face box, eye crosshairs and, while an
/// alarm is active, the top row forced white.
GrayImage annotate(const GrayImage& frame, const FrameResult& result, bool alarm_active);

/// Maps a face-chip point back into frame coordinates.
Point chip_to_frame(Point p, const Rect& face);

struct LatencyStats {
  double min_ms = 0.0;
  double mean_ms = 0.0;
  double p95_ms = 0.0;
  double max_ms = 0.0;
};

LatencyStats summarize(std::vector<double> samples_ms);

struct RunReport {
  long long frames = 0;
  int frame_width = 0;
  int frame_height = 0;
  long long frames_with_face = 0;
  long long warnings = 0;
  std::vector<AlarmEvent> events;
  std::vector<std::pair<std::string, LatencyStats>> stages;
  double fps_achieved = 0.0;
  double mean_frame_ms = 0.0;
  std::vector<FrameObservation> observations;
};

/// Streams one log line per event or warning to `log`, flushed as produced.
RunReport cmd_detect(const PipelineConfig& cfg, FrameSource& source, std::ostream& log);

struct EvalReport {
  double tau = 0.0;
  bool tau_calibrated = false;
  long long calibration_images = 0;
  long long evaluated = 0;
  long long correct = 0;
  long long unclassifiable = 0;
  // confusion[truth][predicted], 0 = open, 1 = closed; unclassifiable rows excluded
  long long confusion[2][2] = {{0, 0}, {0, 0}};
  long long class_totals[2] = {0, 0};

  double accuracy() const { return evaluated ? static_cast<double>(correct) / evaluated : 0.0; }
  double recall(int cls) const {
    return class_totals[cls] ? static_cast<double>(confusion[cls][cls]) / class_totals[cls] : 0.0;
  }
};

/// Dataset root with open/ and closed/ subdirectories of PGM/PPM chips.
/// Throws InvalidDataset when either is missing.
EvalReport cmd_eval_eyes(const std::filesystem::path& root, const PipelineConfig& cfg);

struct GapRow {
  std::string method;
  double open_mean = 0.0;
  double closed_mean = 0.0;
  double gap = 0.0;
};

/// Every method at the given parameters: six rows sorted by gap descending.
std::vector<ThresholdMethod> default_methods();
std::vector<GapRow> compare_thresholds(const std::vector<GrayImage>& open_windows,
                                       const std::vector<GrayImage>& closed_windows,
                                       const std::vector<ThresholdMethod>& methods);
/// Loads eye windows (25x21 inputs as-is, anything else treated as a face
/// chip whose tracked eye windows are used).
std::vector<GrayImage> load_eye_windows(const std::filesystem::path& dir, const EyeCenterOptions& eye);
std::vector<GapRow> cmd_compare_thresholds(const std::filesystem::path& open_dir,
                                           const std::filesystem::path& closed_dir,
                                           const std::vector<ThresholdMethod>& methods, const EyeCenterOptions& eye);

/// "start end" inclusive pairs, one per line; '#' comments and blank lines
/// allowed. Throws ParseError naming the offending line.
std::vector<ClosureInterval> parse_closures(std::istream& in);
std::vector<ClosureInterval> read_closures(const std::filesystem::path& path);

/// Observation trace: "frame_index w" per line, with w a percentage or "none".
std::vector<FrameObservation> read_observation_trace(const std::filesystem::path& path, double fps);
void write_observation_trace(std::ostream& out, const std::vector<FrameObservation>& obs);

/// Sequences in `dir`: *.obs traces, *.y4m files and frame subdirectories,
/// each paired with a <stem>.closures sidecar.
std::vector<LabeledSequence> load_labeled_sequences(const std::filesystem::path& dir, const PipelineConfig& cfg);
CalibrationReport cmd_calibrate(const std::filesystem::path& dir, const PipelineConfig& cfg);

inline constexpr long long kBenchMinFrames = 300;
inline constexpr int kBenchMinWidth = 640;
inline constexpr int kBenchMinHeight = 480;

struct BenchReport {
  RunReport run;
  bool within_budget = false;
  std::vector<double> closure_latencies_s;  // per scripted closure; negative = missed
};

/// Throws InvalidInput unless the source yields at least 300 frames of at
/// least 640x480. Closure latencies are measured from each interval's start
/// to the first Raised event inside it.
BenchReport cmd_bench(const PipelineConfig& cfg, FrameSource& source, const std::vector<ClosureInterval>& closures);

void print_run_report(std::ostream& out, const RunReport& report);
void print_eval_report(std::ostream& out, const EvalReport& report);
void print_gap_table(std::ostream& out, const std::vector<GapRow>& rows);
void print_calibration(std::ostream& out, const CalibrationReport& report);

}  // namespace drowsegate
