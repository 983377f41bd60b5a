#include "drowsegate/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace drowsegate {
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

std::vector<fs::path> files_with_extension(const fs::path& dir, const std::string& ext) {
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ext) out.push_back(entry.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<fs::path> raster_files(const fs::path& dir) {
  std::vector<fs::path> out = files_with_extension(dir, ".pgm");
  const std::vector<fs::path> ppm = files_with_extension(dir, ".ppm");
  out.insert(out.end(), ppm.begin(), ppm.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::string fixed(double v, int digits = 6) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

DrowsinessConfig synced(const PipelineConfig& cfg) {
  DrowsinessConfig d = cfg.drowsiness;
  d.fps = cfg.fps;
  return d;
}

}  // namespace

void validate(const PipelineConfig& cfg) {
  if (!(cfg.fps > 0.0)) fail(ErrorCode::InvalidInput, "fps must be positive");
  if (cfg.detect_every < 1) fail(ErrorCode::InvalidInput, "detect-every must be >= 1");
  if (!(cfg.calibrate_split > 0.0 && cfg.calibrate_split < 1.0)) {
    fail(ErrorCode::InvalidInput, "calibrate-split must lie in (0, 1)");
  }
  if (cfg.tau && !(*cfg.tau >= 0.0 && *cfg.tau <= 100.0)) fail(ErrorCode::InvalidInput, "tau must lie in [0, 100]");
  validate(ThresholdMethod{cfg.agbt});
  validate(synced(cfg));
}

std::vector<std::string> describe(const PipelineConfig& cfg) {
  const DrowsinessConfig& d = cfg.drowsiness;
  std::vector<std::string> out = {
      "cascade=" + cfg.cascade_path,
      "fps=" + fixed(cfg.fps, 3),
      "detect-every=" + std::to_string(cfg.detect_every),
      "scale-factor=" + fixed(cfg.detect.scale_factor, 3),
      "min-neighbors=" + std::to_string(cfg.detect.min_neighbors),
      "min-face=" + std::to_string(cfg.detect.min_size),
      "group-eps=" + fixed(cfg.detect.group_eps, 3),
      std::string("weight-polarity=") +
          (cfg.eye.polarity == WeightPolarity::Inverted ? "inverted"
           : cfg.eye.polarity == WeightPolarity::Literal ? "literal"
                                                         : "none"),
      std::string("clamp-dot=") + (cfg.eye.clamp_negative_dot ? "on" : "off"),
      "max-region-width=" + std::to_string(cfg.eye.max_region_width),
      "gauss-block=" + std::to_string(cfg.agbt.block),
      "gauss-sigma=" + fixed(cfg.agbt.sigma, 4),
      "gauss-c=" + fixed(cfg.agbt.c, 3),
      "window-frames=" + std::to_string(d.window_frames),
      "fth=" + std::to_string(d.fth_frames),
      "coeff-c=" + fixed(d.coeff_c, 3),
      "gap-d=" + fixed(d.gap_d, 3),
      std::string("avg-mode=") + (d.average_mode == AverageMode::Normalized ? "normalized" : "literal"),
      std::string("freeze-pth=") + (d.freeze_pth_during_candidate ? "on" : "off"),
      std::string("absent-policy=") + (d.absent_policy == AbsentPolicy::TreatAsClosed ? "closed" : "hold"),
  };
  return out;
}

FrameSource::FrameSource(const fs::path& path) {
  if (fs::is_directory(path)) {
    files_ = files_with_extension(path, ".pgm");
    kind_ = Kind::PgmDir;
    if (files_.empty()) {
      files_ = files_with_extension(path, ".ppm");
      kind_ = Kind::PpmDir;
    }
    if (files_.empty()) fail(ErrorCode::InvalidInput, "no frames in " + path.string());
  } else if (fs::is_regular_file(path) && path.extension() == ".y4m") {
    kind_ = Kind::Y4mFile;
    y4m_ = std::make_unique<Y4mReader>(path);
  } else {
    fail(ErrorCode::InvalidInput, "frame source must be a PGM/PPM directory or a .y4m file: " + path.string());
  }
}

std::optional<GrayImage> FrameSource::next() {
  std::optional<GrayImage> frame;
  if (kind_ == Kind::Y4mFile) {
    frame = y4m_->next();
  } else if (static_cast<std::size_t>(index_) < files_.size()) {
    const fs::path& p = files_[static_cast<std::size_t>(index_)];
    frame = kind_ == Kind::PgmDir ? read_pgm(p) : to_grayscale(read_ppm(p));
  }
  if (!frame) return frame;
  if (index_ == 0) {
    width_ = drowsegate::width(*frame);
    height_ = drowsegate::height(*frame);
  } else if (drowsegate::width(*frame) != width_ || drowsegate::height(*frame) != height_) {
    fail(ErrorCode::FrameDecodeError, "frame " + std::to_string(index_) + " changes the stream dimensions");
  }
  ++index_;
  return frame;
}

FramePipeline::FramePipeline(const PipelineConfig& cfg, CascadeModel cascade)
    : cfg_(cfg), scanner_(std::move(cascade)), detector_(synced(cfg)) {
  validate(cfg_);
}

FrameResult FramePipeline::process(const GrayImage& frame, long long frame_index) {
  FrameResult r;
  r.frame_index = frame_index;

  auto t = Clock::now();
  const bool run_detector = !last_face_ || frame_index % cfg_.detect_every == 0;
  std::optional<Rect> face;
  if (run_detector) face = primary_face(scanner_.detect(frame, cfg_.detect));
  if (face) {
    last_face_ = face;
    miss_streak_ = 0;
  } else if (last_face_) {
    if (run_detector) ++miss_streak_;
    if (miss_streak_ <= static_cast<long long>(cfg_.fps)) {
      face = last_face_;
      r.face_reused = true;
    }
  }
  r.times.face_ms = elapsed_ms(t);
  if (!face || face->w < 40 || face->h < 40) return r;
  r.face = face;

  t = Clock::now();
  r.chip = resize_bilinear(crop(frame, *face), kFaceChipSize, kFaceChipSize);
  r.centers = track_eyes(r.chip, eye_regions_from_face({0, 0, kFaceChipSize, kFaceChipSize}), cfg_.eye);
  r.times.eye_ms = elapsed_ms(t);

  t = Clock::now();
  r.observation = observe_frame(r.chip, r.centers, cfg_.agbt, frame_index, cfg_.fps);
  r.times.observe_ms = elapsed_ms(t);

  t = Clock::now();
  r.event = detector_.step(*r.observation);
  r.times.step_ms = elapsed_ms(t);
  return r;
}

Point chip_to_frame(Point p, const Rect& face) {
  const auto map = [](int v, int len) {
    return static_cast<int>(std::lround(v * static_cast<double>(len - 1) / (kFaceChipSize - 1)));
  };
  return {face.x + map(p.x, face.w), face.y + map(p.y, face.h)};
}

GrayImage annotate(const GrayImage& frame, const FrameResult& result, bool alarm_active) {
  GrayImage out = frame;
  if (result.face) {
    const Rect& f = *result.face;
    out.block(f.y, f.x, 1, f.w).setConstant(255);
    out.block(f.bottom() - 1, f.x, 1, f.w).setConstant(255);
    out.block(f.y, f.x, f.h, 1).setConstant(255);
    out.block(f.y, f.right() - 1, f.h, 1).setConstant(255);
    for (const auto& c : {result.centers.left, result.centers.right}) {
      if (c) draw_crosshair(out, chip_to_frame(*c, f));
    }
  }
  if (alarm_active) out.row(0).setConstant(255);
  return out;
}

LatencyStats summarize(std::vector<double> samples_ms) {
  LatencyStats s;
  if (samples_ms.empty()) return s;
  std::sort(samples_ms.begin(), samples_ms.end());
  s.min_ms = samples_ms.front();
  s.max_ms = samples_ms.back();
  double sum = 0.0;
  for (double v : samples_ms) sum += v;
  s.mean_ms = sum / static_cast<double>(samples_ms.size());
  // nearest-rank percentile
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(samples_ms.size())));
  s.p95_ms = samples_ms[std::max<std::size_t>(rank, 1) - 1];
  return s;
}

namespace {

// Shared driver for detect and bench.
RunReport run_stream(const PipelineConfig& cfg, FrameSource& source, std::ostream* log) {
  validate(cfg);
  FramePipeline pipeline(cfg, load_cascade(cfg.cascade_path));
  if (cfg.annotate_dir) fs::create_directories(*cfg.annotate_dir);

  RunReport report;
  std::vector<double> decode, face, eye, observe, step, total;
  const auto wall = Clock::now();
  for (long long index = 0;; ++index) {
    auto t = Clock::now();
    std::optional<GrayImage> frame = source.next();
    const double decode_ms = elapsed_ms(t);
    if (!frame) break;

    FrameResult r = pipeline.process(*frame, index);
    r.times.decode_ms = decode_ms;
    ++report.frames;
    if (r.face) {
      ++report.frames_with_face;
      report.observations.push_back(*r.observation);
    } else {
      ++report.warnings;
      if (log) *log << "warning=no_face frame_index=" << index << std::endl;
    }
    if (r.event) {
      report.events.push_back(*r.event);
      if (log) *log << format_event(*r.event) << std::endl;
    }
    if (cfg.annotate_dir) {
      char name[32];
      std::snprintf(name, sizeof(name), "frame_%06lld.pgm", index);
      write_pgm(*cfg.annotate_dir / name, annotate(*frame, r, pipeline.detector().state().alarm_active));
    }
    decode.push_back(r.times.decode_ms);
    face.push_back(r.times.face_ms);
    eye.push_back(r.times.eye_ms);
    observe.push_back(r.times.observe_ms);
    step.push_back(r.times.step_ms);
    total.push_back(r.times.total());
  }
  const double wall_s = elapsed_ms(wall) / 1000.0;
  report.frame_width = source.width();
  report.frame_height = source.height();

  report.stages = {{"decode", summarize(decode)},
                   {"face", summarize(face)},
                   {"eye_center", summarize(eye)},
                   {"threshold_observe", summarize(observe)},
                   {"step", summarize(step)}};
  report.mean_frame_ms = summarize(total).mean_ms;
  report.fps_achieved = wall_s > 0.0 ? static_cast<double>(report.frames) / wall_s : 0.0;
  return report;
}

}  // namespace

RunReport cmd_detect(const PipelineConfig& cfg, FrameSource& source, std::ostream& log) {
  RunReport report = run_stream(cfg, source, &log);
  if (report.frames == 0) fail(ErrorCode::InvalidInput, "no frames");
  return report;
}

EvalReport cmd_eval_eyes(const fs::path& root, const PipelineConfig& cfg) {
  validate(cfg);
  const fs::path open_dir = root / "open";
  const fs::path closed_dir = root / "closed";
  if (!fs::is_directory(open_dir) || !fs::is_directory(closed_dir)) {
    fail(ErrorCode::InvalidDataset, "dataset root must contain open/ and closed/ subdirectories");
  }

  StaticOptions opts;
  opts.eye = cfg.eye;
  opts.method = cfg.agbt;

  // Spread the calibration split evenly over each class's sorted file list.
  std::vector<LabeledScore> calibration;
  std::vector<LabeledScore> evaluation;
  for (const auto& [dir, label] : {std::pair{open_dir, EyeState::Open}, std::pair{closed_dir, EyeState::Closed}}) {
    const std::vector<fs::path> files = raster_files(dir);
    for (std::size_t i = 0; i < files.size(); ++i) {
      const LabeledScore score = score_chip({read_gray(files[i]), label}, opts);
      const bool to_calibration =
          !cfg.tau && std::floor((i + 1) * cfg.calibrate_split) > std::floor(i * cfg.calibrate_split);
      (to_calibration ? calibration : evaluation).push_back(score);
    }
  }

  EvalReport report;
  if (cfg.tau) {
    report.tau = *cfg.tau;
  } else {
    report.tau = calibrate_static_threshold(calibration).tau;
    report.tau_calibrated = true;
    report.calibration_images = static_cast<long long>(calibration.size());
  }
  for (const LabeledScore& s : evaluation) {
    ++report.evaluated;
    if (s.unclassifiable) {
      ++report.unclassifiable;
      continue;
    }
    FrameObservation obs;
    obs.w_combined = s.w_combined;
    const int truth = s.label == EyeState::Closed ? 1 : 0;
    const int predicted = decide_static(obs, report.tau) == EyeState::Closed ? 1 : 0;
    ++report.confusion[truth][predicted];
    ++report.class_totals[truth];
    if (truth == predicted) ++report.correct;
  }
  return report;
}

std::vector<ThresholdMethod> default_methods() {
  return {threshold::SimpleBinary{}, threshold::Otsu{},         threshold::Niblack{},
          threshold::Bernsen{},      threshold::AdaptiveMean{}, threshold::AdaptiveGaussian{}};
}

std::vector<GapRow> compare_thresholds(const std::vector<GrayImage>& open_windows,
                                       const std::vector<GrayImage>& closed_windows,
                                       const std::vector<ThresholdMethod>& methods) {
  if (open_windows.empty() || closed_windows.empty()) fail(ErrorCode::InvalidInput, "no eye windows to compare");
  const auto mean_white = [](const std::vector<GrayImage>& set, const ThresholdMethod& m) {
    double acc = 0.0;
    for (const GrayImage& img : set) acc += white_percentage(apply_threshold(img, m));
    return acc / static_cast<double>(set.size());
  };
  std::vector<GapRow> rows;
  for (const ThresholdMethod& m : methods) {
    GapRow row{method_name(m), mean_white(open_windows, m), mean_white(closed_windows, m), 0.0};
    row.gap = row.closed_mean - row.open_mean;
    rows.push_back(row);
  }
  std::stable_sort(rows.begin(), rows.end(), [](const GapRow& a, const GapRow& b) { return a.gap > b.gap; });
  return rows;
}

std::vector<GrayImage> load_eye_windows(const fs::path& dir, const EyeCenterOptions& eye) {
  if (!fs::is_directory(dir)) fail(ErrorCode::InvalidInput, "not a directory: " + dir.string());
  std::vector<GrayImage> windows;
  for (const fs::path& p : raster_files(dir)) {
    const GrayImage img = read_gray(p);
    if (width(img) == kEyeWindowWidth && height(img) == kEyeWindowHeight) {
      windows.push_back(img);
      continue;
    }
    const GrayImage face = resize_bilinear(img, kFaceChipSize, kFaceChipSize);
    const EyeCenters c = track_eyes(face, eye_regions_from_face({0, 0, kFaceChipSize, kFaceChipSize}), eye);
    for (const auto& center : {c.left, c.right}) {
      if (center) windows.push_back(extract_eye_window(face, *center).pixels);
    }
  }
  return windows;
}

std::vector<GapRow> cmd_compare_thresholds(const fs::path& open_dir, const fs::path& closed_dir,
                                           const std::vector<ThresholdMethod>& methods, const EyeCenterOptions& eye) {
  return compare_thresholds(load_eye_windows(open_dir, eye), load_eye_windows(closed_dir, eye), methods);
}

std::vector<ClosureInterval> parse_closures(std::istream& in) {
  std::vector<ClosureInterval> out;
  std::string line;
  for (int line_no = 1; std::getline(in, line); ++line_no) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    ClosureInterval c;
    if (!(fields >> c.start)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      fail(ErrorCode::ParseError, "closures line " + std::to_string(line_no) + ": expected 'start end'");
    }
    std::string trailing;
    if (!(fields >> c.end) || (fields >> trailing) || c.start < 0 || c.end < c.start) {
      fail(ErrorCode::ParseError, "closures line " + std::to_string(line_no) + ": expected 'start end' with start <= end");
    }
    out.push_back(c);
  }
  return out;
}

std::vector<ClosureInterval> read_closures(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  return parse_closures(in);
}

std::vector<FrameObservation> read_observation_trace(const fs::path& path, double fps) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  std::vector<FrameObservation> out;
  std::string line;
  for (int line_no = 1; std::getline(in, line); ++line_no) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    FrameObservation obs;
    std::string w;
    if (!(fields >> obs.frame_index)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      fail(ErrorCode::ParseError, path.string() + " line " + std::to_string(line_no) + ": expected 'frame w'");
    }
    if (!(fields >> w)) fail(ErrorCode::ParseError, path.string() + " line " + std::to_string(line_no) + ": missing w");
    if (w != "none") {
      try {
        obs.w_combined = std::stod(w);
      } catch (const std::exception&) {
        fail(ErrorCode::ParseError, path.string() + " line " + std::to_string(line_no) + ": bad w '" + w + "'");
      }
    }
    obs.timestamp = static_cast<double>(obs.frame_index) / fps;
    out.push_back(obs);
  }
  return out;
}

void write_observation_trace(std::ostream& out, const std::vector<FrameObservation>& obs) {
  for (const FrameObservation& o : obs) {
    out << o.frame_index << ' ' << (o.w_combined ? fixed(*o.w_combined) : std::string("none")) << '\n';
  }
}

std::vector<LabeledSequence> load_labeled_sequences(const fs::path& dir, const PipelineConfig& cfg) {
  if (!fs::is_directory(dir)) fail(ErrorCode::InvalidInput, "not a directory: " + dir.string());
  std::vector<fs::path> entries;
  for (const auto& e : fs::directory_iterator(dir)) entries.push_back(e.path());
  std::sort(entries.begin(), entries.end());

  std::vector<LabeledSequence> out;
  for (const fs::path& p : entries) {
    const bool trace = fs::is_regular_file(p) && p.extension() == ".obs";
    const bool video = (fs::is_regular_file(p) && p.extension() == ".y4m") || fs::is_directory(p);
    if (!trace && !video) continue;
    const fs::path sidecar = p.parent_path() / (p.stem().string() + ".closures");
    if (!fs::exists(sidecar)) fail(ErrorCode::InvalidInput, "missing closure sidecar " + sidecar.string());

    LabeledSequence seq;
    seq.closures = read_closures(sidecar);
    if (trace) {
      seq.observations = read_observation_trace(p, cfg.fps);
    } else {
      FrameSource source(p);
      seq.observations = run_stream(cfg, source, nullptr).observations;
    }
    out.push_back(std::move(seq));
  }
  if (out.empty()) fail(ErrorCode::InvalidInput, "no labeled sequences in " + dir.string());
  return out;
}

CalibrationReport cmd_calibrate(const fs::path& dir, const PipelineConfig& cfg) {
  validate(cfg);
  const std::vector<LabeledSequence> sequences = load_labeled_sequences(dir, cfg);
  return calibrate_coefficient(sequences, synced(cfg));
}

BenchReport cmd_bench(const PipelineConfig& cfg, FrameSource& source, const std::vector<ClosureInterval>& closures) {
  BenchReport bench;
  bench.run = run_stream(cfg, source, nullptr);
  if (bench.run.frames < kBenchMinFrames || bench.run.frame_width < kBenchMinWidth ||
      bench.run.frame_height < kBenchMinHeight) {
    fail(ErrorCode::InvalidInput, "bench needs at least 300 frames of at least 640x480");
  }
  bench.within_budget = bench.run.mean_frame_ms <= cfg.budget_ms;
  for (const ClosureInterval& c : closures) {
    double latency = -1.0;
    for (const AlarmEvent& e : bench.run.events) {
      if (e.kind == AlarmKind::Raised && e.frame_index >= c.start && e.frame_index <= c.end) {
        latency = static_cast<double>(e.frame_index - c.start) / cfg.fps;
        break;
      }
    }
    bench.closure_latencies_s.push_back(latency);
  }
  return bench;
}

void print_run_report(std::ostream& out, const RunReport& report) {
  out << "# frames=" << report.frames << " frames_with_face=" << report.frames_with_face
      << " warnings=" << report.warnings << " events=" << report.events.size() << '\n';
  out << "# stage min_ms mean_ms p95_ms max_ms\n";
  for (const auto& [name, s] : report.stages) {
    out << "# " << std::left << std::setw(18) << name << ' ' << fixed(s.min_ms, 3) << ' ' << fixed(s.mean_ms, 3) << ' '
        << fixed(s.p95_ms, 3) << ' ' << fixed(s.max_ms, 3) << '\n';
  }
  out << "# mean_frame_ms=" << fixed(report.mean_frame_ms, 3) << " fps=" << fixed(report.fps_achieved, 2) << '\n';
}

void print_eval_report(std::ostream& out, const EvalReport& r) {
  out << "tau=" << fixed(r.tau, 1) << (r.tau_calibrated ? " (calibrated on " + std::to_string(r.calibration_images) + " images)" : "")
      << '\n'
      << "evaluated=" << r.evaluated << " correct=" << r.correct << " unclassifiable=" << r.unclassifiable << '\n'
      << "accuracy=" << fixed(100.0 * r.accuracy(), 2) << "%\n"
      << "recall_open=" << fixed(100.0 * r.recall(0), 2) << "% recall_closed=" << fixed(100.0 * r.recall(1), 2)
      << "%\n"
      << "confusion open->open=" << r.confusion[0][0] << " open->closed=" << r.confusion[0][1]
      << " closed->open=" << r.confusion[1][0] << " closed->closed=" << r.confusion[1][1] << '\n';
}

void print_gap_table(std::ostream& out, const std::vector<GapRow>& rows) {
  out << std::left << std::setw(18) << "method" << std::right << std::setw(10) << "open_W" << std::setw(10)
      << "closed_W" << std::setw(10) << "gap" << '\n';
  for (const GapRow& r : rows) {
    out << std::left << std::setw(18) << r.method << std::right << std::setw(10) << fixed(r.open_mean, 3)
        << std::setw(10) << fixed(r.closed_mean, 3) << std::setw(10) << fixed(r.gap, 3) << '\n';
  }
  for (const GapRow& r : rows) {
    out << "row method=" << r.method << " open=" << fixed(r.open_mean) << " closed=" << fixed(r.closed_mean)
        << " gap=" << fixed(r.gap) << '\n';
  }
}

void print_calibration(std::ostream& out, const CalibrationReport& report) {
  out << "coeff_c tp fp fn f1 mean_latency_s score\n";
  for (const CoefficientRow& r : report.rows) {
    out << fixed(r.coeff_c, 2) << ' ' << r.true_positives << ' ' << r.false_positives << ' ' << r.false_negatives << ' '
        << fixed(r.f1, 6) << ' ' << fixed(r.mean_latency_s, 6) << ' ' << fixed(r.score, 6) << '\n';
  }
  out << "best_c=" << fixed(report.best_c, 2) << '\n';
}

}  // namespace drowsegate
