// drowsegate command-line front end.
//
// Every option is registered on the top-level app so that one flat key=value
// config file can feed any subcommand; subcommands only own their positional
// paths.

#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "drowsegate/pipeline.hpp"

namespace {

using namespace drowsegate;
namespace fs = std::filesystem;

constexpr int kExitOk = 0;
constexpr int kExitInvalid = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitBudget = 4;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::FrameDecodeError:
    case ErrorCode::OrderingViolation:
    case ErrorCode::NoGradients:
    case ErrorCode::NoInteriorMaximum:
    case ErrorCode::Unclassifiable:
    case ErrorCode::FaceTooSmall:
      return kExitRuntime;
    default:
      return kExitInvalid;
  }
}

// Parameters of the non-AGBT methods, used only by compare-thresholds.
struct ThresholdParams {
  threshold::SimpleBinary simple;
  threshold::Niblack niblack;
  threshold::Bernsen bernsen;
  threshold::AdaptiveMean mean;

  std::vector<ThresholdMethod> methods(const threshold::AdaptiveGaussian& agbt) const {
    return {simple, threshold::Otsu{}, niblack, bernsen, mean, agbt};
  }
};

struct Args {
  PipelineConfig cfg;
  ThresholdParams thresholds;
  double tau = 0.0;
  std::string annotate_dir;
  std::string log_path;
  std::string obs_out;
  std::string closures_path;
  std::string source;
  std::string dataset;
  std::string open_dir;
  std::string closed_dir;
};

void print_header(std::ostream& out, const PipelineConfig& cfg) {
  for (const std::string& line : describe(cfg)) out << "# " << line << '\n';
}

void register_options(CLI::App& app, Args& a) {
  PipelineConfig& c = a.cfg;
  DrowsinessConfig& d = c.drowsiness;
  const std::map<std::string, bool> on_off{{"on", true}, {"off", false}};

  app.set_config("--config", "", "Flat key=value file; keys are flag names without dashes");
  app.allow_config_extras(CLI::config_extras_mode::error);

  app.add_option("--cascade", c.cascade_path, "Pretrained frontal-face cascade XML")->check(CLI::ExistingFile);
  app.add_option("--fps", c.fps, "Frame rate of the source")->check(CLI::PositiveNumber)->capture_default_str();
  app.add_option("--detect-every", c.detect_every, "Run face detection every N frames")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--annotate-dir", a.annotate_dir, "Write annotated PGM frames here");
  app.add_option("--log", a.log_path, "Write the event log to this file instead of stdout");
  app.add_option("--obs-out", a.obs_out, "Write the per-frame observation trace here (detect)");
  app.add_option("--budget-ms", c.budget_ms, "Mean frame time budget for bench")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  app.add_option("--closures", a.closures_path, "Closure sidecar for bench latency probing")->check(CLI::ExistingFile);
  app.add_option("--tau", a.tau, "Static eye-closure threshold (percent); skips calibration")->check(CLI::Range(0.0, 100.0));
  app.add_option("--calibrate-split", c.calibrate_split, "Fraction of each class used to fit tau")
      ->capture_default_str();

  // face detection
  app.add_option("--scale-factor", c.detect.scale_factor)->capture_default_str();
  app.add_option("--min-neighbors", c.detect.min_neighbors)->capture_default_str();
  app.add_option("--min-face", c.detect.min_size, "Smallest face side in pixels")->capture_default_str();
  app.add_option("--max-face", c.detect.max_size, "Largest face side in pixels (0 = unbounded)")->capture_default_str();

  // eye centers
  app.add_option("--weight-polarity", c.eye.polarity, "Center weighting: inverted, literal or none")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, WeightPolarity>{
              {"inverted", WeightPolarity::Inverted}, {"literal", WeightPolarity::Literal}, {"none", WeightPolarity::None}},
          CLI::ignore_case));
  app.add_option("--gradient-factor", c.eye.gradient_threshold_factor)->capture_default_str();
  app.add_option("--clamp-dot", c.eye.clamp_negative_dot)->transform(CLI::CheckedTransformer(on_off));

  // thresholding
  app.add_option("--gauss-block", c.agbt.block)->capture_default_str();
  app.add_option("--gauss-sigma", c.agbt.sigma)->capture_default_str();
  app.add_option("--gauss-c", c.agbt.c)->capture_default_str();
  app.add_option("--binary-level", a.thresholds.simple.level)->capture_default_str();
  app.add_option("--niblack-window", a.thresholds.niblack.window)->capture_default_str();
  app.add_option("--niblack-k", a.thresholds.niblack.k)->capture_default_str();
  app.add_option("--bernsen-window", a.thresholds.bernsen.window)->capture_default_str();
  app.add_option("--bernsen-contrast", a.thresholds.bernsen.contrast_min)->capture_default_str();
  app.add_option("--bernsen-fallback", a.thresholds.bernsen.fallback_level)->capture_default_str();
  app.add_option("--mean-block", a.thresholds.mean.block)->capture_default_str();
  app.add_option("--mean-c", a.thresholds.mean.c)->capture_default_str();

  // temporal detector
  app.add_option("--fth", d.fth_frames, "Consecutive closure frames before an alarm")->capture_default_str();
  app.add_option("--coeff-c", d.coeff_c, "Gap coefficient in [0, 1]")->capture_default_str();
  app.add_option("--gap-d", d.gap_d, "Open/closed white-percentage gap")->capture_default_str();
  app.add_option("--window-frames", d.window_frames)->capture_default_str();
  app.add_option("--avg-mode", d.average_mode, "Weighted average: literal or normalized")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, AverageMode>{{"literal", AverageMode::Literal}, {"normalized", AverageMode::Normalized}},
          CLI::ignore_case));
  app.add_option("--freeze-pth", d.freeze_pth_during_candidate, "Hold PTh while counting a closure: on or off")
      ->transform(CLI::CheckedTransformer(on_off));
  app.add_option("--absent-policy", d.absent_policy, "Frames without eyes: closed or hold")
      ->transform(CLI::CheckedTransformer(
          std::map<std::string, AbsentPolicy>{{"closed", AbsentPolicy::TreatAsClosed}, {"hold", AbsentPolicy::HoldLast}},
          CLI::ignore_case));
}

std::ostream* open_log(const Args& a, std::ofstream& file) {
  if (a.log_path.empty()) return &std::cout;
  file.open(a.log_path);
  if (!file) fail(ErrorCode::Io, "cannot open " + a.log_path);
  return &file;
}

int run_detect(const Args& a) {
  if (a.cfg.cascade_path.empty()) fail(ErrorCode::InvalidInput, "--cascade is required");
  print_header(std::cout, a.cfg);
  std::cout.flush();
  FrameSource source(a.source);
  std::ofstream log_file;
  std::ostream& log = *open_log(a, log_file);
  const RunReport report = cmd_detect(a.cfg, source, log);
  if (!a.obs_out.empty()) {
    std::ofstream obs(a.obs_out);
    if (!obs) fail(ErrorCode::Io, "cannot open " + a.obs_out);
    write_observation_trace(obs, report.observations);
  }
  print_run_report(std::cout, report);
  return kExitOk;
}

int run_eval(const Args& a) {
  print_header(std::cout, a.cfg);
  print_eval_report(std::cout, cmd_eval_eyes(a.dataset, a.cfg));
  return kExitOk;
}

int run_compare(const Args& a) {
  print_header(std::cout, a.cfg);
  const std::vector<ThresholdMethod> methods = a.thresholds.methods(a.cfg.agbt);
  for (const ThresholdMethod& m : methods) validate(m);
  print_gap_table(std::cout, cmd_compare_thresholds(a.open_dir, a.closed_dir, methods, a.cfg.eye));
  return kExitOk;
}

int run_calibrate(const Args& a) {
  print_header(std::cout, a.cfg);
  print_calibration(std::cout, cmd_calibrate(a.dataset, a.cfg));
  return kExitOk;
}

int run_bench(const Args& a) {
  if (a.cfg.cascade_path.empty()) fail(ErrorCode::InvalidInput, "--cascade is required");
  print_header(std::cout, a.cfg);
  const std::vector<ClosureInterval> closures =
      a.closures_path.empty() ? std::vector<ClosureInterval>{} : read_closures(a.closures_path);
  FrameSource source(a.source);
  const BenchReport bench = cmd_bench(a.cfg, source, closures);
  for (const AlarmEvent& e : bench.run.events) std::cout << format_event(e) << '\n';
  print_run_report(std::cout, bench.run);
  for (std::size_t i = 0; i < closures.size(); ++i) {
    std::cout << "# closure start=" << closures[i].start << " end=" << closures[i].end << " latency_s=";
    if (bench.closure_latencies_s[i] < 0.0) {
      std::cout << "missed\n";
    } else {
      std::cout << bench.closure_latencies_s[i] << '\n';
    }
  }
  std::cout << "# budget_ms=" << a.cfg.budget_ms << (bench.within_budget ? " status=ok" : " status=over_budget")
            << '\n';
  return bench.within_budget ? kExitOk : kExitBudget;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Eye-closure drowsiness detection on uncompressed video"};
  app.require_subcommand(1);
  Args a;
  register_options(app, a);

  CLI::App* detect = app.add_subcommand("detect", "Run the detector over a frame source and stream events");
  detect->add_option("source", a.source, "Directory of PGM/PPM frames or a .y4m file")->required();
  CLI::App* eval = app.add_subcommand("eval-eyes", "Static open/closed accuracy on a labeled chip dataset");
  eval->add_option("dataset", a.dataset, "Directory with open/ and closed/ subdirectories")->required();
  CLI::App* compare = app.add_subcommand("compare-thresholds", "Open/closed white-percentage gap per method");
  compare->add_option("open", a.open_dir, "Open-eye windows or face chips")->required();
  compare->add_option("closed", a.closed_dir, "Closed-eye windows or face chips")->required();
  CLI::App* calibrate = app.add_subcommand("calibrate", "Sweep the gap coefficient over labeled sequences");
  calibrate->add_option("sequences", a.dataset, "Directory of sequences with .closures sidecars")->required();
  CLI::App* bench = app.add_subcommand("bench", "Per-stage latency and throughput on a frame source");
  bench->add_option("source", a.source, "Directory of PGM/PPM frames or a .y4m file")->required();
  for (CLI::App* sub : {detect, eval, compare, calibrate, bench}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  if (app.count("--tau") > 0) a.cfg.tau = a.tau;
  if (!a.annotate_dir.empty()) a.cfg.annotate_dir = fs::path(a.annotate_dir);

  try {
    validate(a.cfg);
    if (*detect) return run_detect(a);
    if (*eval) return run_eval(a);
    if (*compare) return run_compare(a);
    if (*calibrate) return run_calibrate(a);
    return run_bench(a);
  } catch (const Error& e) {
    std::cout.flush();
    std::cerr << "error=" << to_string(e.code()) << " message=\"" << e.what() << "\"\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cout.flush();
    std::cerr << "error=internal message=\"" << e.what() << "\"\n";
    return kExitRuntime;
  }
}
