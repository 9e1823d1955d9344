// shapepose: synth, train, detect, track and eval subcommands.

#include "config.hpp"

#include "shapepose/annotations.hpp"
#include "shapepose/error.hpp"
#include "shapepose/evalkit.hpp"
#include "shapepose/learning.hpp"
#include "shapepose/model_io.hpp"
#include "shapepose/pose_io.hpp"
#include "shapepose/render.hpp"
#include "shapepose/synth.hpp"
#include "shapepose/tracking.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <exception>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace shapepose;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

enum ExitCode { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

struct Common {
  std::string config_file;
  std::vector<std::string> assignments;
  int jobs = 1;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_file, "key=value config file");
  cmd->add_option("--set", c.assignments, "config override key=value (repeatable)");
  cmd->add_option("--jobs", c.jobs, "worker threads")->check(CLI::PositiveNumber);
}

RunConfig make_config(const Common& c, const std::string& positional_config = "") {
  RunConfig cfg;
  if (!positional_config.empty()) cfg.load_file(positional_config);
  if (!c.config_file.empty()) cfg.load_file(c.config_file);
  for (const auto& a : c.assignments) cfg.set_assignment(a);
  return cfg;
}

// Stored model parameters, with any explicitly configured key taking over.
DetectParams detect_params(const RunConfig& cfg, const DetectParams& stored) {
  const DetectParams given = cfg.detect_params();
  DetectParams d = stored;
  if (cfg.is_set("cell_size")) d.hog.cell_size = given.hog.cell_size;
  if (cfg.is_set("levels")) d.hog.levels = given.hog.levels;
  if (cfg.is_set("scale_step")) d.hog.scale_step = given.hog.scale_step;
  if (cfg.is_set("edge_low")) d.edges.low = given.edges.low;
  if (cfg.is_set("edge_high")) d.edges.high = given.edges.high;
  if (cfg.is_set("edge_sigma")) d.edges.sigma = given.edges.sigma;
  if (cfg.is_set("orientation_bins")) d.orientation_bins = given.orientation_bins;
  if (cfg.is_set("stage1_m")) d.stage1_m = given.stage1_m;
  if (cfg.is_set("stage2_m")) d.stage2_m = given.stage2_m;
  if (cfg.is_set("nms_radius")) d.nms_radius = given.nms_radius;
  return d;
}

json params_json(const DetectParams& d) {
  return {{"cell_size", d.hog.cell_size},   {"levels", d.hog.levels},         {"scale_step", d.hog.scale_step},
          {"edge_low", d.edges.low},        {"edge_high", d.edges.high},      {"edge_sigma", d.edges.sigma},
          {"orientation_bins", d.orientation_bins}, {"stage1_m", d.stage1_m}, {"stage2_m", d.stage2_m},
          {"nms_radius", d.nms_radius}};
}

class Manifest {
 public:
  Manifest(std::string command, int argc, char** argv) : start_(std::chrono::steady_clock::now()) {
    j_["command"] = std::move(command);
    j_["argv"] = std::vector<std::string>(argv, argv + argc);
    j_["version"] = kVersion;
  }
  json& extra() { return j_; }
  void write(const fs::path& path, const RunConfig& cfg) {
    j_["config"] = cfg.values();
    j_["seed"] = cfg.integer("seed");
    j_["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    write_text(path, j_.dump(1));
  }

 private:
  json j_;
  std::chrono::steady_clock::time_point start_;
};

fs::path manifest_path(const fs::path& output) { return fs::path(output.string() + ".manifest.json"); }

// Runs f(i) for i in [0, n) on `jobs` workers; the first exception is rethrown.
template <typename F>
void parallel_for(int n, int jobs, F&& f) {
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex mu;
  auto worker = [&] {
    for (int i; (i = next++) < n;) {
      try {
        f(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (int t = 1; t < std::min(jobs, n); ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

DetectionSet run_detection(const ModelBundle& bundle, const DetectParams& params, const fs::path& frames_dir,
                           const std::string& pattern, int jobs, FrameSequence* frames_out) {
  FrameSequence frames = load_frames(frames_dir, pattern);
  DetectionSet set;
  set.frames_dir = frames_dir.string();
  set.parent = bundle.model.parent();
  set.frames.resize(frames.size());
  parallel_for(int(frames.size()), jobs, [&](int f) {
    const Detection d = detect(bundle.model, frames.frames[f], params);
    auto& out = set.frames[f];
    out.frame = f;
    out.name = frames.names[f];
    out.stage1.assign(d.stage1.begin(), d.stage1.begin() + std::min<std::size_t>(d.stage1.size(), params.stage2_m));
    out.stage2 = d.stage2;
    out.stage2_fallback = d.stage2_fallback;
  });
  if (frames_out) *frames_out = std::move(frames);
  return set;
}

int cmd_synth(const std::string& cfg_path, const fs::path& out, const Common& c, Manifest& m) {
  const RunConfig cfg = make_config(c, cfg_path);
  const SynthConfig sc = cfg.synth_config();
  const SynthSequence seq = synth_sequence(sc);
  fs::create_directories(out / "frames");
  fs::create_directories(out / "backgrounds");
  for (std::size_t t = 0; t < seq.frames.size(); ++t) write_png(out / "frames" / seq.frames.names[t], seq.frames.frames[t]);
  const auto bgs = synth_backgrounds(sc, cfg.integer("backgrounds"));
  for (std::size_t b = 0; b < bgs.size(); ++b) {
    char name[32];
    std::snprintf(name, sizeof name, "bg_%04zu.png", b);
    write_png(out / "backgrounds" / name, bgs[b]);
  }
  AnnotationSet set;
  set.part_count = sc.parts;
  set.sequences.push_back({"frames", seq.annotations});
  write_annotations(out / "annotations.json", set);

  json truth = json::array();
  for (const auto& frame : seq.truth) {
    json parts = json::array();
    for (const auto& z : frame)
      parts.push_back({{"x", z.x}, {"y", z.y}, {"r", z.r}, {"theta", z.theta}, {"eta", z.eta}, {"type", z.type}});
    truth.push_back(parts);
  }
  write_text(out / "truth.json", json({{"parent", seq.parent}, {"frames", truth}}).dump(1));
  m.extra()["frames"] = seq.frames.size();
  m.write(out / "manifest.json", cfg);
  std::cout << "wrote " << seq.frames.size() << " frames and " << bgs.size() << " backgrounds to " << out.string()
            << "\n";
  return kOk;
}

int cmd_train(const fs::path& data_path, const fs::path& bg_dir, const fs::path& model_path, const Common& c,
              Manifest& m) {
  const RunConfig cfg = make_config(c);
  const TrainConfig tc = cfg.train_config();
  const Dataset data = load_dataset(data_path, cfg.get("pattern"));
  std::vector<Image> backgrounds;
  if (tc.rounds > 0) backgrounds = load_frames(bg_dir, cfg.get("pattern")).frames;
  TrainReport report;
  const ModelBundle bundle = train(data, backgrounds, tc, &report);
  save_model(model_path, bundle);

  json rounds = json::array();
  for (const auto& r : report.rounds)
    rounds.push_back({{"fmp_negatives", r.fmp_negatives},
                      {"shape_negatives", r.shape_negatives},
                      {"fmp_epochs", r.fmp.epochs},
                      {"fmp_converged", r.fmp.converged},
                      {"shape_epochs", r.shape.epochs},
                      {"shape_converged", r.shape.converged}});
  m.extra()["positives"] = report.positives;
  m.extra()["rounds"] = rounds;
  m.write(manifest_path(model_path), cfg);
  std::cout << "trained on " << report.positives << " positives; model written to " << model_path.string() << "\n";
  return kOk;
}

int cmd_detect(const fs::path& model_path, const fs::path& frames_dir, const fs::path& out, int m_flag,
               const Common& c, Manifest& m) {
  RunConfig cfg = make_config(c);
  if (m_flag > 0) cfg.set("stage2_m", std::to_string(m_flag));
  const ModelBundle bundle = load_model(model_path);
  const DetectParams params = detect_params(cfg, bundle.params);
  const DetectionSet set = run_detection(bundle, params, frames_dir, cfg.get("pattern"), c.jobs, nullptr);
  write_text(out, serialize_detections(set));
  m.extra()["detect_params"] = params_json(params);
  m.write(manifest_path(out), cfg);
  std::cout << "detected " << set.frames.size() << " frames; wrote " << out.string() << "\n";
  return kOk;
}

int cmd_track(const fs::path& model_path, const fs::path& frames_dir, const fs::path& out, double gamma_flag,
              const Common& c, Manifest& m) {
  RunConfig cfg = make_config(c);
  if (gamma_flag >= 0) {
    std::ostringstream os;
    os.precision(17);
    os << gamma_flag;
    cfg.set("gamma", os.str());
  }
  const ModelBundle bundle = load_model(model_path);
  const DetectParams params = detect_params(cfg, bundle.params);
  FrameSequence frames;
  const DetectionSet set = run_detection(bundle, params, frames_dir, cfg.get("pattern"), c.jobs, &frames);
  std::vector<std::vector<PoseCandidate>> candidates;
  for (const auto& f : set.frames) candidates.push_back(f.stage2);
  const TrackPath path = track(candidates, cfg.track_params());
  write_text(out, serialize_track(path, frames.names));

  const fs::path overlays = out.parent_path() / (out.stem().string() + "_overlays");
  fs::create_directories(overlays);
  for (std::size_t t = 0; t < path.poses.size(); ++t)
    write_png(overlays / frames.names[t], overlay(frames.frames[t], {path.poses[t]}, bundle.model.parent()));
  m.extra()["detect_params"] = params_json(params);
  m.extra()["total_score"] = path.score;
  m.write(manifest_path(out), cfg);
  std::cout << "tracked " << path.poses.size() << " frames; score " << path.score << "; wrote " << out.string() << "\n";
  return kOk;
}

std::vector<int> parse_ms(const std::string& text) {
  std::vector<int> ms;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      ms.push_back(std::stoi(item));
    } catch (const std::exception&) {
      fail(ErrorKind::ConfigError, "bad M list entry '" + item + "'");
    }
  }
  if (ms.empty()) fail(ErrorKind::ConfigError, "empty M list");
  return ms;
}

bool is_annotation_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    return j.is_object() && j.contains("sequences");
  } catch (const json::exception&) {
    return false;
  }
}

// Annotations of the sequence whose directory matches `frames_dir`, else the first.
std::vector<Annotation> ground_truth(const fs::path& gt_path, const std::string& frames_dir) {
  const AnnotationSet set = parse_annotations(gt_path);
  if (set.sequences.empty()) fail(ErrorKind::InsufficientData, "ground truth has no sequences");
  std::error_code ec;
  const auto target = fs::weakly_canonical(frames_dir, ec);
  for (const auto& s : set.sequences) {
    fs::path dir = s.dir;
    if (dir.is_relative()) dir = gt_path.parent_path() / dir;
    if (!frames_dir.empty() && fs::weakly_canonical(dir, ec) == target) return s.annotations;
  }
  return set.sequences.front().annotations;
}

int cmd_eval(const fs::path& pred_path, const fs::path& gt_path, double beta_flag, const std::string& out_flag,
             const std::string& ms_text, int stage, const Common& c, Manifest& m) {
  RunConfig cfg = make_config(c);
  if (beta_flag > 0) {
    std::ostringstream os;
    os.precision(17);
    os << beta_flag;
    cfg.set("pck_beta", os.str());
  }
  const double beta = cfg.number("pck_beta");
  const fs::path out = out_flag.empty() ? fs::path(pred_path).replace_extension(".csv") : fs::path(out_flag);
  const std::string text = read_text(pred_path);

  PckCurve curve;
  if (is_annotation_json(text)) {
    // Keypoints as predictions: one candidate per annotated frame.
    const AnnotationSet pred = parse_annotations_json(text);
    if (pred.sequences.empty()) fail(ErrorKind::InsufficientData, "prediction file has no sequences");
    std::vector<std::vector<PoseCandidate>> lists;
    for (const auto& a : pred.sequences.front().annotations) {
      if (a.frame_index < 0) fail(ErrorKind::BoundsError, "negative frame index");
      if (int(lists.size()) <= a.frame_index) lists.resize(a.frame_index + 1);
      PoseCandidate c;
      for (const auto& k : a.keypoints) {
        PartLocation p;
        p.x = k.x();
        p.y = k.y();
        c.parts.push_back(p);
      }
      lists[a.frame_index].push_back(std::move(c));
    }
    curve = mean_max_pck_curve(lists, ground_truth(gt_path, ""), beta, {1});
  } else if (is_track_json(text)) {
    const TrackPath path = parse_track(text);
    const double s = sequence_pck(path, ground_truth(gt_path, ""), beta);
    curve.points.push_back({1, s, s});
    m.extra()["sequence_pck"] = s;
  } else {
    const DetectionSet set = parse_detections(text);
    std::vector<std::vector<PoseCandidate>> lists;
    for (const auto& f : set.frames) lists.push_back(stage == 1 ? f.stage1 : f.stage2);
    curve = mean_max_pck_curve(lists, ground_truth(gt_path, set.frames_dir), beta, parse_ms(ms_text));
    if (curve.clamped) std::cerr << "warning: some M exceed the available candidates and were clamped\n";
    m.extra()["clamped"] = curve.clamped;
  }
  write_curve_csv(out, curve);
  m.write(manifest_path(out), cfg);
  for (const auto& p : curve.points)
    std::cout << "M=" << p.m << " meanPCK=" << p.mean_pck << " maxPCK=" << p.max_pck << "\n";
  return kOk;
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::ConfigError:
      return kUsage;
    case ErrorKind::IoError:
      return kInternal;
    default:
      return kData;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shape-consistent part-model pose detection and tracking"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Common common;
  std::string synth_cfg, synth_out;
  auto* synth = app.add_subcommand("synth", "generate a synthetic sequence with annotations");
  synth->add_option("cfg", synth_cfg, "key=value config file")->required();
  synth->add_option("out", synth_out, "output directory")->required();
  add_common(synth, common);

  std::string data, bg, model_out;
  auto* train_cmd = app.add_subcommand("train", "train a model");
  train_cmd->add_option("data", data, "annotation JSON")->required();
  train_cmd->add_option("backgrounds", bg, "directory of object-free images")->required();
  train_cmd->add_option("model", model_out, "output model file")->required();
  add_common(train_cmd, common);

  std::string model_in, frames_dir, out;
  int m_flag = 0;
  auto* detect_cmd = app.add_subcommand("detect", "per-frame M-best detection");
  detect_cmd->add_option("model", model_in)->required();
  detect_cmd->add_option("frames", frames_dir)->required();
  detect_cmd->add_option("out", out)->required();
  detect_cmd->add_option("--m", m_flag, "stage-2 candidates per frame")->check(CLI::PositiveNumber);
  add_common(detect_cmd, common);

  double gamma = -1;
  auto* track_cmd = app.add_subcommand("track", "detect and track through a sequence");
  track_cmd->add_option("model", model_in)->required();
  track_cmd->add_option("frames", frames_dir)->required();
  track_cmd->add_option("out", out)->required();
  track_cmd->add_option("--gamma", gamma, "smoothness weight")->check(CLI::NonNegativeNumber);
  add_common(track_cmd, common);

  std::string pred, gt, csv, ms = "1,2,5,10,20,40,80";
  double beta = -1;
  int stage = 2;
  auto* eval_cmd = app.add_subcommand("eval", "PCK curves of detections or a track");
  eval_cmd->add_option("pred", pred)->required();
  eval_cmd->add_option("gt", gt)->required();
  eval_cmd->add_option("--beta", beta, "PCK threshold fraction")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--out", csv, "CSV output (default: pred with .csv)");
  eval_cmd->add_option("--ms", ms, "comma-separated M values");
  eval_cmd->add_option("--stage", stage, "candidate stage for detection files")->check(CLI::Range(1, 2));
  add_common(eval_cmd, common);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    auto* cmd = app.get_subcommands().front();
    Manifest manifest(cmd->get_name(), argc, argv);
    if (cmd == synth) return cmd_synth(synth_cfg, synth_out, common, manifest);
    if (cmd == train_cmd) return cmd_train(data, bg, model_out, common, manifest);
    if (cmd == detect_cmd) return cmd_detect(model_in, frames_dir, out, m_flag, common, manifest);
    if (cmd == track_cmd) return cmd_track(model_in, frames_dir, out, gamma, common, manifest);
    return cmd_eval(pred, gt, beta, csv, ms, stage, common, manifest);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
}
