// egoalign: desk-scale human/robot co-training pipeline.
//
// Subcommands cover the full loop: generate benchmark logs, ingest them,
// build the unified dataset, inspect stats, train the dual-head policy,
// evaluate closed-loop, sweep data-scale grids, and render masking overlays.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "egoalign/align.hpp"
#include "egoalign/config.hpp"
#include "egoalign/ingest.hpp"
#include "egoalign/kinematics.hpp"
#include "egoalign/policy.hpp"
#include "egoalign/simbench.hpp"

namespace fs = std::filesystem;
using namespace egoalign;

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// gen-bench

struct GenOptions {
  std::string out;
  double robot_min = 10.0;
  double human_min = 40.0;
  double episode_seconds = 40.0;
  uint64_t seed = 0;
};

int episodes_for(double minutes, double episode_seconds) {
  return static_cast<int>(std::ceil(minutes * 60.0 / episode_seconds - 1e-9));
}

void write_gen_manifest(const fs::path& dir, const GenOptions& opt,
                        const std::vector<std::pair<std::string, std::string>>& files,
                        int robot_eps, int human_eps) {
  KeyValueFile kv;
  kv.set("gen.format", "egoalign-bench-raw");
  kv.set_double("gen.robot_min", opt.robot_min);
  kv.set_double("gen.human_min", opt.human_min);
  kv.set_double("gen.episode_seconds", opt.episode_seconds);
  kv.set("gen.seed", std::to_string(opt.seed));
  kv.set_int("gen.robot_episodes", robot_eps);
  kv.set_int("gen.human_episodes", human_eps);
  for (const auto& [name, content] : files) {
    kv.set("hash." + name, std::to_string(fnv1a64(content)));
  }
  write_file((dir / "manifest").string(), kv.dump());
}

int cmd_gen_bench(const GenOptions& opt) {
  BenchConfig cfg;
  cfg.episode_seconds = opt.episode_seconds;
  fs::create_directories(opt.out);
  int nr = episodes_for(opt.robot_min, opt.episode_seconds);
  int nh = episodes_for(opt.human_min, opt.episode_seconds);
  std::vector<std::pair<std::string, std::string>> files;
  auto emit = [&](const std::string& name, const std::string& content) {
    write_file((fs::path(opt.out) / name).string(), content);
    files.emplace_back(name, content);
  };
  for (int i = 0; i < nr; ++i) {
    RobotLogs logs = scripted_expert_robot(cfg, opt.seed * 10007 + static_cast<uint64_t>(i));
    char tag[32];
    std::snprintf(tag, sizeof tag, "robot_%03d", i);
    emit(std::string(tag) + ".csv", logs.log_csv);
    emit(std::string(tag) + "_scene.csv", logs.scene_csv);
    std::cout << tag << " score=" << logs.score << "\n";
  }
  for (int i = 0; i < nh; ++i) {
    HumanLogs logs =
        scripted_expert_human(cfg, opt.seed * 10007 + 5003 + static_cast<uint64_t>(i));
    char tag[32];
    std::snprintf(tag, sizeof tag, "human_%03d", i);
    emit(std::string(tag) + "_device.csv", logs.device_csv);
    emit(std::string(tag) + "_hand.csv", logs.hand_csv);
    emit(std::string(tag) + "_scene.csv", logs.scene_csv);
    std::cout << tag << " score=" << logs.score << "\n";
  }
  write_gen_manifest(opt.out, opt, files, nr, nh);
  std::cout << "gen-bench: " << nr << " robot + " << nh << " human episodes -> "
            << opt.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// ingest / build-dataset

std::vector<Episode> parse_raw_dir(const std::string& dir) {
  std::vector<Episode> out;
  std::vector<std::string> names;
  for (const auto& e : fs::directory_iterator(dir)) names.push_back(e.path().filename().string());
  std::sort(names.begin(), names.end());
  for (const std::string& name : names) {
    auto read = [&](const std::string& n) { return read_file((fs::path(dir) / n).string()); };
    if (name.rfind("robot_", 0) == 0 && name.size() == 13 && name.ends_with(".csv")) {
      std::string stem = name.substr(0, 9);
      std::string scene = fs::exists(fs::path(dir) / (stem + "_scene.csv"))
                              ? read(stem + "_scene.csv")
                              : "";
      auto eps = parse_robot_log(read(name), stem, scene);
      out.insert(out.end(), eps.begin(), eps.end());
    } else if (name.rfind("human_", 0) == 0 && name.ends_with("_device.csv")) {
      std::string stem = name.substr(0, 9);
      std::string scene = fs::exists(fs::path(dir) / (stem + "_scene.csv"))
                              ? read(stem + "_scene.csv")
                              : "";
      auto eps = parse_human_log(read(name), read(stem + "_hand.csv"), stem, scene);
      out.insert(out.end(), eps.begin(), eps.end());
    }
  }
  if (out.empty()) throw IngestError("no robot_*/human_* logs found in " + dir);
  return out;
}

int cmd_ingest(const std::string& raw) {
  auto eps = parse_raw_dir(raw);
  for (const auto& ep : eps) {
    const TimedSeries& first = ep.series.front();
    std::cout << ep.source_id << ": " << embodiment_name(ep.embodiment) << ", "
              << first.values.rows() << " rows, " << num(ep.end() - ep.start())
              << " s @ " << ep.nominal_rate() << " Hz\n";
  }
  std::cout << "ingest: " << eps.size() << " episodes ok\n";
  return 0;
}

int cmd_build_dataset(const std::string& raw, const std::string& out, int stride) {
  auto eps = parse_raw_dir(raw);
  for (auto& ep : eps) ep = time_align(ep);
  AlignConfig cfg;
  cfg.stride = stride;
  cfg.robot_cam_extrinsics = BenchConfig::default_camera().extrinsics;
  Dataset ds = build_dataset(std::move(eps), cfg);
  save_dataset(out, ds);
  std::cout << "build-dataset: human=" << ds.count(Embodiment::Human)
            << " robot=" << ds.count(Embodiment::Robot)
            << " stats_hash=" << ds.stats_hash() << " -> " << out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// stats

void print_stats(const EmbodimentStats& st) {
  auto row = [&](const char* label, const Eigen::VectorXd& m, const Eigen::VectorXd& s) {
    if (m.size() == 0) return;
    std::cout << "  " << label << " mean =";
    for (long i = 0; i < m.size(); ++i) std::cout << " " << num(m[i]);
    std::cout << "\n  " << label << " std  =";
    for (long i = 0; i < s.size(); ++i) std::cout << " " << num(s[i]);
    std::cout << "\n";
  };
  std::cout << embodiment_name(st.embodiment) << " (" << st.sample_count << " samples):\n";
  row("proprio", st.proprio_mean, st.proprio_std);
  row("pose   ", st.pose_action_mean, st.pose_action_std);
  row("joint  ", st.joint_action_mean, st.joint_action_std);
}

int cmd_stats(const std::string& dataset) {
  Dataset ds = load_dataset(dataset);
  if (ds.human_stats) print_stats(*ds.human_stats);
  if (ds.robot_stats) print_stats(*ds.robot_stats);
  if (ds.human_stats && ds.robot_stats) {
    // normalized-overlap diagnostic: standardized mean gap between the
    // embodiments' pose-action distributions, before and after z-scoring
    const auto& h = *ds.human_stats;
    const auto& r = *ds.robot_stats;
    long d = std::min(h.pose_action_mean.size(), r.pose_action_mean.size());
    double raw_gap = 0, norm_gap = 0;
    Eigen::VectorXd hm = Eigen::VectorXd::Zero(d), rm = Eigen::VectorXd::Zero(d);
    long hn = 0, rn = 0;
    for (const auto& s : ds.samples) {  // samples are stored normalized
      Eigen::VectorXd m = s.pose_chunk.targets.colwise().mean().transpose();
      if (s.embodiment == Embodiment::Human) { hm += m.head(d); ++hn; }
      else { rm += m.head(d); ++rn; }
    }
    if (hn > 0) hm /= static_cast<double>(hn);
    if (rn > 0) rm /= static_cast<double>(rn);
    for (long i = 0; i < d; ++i) {
      double pooled = std::sqrt(0.5 * (h.pose_action_std[i] * h.pose_action_std[i] +
                                       r.pose_action_std[i] * r.pose_action_std[i]));
      raw_gap += std::abs(h.pose_action_mean[i] - r.pose_action_mean[i]) / pooled;
      norm_gap += std::abs(hm[i] - rm[i]);
    }
    std::cout << "pose-action standardized gap: raw = " << num(raw_gap / d)
              << ", normalized = " << num(norm_gap / d) << "\n";
  }
  std::cout << "stats_hash = " << ds.stats_hash() << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// train / eval

struct TrainOptions {
  std::string dataset, out;
  long iterations = 2000;
  double lr = 1e-2;
  uint64_t seed = 0;
  int width = 64;
  int depth = 1;
  int batch = 32;
  std::string optimizer = "momentum";
  std::string schedule = "constant";
};

int cmd_train(const TrainOptions& opt) {
  Dataset ds = load_dataset(opt.dataset);
  TrainConfig cfg;
  cfg.iterations = opt.iterations;
  cfg.learning_rate = opt.lr;
  cfg.seed = opt.seed;
  cfg.optimizer = opt.optimizer;
  cfg.lr_schedule = opt.schedule;
  cfg.human_batch = opt.batch;
  cfg.robot_batch = opt.batch;
  cfg.dims.width = opt.width;
  cfg.dims.trunk_hidden.assign(static_cast<size_t>(opt.depth), opt.width);
  TrainResult r = train(ds, cfg);
  save_checkpoint(opt.out, r.params);
  const LossBreakdown& last = r.trace.back();
  std::cout << "train: iterations=" << opt.iterations << " final_loss=" << num(last.total)
            << " (hp=" << num(last.human_pose) << " rp=" << num(last.robot_pose)
            << " rj=" << num(last.robot_joint) << ") -> " << opt.out << "\n";
  return 0;
}

struct EvalOptions {
  std::string checkpoint, dataset;
  int episodes = 10;
  uint64_t seed = 0;
  double episode_seconds = 40.0;
  bool expert = false;
};

int cmd_eval(const EvalOptions& opt) {
  BenchConfig cfg;
  cfg.episode_seconds = opt.episode_seconds;
  EvalResult res;
  if (opt.expert) {
    res = evaluate_expert(cfg, opt.episodes, opt.seed);
  } else {
    PolicyParams p = load_checkpoint(opt.checkpoint);
    Dataset ds = load_dataset(opt.dataset);
    res = evaluate(p, ds.stats(Embodiment::Robot), cfg, opt.episodes, opt.seed);
  }
  std::cout << "eval: mean=" << num(res.mean) << " std=" << num(res.stddev)
            << " episodes=" << opt.episodes << " scores=";
  for (size_t i = 0; i < res.per_episode.size(); ++i)
    std::cout << (i ? "," : "") << res.per_episode[i];
  std::cout << "\n";
  return 0;
}

// ---------------------------------------------------------------------------
// scale-sweep

struct SweepOptions {
  std::string out;
  std::vector<double> robot_grid{1, 2, 3};
  std::vector<double> human_grid{0, 1};
  double unit_min = 2.0;  // simulated minutes per grid unit
  int seeds = 5;
  long iterations = 2000;
  int episodes = 8;
  int stride = 2;
};

Dataset sweep_dataset(const BenchConfig& bench, double robot_min, double human_min,
                      uint64_t seed, int stride) {
  std::vector<Episode> eps;
  int nr = episodes_for(robot_min, bench.episode_seconds);
  int nh = episodes_for(human_min, bench.episode_seconds);
  for (int i = 0; i < nr; ++i) {
    RobotLogs logs = scripted_expert_robot(bench, seed * 10007 + static_cast<uint64_t>(i));
    char tag[32];
    std::snprintf(tag, sizeof tag, "robot_%03d", i);
    auto parsed = parse_robot_log(logs.log_csv, tag, logs.scene_csv);
    for (auto& ep : parsed) eps.push_back(time_align(ep));
  }
  for (int i = 0; i < nh; ++i) {
    HumanLogs logs =
        scripted_expert_human(bench, seed * 10007 + 5003 + static_cast<uint64_t>(i));
    char tag[32];
    std::snprintf(tag, sizeof tag, "human_%03d", i);
    auto parsed = parse_human_log(logs.device_csv, logs.hand_csv, tag, logs.scene_csv);
    for (auto& ep : parsed) eps.push_back(time_align(ep));
  }
  AlignConfig cfg;
  cfg.stride = stride;
  cfg.robot_cam_extrinsics = bench.camera.extrinsics;
  return build_dataset(std::move(eps), cfg);
}

std::string sweep_svg(const std::vector<double>& robot_grid,
                      const std::vector<double>& human_grid,
                      const std::vector<std::vector<double>>& mean, double unit_min) {
  const int w = 560, h = 400, ml = 70, mb = 50, mt = 30, mr = 30;
  double ymax = 1.0;
  for (const auto& row : mean)
    for (double v : row) ymax = std::max(ymax, v);
  ymax *= 1.1;
  double xmax = robot_grid.back();
  auto px = [&](double x) { return ml + (w - ml - mr) * (x / xmax); };
  auto py = [&](double y) { return h - mb - (h - mb - mt) * (y / ymax); };
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\">\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << h - mb << "\" x2=\"" << w - mr << "\" y2=\""
      << h - mb << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
      << h - mb << "\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << (ml + w - mr) / 2 << "\" y=\"" << h - 12
      << "\" text-anchor=\"middle\">robot data (units of " << unit_min
      << " sim-min)</text>\n";
  svg << "<text x=\"18\" y=\"" << (mt + h - mb) / 2
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << (mt + h - mb) / 2
      << ")\">mean eval score</text>\n";
  const char* colors[] = {"#888888", "#cc3311", "#0077bb", "#009988"};
  for (size_t hi = 0; hi < human_grid.size(); ++hi) {
    const char* c = colors[hi % 4];
    svg << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"2\" points=\"";
    for (size_t ri = 0; ri < robot_grid.size(); ++ri)
      svg << px(robot_grid[ri]) << "," << py(mean[hi][ri]) << " ";
    svg << "\"/>\n";
    for (size_t ri = 0; ri < robot_grid.size(); ++ri)
      svg << "<circle cx=\"" << px(robot_grid[ri]) << "\" cy=\"" << py(mean[hi][ri])
          << "\" r=\"4\" fill=\"" << c << "\"/>\n";
    svg << "<text x=\"" << w - mr - 4 << "\" y=\"" << mt + 16 * (hi + 1)
        << "\" text-anchor=\"end\" fill=\"" << c << "\">human=" << human_grid[hi]
        << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

int cmd_scale_sweep(const SweepOptions& opt) {
  BenchConfig bench;
  fs::create_directories(opt.out);
  std::ostringstream table;
  table << "robot_units human_units robot_min human_min seeds mean stderr scores\n";
  std::vector<std::vector<double>> means(opt.human_grid.size(),
                                         std::vector<double>(opt.robot_grid.size(), 0));
  for (size_t hi = 0; hi < opt.human_grid.size(); ++hi) {
    for (size_t ri = 0; ri < opt.robot_grid.size(); ++ri) {
      double rm = opt.robot_grid[ri] * opt.unit_min;
      double hm = opt.human_grid[hi] * opt.unit_min;
      std::vector<double> scores;
      for (int s = 0; s < opt.seeds; ++s) {
        uint64_t seed = static_cast<uint64_t>(s) + 1;
        Dataset ds = sweep_dataset(bench, rm, hm, seed, opt.stride);
        TrainConfig tc;
        tc.iterations = opt.iterations;
        tc.seed = seed;
        TrainResult tr = train(ds, tc);
        EvalResult ev = evaluate(tr.params, ds.stats(Embodiment::Robot), bench,
                                 opt.episodes, 7000 + seed * 131);
        scores.push_back(ev.mean);
      }
      double mean = 0;
      for (double v : scores) mean += v;
      mean /= scores.size();
      double var = 0;
      for (double v : scores) var += (v - mean) * (v - mean);
      double se = scores.size() > 1
                      ? std::sqrt(var / (scores.size() * (scores.size() - 1.0)))
                      : 0.0;
      means[hi][ri] = mean;
      table << opt.robot_grid[ri] << " " << opt.human_grid[hi] << " " << rm << " " << hm
            << " " << opt.seeds << " " << num(mean) << " " << num(se) << " ";
      for (size_t i = 0; i < scores.size(); ++i) table << (i ? "," : "") << scores[i];
      table << "\n";
      std::cout << "cell robot=" << opt.robot_grid[ri] << " human=" << opt.human_grid[hi]
                << " mean=" << num(mean) << " se=" << num(se) << "\n";
    }
  }
  write_file((fs::path(opt.out) / "results.txt").string(), table.str());
  write_file((fs::path(opt.out) / "plot.svg").string(),
             sweep_svg(opt.robot_grid, opt.human_grid, means, opt.unit_min));
  std::cout << "scale-sweep: wrote " << opt.out << "/results.txt and plot.svg\n";
  return 0;
}

// ---------------------------------------------------------------------------
// render-overlay

struct OverlayOptions {
  std::string image, out;
  std::vector<double> hand_box;  // x0,y0,x1,y1
  std::vector<double> hand_px;   // u,v
  std::vector<double> robot_q;   // 7 joint values
  double dilation = 8.0;
};

int cmd_render_overlay(const OverlayOptions& opt) {
  Raster img = read_ppm(read_file(opt.image));
  MaskPrompt prompt;
  if (!opt.robot_q.empty()) {
    if (opt.robot_q.size() != 7) throw KinematicsError("--robot-q needs 7 values");
    Eigen::VectorXd q = Eigen::Map<const Eigen::VectorXd>(opt.robot_q.data(), 7);
    prompt = robot_prompt(ArmModel::default_arm(), q, BenchConfig::default_camera());
  } else if (opt.hand_box.size() == 4 && opt.hand_px.size() == 2) {
    prompt = hand_prompt({opt.hand_box[0], opt.hand_box[1], opt.hand_box[2], opt.hand_box[3]},
                         {opt.hand_px[0], opt.hand_px[1]});
  } else {
    throw KinematicsError("provide --robot-q or both --hand-box and --hand-px");
  }
  HullSegmenter segmenter(opt.dilation);
  BinaryMask mask = segmenter.segment(img, prompt);
  Raster out = apply_overlay(mask, prompt.line_segment_px, img);
  write_file(opt.out, write_ppm(out));
  std::cout << "render-overlay: " << opt.image << " -> " << opt.out << "\n";
  return 0;
}

// ---------------------------------------------------------------------------

// Apply `key = value` config entries as defaults before flag overrides.
template <typename T>
void from_config(const KeyValueFile& kv, const std::string& key, T& slot) {
  if (!kv.has(key)) return;
  if constexpr (std::is_same_v<T, std::string>) slot = kv.get(key);
  else if constexpr (std::is_floating_point_v<T>) slot = kv.get_double(key);
  else slot = static_cast<T>(kv.get_int(key));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"egoalign: human/robot co-training pipeline"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "key = value config file (flags override)");

  GenOptions gen;
  auto* cgen = app.add_subcommand("gen-bench", "generate benchmark demonstration logs");
  cgen->add_option("--out", gen.out, "output directory")->required();
  cgen->add_option("--robot-min", gen.robot_min, "simulated robot minutes");
  cgen->add_option("--human-min", gen.human_min, "simulated human minutes");
  cgen->add_option("--episode-seconds", gen.episode_seconds, "episode length");
  cgen->add_option("--seed", gen.seed, "generation seed");

  std::string ingest_raw;
  auto* cing = app.add_subcommand("ingest", "parse and summarize raw logs");
  cing->add_option("--raw", ingest_raw, "raw log directory")->required();

  std::string bd_raw, bd_out;
  int bd_stride = 1;
  auto* cbd = app.add_subcommand("build-dataset", "build the unified dataset");
  cbd->add_option("--raw", bd_raw, "raw log directory")->required();
  cbd->add_option("--out", bd_out, "dataset directory")->required();
  cbd->add_option("--stride", bd_stride, "observation grid stride");

  std::string stats_ds;
  auto* cst = app.add_subcommand("stats", "print per-embodiment statistics");
  cst->add_option("--dataset", stats_ds, "dataset directory")->required();

  TrainOptions tr;
  auto* ctr = app.add_subcommand("train", "train the dual-head policy");
  ctr->add_option("--dataset", tr.dataset, "dataset directory")->required();
  ctr->add_option("--out", tr.out, "checkpoint directory")->required();
  ctr->add_option("--iterations", tr.iterations, "training iterations");
  ctr->add_option("--lr", tr.lr, "learning rate");
  ctr->add_option("--seed", tr.seed, "training seed");
  ctr->add_option("--width", tr.width, "trunk width");
  ctr->add_option("--depth", tr.depth, "trunk hidden layers");
  ctr->add_option("--batch", tr.batch, "per-embodiment batch size");
  ctr->add_option("--optimizer", tr.optimizer, "momentum or adamw");
  ctr->add_option("--schedule", tr.schedule, "lr schedule: constant or cosine");

  EvalOptions ev;
  auto* cev = app.add_subcommand("eval", "closed-loop benchmark evaluation");
  cev->add_option("--checkpoint", ev.checkpoint, "checkpoint directory");
  cev->add_option("--dataset", ev.dataset, "dataset directory (for robot stats)");
  cev->add_option("--episodes", ev.episodes, "number of episodes");
  cev->add_option("--seed", ev.seed, "base episode seed");
  cev->add_option("--episode-seconds", ev.episode_seconds, "episode length");
  cev->add_flag("--expert", ev.expert, "score the scripted expert instead");

  SweepOptions sw;
  auto* csw = app.add_subcommand("scale-sweep", "train/eval a robot x human data grid");
  csw->add_option("--out", sw.out, "output directory")->required();
  csw->add_option("--robot-grid", sw.robot_grid, "robot data units");
  csw->add_option("--human-grid", sw.human_grid, "human data units");
  csw->add_option("--unit-min", sw.unit_min, "simulated minutes per unit");
  csw->add_option("--seeds", sw.seeds, "seeds per cell");
  csw->add_option("--iterations", sw.iterations, "training iterations per cell");
  csw->add_option("--episodes", sw.episodes, "eval episodes per seed");
  csw->add_option("--stride", sw.stride, "dataset stride");

  OverlayOptions ov;
  auto* cov = app.add_subcommand("render-overlay", "mask + red-line overlay on a PPM image");
  cov->add_option("--image", ov.image, "input PPM (P6)")->required();
  cov->add_option("--out", ov.out, "output PPM")->required();
  cov->add_option("--hand-box", ov.hand_box, "hand contour bbox: x0 y0 x1 y1")->expected(4);
  cov->add_option("--hand-px", ov.hand_px, "projected hand position: u v")->expected(2);
  cov->add_option("--robot-q", ov.robot_q, "robot joint configuration (7)")->expected(7);
  cov->add_option("--dilation", ov.dilation, "hull dilation radius in px");

  CLI11_PARSE(app, argc, argv);

  try {
    if (!config_path.empty()) {
      KeyValueFile kv = KeyValueFile::load(config_path);
      // config supplies defaults; CLI flags already parsed win via count()
      if (!cgen->count("--robot-min")) from_config(kv, "gen.robot_min", gen.robot_min);
      if (!cgen->count("--human-min")) from_config(kv, "gen.human_min", gen.human_min);
      if (!cgen->count("--episode-seconds"))
        from_config(kv, "gen.episode_seconds", gen.episode_seconds);
      if (!ctr->count("--iterations")) from_config(kv, "train.iterations", tr.iterations);
      if (!ctr->count("--lr")) from_config(kv, "train.lr", tr.lr);
      if (!ctr->count("--width")) from_config(kv, "train.width", tr.width);
      if (!ctr->count("--optimizer")) from_config(kv, "train.optimizer", tr.optimizer);
      if (!cev->count("--episodes")) from_config(kv, "eval.episodes", ev.episodes);
      if (!cev->count("--episode-seconds"))
        from_config(kv, "eval.episode_seconds", ev.episode_seconds);
    }
    if (cgen->parsed()) return cmd_gen_bench(gen);
    if (cing->parsed()) return cmd_ingest(ingest_raw);
    if (cbd->parsed()) return cmd_build_dataset(bd_raw, bd_out, bd_stride);
    if (cst->parsed()) return cmd_stats(stats_ds);
    if (ctr->parsed()) return cmd_train(tr);
    if (cev->parsed()) return cmd_eval(ev);
    if (csw->parsed()) return cmd_scale_sweep(sw);
    if (cov->parsed()) return cmd_render_overlay(ov);
  } catch (const std::exception& e) {
    std::cerr << "error: " << typeid(e).name() << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}
