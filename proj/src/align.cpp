#include "egoalign/align.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "egoalign/config.hpp"

namespace egoalign {

namespace {

constexpr double kTimeEps = 1e-9;

size_t row_at_time(const TimedSeries& s, double t) {
  auto it = std::lower_bound(s.timestamps.begin(), s.timestamps.end(), t - kTimeEps);
  if (it == s.timestamps.end()) throw IndexOutOfRange("obs_time past episode end");
  return static_cast<size_t>(it - s.timestamps.begin());
}

Pose3 robot_cam(const AlignConfig& cfg) {
  return cfg.robot_cam_extrinsics ? *cfg.robot_cam_extrinsics : Pose3::identity();
}

// Linear interpolation over a set of (time, value-row) pairs.
Eigen::VectorXd lerp_rows(const std::vector<double>& ts, const Eigen::MatrixXd& vals,
                          double t) {
  if (t <= ts.front()) return vals.row(0).transpose();
  if (t >= ts.back()) return vals.row(vals.rows() - 1).transpose();
  auto it = std::upper_bound(ts.begin(), ts.end(), t);
  size_t hi = static_cast<size_t>(it - ts.begin());
  size_t lo = hi - 1;
  double w = (t - ts[lo]) / (ts[hi] - ts[lo]);
  return ((1.0 - w) * vals.row(static_cast<long>(lo)) + w * vals.row(static_cast<long>(hi)))
      .transpose();
}

}  // namespace

const EmbodimentStats& Dataset::stats(Embodiment e) const {
  const auto& s = e == Embodiment::Human ? human_stats : robot_stats;
  if (!s) throw AlignError("dataset has no stats for embodiment");
  return *s;
}

long Dataset::count(Embodiment e) const {
  long n = 0;
  for (const auto& s : samples) n += (s.embodiment == e);
  return n;
}

uint64_t Dataset::stats_hash() const {
  uint64_t parts[2] = {human_stats ? human_stats->content_hash() : 0,
                       robot_stats ? robot_stats->content_hash() : 0};
  return fnv1a64(parts, sizeof(parts));
}

uint64_t EmbodimentStats::content_hash() const {
  uint64_t h = 0xcbf29ce484222325ull;
  auto mix = [&h](const Eigen::VectorXd& v) {
    h = fnv1a64(v.data(), sizeof(double) * static_cast<size_t>(v.size()), h);
  };
  mix(proprio_mean);
  mix(proprio_std);
  mix(pose_action_mean);
  mix(pose_action_std);
  mix(joint_action_mean);
  mix(joint_action_std);
  return h;
}

std::vector<Eigen::Vector3d> reref_to_obs_frame(std::span<const Pose3> world_device,
                                                std::span<const Eigen::Vector3d> points_device,
                                                size_t obs_index) {
  if (world_device.size() != points_device.size()) {
    throw DimensionMismatch("pose and point sequences differ in length");
  }
  if (obs_index >= world_device.size()) {
    throw IndexOutOfRange("obs_index " + std::to_string(obs_index) + " out of range");
  }
  Pose3 obs_inv = world_device[obs_index].inverse();
  std::vector<Eigen::Vector3d> out;
  out.reserve(world_device.size() - obs_index);
  for (size_t i = obs_index; i < world_device.size(); ++i) {
    out.push_back(compose(obs_inv, world_device[i]).apply(points_device[i]));
  }
  return out;
}

ActionChunk build_chunk(const Episode& ep, double obs_time, const AlignConfig& cfg) {
  double h = cfg.horizon(ep.embodiment);
  int K = cfg.chunk_size;
  if (obs_time + h > ep.end() + kTimeEps) {
    throw HorizonExceedsEpisode("episode ends before obs_time + horizon");
  }
  ActionChunk chunk;
  chunk.obs_time = obs_time;
  chunk.spacing = h / K;
  chunk.embodiment = ep.embodiment;
  chunk.space = ActionSpace::Pose;

  if (ep.embodiment == Embodiment::Human) {
    const auto& dev = ep.require(SeriesKind::DevicePoseWorld);
    const auto& hand = ep.require(SeriesKind::HandPosDevice);
    size_t obs_row = row_at_time(dev, obs_time);
    size_t end_row = row_at_time(dev, obs_time + h - kTimeEps);
    if (dev.timestamps[end_row] < obs_time + h - kTimeEps) ++end_row;
    end_row = std::min(end_row + 1, dev.timestamps.size() - 1);

    // Re-reference the raw trajectory into the observation device frame,
    // then interpolate at the evenly spaced target times.
    Pose3 obs_inv = dev.pose_at(obs_row).inverse();
    size_t n = end_row - obs_row + 1;
    std::vector<double> ts(n);
    Eigen::MatrixXd reref(static_cast<long>(n), 3 * ep.arms);
    for (size_t i = 0; i < n; ++i) {
      size_t r = obs_row + i;
      ts[i] = dev.timestamps[r];
      Pose3 rel = compose(obs_inv, dev.pose_at(r));
      for (int arm = 0; arm < ep.arms; ++arm) {
        Eigen::Vector3d p = hand.values.row(static_cast<long>(r)).segment(arm * 3, 3).transpose();
        reref.row(static_cast<long>(i)).segment(arm * 3, 3) = rel.apply(p).transpose();
      }
    }
    chunk.targets.resize(K, 3 * ep.arms);
    for (int k = 1; k <= K; ++k) {
      double tk = obs_time + static_cast<double>(k) * h / K;
      chunk.targets.row(k - 1) = lerp_rows(ts, reref, tk).transpose();
    }
  } else {
    const auto& eef = ep.require(SeriesKind::EefPoseBase);
    Pose3 cam = robot_cam(cfg);
    int d = cfg.robot_rotation_targets ? 12 : 3;
    chunk.targets.resize(K, d * ep.arms);
    for (int k = 1; k <= K; ++k) {
      double tk = obs_time + static_cast<double>(k) * h / K;
      Eigen::VectorXd row = eef.sample(tk);
      for (int arm = 0; arm < ep.arms; ++arm) {
        Eigen::Vector3d p = cam.apply(row.segment(arm * 12 + 9, 3));
        if (cfg.robot_rotation_targets) {
          Eigen::Matrix3d r = Eigen::Map<const Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(
              row.data() + arm * 12);
          Eigen::Matrix<double, 3, 3, Eigen::RowMajor> rc = cam.rotation() * r;
          chunk.targets.row(k - 1).segment(arm * 12, 9) =
              Eigen::Map<const Eigen::VectorXd>(rc.data(), 9).transpose();
          chunk.targets.row(k - 1).segment(arm * 12 + 9, 3) = p.transpose();
        } else {
          chunk.targets.row(k - 1).segment(arm * 3, 3) = p.transpose();
        }
      }
    }
  }
  return chunk;
}

ActionChunk build_joint_chunk(const Episode& ep, double obs_time, const AlignConfig& cfg) {
  if (ep.embodiment != Embodiment::Robot) {
    throw AlignError("joint chunks exist only for robot episodes");
  }
  double h = cfg.robot_horizon;
  int K = cfg.chunk_size;
  if (obs_time + h > ep.end() + kTimeEps) {
    throw HorizonExceedsEpisode("episode ends before obs_time + horizon");
  }
  const auto& act = ep.require(SeriesKind::JointAction);
  ActionChunk chunk;
  chunk.obs_time = obs_time;
  chunk.spacing = h / K;
  chunk.embodiment = Embodiment::Robot;
  chunk.space = ActionSpace::Joint;
  chunk.targets.resize(K, 7 * ep.arms);
  for (int k = 1; k <= K; ++k) {
    double tk = obs_time + static_cast<double>(k) * h / K;
    chunk.targets.row(k - 1) = act.sample(tk).transpose();
  }
  return chunk;
}

Eigen::VectorXd observation_features(const Episode& ep, size_t row, const AlignConfig& cfg) {
  const TimedSeries* scene = ep.find(SeriesKind::Scene);
  if (ep.embodiment == Embodiment::Human) {
    const auto& hand = ep.require(SeriesKind::HandPosDevice);
    // hand position, scene in device frame, plus object/bowl offsets relative
    // to the hand (the offsets make goal-directed deltas near-affine in the
    // features, which the policy's skip path exploits)
    int d = 3 * ep.arms + (scene ? 13 : 0);
    Eigen::VectorXd f(d);
    f.head(3 * ep.arms) = hand.values.row(static_cast<long>(row)).transpose();
    if (scene) {
      const auto& dev = ep.require(SeriesKind::DevicePoseWorld);
      Pose3 inv = dev.pose_at(row).inverse();
      Eigen::VectorXd sc = scene->values.row(static_cast<long>(row)).transpose();
      Eigen::Vector3d obj = inv.apply(sc.head<3>());
      Eigen::Vector3d bowl = inv.apply(sc.segment<3>(3));
      Eigen::Vector3d hp = f.head(3);
      f.segment(3 * ep.arms, 3) = obj;
      f.segment(3 * ep.arms + 3, 3) = bowl;
      f[3 * ep.arms + 6] = sc[6];
      f.segment(3 * ep.arms + 7, 3) = obj - hp;
      f.segment(3 * ep.arms + 10, 3) = bowl - hp;
    }
    return f;
  }
  const auto& eef = ep.require(SeriesKind::EefPoseBase);
  const auto& q = ep.require(SeriesKind::JointPos);
  int d = 19 * ep.arms + (scene ? 13 : 0);
  Eigen::VectorXd f(d);
  f.head(12 * ep.arms) = eef.values.row(static_cast<long>(row)).transpose();
  f.segment(12 * ep.arms, 7 * ep.arms) = q.values.row(static_cast<long>(row)).transpose();
  if (scene) {
    Pose3 cam = robot_cam(cfg);
    Eigen::VectorXd sc = scene->values.row(static_cast<long>(row)).transpose();
    f.segment(19 * ep.arms, 3) = cam.apply(sc.head<3>());
    f.segment(19 * ep.arms + 3, 3) = cam.apply(sc.segment<3>(3));
    f[19 * ep.arms + 6] = sc[6];
    // base-frame offsets from the recorded gripper position
    Eigen::Vector3d grip = eef.values.row(static_cast<long>(row)).segment<3>(9).transpose();
    f.segment(19 * ep.arms + 7, 3) = sc.head<3>() - grip;
    f.segment(19 * ep.arms + 10, 3) = sc.segment<3>(3) - grip;
  }
  return f;
}

EmbodimentStats fit_stats(const std::vector<UnifiedSample>& raw_samples, Embodiment e) {
  std::vector<const UnifiedSample*> sel;
  for (const auto& s : raw_samples)
    if (s.embodiment == e) sel.push_back(&s);
  if (sel.size() < 2) throw EmptySplit("need >= 2 samples to fit stats");

  EmbodimentStats st;
  st.embodiment = e;
  st.sample_count = static_cast<long>(sel.size());

  auto fit = [](auto get_rows, long dim) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
    long n = 0;
    get_rows([&](const auto& row) {
      mean += row.transpose();
      ++n;
    });
    mean /= static_cast<double>(n);
    Eigen::VectorXd var = Eigen::VectorXd::Zero(dim);
    get_rows([&](const auto& row) {
      Eigen::VectorXd d = row.transpose() - mean;
      var += d.cwiseProduct(d);
    });
    var /= static_cast<double>(n);  // population convention
    Eigen::VectorXd std = var.cwiseSqrt().cwiseMax(kStdFloor);
    return std::pair{mean, std};
  };

  long pd = sel[0]->features.size();
  auto [pm, ps] = fit(
      [&](auto&& f) {
        for (const auto* s : sel) f(s->features.transpose());
      },
      pd);
  st.proprio_mean = pm;
  st.proprio_std = ps;

  long ad = sel[0]->pose_chunk.targets.cols();
  auto [am, as] = fit(
      [&](auto&& f) {
        for (const auto* s : sel)
          for (long r = 0; r < s->pose_chunk.targets.rows(); ++r)
            f(s->pose_chunk.targets.row(r));
      },
      ad);
  st.pose_action_mean = am;
  st.pose_action_std = as;

  if (e == Embodiment::Robot && sel[0]->joint_chunk) {
    long jd = sel[0]->joint_chunk->targets.cols();
    auto [jm, js] = fit(
        [&](auto&& f) {
          for (const auto* s : sel)
            for (long r = 0; r < s->joint_chunk->targets.rows(); ++r)
              f(s->joint_chunk->targets.row(r));
        },
        jd);
    st.joint_action_mean = jm;
    st.joint_action_std = js;
  }
  return st;
}

Eigen::VectorXd normalize(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                          const Eigen::VectorXd& std) {
  if (x.size() != mean.size() || x.size() != std.size()) {
    throw DimensionMismatch("normalize: dimension mismatch");
  }
  return (x - mean).cwiseQuotient(std);
}

Eigen::VectorXd denormalize(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                            const Eigen::VectorXd& std) {
  if (x.size() != mean.size() || x.size() != std.size()) {
    throw DimensionMismatch("denormalize: dimension mismatch");
  }
  return x.cwiseProduct(std) + mean;
}

Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& x, const Eigen::VectorXd& mean,
                               const Eigen::VectorXd& std) {
  if (x.cols() != mean.size()) throw DimensionMismatch("normalize_rows: dimension mismatch");
  return (x.rowwise() - mean.transpose()).array().rowwise() / std.transpose().array();
}

Eigen::MatrixXd denormalize_rows(const Eigen::MatrixXd& x, const Eigen::VectorXd& mean,
                                 const Eigen::VectorXd& std) {
  if (x.cols() != mean.size()) throw DimensionMismatch("denormalize_rows: dimension mismatch");
  return (x.array().rowwise() * std.transpose().array()).matrix().rowwise() + mean.transpose();
}

Dataset build_dataset(std::vector<Episode> episodes, const AlignConfig& cfg) {
  if (episodes.empty()) throw EmptySplit("no episodes");
  std::sort(episodes.begin(), episodes.end(),
            [](const Episode& a, const Episode& b) { return a.source_id < b.source_id; });

  Dataset ds;
  ds.config = cfg;
  for (const Episode& raw_ep : episodes) {
    Episode ep = time_align(raw_ep);
    if (ep.embodiment == Embodiment::Human) ds.human_arms = ep.arms;
    else ds.robot_arms = ep.arms;
    double h = cfg.horizon(ep.embodiment);
    const auto& ts = ep.series.front().timestamps;
    for (size_t r = 0; r < ts.size(); r += static_cast<size_t>(cfg.stride)) {
      double t = ts[r];
      if (t + h > ep.end() + kTimeEps) break;  // episode tail yields no samples
      UnifiedSample s;
      s.embodiment = ep.embodiment;
      s.features = observation_features(ep, r, cfg);
      s.pose_chunk = build_chunk(ep, t, cfg);
      if (ep.embodiment == Embodiment::Robot) {
        s.joint_chunk = build_joint_chunk(ep, t, cfg);
      }
      ds.samples.push_back(std::move(s));
    }
  }
  if (ds.samples.empty()) throw EmptySplit("no samples extractable from episodes");

  if (ds.count(Embodiment::Human) > 0) {
    ds.human_stats = fit_stats(ds.samples, Embodiment::Human);
  }
  if (ds.count(Embodiment::Robot) > 0) {
    ds.robot_stats = fit_stats(ds.samples, Embodiment::Robot);
  }
  for (auto& s : ds.samples) {
    const EmbodimentStats& st = ds.stats(s.embodiment);
    s.features = normalize(s.features, st.proprio_mean, st.proprio_std);
    s.pose_chunk.targets =
        normalize_rows(s.pose_chunk.targets, st.pose_action_mean, st.pose_action_std);
    if (s.joint_chunk) {
      s.joint_chunk->targets =
          normalize_rows(s.joint_chunk->targets, st.joint_action_mean, st.joint_action_std);
    }
  }
  return ds;
}

namespace {

void write_bin(const std::string& path, const std::vector<double>& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw AlignError("cannot write " + path);
  out.write(reinterpret_cast<const char*>(data.data()),
            static_cast<std::streamsize>(data.size() * sizeof(double)));
}

std::vector<double> read_bin(const std::string& path) {
  std::string raw = read_file(path);
  if (raw.size() % sizeof(double) != 0) throw AlignError("truncated binary: " + path);
  std::vector<double> out(raw.size() / sizeof(double));
  std::memcpy(out.data(), raw.data(), raw.size());
  return out;
}

std::vector<double> to_vec(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<long>(v.size()));
}

void put_stats(KeyValueFile& kv, const std::string& section, const EmbodimentStats& st) {
  kv.set_int(section + ".sample_count", st.sample_count);
  kv.set_doubles(section + ".proprio_mean", to_vec(st.proprio_mean));
  kv.set_doubles(section + ".proprio_std", to_vec(st.proprio_std));
  kv.set_doubles(section + ".pose_action_mean", to_vec(st.pose_action_mean));
  kv.set_doubles(section + ".pose_action_std", to_vec(st.pose_action_std));
  if (st.joint_action_mean.size() > 0) {
    kv.set_doubles(section + ".joint_action_mean", to_vec(st.joint_action_mean));
    kv.set_doubles(section + ".joint_action_std", to_vec(st.joint_action_std));
  }
}

EmbodimentStats get_stats(const KeyValueFile& kv, const std::string& section, Embodiment e) {
  EmbodimentStats st;
  st.embodiment = e;
  st.sample_count = kv.get_int(section + ".sample_count");
  st.proprio_mean = to_eigen(kv.get_doubles(section + ".proprio_mean"));
  st.proprio_std = to_eigen(kv.get_doubles(section + ".proprio_std"));
  st.pose_action_mean = to_eigen(kv.get_doubles(section + ".pose_action_mean"));
  st.pose_action_std = to_eigen(kv.get_doubles(section + ".pose_action_std"));
  if (kv.has(section + ".joint_action_mean")) {
    st.joint_action_mean = to_eigen(kv.get_doubles(section + ".joint_action_mean"));
    st.joint_action_std = to_eigen(kv.get_doubles(section + ".joint_action_std"));
  } else {
    st.joint_action_mean.resize(0);
    st.joint_action_std.resize(0);
  }
  return st;
}

}  // namespace

void save_dataset(const std::string& dir, const Dataset& ds) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  KeyValueFile kv;
  kv.set("dataset.format", "egoalign-dataset");
  kv.set_int("dataset.version", 1);
  kv.set("dataset.float_layout", "little-endian float64, row-major per sample");
  kv.set_int("config.chunk_size", ds.config.chunk_size);
  kv.set_double("config.robot_horizon", ds.config.robot_horizon);
  kv.set_double("config.human_horizon", ds.config.human_horizon);
  kv.set_int("config.stride", ds.config.stride);
  kv.set_int("config.robot_rotation_targets", ds.config.robot_rotation_targets ? 1 : 0);
  if (ds.config.robot_cam_extrinsics) {
    const Pose3& p = *ds.config.robot_cam_extrinsics;
    std::vector<double> v(12);
    Eigen::Map<Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(v.data()) = p.rotation();
    Eigen::Map<Eigen::Vector3d>(v.data() + 9) = p.translation();
    kv.set_doubles("config.robot_cam_extrinsics", v);
  }

  for (Embodiment e : {Embodiment::Human, Embodiment::Robot}) {
    long n = ds.count(e);
    if (n == 0) continue;
    std::string emb = embodiment_name(e);
    const EmbodimentStats& st = ds.stats(e);
    std::vector<double> feats, poses, joints, times;
    long fd = 0, pd = 0, jd = 0, K = ds.config.chunk_size;
    for (const auto& s : ds.samples) {
      if (s.embodiment != e) continue;
      fd = s.features.size();
      pd = s.pose_chunk.targets.cols();
      times.push_back(s.pose_chunk.obs_time);
      for (long i = 0; i < fd; ++i) feats.push_back(s.features[i]);
      for (long r = 0; r < s.pose_chunk.targets.rows(); ++r)
        for (long c = 0; c < pd; ++c) poses.push_back(s.pose_chunk.targets(r, c));
      if (s.joint_chunk) {
        jd = s.joint_chunk->targets.cols();
        for (long r = 0; r < s.joint_chunk->targets.rows(); ++r)
          for (long c = 0; c < jd; ++c) joints.push_back(s.joint_chunk->targets(r, c));
      }
    }
    kv.set_int(emb + ".count", n);
    kv.set_int(emb + ".feature_dim", fd);
    kv.set_int(emb + ".pose_dim", pd);
    kv.set_int(emb + ".chunk_k", K);
    kv.set_int(emb + ".arms", e == Embodiment::Human ? ds.human_arms : ds.robot_arms);
    kv.set_double(emb + ".spacing", ds.config.horizon(e) / K);
    auto dump = [&](const std::string& name, const std::vector<double>& data) {
      write_bin(dir + "/" + name, data);
      kv.set(emb + ".hash_" + name,
             std::to_string(fnv1a64(data.data(), data.size() * sizeof(double))));
    };
    dump(emb + "_features.bin", feats);
    dump(emb + "_pose_chunks.bin", poses);
    dump(emb + "_obs_times.bin", times);
    if (!joints.empty()) {
      kv.set_int(emb + ".joint_dim", jd);
      dump(emb + "_joint_chunks.bin", joints);
    }
    put_stats(kv, "stats_" + emb, st);
  }
  write_file(dir + "/manifest", kv.dump());
}

Dataset load_dataset(const std::string& dir) {
  KeyValueFile kv = KeyValueFile::load(dir + "/manifest");
  if (kv.get("dataset.format") != "egoalign-dataset") {
    throw AlignError("not a dataset directory: " + dir);
  }
  Dataset ds;
  ds.config.chunk_size = static_cast<int>(kv.get_int("config.chunk_size"));
  ds.config.robot_horizon = kv.get_double("config.robot_horizon");
  ds.config.human_horizon = kv.get_double("config.human_horizon");
  ds.config.stride = static_cast<int>(kv.get_int("config.stride"));
  ds.config.robot_rotation_targets = kv.get_int("config.robot_rotation_targets") != 0;
  if (kv.has("config.robot_cam_extrinsics")) {
    auto v = kv.get_doubles("config.robot_cam_extrinsics");
    Eigen::Matrix3d r = Eigen::Map<Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(v.data());
    ds.config.robot_cam_extrinsics = Pose3::from_drifted(r, Eigen::Map<Eigen::Vector3d>(v.data() + 9));
  }

  for (Embodiment e : {Embodiment::Human, Embodiment::Robot}) {
    std::string emb = embodiment_name(e);
    if (!kv.has(emb + ".count")) continue;
    long n = kv.get_int(emb + ".count");
    long fd = kv.get_int(emb + ".feature_dim");
    long pd = kv.get_int(emb + ".pose_dim");
    long K = kv.get_int(emb + ".chunk_k");
    long jd = kv.get_int_or(emb + ".joint_dim", 0);
    double spacing = kv.get_double(emb + ".spacing");
    int arms = static_cast<int>(kv.get_int(emb + ".arms"));
    if (e == Embodiment::Human) ds.human_arms = arms;
    else ds.robot_arms = arms;

    auto load = [&](const std::string& name) {
      auto data = read_bin(dir + "/" + name);
      uint64_t h = fnv1a64(data.data(), data.size() * sizeof(double));
      if (std::to_string(h) != kv.get(emb + ".hash_" + name)) {
        throw AlignError("content hash mismatch for " + name);
      }
      return data;
    };
    auto feats = load(emb + "_features.bin");
    auto poses = load(emb + "_pose_chunks.bin");
    auto times = load(emb + "_obs_times.bin");
    std::vector<double> joints;
    if (jd > 0) joints = load(emb + "_joint_chunks.bin");

    for (long i = 0; i < n; ++i) {
      UnifiedSample s;
      s.embodiment = e;
      s.features = Eigen::Map<const Eigen::VectorXd>(feats.data() + i * fd, fd);
      s.pose_chunk.obs_time = times[static_cast<size_t>(i)];
      s.pose_chunk.spacing = spacing;
      s.pose_chunk.embodiment = e;
      s.pose_chunk.space = ActionSpace::Pose;
      s.pose_chunk.targets = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic,
                                                            Eigen::Dynamic, Eigen::RowMajor>>(
          poses.data() + i * K * pd, K, pd);
      if (jd > 0) {
        ActionChunk jc;
        jc.obs_time = s.pose_chunk.obs_time;
        jc.spacing = spacing;
        jc.embodiment = e;
        jc.space = ActionSpace::Joint;
        jc.targets = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                    Eigen::RowMajor>>(
            joints.data() + i * K * jd, K, jd);
        s.joint_chunk = std::move(jc);
      }
      ds.samples.push_back(std::move(s));
    }
    if (e == Embodiment::Human) ds.human_stats = get_stats(kv, "stats_" + emb, e);
    else ds.robot_stats = get_stats(kv, "stats_" + emb, e);
  }
  return ds;
}

}  // namespace egoalign
