#include "egoalign/policy.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "egoalign/config.hpp"

namespace egoalign {

namespace {

Affine make_affine(int in, int out, std::mt19937_64& rng) {
  // symmetric uniform scaled by 1/sqrt(fan_in)
  double scale = 1.0 / std::sqrt(static_cast<double>(in));
  std::uniform_real_distribution<double> dist(-scale, scale);
  Affine a;
  a.W.resize(in, out);
  a.b.resize(out);
  for (long i = 0; i < in; ++i)
    for (long j = 0; j < out; ++j) a.W(i, j) = dist(rng);
  for (long j = 0; j < out; ++j) a.b[j] = dist(rng);
  return a;
}

Affine zero_like(const Affine& a) {
  Affine z;
  z.W = Eigen::MatrixXd::Zero(a.W.rows(), a.W.cols());
  z.b = Eigen::VectorXd::Zero(a.b.size());
  return z;
}

template <typename P, typename F>
void for_each_affine(P& p, F&& f) {
  f(p.human_in);
  f(p.robot_in);
  for (auto& layer : p.trunk) f(layer);
  f(p.pose_head);
  f(p.joint_head);
}

template <typename Pa, typename Pb, typename F>
void zip_affine(Pa& a, Pb& b, F&& f) {
  f(a.human_in, b.human_in);
  f(a.robot_in, b.robot_in);
  for (size_t i = 0; i < a.trunk.size(); ++i) f(a.trunk[i], b.trunk[i]);
  f(a.pose_head, b.pose_head);
  f(a.joint_head, b.joint_head);
}

struct ForwardCache {
  Eigen::MatrixXd input;
  Eigen::MatrixXd adapter_out;
  std::vector<Eigen::MatrixXd> trunk_h;  // tanh activations per trunk layer

  const Eigen::MatrixXd& trunk_out() const { return trunk_h.back(); }
};

ForwardCache run_trunk(const PolicyParams& p, const Eigen::MatrixXd& x, Embodiment e) {
  const Affine& in = e == Embodiment::Human ? p.human_in : p.robot_in;
  if (x.cols() != in.W.rows()) {
    throw PolicyError("feature dimension " + std::to_string(x.cols()) +
                      " does not match adapter input " + std::to_string(in.W.rows()));
  }
  ForwardCache c;
  c.input = x;
  c.adapter_out = (x * in.W).rowwise() + in.b.transpose();
  Eigen::MatrixXd h = c.adapter_out;
  for (const Affine& layer : p.trunk) {
    h = (((h * layer.W).rowwise() + layer.b.transpose()).array().tanh()).matrix();
    c.trunk_h.push_back(h);
  }
  return c;
}

// Heads read the trunk output concatenated with the (pre-tanh) adapter
// output. The skip half is affine in the inputs, so "current posture plus a
// learned delta" is expressible without saturating the trunk; absolute-space
// regression-to-the-mean would otherwise stall closed-loop control.
Eigen::MatrixXd head_input(const ForwardCache& c) {
  Eigen::MatrixXd h(c.trunk_out().rows(), c.trunk_out().cols() + c.adapter_out.cols());
  h << c.trunk_out(), c.adapter_out;
  return h;
}

Eigen::MatrixXd apply_head(const Affine& head, const Eigen::MatrixXd& h) {
  return (h * head.W).rowwise() + head.b.transpose();
}

// Backprop a gradient at the head input (trunk half + skip half) down through
// trunk and adapter.
void backprop_trunk(const PolicyParams& p, const ForwardCache& c,
                    const Eigen::MatrixXd& d_head_in, Embodiment e, PolicyGradients& g) {
  long tw = c.trunk_out().cols();
  Eigen::MatrixXd d_out = d_head_in.leftCols(tw);
  for (long l = static_cast<long>(p.trunk.size()) - 1; l >= 0; --l) {
    const Eigen::MatrixXd& h = c.trunk_h[static_cast<size_t>(l)];
    Eigen::MatrixXd dz = (d_out.array() * (1.0 - h.array().square())).matrix();
    const Eigen::MatrixXd& h_prev =
        l == 0 ? c.adapter_out : c.trunk_h[static_cast<size_t>(l - 1)];
    g.trunk[static_cast<size_t>(l)].W += h_prev.transpose() * dz;
    g.trunk[static_cast<size_t>(l)].b += dz.colwise().sum().transpose();
    d_out = dz * p.trunk[static_cast<size_t>(l)].W.transpose();
  }
  d_out += d_head_in.rightCols(d_head_in.cols() - tw);  // skip-path gradient
  Affine& gin = e == Embodiment::Human ? g.human_in : g.robot_in;
  gin.W += c.input.transpose() * d_out;
  gin.b += d_out.colwise().sum().transpose();
}

}  // namespace

PolicyParams init_params(const PolicyDims& dims, uint64_t seed) {
  std::mt19937_64 rng(seed);
  PolicyParams p;
  p.dims = dims;
  p.seed = seed;
  p.human_in = make_affine(std::max(dims.human_in, 1), dims.width, rng);
  p.robot_in = make_affine(std::max(dims.robot_in, 1), dims.width, rng);
  int prev = dims.width;
  for (int w : dims.trunk_hidden) {
    p.trunk.push_back(make_affine(prev, w, rng));
    prev = w;
  }
  if (p.trunk.empty()) p.trunk.push_back(make_affine(prev, prev, rng));
  p.pose_head = make_affine(prev + dims.width, std::max(dims.pose_out, 1), rng);
  p.joint_head = make_affine(prev + dims.width, std::max(dims.joint_out, 1), rng);
  return p;
}

PolicyGradients zero_gradients(const PolicyParams& p) {
  PolicyGradients g;
  g.human_in = zero_like(p.human_in);
  g.robot_in = zero_like(p.robot_in);
  for (const auto& layer : p.trunk) g.trunk.push_back(zero_like(layer));
  g.pose_head = zero_like(p.pose_head);
  g.joint_head = zero_like(p.joint_head);
  return g;
}

Eigen::MatrixXd forward_pose(const PolicyParams& p, const Eigen::MatrixXd& x, Embodiment e) {
  return apply_head(p.pose_head, head_input(run_trunk(p, x, e)));
}

Eigen::MatrixXd forward_joint(const PolicyParams& p, const Eigen::MatrixXd& x) {
  return apply_head(p.joint_head, head_input(run_trunk(p, x, Embodiment::Robot)));
}

Prediction forward(const PolicyParams& p, const UnifiedSample& sample,
                   uint64_t expected_stats_hash) {
  if (p.stats_hash != 0 && expected_stats_hash != 0 && p.stats_hash != expected_stats_hash) {
    throw StatsMismatch("sample normalized under different stats than the policy");
  }
  Eigen::MatrixXd x = sample.features.transpose();
  ForwardCache c = run_trunk(p, x, sample.embodiment);
  Eigen::MatrixXd hin = head_input(c);
  Prediction out;
  Eigen::MatrixXd pose_flat = apply_head(p.pose_head, hin);
  long pd = pose_flat.cols() / p.dims.chunk_k;
  out.pose = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                            Eigen::RowMajor>>(pose_flat.row(0).data(),
                                                              p.dims.chunk_k, pd);
  if (sample.embodiment == Embodiment::Robot && p.dims.joint_out > 0) {
    Eigen::MatrixXd joint_flat = apply_head(p.joint_head, hin);
    long jd = joint_flat.cols() / p.dims.chunk_k;
    out.joint = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                               Eigen::RowMajor>>(joint_flat.row(0).data(),
                                                                 p.dims.chunk_k, jd);
  }
  return out;
}

namespace {

// Per-column weights for a flattened (K x D) chunk; 1 on the executed prefix,
// w.tail_weight past it. All-ones when the chunk fits inside the prefix.
Eigen::RowVectorXd chunk_col_weights(long cols, int chunk_k, const LossWeights& w) {
  Eigen::RowVectorXd cw = Eigen::RowVectorXd::Ones(cols);
  if (w.executed_prefix > 0 && chunk_k > w.executed_prefix && cols % chunk_k == 0) {
    long d = cols / chunk_k;
    for (long k = w.executed_prefix; k < chunk_k; ++k)
      cw.segment(k * d, d).setConstant(w.tail_weight);
  }
  return cw;
}

// Weighted mean of squared errors, normalized by the weight sum so a uniform
// unit error yields exactly 1.
double weighted_mse(const Eigen::MatrixXd& diff, const Eigen::RowVectorXd& cw) {
  return (diff.array().square().rowwise() * cw.array()).sum() /
         (static_cast<double>(diff.rows()) * cw.sum());
}

}  // namespace

LossBreakdown loss(const PolicyParams& p, const Batch* human, const Batch* robot,
                   const LossWeights& w) {
  bool has_h = human && human->features.rows() > 0;
  bool has_r = robot && robot->features.rows() > 0;
  if (!has_h && !has_r) throw EmptyBatch("both batches empty");
  LossBreakdown out;
  if (has_h) {
    Eigen::MatrixXd diff =
        forward_pose(p, human->features, Embodiment::Human) - human->pose_targets;
    out.human_pose = weighted_mse(diff, chunk_col_weights(diff.cols(), p.dims.chunk_k, w));
  }
  if (has_r) {
    ForwardCache c = run_trunk(p, robot->features, Embodiment::Robot);
    Eigen::MatrixXd hin = head_input(c);
    Eigen::MatrixXd pd = apply_head(p.pose_head, hin) - robot->pose_targets;
    Eigen::MatrixXd jd = apply_head(p.joint_head, hin) - robot->joint_targets;
    out.robot_pose = weighted_mse(pd, chunk_col_weights(pd.cols(), p.dims.chunk_k, w));
    out.robot_joint = weighted_mse(jd, chunk_col_weights(jd.cols(), p.dims.chunk_k, w));
  }
  out.total = w.human_pose * out.human_pose + w.robot_pose * out.robot_pose +
              w.robot_joint * out.robot_joint;
  return out;
}

std::pair<LossBreakdown, PolicyGradients> loss_and_grad(const PolicyParams& p,
                                                        const Batch* human,
                                                        const Batch* robot,
                                                        const LossWeights& w) {
  bool has_h = human && human->features.rows() > 0;
  bool has_r = robot && robot->features.rows() > 0;
  if (!has_h && !has_r) throw EmptyBatch("both batches empty");
  LossBreakdown out;
  PolicyGradients g = zero_gradients(p);

  if (has_h) {
    ForwardCache c = run_trunk(p, human->features, Embodiment::Human);
    Eigen::MatrixXd hin = head_input(c);
    Eigen::MatrixXd pred = apply_head(p.pose_head, hin);
    Eigen::MatrixXd diff = pred - human->pose_targets;
    Eigen::RowVectorXd cw = chunk_col_weights(diff.cols(), p.dims.chunk_k, w);
    double n = static_cast<double>(diff.rows()) * cw.sum();
    out.human_pose = weighted_mse(diff, cw);
    Eigen::MatrixXd d_pred =
        (2.0 * w.human_pose / n) * (diff.array().rowwise() * cw.array()).matrix();
    g.pose_head.W += hin.transpose() * d_pred;
    g.pose_head.b += d_pred.colwise().sum().transpose();
    backprop_trunk(p, c, d_pred * p.pose_head.W.transpose(), Embodiment::Human, g);
  }
  if (has_r) {
    ForwardCache c = run_trunk(p, robot->features, Embodiment::Robot);
    Eigen::MatrixXd hin = head_input(c);
    Eigen::MatrixXd pose_pred = apply_head(p.pose_head, hin);
    Eigen::MatrixXd joint_pred = apply_head(p.joint_head, hin);
    Eigen::MatrixXd pd = pose_pred - robot->pose_targets;
    Eigen::MatrixXd jd = joint_pred - robot->joint_targets;
    Eigen::RowVectorXd cwp = chunk_col_weights(pd.cols(), p.dims.chunk_k, w);
    Eigen::RowVectorXd cwj = chunk_col_weights(jd.cols(), p.dims.chunk_k, w);
    double np = static_cast<double>(pd.rows()) * cwp.sum();
    double nj = static_cast<double>(jd.rows()) * cwj.sum();
    out.robot_pose = weighted_mse(pd, cwp);
    out.robot_joint = weighted_mse(jd, cwj);
    Eigen::MatrixXd d_pose =
        (2.0 * w.robot_pose / np) * (pd.array().rowwise() * cwp.array()).matrix();
    Eigen::MatrixXd d_joint =
        (2.0 * w.robot_joint / nj) * (jd.array().rowwise() * cwj.array()).matrix();
    g.pose_head.W += hin.transpose() * d_pose;
    g.pose_head.b += d_pose.colwise().sum().transpose();
    g.joint_head.W += hin.transpose() * d_joint;
    g.joint_head.b += d_joint.colwise().sum().transpose();
    backprop_trunk(p, c,
                   d_pose * p.pose_head.W.transpose() + d_joint * p.joint_head.W.transpose(),
                   Embodiment::Robot, g);
  }
  out.total = w.human_pose * out.human_pose + w.robot_pose * out.robot_pose +
              w.robot_joint * out.robot_joint;
  return {out, g};
}

namespace {

struct EmbodimentData {
  Eigen::MatrixXd X, Yp, Yq;
};

EmbodimentData collect(const Dataset& ds, Embodiment e) {
  EmbodimentData d;
  long n = ds.count(e);
  if (n == 0) return d;
  long fd = 0, pd = 0, jd = 0, K = ds.config.chunk_size;
  for (const auto& s : ds.samples) {
    if (s.embodiment != e) continue;
    fd = s.features.size();
    pd = s.pose_chunk.targets.cols();
    if (s.joint_chunk) jd = s.joint_chunk->targets.cols();
    break;
  }
  d.X.resize(n, fd);
  d.Yp.resize(n, K * pd);
  if (jd > 0) d.Yq.resize(n, K * jd);
  long r = 0;
  for (const auto& s : ds.samples) {
    if (s.embodiment != e) continue;
    d.X.row(r) = s.features.transpose();
    for (long k = 0; k < K; ++k)
      d.Yp.row(r).segment(k * pd, pd) = s.pose_chunk.targets.row(k);
    if (jd > 0)
      for (long k = 0; k < K; ++k)
        d.Yq.row(r).segment(k * jd, jd) = s.joint_chunk->targets.row(k);
    ++r;
  }
  return d;
}

Batch sample_batch(const EmbodimentData& d, int bsz, std::mt19937_64& rng) {
  Batch b;
  if (d.X.rows() == 0 || bsz <= 0) return b;
  std::uniform_int_distribution<long> pick(0, d.X.rows() - 1);
  b.features.resize(bsz, d.X.cols());
  b.pose_targets.resize(bsz, d.Yp.cols());
  if (d.Yq.size() > 0) b.joint_targets.resize(bsz, d.Yq.cols());
  for (int i = 0; i < bsz; ++i) {
    long r = pick(rng);
    b.features.row(i) = d.X.row(r);
    b.pose_targets.row(i) = d.Yp.row(r);
    if (d.Yq.size() > 0) b.joint_targets.row(i) = d.Yq.row(r);
  }
  return b;
}

}  // namespace

TrainResult train(const Dataset& ds, const TrainConfig& cfg) {
  EmbodimentData human = collect(ds, Embodiment::Human);
  EmbodimentData robot = collect(ds, Embodiment::Robot);
  if (human.X.rows() == 0 && robot.X.rows() == 0) throw EmptyBatch("empty dataset");

  PolicyDims dims = cfg.dims;
  dims.chunk_k = ds.config.chunk_size;
  dims.human_in = static_cast<int>(human.X.cols());
  dims.robot_in = static_cast<int>(robot.X.cols());
  dims.pose_out = static_cast<int>(std::max(human.Yp.cols(), robot.Yp.cols()));
  dims.joint_out = static_cast<int>(robot.Yq.cols());
  if (human.Yp.cols() > 0 && robot.Yp.cols() > 0 && human.Yp.cols() != robot.Yp.cols()) {
    throw PolicyError("human and robot pose-chunk dimensions differ; shared pose head "
                      "requires equal arms and chunk size");
  }

  TrainResult result;
  result.params = init_params(dims, cfg.seed);
  result.params.stats_hash = ds.stats_hash();
  PolicyParams& p = result.params;

  PolicyGradients vel = zero_gradients(p);  // momentum buffers
  PolicyGradients m1 = zero_gradients(p), m2 = zero_gradients(p);  // adamw moments
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);

  for (long it = 0; it < cfg.iterations; ++it) {
    Batch hb = sample_batch(human, cfg.human_batch, rng);
    Batch rb = sample_batch(robot, cfg.robot_batch, rng);
    auto [lb, g] = loss_and_grad(p, hb.features.rows() ? &hb : nullptr,
                                 rb.features.rows() ? &rb : nullptr, cfg.weights);
    result.trace.push_back(lb);

    double lr = cfg.learning_rate;
    if (cfg.lr_schedule == "cosine") {
      lr *= 0.5 * (1.0 + std::cos(M_PI * static_cast<double>(it) /
                                  static_cast<double>(cfg.iterations)));
    } else if (cfg.lr_schedule != "constant") {
      throw PolicyError("unknown lr_schedule: " + cfg.lr_schedule);
    }

    if (cfg.optimizer == "adamw") {
      constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
      double t = static_cast<double>(it + 1);
      double c1 = 1.0 - std::pow(b1, t), c2 = 1.0 - std::pow(b2, t);
      auto step = [&](Affine& w, Affine& gw, Affine& mm, Affine& vv) {
        mm.W = b1 * mm.W + (1 - b1) * gw.W;
        vv.W = b2 * vv.W + (1 - b2) * gw.W.cwiseProduct(gw.W);
        w.W -= lr * ((mm.W / c1).array() / ((vv.W / c2).array().sqrt() + eps)).matrix();
        w.W *= (1.0 - lr * cfg.weight_decay);
        mm.b = b1 * mm.b + (1 - b1) * gw.b;
        vv.b = b2 * vv.b + (1 - b2) * gw.b.cwiseProduct(gw.b);
        w.b -= lr * ((mm.b / c1).array() / ((vv.b / c2).array().sqrt() + eps)).matrix();
      };
      step(p.human_in, g.human_in, m1.human_in, m2.human_in);
      step(p.robot_in, g.robot_in, m1.robot_in, m2.robot_in);
      for (size_t l = 0; l < p.trunk.size(); ++l) step(p.trunk[l], g.trunk[l], m1.trunk[l], m2.trunk[l]);
      step(p.pose_head, g.pose_head, m1.pose_head, m2.pose_head);
      step(p.joint_head, g.joint_head, m1.joint_head, m2.joint_head);
    } else {
      zip_affine(vel, g, [&](Affine& v, const Affine& gw) {
        v.W = cfg.momentum * v.W - lr * gw.W;
        v.b = cfg.momentum * v.b - lr * gw.b;
      });
      zip_affine(p, vel, [](Affine& w, const Affine& v) {
        w.W += v.W;
        w.b += v.b;
      });
    }
    ++p.iteration;
  }
  return result;
}

namespace {

void append_affine(std::vector<double>& blob, const Affine& a) {
  blob.insert(blob.end(), a.W.data(), a.W.data() + a.W.size());
  blob.insert(blob.end(), a.b.data(), a.b.data() + a.b.size());
}

void read_affine(const std::vector<double>& blob, size_t& off, Affine& a) {
  if (off + static_cast<size_t>(a.W.size() + a.b.size()) > blob.size()) {
    throw PolicyError("checkpoint blob too short");
  }
  std::copy(blob.begin() + static_cast<long>(off),
            blob.begin() + static_cast<long>(off) + a.W.size(), a.W.data());
  off += static_cast<size_t>(a.W.size());
  std::copy(blob.begin() + static_cast<long>(off),
            blob.begin() + static_cast<long>(off) + a.b.size(), a.b.data());
  off += static_cast<size_t>(a.b.size());
}

}  // namespace

void save_checkpoint(const std::string& dir, const PolicyParams& p) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  KeyValueFile kv;
  kv.set("checkpoint.format", "egoalign-checkpoint");
  kv.set_int("checkpoint.version", 1);
  kv.set("checkpoint.weight_layout", "little-endian float64; W column-major then b, "
                                     "order: human_in, robot_in, trunk, pose_head, joint_head");
  kv.set_int("dims.human_in", p.dims.human_in);
  kv.set_int("dims.robot_in", p.dims.robot_in);
  kv.set_int("dims.width", p.dims.width);
  std::vector<double> th(p.dims.trunk_hidden.begin(), p.dims.trunk_hidden.end());
  kv.set_doubles("dims.trunk_hidden", th);
  kv.set_int("dims.pose_out", p.dims.pose_out);
  kv.set_int("dims.joint_out", p.dims.joint_out);
  kv.set_int("dims.chunk_k", p.dims.chunk_k);
  kv.set("train.seed", std::to_string(p.seed));
  kv.set_int("train.iteration", p.iteration);
  kv.set("train.stats_hash", std::to_string(p.stats_hash));

  std::vector<double> blob;
  for_each_affine(const_cast<PolicyParams&>(p),
                  [&](const Affine& a) { append_affine(blob, a); });
  kv.set("checkpoint.weight_hash",
         std::to_string(fnv1a64(blob.data(), blob.size() * sizeof(double))));
  write_file(dir + "/manifest", kv.dump());
  std::ofstream out(dir + "/weights.bin", std::ios::binary);
  out.write(reinterpret_cast<const char*>(blob.data()),
            static_cast<std::streamsize>(blob.size() * sizeof(double)));
}

PolicyParams load_checkpoint(const std::string& dir) {
  KeyValueFile kv = KeyValueFile::load(dir + "/manifest");
  if (kv.get("checkpoint.format") != "egoalign-checkpoint") {
    throw PolicyError("not a checkpoint directory: " + dir);
  }
  PolicyDims dims;
  dims.human_in = static_cast<int>(kv.get_int("dims.human_in"));
  dims.robot_in = static_cast<int>(kv.get_int("dims.robot_in"));
  dims.width = static_cast<int>(kv.get_int("dims.width"));
  dims.trunk_hidden.clear();
  for (double v : kv.get_doubles("dims.trunk_hidden"))
    dims.trunk_hidden.push_back(static_cast<int>(v));
  dims.pose_out = static_cast<int>(kv.get_int("dims.pose_out"));
  dims.joint_out = static_cast<int>(kv.get_int("dims.joint_out"));
  dims.chunk_k = static_cast<int>(kv.get_int("dims.chunk_k"));

  PolicyParams p = init_params(dims, 0);
  p.seed = std::stoull(kv.get("train.seed"));
  p.iteration = kv.get_int("train.iteration");
  p.stats_hash = std::stoull(kv.get("train.stats_hash"));

  std::string raw = read_file(dir + "/weights.bin");
  std::vector<double> blob(raw.size() / sizeof(double));
  std::memcpy(blob.data(), raw.data(), blob.size() * sizeof(double));
  if (std::to_string(fnv1a64(blob.data(), blob.size() * sizeof(double))) !=
      kv.get("checkpoint.weight_hash")) {
    throw PolicyError("checkpoint weight hash mismatch");
  }
  size_t off = 0;
  for_each_affine(p, [&](Affine& a) { read_affine(blob, off, a); });
  if (off != blob.size()) throw PolicyError("checkpoint blob size mismatch");
  return p;
}

RolloutResult rollout(const PolicyParams& p, RolloutEnv& env,
                      const EmbodimentStats& robot_stats, const RolloutConfig& cfg) {
  if (p.dims.joint_out <= 0) throw PolicyError("policy has no joint head outputs");
  long jd = p.dims.joint_out / p.dims.chunk_k;
  long controls = std::lround(cfg.inference_period * cfg.control_rate);
  double dt = cfg.chunk_horizon / p.dims.chunk_k;  // 4 s / 100 = 25 Hz control grid

  RolloutResult res;
  while (!env.done()) {
    Eigen::VectorXd x = env.robot_features();
    if (p.stats_hash != 0 && x.size() != robot_stats.proprio_mean.size()) {
      throw EnvFault("environment feature dimension mismatch");
    }
    Eigen::VectorXd xn = normalize(x, robot_stats.proprio_mean, robot_stats.proprio_std);
    // Dimensions whose std sits at the floor were constant in training, so
    // they carry no signal; pin them to their training value (0 after
    // z-scoring) instead of letting the floor amplify micrometre deviations
    // by a factor of a million.
    for (long i = 0; i < xn.size(); ++i)
      if (robot_stats.proprio_std[i] <= kStdFloor) xn[i] = 0.0;
    Eigen::MatrixXd flat = forward_joint(p, xn.transpose());
    ++res.inference_steps;
    for (long k = 0; k < std::min(controls, static_cast<long>(p.dims.chunk_k)); ++k) {
      if (env.done()) break;
      Eigen::VectorXd qn = flat.row(0).segment(k * jd, jd).transpose();
      Eigen::VectorXd q =
          denormalize(qn, robot_stats.joint_action_mean, robot_stats.joint_action_std);
      env.apply_control(q, dt);
    }
  }
  res.score = env.score();
  return res;
}

}  // namespace egoalign
