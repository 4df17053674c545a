#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>

#include "egoalign/policy.hpp"

using namespace egoalign;

namespace {

PolicyDims small_dims() {
  PolicyDims d;
  d.human_in = 4;
  d.robot_in = 6;
  d.width = 8;
  d.trunk_hidden = {8};
  d.chunk_k = 5;
  d.pose_out = 5 * 3;
  d.joint_out = 5 * 2;
  return d;
}

Batch random_batch(std::mt19937_64& rng, long b, int in, int pose_out, int joint_out) {
  std::normal_distribution<double> g(0.0, 1.0);
  Batch out;
  out.features.resize(b, in);
  out.pose_targets.resize(b, pose_out);
  out.joint_targets.resize(joint_out > 0 ? b : 0, std::max(joint_out, 0));
  auto fill = [&](Eigen::MatrixXd& m) {
    for (long i = 0; i < m.rows(); ++i)
      for (long j = 0; j < m.cols(); ++j) m(i, j) = g(rng);
  };
  fill(out.features);
  fill(out.pose_targets);
  fill(out.joint_targets);
  return out;
}

double flat_norm(const Affine& a) { return a.W.norm() + a.b.norm(); }

// Flatten all parameters into one vector (for finite differences).
std::vector<double*> param_ptrs(PolicyParams& p) {
  std::vector<double*> out;
  auto add = [&](Affine& a) {
    for (long i = 0; i < a.W.size(); ++i) out.push_back(a.W.data() + i);
    for (long i = 0; i < a.b.size(); ++i) out.push_back(a.b.data() + i);
  };
  add(p.human_in);
  add(p.robot_in);
  for (auto& t : p.trunk) add(t);
  add(p.pose_head);
  add(p.joint_head);
  return out;
}

std::vector<const double*> grad_ptrs(PolicyGradients& g) {
  std::vector<const double*> out;
  auto add = [&](Affine& a) {
    for (long i = 0; i < a.W.size(); ++i) out.push_back(a.W.data() + i);
    for (long i = 0; i < a.b.size(); ++i) out.push_back(a.b.data() + i);
  };
  add(g.human_in);
  add(g.robot_in);
  for (auto& t : g.trunk) add(t);
  add(g.pose_head);
  add(g.joint_head);
  return out;
}

UnifiedSample sample_from_row(const Batch& b, long row, Embodiment e, int k) {
  UnifiedSample s;
  s.embodiment = e;
  s.features = b.features.row(row).transpose();
  s.pose_chunk.embodiment = e;
  s.pose_chunk.space = ActionSpace::Pose;
  s.pose_chunk.targets =
      Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                     Eigen::RowMajor>>(b.pose_targets.row(row).data(), k,
                                                       b.pose_targets.cols() / k);
  return s;
}

}  // namespace

TEST_CASE("initialization is deterministic and bounded") {
  PolicyDims d = small_dims();
  PolicyParams a = init_params(d, 17), b = init_params(d, 17), c = init_params(d, 18);
  CHECK(a.pose_head.W == b.pose_head.W);
  CHECK(a.trunk[0].W != c.trunk[0].W);
  double bound = 1.0 / std::sqrt(static_cast<double>(d.human_in));
  CHECK(a.human_in.W.cwiseAbs().maxCoeff() <= bound);
  CHECK(a.human_in.W.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("zeroed heads predict exactly zero") {
  PolicyDims d = small_dims();
  PolicyParams p = init_params(d, 3);
  p.pose_head.W.setZero();
  p.pose_head.b.setZero();
  std::mt19937_64 rng(5);
  Batch hb = random_batch(rng, 4, d.human_in, d.pose_out, 0);
  CHECK(forward_pose(p, hb.features, Embodiment::Human).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("human samples get no joint prediction; robot samples do") {
  PolicyDims d = small_dims();
  PolicyParams p = init_params(d, 7);
  std::mt19937_64 rng(9);
  Batch hb = random_batch(rng, 1, d.human_in, d.pose_out, 0);
  Batch rb = random_batch(rng, 1, d.robot_in, d.pose_out, d.joint_out);
  Prediction hp = forward(p, sample_from_row(hb, 0, Embodiment::Human, d.chunk_k));
  CHECK_FALSE(hp.joint.has_value());
  CHECK(hp.pose.rows() == d.chunk_k);
  Prediction rp = forward(p, sample_from_row(rb, 0, Embodiment::Robot, d.chunk_k));
  REQUIRE(rp.joint.has_value());
  CHECK(rp.joint->rows() == d.chunk_k);
  CHECK(rp.joint->cols() == d.joint_out / d.chunk_k);
}

TEST_CASE("forward is bitwise deterministic") {
  PolicyDims d = small_dims();
  PolicyParams p = init_params(d, 11);
  std::mt19937_64 rng(13);
  Batch rb = random_batch(rng, 8, d.robot_in, d.pose_out, d.joint_out);
  Eigen::MatrixXd a = forward_pose(p, rb.features, Embodiment::Robot);
  Eigen::MatrixXd b = forward_pose(p, rb.features, Embodiment::Robot);
  CHECK(a == b);
}

TEST_CASE("stats hash mismatch is rejected") {
  PolicyDims d = small_dims();
  PolicyParams p = init_params(d, 11);
  p.stats_hash = 0xabcd;
  std::mt19937_64 rng(15);
  Batch hb = random_batch(rng, 1, d.human_in, d.pose_out, 0);
  UnifiedSample s = sample_from_row(hb, 0, Embodiment::Human, d.chunk_k);
  CHECK_NOTHROW(forward(p, s, 0xabcd));
  CHECK_THROWS_AS(forward(p, s, 0x1234), StatsMismatch);
}

TEST_CASE("loss oracle: unit joint error contributes exactly 1") {
  PolicyDims d = small_dims();
  PolicyParams p = init_params(d, 19);
  std::mt19937_64 rng(21);
  Batch rb = random_batch(rng, 3, d.robot_in, d.pose_out, d.joint_out);
  // force predictions to hit the pose targets and miss joints by exactly 1
  rb.pose_targets = forward_pose(p, rb.features, Embodiment::Robot);
  rb.joint_targets = forward_joint(p, rb.features).array() + 1.0;
  LossBreakdown l = loss(p, nullptr, &rb);
  CHECK(l.robot_pose == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(l.robot_joint == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(l.human_pose == 0.0);
  CHECK(l.total == doctest::Approx(1.0).epsilon(1e-12));

  SUBCASE("loss weights scale each term") {
    LossWeights w;
    w.robot_joint = 0.25;
    CHECK(loss(p, nullptr, &rb, w).total == doctest::Approx(0.25).epsilon(1e-12));
  }
  SUBCASE("both batches empty") {
    CHECK_THROWS_AS(loss(p, nullptr, nullptr), EmptyBatch);
  }
}

TEST_CASE("closed-form gradient of a pure affine pose path") {
  // make the trunk the identity map: adapters/trunk get identity weights,
  // zero bias; tanh is avoided by keeping activations tiny
  PolicyDims d;
  d.human_in = 3;
  d.robot_in = 3;
  d.width = 3;
  d.trunk_hidden = {};
  d.chunk_k = 1;
  d.pose_out = 2;
  d.joint_out = 2;
  PolicyParams p = init_params(d, 23);
  p.human_in.W.setIdentity();
  p.human_in.b.setZero();
  p.trunk[0].W.setIdentity();  // init_params always inserts one trunk layer
  p.trunk[0].b.setZero();
  p.pose_head.W.setZero();
  p.pose_head.b.setZero();

  std::mt19937_64 rng(25);
  Batch hb = random_batch(rng, 16, 3, 2, 0);
  hb.features *= 1e-4;  // keep tanh in its linear regime

  auto [l, g] = loss_and_grad(p, &hb, nullptr);
  // the head reads [tanh(X), X] (trunk output, then the adapter skip);
  // oracle: d/dW mean((H W + b - Y)^2) ~= 2 H^T (H W - Y) / (B*D) with H ~= [X, X]
  Eigen::MatrixXd resid = -hb.pose_targets;  // predictions are zero
  Eigen::MatrixXd hin(hb.features.rows(), 6);
  hin << hb.features, hb.features;
  Eigen::MatrixXd expect_w =
      2.0 * hin.transpose() * resid / double(hb.features.rows() * 2);
  Eigen::VectorXd expect_b = 2.0 * resid.colwise().mean().transpose() / 2.0;
  CHECK((g.pose_head.W - expect_w).cwiseAbs().maxCoeff() < 1e-6);
  CHECK((g.pose_head.b - expect_b).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("analytic gradients match central finite differences") {
  PolicyDims d = small_dims();
  std::mt19937_64 rng(27);
  int nets_checked = 0;
  for (uint64_t seed = 0; seed < 20; ++seed) {
    PolicyParams p = init_params(d, seed);
    Batch hb = random_batch(rng, 3, d.human_in, d.pose_out, 0);
    Batch rb = random_batch(rng, 2, d.robot_in, d.pose_out, d.joint_out);
    auto [l0, g] = loss_and_grad(p, &hb, &rb);
    auto params = param_ptrs(p);
    auto grads = grad_ptrs(g);
    REQUIRE(params.size() == grads.size());
    // probe a deterministic spread of coordinates (full sweep is slow)
    for (size_t i = 0; i < params.size(); i += 17) {
      double orig = *params[i];
      const double eps = 1e-6;
      *params[i] = orig + eps;
      double lp = loss(p, &hb, &rb).total;
      *params[i] = orig - eps;
      double lm = loss(p, &hb, &rb).total;
      *params[i] = orig;
      double fd = (lp - lm) / (2 * eps);
      double an = *grads[i];
      double denom = std::max({std::abs(fd), std::abs(an), 1e-4});
      CHECK(std::abs(fd - an) / denom < 1e-4);
    }
    ++nets_checked;
  }
  CHECK(nets_checked == 20);
}

TEST_CASE("human-only batches still reach the trunk and human adapter") {
  PolicyDims d = small_dims();
  PolicyParams p = init_params(d, 29);
  std::mt19937_64 rng(31);
  Batch hb = random_batch(rng, 4, d.human_in, d.pose_out, 0);
  auto [l, g] = loss_and_grad(p, &hb, nullptr);
  CHECK(flat_norm(g.human_in) > 0.0);
  CHECK(flat_norm(g.trunk[0]) > 0.0);
  CHECK(flat_norm(g.pose_head) > 0.0);
  CHECK(flat_norm(g.robot_in) == 0.0);
  CHECK(flat_norm(g.joint_head) == 0.0);
}

namespace {

// Tiny synthetic dataset with a linear feature->target relation.
Dataset toy_dataset(int n_per_emb, int chunk_k, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Dataset ds;
  ds.config.chunk_size = chunk_k;
  auto add = [&](Embodiment e, int in_dim) {
    for (int i = 0; i < n_per_emb; ++i) {
      UnifiedSample s;
      s.embodiment = e;
      s.features = Eigen::VectorXd::NullaryExpr(in_dim, [&](long) { return g(rng); });
      s.pose_chunk.embodiment = e;
      s.pose_chunk.space = ActionSpace::Pose;
      s.pose_chunk.targets.resize(chunk_k, 3);
      for (int k = 0; k < chunk_k; ++k)
        s.pose_chunk.targets.row(k) << s.features[0], -s.features[1],
            0.5 * s.features[0];
      if (e == Embodiment::Robot) {
        ActionChunk j;
        j.embodiment = e;
        j.space = ActionSpace::Joint;
        j.targets = Eigen::MatrixXd::Constant(chunk_k, 2, s.features[2]);
        s.joint_chunk = j;
      }
      ds.samples.push_back(s);
    }
  };
  add(Embodiment::Human, 4);
  add(Embodiment::Robot, 6);
  EmbodimentStats hs, rs;
  hs.embodiment = Embodiment::Human;
  hs.sample_count = n_per_emb;
  hs.proprio_mean = Eigen::VectorXd::Zero(4);
  hs.proprio_std = Eigen::VectorXd::Ones(4);
  hs.pose_action_mean = Eigen::VectorXd::Zero(3);
  hs.pose_action_std = Eigen::VectorXd::Ones(3);
  rs = hs;
  rs.embodiment = Embodiment::Robot;
  rs.proprio_mean = Eigen::VectorXd::Zero(6);
  rs.proprio_std = Eigen::VectorXd::Ones(6);
  rs.joint_action_mean = Eigen::VectorXd::Zero(2);
  rs.joint_action_std = Eigen::VectorXd::Ones(2);
  ds.human_stats = hs;
  ds.robot_stats = rs;
  return ds;
}

}  // namespace

TEST_CASE("training overfits a 4-sample dataset") {
  std::mt19937_64 rng(33);
  Dataset ds = toy_dataset(4, 3, rng);
  TrainConfig cfg;
  cfg.human_batch = 4;
  cfg.robot_batch = 4;
  cfg.iterations = 400;
  cfg.learning_rate = 0.05;
  cfg.seed = 1;
  cfg.dims.width = 32;
  cfg.dims.trunk_hidden = {32};
  TrainResult r = train(ds, cfg);
  CHECK(r.trace.back().total < 1e-3);
  CHECK(r.params.iteration == 400);
  CHECK(r.params.stats_hash == ds.stats_hash());
}

TEST_CASE("zero learning rate leaves parameters bitwise unchanged") {
  std::mt19937_64 rng(35);
  Dataset ds = toy_dataset(6, 3, rng);
  TrainConfig cfg;
  cfg.iterations = 10;
  cfg.learning_rate = 0.0;
  cfg.seed = 2;
  cfg.dims.width = 8;
  cfg.dims.trunk_hidden = {8};
  TrainResult r = train(ds, cfg);
  PolicyParams fresh = init_params(r.params.dims, 2);
  CHECK(r.params.trunk[0].W == fresh.trunk[0].W);
  CHECK(r.params.pose_head.b == fresh.pose_head.b);
}

TEST_CASE("training is deterministic given the seed") {
  std::mt19937_64 rng(37);
  Dataset ds = toy_dataset(8, 3, rng);
  TrainConfig cfg;
  cfg.iterations = 50;
  cfg.learning_rate = 0.01;
  cfg.seed = 3;
  cfg.dims.width = 8;
  cfg.dims.trunk_hidden = {8};
  TrainResult a = train(ds, cfg);
  TrainResult b = train(ds, cfg);
  CHECK(a.params.trunk[0].W == b.params.trunk[0].W);
  CHECK(a.trace.back().total == b.trace.back().total);
}

TEST_CASE("loss is nearly monotone on a fixed tiny batch with small lr") {
  std::mt19937_64 rng(39);
  // one sample per embodiment: every minibatch is identical (fixed batch)
  Dataset ds = toy_dataset(1, 3, rng);
  TrainConfig cfg;
  cfg.human_batch = 1;
  cfg.robot_batch = 1;
  cfg.iterations = 100;
  cfg.learning_rate = 0.001;
  cfg.seed = 4;
  cfg.dims.width = 16;
  cfg.dims.trunk_hidden = {16};
  TrainResult r = train(ds, cfg);
  int drops = 0;
  for (size_t i = 1; i < r.trace.size(); ++i)
    if (r.trace[i].total < r.trace[i - 1].total) ++drops;
  CHECK(drops >= 95);
  CHECK(r.trace.back().total < r.trace.front().total);
}

TEST_CASE("adamw optimizer also trains") {
  std::mt19937_64 rng(41);
  Dataset ds = toy_dataset(16, 3, rng);
  TrainConfig cfg;
  cfg.iterations = 300;
  cfg.learning_rate = 0.01;
  cfg.optimizer = "adamw";
  cfg.seed = 5;
  cfg.dims.width = 16;
  cfg.dims.trunk_hidden = {16};
  TrainResult r = train(ds, cfg);
  CHECK(r.trace.back().total < 0.3 * r.trace.front().total);
}

TEST_CASE("checkpoint round trip is bit-exact") {
  std::mt19937_64 rng(43);
  Dataset ds = toy_dataset(8, 3, rng);
  TrainConfig cfg;
  cfg.iterations = 20;
  cfg.learning_rate = 0.01;
  cfg.seed = 6;
  cfg.dims.width = 8;
  cfg.dims.trunk_hidden = {8, 8};
  TrainResult r = train(ds, cfg);
  std::string dir = (std::filesystem::temp_directory_path() / "egoalign_ckpt_test").string();
  std::filesystem::remove_all(dir);
  save_checkpoint(dir, r.params);
  PolicyParams back = load_checkpoint(dir);
  CHECK(back.dims == r.params.dims);
  CHECK(back.stats_hash == r.params.stats_hash);
  CHECK(back.iteration == r.params.iteration);
  CHECK(back.human_in.W == r.params.human_in.W);
  CHECK(back.robot_in.b == r.params.robot_in.b);
  REQUIRE(back.trunk.size() == r.params.trunk.size());
  for (size_t i = 0; i < back.trunk.size(); ++i)
    CHECK(back.trunk[i].W == r.params.trunk[i].W);
  CHECK(back.pose_head.W == r.params.pose_head.W);
  CHECK(back.joint_head.W == r.params.joint_head.W);
  std::filesystem::remove_all(dir);
}
