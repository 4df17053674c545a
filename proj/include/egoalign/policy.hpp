#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "egoalign/align.hpp"

namespace egoalign {

struct PolicyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct StatsMismatch : PolicyError {
  using PolicyError::PolicyError;
};
struct EmptyBatch : PolicyError {
  using PolicyError::PolicyError;
};
struct EnvFault : PolicyError {
  using PolicyError::PolicyError;
};

/// y = x W + b, row-vector convention; W is in x out.
struct Affine {
  Eigen::MatrixXd W;
  Eigen::VectorXd b;
};

struct PolicyDims {
  int human_in = 0;
  int robot_in = 0;
  int width = 64;                    // shared width after the input adapters
  std::vector<int> trunk_hidden{64};  // widths of trunk layers past the first
  int pose_out = 0;                  // K * pose_dim
  int joint_out = 0;                 // K * joint_dim (0 when no robot data)
  int chunk_k = 100;

  bool operator==(const PolicyDims&) const = default;
};

/// Shared-trunk dual-head policy: per-embodiment input adapters, one MLP
/// trunk (tanh), and single affine pose/joint heads reading the trunk output
/// concatenated with the pre-tanh adapter output. The skip half keeps an
/// affine path from inputs to outputs, so the heads can express "current
/// posture plus a learned delta" exactly and the trunk only has to model the
/// delta; without it, absolute-space shrinkage toward the dataset mean makes
/// closed-loop control stall short of its goals.
struct PolicyParams {
  PolicyDims dims;
  Affine human_in, robot_in;   // adapters to the shared width
  std::vector<Affine> trunk;   // tanh after each layer
  Affine pose_head;
  Affine joint_head;
  uint64_t stats_hash = 0;
  uint64_t seed = 0;
  long iteration = 0;
};

/// Gradients share the parameter shapes.
struct PolicyGradients {
  Affine human_in, robot_in;
  std::vector<Affine> trunk;
  Affine pose_head, joint_head;
};

PolicyParams init_params(const PolicyDims& dims, uint64_t seed);
PolicyGradients zero_gradients(const PolicyParams& p);

/// Normalized feature rows (B x D) with flattened chunk targets
/// (B x K*D_chunk, rows of the chunk concatenated). joint_targets has zero
/// rows for human batches.
struct Batch {
  Eigen::MatrixXd features;
  Eigen::MatrixXd pose_targets;
  Eigen::MatrixXd joint_targets;
};

struct Prediction {
  Eigen::MatrixXd pose;                  // K x pose_dim
  std::optional<Eigen::MatrixXd> joint;  // K x joint_dim, robot only
};

/// Single-sample inference. When both `expected_stats_hash` and the param
/// hash are set they must agree.
Prediction forward(const PolicyParams& p, const UnifiedSample& sample,
                   uint64_t expected_stats_hash = 0);

/// Batched forward for one embodiment; returns flattened predictions.
Eigen::MatrixXd forward_pose(const PolicyParams& p, const Eigen::MatrixXd& x, Embodiment e);
Eigen::MatrixXd forward_joint(const PolicyParams& p, const Eigen::MatrixXd& x);

struct LossBreakdown {
  double total = 0;
  double human_pose = 0;
  double robot_pose = 0;
  double robot_joint = 0;
};

struct LossWeights {
  double human_pose = 1.0, robot_pose = 1.0, robot_joint = 1.0;
  /// Receding-horizon execution only ever runs the first `executed_prefix`
  /// targets of a chunk before re-predicting, while late targets routinely
  /// straddle unpredictable events (object respawns). Chunk indices past the
  /// prefix are therefore down-weighted to `tail_weight`; the weighted mean
  /// is normalized by the weight sum, so a uniform per-dimension error still
  /// yields the same loss value as the unweighted mean. No effect when the
  /// chunk is no longer than the prefix.
  int executed_prefix = 25;
  double tail_weight = 0.2;
};

/// L = MSE(human pose) + MSE(robot pose) + MSE(robot joint), each a
/// weighted mean over batch, chunk and dimension (see LossWeights for the
/// per-chunk-index weighting). Either batch may be empty (eval mode)
/// but not both.
LossBreakdown loss(const PolicyParams& p, const Batch* human, const Batch* robot,
                   const LossWeights& w = {});

/// Analytic gradient of `loss` via hand-derived backpropagation.
std::pair<LossBreakdown, PolicyGradients> loss_and_grad(const PolicyParams& p,
                                                        const Batch* human,
                                                        const Batch* robot,
                                                        const LossWeights& w = {});

struct TrainConfig {
  int human_batch = 32;
  int robot_batch = 32;
  long iterations = 2000;
  double learning_rate = 1e-2;
  double momentum = 0.9;
  std::string optimizer = "momentum";      // or "adamw"
  std::string lr_schedule = "constant";    // or "cosine" (half-period decay to 0)
  double weight_decay = 0.0;           // adamw only
  uint64_t seed = 0;
  LossWeights weights;
  PolicyDims dims;  // in dims, only width/trunk_hidden are read; IO sizes come from data
};

struct TrainResult {
  PolicyParams params;
  std::vector<LossBreakdown> trace;  // one entry per iteration
};

/// Algorithm: every iteration samples one human batch and one robot batch,
/// sums the three losses, and applies a single parameter update.
/// Deterministic given cfg.seed.
TrainResult train(const Dataset& ds, const TrainConfig& cfg);

// Checkpoint: `manifest` + flat little-endian float64 weight blob.
void save_checkpoint(const std::string& dir, const PolicyParams& p);
PolicyParams load_checkpoint(const std::string& dir);

/// Robot-embodiment environment boundary for closed-loop rollout.
class RolloutEnv {
 public:
  virtual ~RolloutEnv() = default;
  virtual Eigen::VectorXd robot_features() = 0;  // raw (unnormalized) observation
  virtual void apply_control(const Eigen::VectorXd& joint_target, double dt) = 0;
  virtual bool done() const = 0;
  virtual double score() const = 0;
};

struct RolloutConfig {
  double inference_period = 1.0;  // seconds between predictions
  double control_rate = 25.0;     // Hz
  double chunk_horizon = 4.0;     // seconds covered by one predicted chunk
};

struct RolloutResult {
  double score = 0;
  long inference_steps = 0;
};

/// Receding-horizon execution: predict a joint chunk, denormalize, execute
/// the first inference_period of targets at control_rate, repeat.
RolloutResult rollout(const PolicyParams& p, RolloutEnv& env,
                      const EmbodimentStats& robot_stats,
                      const RolloutConfig& cfg = {});

}  // namespace egoalign
