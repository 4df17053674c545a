#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "egoalign/geometry.hpp"
#include "egoalign/ingest.hpp"

namespace egoalign {

struct AlignError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IndexOutOfRange : AlignError {
  using AlignError::AlignError;
};
struct HorizonExceedsEpisode : AlignError {
  using AlignError::AlignError;
};
struct EmptySplit : AlignError {
  using AlignError::AlignError;
};
struct DimensionMismatch : AlignError {
  using AlignError::AlignError;
};

enum class ActionSpace { Pose, Joint };

/// K future targets evenly spaced over a horizon, in the observation-camera
/// frame (pose) or joint space. Target k is at obs_time + k * spacing,
/// k = 1..K.
struct ActionChunk {
  double obs_time = 0.0;
  Eigen::MatrixXd targets;  // K x D
  double spacing = 0.0;
  Embodiment embodiment;
  ActionSpace space;
};

/// Per-embodiment mean/std for proprio features, pose-chunk targets and
/// (robot only) joint-chunk targets. Population convention; std floored
/// at 1e-6. Computed from the training split only.
struct EmbodimentStats {
  Embodiment embodiment;
  long sample_count = 0;
  Eigen::VectorXd proprio_mean, proprio_std;
  Eigen::VectorXd pose_action_mean, pose_action_std;
  Eigen::VectorXd joint_action_mean, joint_action_std;  // empty for human

  uint64_t content_hash() const;
};

struct UnifiedSample {
  Eigen::VectorXd features;  // normalized proprio + scene features
  ActionChunk pose_chunk;    // normalized
  std::optional<ActionChunk> joint_chunk;  // normalized, robot only
  Embodiment embodiment;
};

struct AlignConfig {
  int chunk_size = 100;
  double robot_horizon = 4.0;  // seconds
  double human_horizon = 1.0;
  int stride = 1;              // observation grid stride in raw samples
  bool robot_rotation_targets = false;
  /// Fixed base->camera transform for robot data (hand-eye calibration
  /// stand-in). Identity when unset.
  std::optional<Pose3> robot_cam_extrinsics;

  double horizon(Embodiment e) const {
    return e == Embodiment::Human ? human_horizon : robot_horizon;
  }
};

struct Dataset {
  std::vector<UnifiedSample> samples;  // normalized
  std::optional<EmbodimentStats> human_stats, robot_stats;
  AlignConfig config;
  int human_arms = 0, robot_arms = 0;

  const EmbodimentStats& stats(Embodiment e) const;
  long count(Embodiment e) const;
  uint64_t stats_hash() const;
};

/// Re-reference trajectory points into the camera frame at obs_index:
/// a_i = inverse(T_obs) . T_i applied to p_i, for i >= obs_index.
std::vector<Eigen::Vector3d> reref_to_obs_frame(std::span<const Pose3> world_device,
                                                std::span<const Eigen::Vector3d> points_device,
                                                size_t obs_index);

/// Pose-space action chunk at obs_time. Human: hand positions re-referenced
/// through world-frame device poses. Robot: eef positions through the fixed
/// camera transform. Targets interpolated linearly at obs_time + k*h/K.
ActionChunk build_chunk(const Episode& ep, double obs_time, const AlignConfig& cfg);

/// Joint-space action chunk (robot only), same target grid as build_chunk
/// with the robot horizon.
ActionChunk build_joint_chunk(const Episode& ep, double obs_time, const AlignConfig& cfg);

/// Raw (unnormalized) observation feature vector at sample `row` of an
/// aligned episode: human = hand position in current device frame + scene;
/// robot = eef pose + joint positions + scene (scene in camera frame).
Eigen::VectorXd observation_features(const Episode& ep, size_t row, const AlignConfig& cfg);

EmbodimentStats fit_stats(const std::vector<UnifiedSample>& raw_samples, Embodiment e);

/// Stats std components are floored here; a dimension whose fitted std sits
/// at the floor was constant in the data and carries no signal.
inline constexpr double kStdFloor = 1e-6;

Eigen::VectorXd normalize(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                          const Eigen::VectorXd& std);
Eigen::VectorXd denormalize(const Eigen::VectorXd& x, const Eigen::VectorXd& mean,
                            const Eigen::VectorXd& std);
Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& x, const Eigen::VectorXd& mean,
                               const Eigen::VectorXd& std);
Eigen::MatrixXd denormalize_rows(const Eigen::MatrixXd& x, const Eigen::VectorXd& mean,
                                 const Eigen::VectorXd& std);

/// Build the normalized training split from time-aligned episodes.
/// Episodes are processed in sorted source_id order; observation grid walks
/// raw samples with cfg.stride.
Dataset build_dataset(std::vector<Episode> episodes, const AlignConfig& cfg);

// On-disk format: `manifest` + flat little-endian float64 binaries.
void save_dataset(const std::string& dir, const Dataset& ds);
Dataset load_dataset(const std::string& dir);

}  // namespace egoalign
