#pragma once

#include <Eigen/Dense>
#include <random>
#include <string>
#include <vector>

#include "egoalign/align.hpp"
#include "egoalign/kinematics.hpp"
#include "egoalign/policy.hpp"

namespace egoalign {

struct WorldState {
  Eigen::Vector3d object_pos{0, 0, 0};
  Eigen::Vector3d bowl_pos{0, 0, 0};
  Eigen::Vector3d gripper_pos{0, 0, 0};
  bool held = false;
  bool in_bowl = false;  // object sits in the bowl, awaiting the dump
  int score = 0;
  double time = 0;
};

struct SpawnRegion {
  double x0, x1, y0, y1;
  Eigen::Vector3d sample(std::mt19937_64& rng) const;
};

/// Two-embodiment object-in-bowl benchmark on the z=0 plane. The embodiment
/// gap is injected through a spatial spawn bias, differing recording noise,
/// a moving egocentric camera, and the 4x human speed factor.
struct BenchConfig {
  // workspace rectangle (0.45 m x 0.60 m) reachable by the default arm
  double ws_x0 = 0.12, ws_x1 = 0.57, ws_y0 = -0.30, ws_y1 = 0.30;
  double grasp_radius = 0.015;
  double bowl_radius = 0.03;
  double respawn_min_bowl_dist = 0.10;
  double robot_speed = 0.15;   // m/s gripper speed
  double speed_factor = 4.0;   // human moves this much faster
  double human_noise = 0.004;  // std (m) on recorded hand positions
  double robot_noise = 0.001;  // std (m) on recorded eef positions
  /// Optional teleoperator command jitter injected while generating
  /// demonstrations: a smooth mean-reverting wander added to the expert's
  /// target (stationary std expert_cmd_noise, time constant
  /// expert_noise_tau) plus per-tick Gaussian jitter on the jaw command.
  /// Defaults are zero: at this data scale the extra target noise costs more
  /// grasp precision than the added state coverage buys.
  double expert_cmd_noise = 0.0;  // stationary std (m) of target wander
  double expert_noise_tau = 1.0;  // wander time constant (s)
  double expert_jaw_noise = 0.0;  // per-tick std on expert jaw commands
  /// Spawn bias of human demonstrations versus robot demonstrations.
  Eigen::Vector3d human_offset{0.0, 0.06, 0.0};
  /// Robot demonstrations only cover this centered fraction of the workspace.
  double robot_region_frac = 0.6;
  double episode_seconds = 40.0;
  double human_rate = kHumanRate;
  double robot_rate = kRobotRate;

  ArmModel arm = ArmModel::default_arm();
  CameraModel camera = default_camera();
  // Head-motion random walk amplitude for the human device pose.
  double head_amp_pos = 0.03;   // m
  double head_amp_rot = 0.06;   // rad

  static CameraModel default_camera();
  SpawnRegion full_region() const { return {ws_x0, ws_x1, ws_y0, ws_y1}; }
  SpawnRegion robot_region() const;
  SpawnRegion human_region() const;
  double speed(Embodiment e) const {
    return e == Embodiment::Human ? robot_speed * speed_factor : robot_speed;
  }
};

/// One simulation step of the kinematic point gripper: move toward
/// gripper_target at most max_speed * dt, then apply grasp/score rules:
/// grasp within grasp_radius picks the object; releasing within bowl_radius
/// of the bowl scores a point; an empty-handed grasp at the loaded bowl
/// dumps it for another point and respawns the object.
WorldState step_env(const WorldState& world, const Eigen::Vector3d& gripper_target,
                    bool grasp, double dt, const BenchConfig& cfg, double max_speed,
                    const SpawnRegion& respawn, std::mt19937_64& respawn_rng);

// Deterministic per-seed stream derivation, shared by generation and replay.
uint64_t respawn_seed(uint64_t seed);
uint64_t noise_seed(uint64_t seed);
uint64_t gauge_seed(uint64_t seed);

/// Seeded object/bowl placement within a region (bowl first, then object at
/// a respawnable distance).
WorldState initial_world(const BenchConfig& cfg, const SpawnRegion& region,
                         std::mt19937_64& rng);

struct ExpertAction {
  Eigen::Vector3d target;
  bool grasp;    // jaw past half travel
  double jaw;    // commanded jaw position, a smooth function of distance
};

/// Memoryless scripted policy: fetch the object, carry it to the bowl,
/// release, dump, repeat. A pure function of the world state.
ExpertAction expert_action(const WorldState& world, const BenchConfig& cfg);

struct HumanLogs {
  std::string device_csv, hand_csv, scene_csv;
  int score = 0;
};
struct RobotLogs {
  std::string log_csv, scene_csv;
  int score = 0;
};

/// Generate a human demonstration episode as raw MPS-style CSVs. The world
/// frame is a seeded random SE(3) gauge; device poses follow a smooth
/// head-motion trajectory.
HumanLogs scripted_expert_human(const BenchConfig& cfg, uint64_t seed);

/// Generate a robot teleoperation episode: the expert's cartesian targets
/// are tracked through damped-least-squares IK and logged as joint actions.
RobotLogs scripted_expert_robot(const BenchConfig& cfg, uint64_t seed);

/// Position-only damped-least-squares IK for the gripper keypoint over the
/// first 6 joints. Returns the improved q (jaw untouched).
Eigen::VectorXd solve_ik(const ArmModel& arm, const Eigen::Vector3d& target,
                         Eigen::VectorXd q_init, int max_iters = 60, double tol = 1e-7);

/// Canonical teleoperator posture: closed-form planar IK for the default
/// arm layout (yaw base, two pitch links, pitched wrist; rolls parked at 0).
/// Unlike warm-started iterative IK, the result depends only on the target,
/// so logged joint trajectories are a smooth function of world state.
/// Jaw (q[6]) is left at 0 for the caller.
Eigen::VectorXd teleop_posture(const ArmModel& arm, const Eigen::Vector3d& target);

/// Closed-loop robot environment implementing the rollout contract. The
/// observation layout matches the dataset robot features:
/// [eef pose 12, joint pos 7, scene-in-camera 7].
class SimEnv : public RolloutEnv {
 public:
  SimEnv(const BenchConfig& cfg, uint64_t seed);

  Eigen::VectorXd robot_features() override;
  void apply_control(const Eigen::VectorXd& joint_target, double dt) override;
  bool done() const override { return world_.time >= cfg_.episode_seconds - 1e-9; }
  double score() const override { return world_.score; }

  const WorldState& world() const { return world_; }
  const Eigen::VectorXd& joints() const { return q_; }

 private:
  BenchConfig cfg_;
  WorldState world_;
  Eigen::VectorXd q_;
  std::mt19937_64 respawn_rng_;
};

struct EvalResult {
  double mean = 0, stddev = 0;
  std::vector<double> per_episode;
};

/// Policy evaluation over randomized object/bowl placements.
EvalResult evaluate(const PolicyParams& params, const EmbodimentStats& robot_stats,
                    const BenchConfig& cfg, int n_episodes, uint64_t seed0,
                    const RolloutConfig& rc = {});

/// Scripted-expert closed-loop score over the same placement distribution
/// (the oracle passthrough baseline).
EvalResult evaluate_expert(const BenchConfig& cfg, int n_episodes, uint64_t seed0);

}  // namespace egoalign
