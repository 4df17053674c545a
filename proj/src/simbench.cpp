#include "egoalign/simbench.hpp"

#include <cmath>

namespace egoalign {

namespace {

constexpr double kSpeedTol = 1.001;  // headroom for IK residual in the point clamp

Eigen::Vector3d clamp_step(const Eigen::Vector3d& from, const Eigen::Vector3d& to,
                           double max_dist) {
  Eigen::Vector3d d = to - from;
  double n = d.norm();
  if (n <= max_dist) return to;
  return from + d * (max_dist / n);
}

// Teleoperator-style waypoint: full speed when far, proportional deceleration
// inside a fixed 5 cm band around the target. The slow final approach
// concentrates training data in the near-target regime where grasp/placement
// precision is decided, and makes the imitated approach contractive in
// closed loop.
Eigen::Vector3d approach_step(const Eigen::Vector3d& from, const Eigen::Vector3d& to,
                              double max_dist) {
  double d = (to - from).norm();
  return clamp_step(from, to, max_dist * std::min(1.0, d / 0.05));
}

// One exact-discretization step of the mean-reverting teleop command wander;
// stationary per-axis std is `sigma`.
Eigen::Vector3d ou_step(const Eigen::Vector3d& w, double dt, double tau, double sigma,
                        std::normal_distribution<double>& n, std::mt19937_64& rng) {
  double a = std::exp(-dt / tau);
  double s = sigma * std::sqrt(1.0 - a * a);
  return a * w + s * Eigen::Vector3d(n(rng), n(rng), n(rng));
}

Eigen::VectorXd home_joints(const ArmModel& arm, const Eigen::Vector3d& home) {
  return teleop_posture(arm, home);
}

Pose3 look_down_pose(const Eigen::Vector3d& position) {
  // camera z points down at the table, x along table x
  Eigen::Matrix3d r;
  r << 1, 0, 0, 0, -1, 0, 0, 0, -1;
  return Pose3(r, -(r * position));
}

Pose3 random_gauge(std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::Quaterniond q(gauss(rng), gauss(rng), gauss(rng), gauss(rng));
  q.normalize();
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  return Pose3(q.toRotationMatrix(), {uni(rng), uni(rng), uni(rng)});
}

}  // namespace

Eigen::Vector3d SpawnRegion::sample(std::mt19937_64& rng) const {
  std::uniform_real_distribution<double> ux(x0, x1), uy(y0, y1);
  return {ux(rng), uy(rng), 0.0};
}

CameraModel BenchConfig::default_camera() {
  Eigen::Matrix3d k;
  k << 300, 0, 160, 0, 300, 120, 0, 0, 1;
  return CameraModel(k, look_down_pose({0.35, 0.0, 0.8}), 320, 240);
}

SpawnRegion BenchConfig::robot_region() const {
  double cx = 0.5 * (ws_x0 + ws_x1), cy = 0.5 * (ws_y0 + ws_y1);
  double hx = 0.5 * (ws_x1 - ws_x0) * robot_region_frac;
  double hy = 0.5 * (ws_y1 - ws_y0) * robot_region_frac;
  return {cx - hx, cx + hx, cy - hy, cy + hy};
}

SpawnRegion BenchConfig::human_region() const {
  return {ws_x0 + human_offset.x(), ws_x1 + human_offset.x(),
          ws_y0 + human_offset.y(), ws_y1 + human_offset.y()};
}

WorldState step_env(const WorldState& world, const Eigen::Vector3d& gripper_target,
                    bool grasp, double dt, const BenchConfig& cfg, double max_speed,
                    const SpawnRegion& respawn, std::mt19937_64& respawn_rng) {
  if (dt <= 0) throw EnvFault("step_env: dt must be positive");
  WorldState w = world;
  w.gripper_pos = clamp_step(w.gripper_pos, gripper_target, max_speed * dt);

  if (!w.held && !w.in_bowl && grasp &&
      (w.gripper_pos - w.object_pos).norm() <= cfg.grasp_radius) {
    w.held = true;
  }
  if (w.held) {
    w.object_pos = w.gripper_pos;
    if (!grasp) {
      w.held = false;
      if ((w.object_pos - w.bowl_pos).norm() <= cfg.bowl_radius) {
        w.in_bowl = true;
        w.object_pos = w.bowl_pos;
        w.score += 1;  // object placed in the bowl
      }
    }
  } else if (w.in_bowl && grasp &&
             (w.gripper_pos - w.bowl_pos).norm() <= cfg.grasp_radius) {
    // dump: bowl emptied onto the table, object respawns
    w.score += 1;
    w.in_bowl = false;
    for (int attempt = 0; attempt < 256; ++attempt) {
      Eigen::Vector3d p = respawn.sample(respawn_rng);
      if ((p - w.bowl_pos).norm() >= cfg.respawn_min_bowl_dist) {
        w.object_pos = p;
        break;
      }
    }
  }
  w.time += dt;
  return w;
}

namespace {

// Smooth distance-based jaw schedules. Closing early is harmless under the
// environment rules (pickup happens at the first in-radius moment with the
// jaw past half travel), and a jaw that is a smooth function of distance
// keeps "partly closed while approaching" inside the training distribution.
double closing_jaw(double dist) {
  return 1.3 * std::clamp((0.06 - dist) / 0.045, 0.0, 1.0);
}
double carrying_jaw(double dist_to_bowl) {
  // stays fully closed until near the bowl, crosses half travel (release)
  // at ~2.2 cm, inside the 3 cm bowl radius
  return 1.3 * std::clamp((dist_to_bowl - 0.0075) / 0.0375, 0.0, 1.0);
}

}  // namespace

ExpertAction expert_action(const WorldState& world, const BenchConfig& cfg) {
  (void)cfg;
  if (world.in_bowl) {
    // empty-handed grasp at the bowl performs the dump
    double jaw = closing_jaw((world.gripper_pos - world.bowl_pos).norm());
    return {world.bowl_pos, jaw > 0.5, jaw};
  }
  if (world.held) {
    double jaw = carrying_jaw((world.gripper_pos - world.bowl_pos).norm());
    return {world.bowl_pos, jaw > 0.5, jaw};
  }
  double jaw = closing_jaw((world.gripper_pos - world.object_pos).norm());
  return {world.object_pos, jaw > 0.5, jaw};
}

uint64_t respawn_seed(uint64_t seed) { return seed * 0x9e3779b97f4a7c15ull + 1; }
uint64_t noise_seed(uint64_t seed) { return seed * 0x9e3779b97f4a7c15ull + 2; }
uint64_t gauge_seed(uint64_t seed) { return seed * 0x9e3779b97f4a7c15ull + 3; }

WorldState initial_world(const BenchConfig& cfg, const SpawnRegion& region,
                         std::mt19937_64& rng) {
  WorldState w;
  w.bowl_pos = region.sample(rng);
  for (int attempt = 0; attempt < 256; ++attempt) {
    w.object_pos = region.sample(rng);
    if ((w.object_pos - w.bowl_pos).norm() >= cfg.respawn_min_bowl_dist) break;
  }
  return w;
}

Eigen::VectorXd solve_ik(const ArmModel& arm, const Eigen::Vector3d& target,
                         Eigen::VectorXd q, int max_iters, double tol) {
  constexpr double kJacEps = 1e-6;
  constexpr double kDamping = 1e-3;
  for (int it = 0; it < max_iters; ++it) {
    Eigen::Vector3d err = target - fk(arm, q).gripper;
    if (err.norm() < tol) break;
    Eigen::Matrix<double, 3, 6> jac;
    for (int j = 0; j < 6; ++j) {
      Eigen::VectorXd qp = q, qm = q;
      qp[j] = std::min(qp[j] + kJacEps, arm.joints[static_cast<size_t>(j)].upper);
      qm[j] = std::max(qm[j] - kJacEps, arm.joints[static_cast<size_t>(j)].lower);
      jac.col(j) = (fk(arm, qp).gripper - fk(arm, qm).gripper) / (qp[j] - qm[j]);
    }
    Eigen::Matrix3d jjt = jac * jac.transpose() +
                          kDamping * kDamping * Eigen::Matrix3d::Identity();
    Eigen::VectorXd dq = jac.transpose() * jjt.ldlt().solve(err);
    for (int j = 0; j < 6; ++j) {
      q[j] = std::clamp(q[j] + dq[j], arm.joints[static_cast<size_t>(j)].lower,
                        arm.joints[static_cast<size_t>(j)].upper);
    }
  }
  return q;
}

Eigen::VectorXd teleop_posture(const ArmModel& arm, const Eigen::Vector3d& target) {
  // link lengths from the chain offsets: base riser, upper arm, forearm
  // (roll joint folded in), wrist-to-gripper
  const double a0 = arm.joints[1].offset.translation().x();
  const double a1 = arm.joints[2].offset.translation().x();
  const double a2 = arm.joints[3].offset.translation().x() +
                    arm.joints[4].offset.translation().x();
  const double a3 = arm.joints[5].offset.translation().x() +
                    arm.joints[6].offset.translation().x();

  double r = std::hypot(target.x(), target.y());
  double phi = std::atan2(target.y(), target.x());

  // gripper pitch schedule: horizontal at full reach, pointing down close in
  double alpha = -(M_PI / 2.0) * std::clamp((0.6 - r) / 0.4, 0.0, 1.0);

  // wrist position in the (radial, z) plane, relative to the J1 pivot
  double vr = r - a0 - a3 * std::cos(alpha);
  double vz = target.z() - a3 * std::sin(alpha);
  double d = std::hypot(vr, vz);
  double d_clamped = std::clamp(d, std::abs(a1 - a2) + 1e-9, a1 + a2 - 1e-9);
  if (d > 0 && d_clamped != d) {
    vr *= d_clamped / d;
    vz *= d_clamped / d;
    d = d_clamped;
  }
  double psi = std::atan2(vz, vr);
  double elbow = std::acos(
      std::clamp((a1 * a1 + d * d - a2 * a2) / (2.0 * a1 * d), -1.0, 1.0));
  // elbow-down branch keeps every pitch within the +-3.1 rad limits
  double beta1 = psi - elbow;
  double beta2 = std::atan2(vz - a1 * std::sin(beta1), vr - a1 * std::cos(beta1));

  Eigen::VectorXd q = Eigen::VectorXd::Zero(7);
  q[0] = phi;
  q[1] = -beta1;            // +pitch about y dips the link toward -z
  q[2] = -(beta2 - beta1);
  q[4] = -(alpha - beta2);
  // exact inside the workspace; clamping only engages for stray targets
  for (int j = 0; j < 6; ++j) {
    q[j] = std::clamp(q[j], arm.joints[static_cast<size_t>(j)].lower,
                      arm.joints[static_cast<size_t>(j)].upper);
  }
  return q;
}

RobotLogs scripted_expert_robot(const BenchConfig& cfg, uint64_t seed) {
  std::mt19937_64 spawn_rng(respawn_seed(seed));
  std::mt19937_64 noise_rng(noise_seed(seed));
  std::normal_distribution<double> noise(0.0, 1.0);
  SpawnRegion region = cfg.robot_region();
  WorldState world = initial_world(cfg, region, spawn_rng);

  Eigen::Vector3d home(0.30, 0.0, 0.0);
  Eigen::VectorXd q = home_joints(cfg.arm, home);
  world.gripper_pos = fk(cfg.arm, q).gripper;
  Eigen::Vector3d wander = Eigen::Vector3d::Zero();

  double dt = 1.0 / cfg.robot_rate;
  long n = static_cast<long>(std::llround(cfg.episode_seconds * cfg.robot_rate));

  Episode ep;
  ep.embodiment = Embodiment::Robot;
  ep.arms = 1;
  TimedSeries eef{ {}, Eigen::MatrixXd(n, 12), cfg.robot_rate, SeriesKind::EefPoseBase};
  TimedSeries jp{ {}, Eigen::MatrixXd(n, 7), cfg.robot_rate, SeriesKind::JointPos};
  TimedSeries ja{ {}, Eigen::MatrixXd(n, 7), cfg.robot_rate, SeriesKind::JointAction};
  TimedSeries scene{ {}, Eigen::MatrixXd(n, 7), cfg.robot_rate, SeriesKind::Scene};

  for (long i = 0; i < n; ++i) {
    double t = static_cast<double>(i) * dt;
    Pose3 pose = fk_pose(cfg.arm, q);
    Eigen::Matrix<double, 3, 3, Eigen::RowMajor> r = pose.rotation();
    eef.timestamps.push_back(t);
    eef.values.row(i).head(9) = Eigen::Map<const Eigen::VectorXd>(r.data(), 9).transpose();
    eef.values.row(i).segment(9, 3) =
        (pose.translation() +
         cfg.robot_noise * Eigen::Vector3d(noise(noise_rng), noise(noise_rng), noise(noise_rng)))
            .transpose();
    jp.timestamps.push_back(t);
    jp.values.row(i) = q.transpose();
    scene.timestamps.push_back(t);
    scene.values.row(i) << world.object_pos.transpose(), world.bowl_pos.transpose(),
        world.held ? 1.0 : 0.0;

    ExpertAction act = expert_action(world, cfg);
    wander = ou_step(wander, dt, cfg.expert_noise_tau, cfg.expert_cmd_noise, noise,
                     noise_rng);
    Eigen::Vector3d p_next =
        approach_step(world.gripper_pos, act.target + wander, cfg.robot_speed * dt);
    Eigen::VectorXd q_cmd = teleop_posture(cfg.arm, p_next);
    q_cmd[6] = std::clamp(act.jaw + cfg.expert_jaw_noise * noise(noise_rng),
                          cfg.arm.joints[6].lower, cfg.arm.joints[6].upper);
    ja.timestamps.push_back(t);
    ja.values.row(i) = q_cmd.transpose();

    world = step_env(world, fk(cfg.arm, q_cmd).gripper, q_cmd[6] > 0.5, dt, cfg,
                     cfg.robot_speed * kSpeedTol, region, spawn_rng);
    // Encoders report the speed-limited pose actually attained, as in SimEnv.
    q = teleop_posture(cfg.arm, world.gripper_pos);
    q[6] = q_cmd[6];
  }

  ep.series = {eef, jp, ja, scene};
  RobotLogs out;
  out.log_csv = write_robot_log_csv(ep);
  out.scene_csv = write_scene_csv(scene);
  out.score = world.score;
  return out;
}

HumanLogs scripted_expert_human(const BenchConfig& cfg, uint64_t seed) {
  std::mt19937_64 spawn_rng(respawn_seed(seed));
  std::mt19937_64 noise_rng(noise_seed(seed));
  std::mt19937_64 gauge_rng(gauge_seed(seed));
  std::normal_distribution<double> noise(0.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);

  Pose3 gauge = random_gauge(gauge_rng);
  double ph[6];
  for (double& p : ph) p = phase(gauge_rng);

  SpawnRegion region = cfg.human_region();
  WorldState world = initial_world(cfg, region, spawn_rng);
  world.gripper_pos = {0.5 * (region.x0 + region.x1), 0.5 * (region.y0 + region.y1), 0.0};

  double dt = 1.0 / cfg.human_rate;
  long n = static_cast<long>(std::llround(cfg.episode_seconds * cfg.human_rate));
  double speed = cfg.speed(Embodiment::Human);

  TimedSeries dev{ {}, Eigen::MatrixXd(n, 12), cfg.human_rate, SeriesKind::DevicePoseWorld};
  TimedSeries hand{ {}, Eigen::MatrixXd(n, 3), cfg.human_rate, SeriesKind::HandPosDevice};
  TimedSeries scene{ {}, Eigen::MatrixXd(n, 7), cfg.human_rate, SeriesKind::Scene};

  Eigen::Vector3d head0(0.35, 0.0, 0.5);
  Eigen::Vector3d wander = Eigen::Vector3d::Zero();
  for (long i = 0; i < n; ++i) {
    double t = static_cast<double>(i) * dt;
    // smooth head motion: incommensurate sinusoids in position and tilt
    Eigen::Vector3d wobble(std::sin(0.9 * t + ph[0]), std::sin(1.3 * t + ph[1]),
                           std::sin(0.7 * t + ph[2]));
    Pose3 device_table = look_down_pose(head0 + cfg.head_amp_pos * wobble);
    Pose3 tilt = compose(
        Pose3::axis_angle({1, 0, 0}, cfg.head_amp_rot * std::sin(1.1 * t + ph[3])),
        Pose3::axis_angle({0, 1, 0}, cfg.head_amp_rot * std::sin(0.8 * t + ph[4])));
    device_table = compose(device_table, tilt);

    Pose3 device_world = compose(gauge, device_table);
    Eigen::Matrix<double, 3, 3, Eigen::RowMajor> r = device_world.rotation();
    dev.timestamps.push_back(t);
    dev.values.row(i).head(9) = Eigen::Map<const Eigen::VectorXd>(r.data(), 9).transpose();
    dev.values.row(i).segment(9, 3) = device_world.translation().transpose();

    Eigen::Vector3d hand_table =
        world.gripper_pos +
        cfg.human_noise * Eigen::Vector3d(noise(noise_rng), noise(noise_rng), noise(noise_rng));
    hand.timestamps.push_back(t);
    hand.values.row(i) = device_table.inverse().apply(hand_table).transpose();

    scene.timestamps.push_back(t);
    scene.values.row(i) << gauge.apply(world.object_pos).transpose(),
        gauge.apply(world.bowl_pos).transpose(), world.held ? 1.0 : 0.0;

    ExpertAction act = expert_action(world, cfg);
    wander = ou_step(wander, dt, cfg.expert_noise_tau, cfg.expert_cmd_noise, noise,
                     noise_rng);
    Eigen::Vector3d waypoint =
        approach_step(world.gripper_pos, act.target + wander, speed * dt);
    world = step_env(world, waypoint, act.grasp, dt, cfg, speed, region, spawn_rng);
  }

  HumanLogs out;
  out.device_csv = write_device_pose_csv(dev);
  out.hand_csv = write_hand_pos_csv(hand, 1);
  out.scene_csv = write_scene_csv(scene);
  out.score = world.score;
  return out;
}

SimEnv::SimEnv(const BenchConfig& cfg, uint64_t seed)
    : cfg_(cfg), respawn_rng_(respawn_seed(seed)) {
  world_ = initial_world(cfg_, cfg_.full_region(), respawn_rng_);
  q_ = home_joints(cfg_.arm, {0.30, 0.0, 0.0});
  world_.gripper_pos = fk(cfg_.arm, q_).gripper;
}

Eigen::VectorXd SimEnv::robot_features() {
  Eigen::VectorXd f(32);
  Pose3 pose = fk_pose(cfg_.arm, q_);
  Eigen::Matrix<double, 3, 3, Eigen::RowMajor> r = pose.rotation();
  f.head(9) = Eigen::Map<const Eigen::VectorXd>(r.data(), 9);
  f.segment(9, 3) = pose.translation();
  f.segment(12, 7) = q_;
  const Pose3& cam = cfg_.camera.extrinsics;
  f.segment(19, 3) = cam.apply(world_.object_pos);
  f.segment(22, 3) = cam.apply(world_.bowl_pos);
  f[25] = world_.held ? 1.0 : 0.0;
  f.segment(26, 3) = world_.object_pos - pose.translation();
  f.segment(29, 3) = world_.bowl_pos - pose.translation();
  return f;
}

void SimEnv::apply_control(const Eigen::VectorXd& joint_target, double dt) {
  if (joint_target.size() != 7) throw EnvFault("expected 7 joint targets per arm");
  Eigen::VectorXd cmd(7);
  for (int j = 0; j < 7; ++j) {
    cmd[j] = std::clamp(joint_target[j], cfg_.arm.joints[static_cast<size_t>(j)].lower,
                        cfg_.arm.joints[static_cast<size_t>(j)].upper);
  }
  bool grasp = cmd[6] > 0.5;
  world_ = step_env(world_, fk(cfg_.arm, cmd).gripper, grasp, dt, cfg_,
                    cfg_.robot_speed * kSpeedTol, cfg_.full_region(), respawn_rng_);
  // Encoders report the speed-limited pose actually reached, not the
  // commanded setpoint; otherwise observations silently drift away from the
  // world whenever a commanded chunk outruns the arm.
  q_.head(6) = teleop_posture(cfg_.arm, world_.gripper_pos).head(6);
  q_[6] = cmd[6];
}

EvalResult evaluate(const PolicyParams& params, const EmbodimentStats& robot_stats,
                    const BenchConfig& cfg, int n_episodes, uint64_t seed0,
                    const RolloutConfig& rc) {
  EvalResult res;
  for (int i = 0; i < n_episodes; ++i) {
    SimEnv env(cfg, seed0 + static_cast<uint64_t>(i));
    res.per_episode.push_back(rollout(params, env, robot_stats, rc).score);
  }
  double sum = 0;
  for (double s : res.per_episode) sum += s;
  res.mean = sum / std::max<size_t>(1, res.per_episode.size());
  double var = 0;
  for (double s : res.per_episode) var += (s - res.mean) * (s - res.mean);
  res.stddev = std::sqrt(var / std::max<size_t>(1, res.per_episode.size()));
  return res;
}

EvalResult evaluate_expert(const BenchConfig& cfg, int n_episodes, uint64_t seed0) {
  EvalResult res;
  const double dt = 0.04;  // 25 Hz control
  for (int i = 0; i < n_episodes; ++i) {
    SimEnv env(cfg, seed0 + static_cast<uint64_t>(i));
    while (!env.done()) {
      ExpertAction act = expert_action(env.world(), cfg);
      Eigen::Vector3d p_next =
          approach_step(env.world().gripper_pos, act.target, cfg.robot_speed * dt);
      Eigen::VectorXd q = teleop_posture(cfg.arm, p_next);
      q[6] = act.jaw;
      env.apply_control(q, dt);
    }
    res.per_episode.push_back(env.score());
  }
  double sum = 0;
  for (double s : res.per_episode) sum += s;
  res.mean = sum / std::max<size_t>(1, res.per_episode.size());
  double var = 0;
  for (double s : res.per_episode) var += (s - res.mean) * (s - res.mean);
  res.stddev = std::sqrt(var / std::max<size_t>(1, res.per_episode.size()));
  return res;
}

}  // namespace egoalign
