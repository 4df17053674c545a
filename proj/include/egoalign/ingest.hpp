#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "egoalign/geometry.hpp"

namespace egoalign {

struct IngestError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct MalformedRow : IngestError {
  MalformedRow(size_t line, const std::string& what)
      : IngestError("line " + std::to_string(line) + ": " + what), line(line) {}
  size_t line;
};
struct ClockMismatch : IngestError {
  using IngestError::IngestError;
};
struct ArityMismatch : IngestError {
  using IngestError::IngestError;
};
struct InsufficientOverlap : IngestError {
  using IngestError::IngestError;
};

enum class SeriesKind {
  DevicePoseWorld,  // 12: row-major rotation + translation
  HandPosDevice,    // 3 per hand
  EefPoseBase,      // 12 per arm
  JointPos,         // 7 per arm
  JointAction,      // 7 per arm
  Scene,            // 7: object xyz, bowl xyz, held flag
};

enum class Embodiment { Human, Robot };

inline const char* embodiment_name(Embodiment e) {
  return e == Embodiment::Human ? "human" : "robot";
}

/// Timestamped stream at a fixed nominal rate. Timestamps are seconds
/// relative to episode start, strictly increasing.
struct TimedSeries {
  std::vector<double> timestamps;
  Eigen::MatrixXd values;  // N x D
  double nominal_rate = 0.0;
  SeriesKind kind;

  double start() const { return timestamps.front(); }
  double end() const { return timestamps.back(); }
  /// Linear interpolation of the value row at time t (clamped to extents).
  Eigen::VectorXd sample(double t) const;
  /// Pose3 at time t for 12-column pose series (per-arm block `arm`);
  /// rotation lerped then re-orthonormalized.
  Pose3 sample_pose(double t, int arm = 0) const;
  Pose3 pose_at(size_t row, int arm = 0) const;
};

struct Episode {
  Embodiment embodiment;
  std::vector<TimedSeries> series;
  int arms = 1;
  std::string source_id;

  const TimedSeries* find(SeriesKind k) const;
  const TimedSeries& require(SeriesKind k) const;
  double start() const;
  double end() const;
  double nominal_rate() const;
};

inline constexpr double kHumanRate = 30.0;
inline constexpr double kRobotRate = 50.0;
inline constexpr double kHumanGapSplit = 0.1;       // seconds
inline constexpr double kClockJoinTol = 1e-3;       // seconds

/// Parse MPS-style device-pose and hand-position CSVs into human episodes.
/// Rows with missing hand detections are dropped; gaps > 0.1 s split
/// episodes. An optional scene CSV carries benchmark state features.
std::vector<Episode> parse_human_log(const std::string& device_pose_csv,
                                     const std::string& hand_pos_csv,
                                     const std::string& source_id,
                                     const std::string& scene_csv = "");

/// Parse a robot teleoperation log (eef poses, joint positions, joint
/// actions per arm) into robot episodes at 50 Hz.
std::vector<Episode> parse_robot_log(const std::string& log_csv,
                                     const std::string& source_id,
                                     const std::string& scene_csv = "");

/// Resample every series onto the episode's nominal-rate grid spanning the
/// intersection of series extents. Requires >= 1 s overlap.
Episode time_align(const Episode& ep);

// CSV writers (used by the benchmark generator and round-trip tests).
std::string write_device_pose_csv(const TimedSeries& s);
std::string write_hand_pos_csv(const TimedSeries& s, int arms);
std::string write_robot_log_csv(const Episode& ep);
std::string write_scene_csv(const TimedSeries& s);

}  // namespace egoalign
