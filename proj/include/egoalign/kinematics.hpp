#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "egoalign/geometry.hpp"
#include "egoalign/ingest.hpp"

namespace egoalign {

struct KinematicsError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct JointLimitViolation : KinematicsError {
  using KinematicsError::KinematicsError;
};
struct DegenerateBox : KinematicsError {
  using KinematicsError::KinematicsError;
};
struct ServiceUnavailable : KinematicsError {
  using KinematicsError::KinematicsError;
};

struct RevoluteJoint {
  Pose3 offset;          // fixed transform from the previous link frame
  Eigen::Vector3d axis;  // rotation axis in the local frame, unit length
  double lower = -3.2, upper = 3.2;  // radians
};

/// Serial chain of 6 revolute joints plus a gripper jaw joint, with
/// {forearm, wrist, gripper} keypoints attached to link frames.
struct ArmModel {
  std::vector<RevoluteJoint> joints;  // exactly 7
  int forearm_link = 3;               // link index after that many joints
  int wrist_link = 5;
  int gripper_link = 7;

  static ArmModel default_arm();
  static ArmModel from_config(const std::string& text);
  std::string to_config() const;

  void check_limits(const Eigen::VectorXd& q) const;
};

struct ArmKeypoints {
  Eigen::Vector3d forearm, wrist, gripper;
};

/// Keypoint positions in the base frame via chained pose composition.
ArmKeypoints fk(const ArmModel& arm, const Eigen::VectorXd& q);
/// Full end-effector pose (final link frame) in the base frame.
Pose3 fk_pose(const ArmModel& arm, const Eigen::VectorXd& q);
/// Pose of the link frame after `link` joints.
Pose3 fk_link(const ArmModel& arm, const Eigen::VectorXd& q, int link);

/// Keypoint prompts plus the red-line segment in pixel space.
struct MaskPrompt {
  std::vector<Eigen::Vector2d> keypoints_px;
  std::array<Eigen::Vector2d, 2> line_segment_px;
  Embodiment embodiment;
  bool partially_out_of_view = false;
};

/// Prompt for the robot arm: projected {forearm, wrist, gripper} keypoints,
/// line from gripper to forearm (the elbow end of the chain).
MaskPrompt robot_prompt(const ArmModel& arm, const Eigen::VectorXd& q,
                        const CameraModel& cam);

struct PixelBox {
  double x0, y0, x1, y1;  // x0 < x1, y0 < y1
};

/// Prompt for the human hand: line from the bottom-right to the top-left
/// corner of the contour bounding box; the projected hand position is the
/// single prompt keypoint.
MaskPrompt hand_prompt(const PixelBox& contour_bbox_px, const Eigen::Vector2d& hand_px);

struct Raster {
  int width = 0, height = 0;
  std::vector<uint8_t> rgb;  // 3 bytes per pixel, row-major

  static Raster filled(int w, int h, uint8_t r, uint8_t g, uint8_t b);
  uint8_t* px(int x, int y) { return rgb.data() + 3 * (y * width + x); }
  const uint8_t* px(int x, int y) const { return rgb.data() + 3 * (y * width + x); }
};

struct BinaryMask {
  int width = 0, height = 0;
  std::vector<uint8_t> on;  // 0/1 per pixel, row-major

  static BinaryMask empty(int w, int h);
  uint8_t& at(int x, int y) { return on[static_cast<size_t>(y) * width + x]; }
  uint8_t at(int x, int y) const { return on[static_cast<size_t>(y) * width + x]; }
};

/// Black out masked pixels, then paint every pixel within 2 px of the line
/// segment pure red. Deterministic rasterization.
Raster apply_overlay(const BinaryMask& mask,
                     const std::array<Eigen::Vector2d, 2>& line_segment,
                     const Raster& image);

/// External segmentation-service boundary. Callers may issue parallel
/// requests; implementations must be safe for concurrent calls.
class SegmentationClient {
 public:
  virtual ~SegmentationClient() = default;
  virtual BinaryMask segment(const Raster& image, const MaskPrompt& prompt) = 0;
};

/// Offline stub: dilated convex hull of the prompt keypoints.
class HullSegmenter : public SegmentationClient {
 public:
  explicit HullSegmenter(double dilation_radius_px = 8.0) : radius_(dilation_radius_px) {}
  BinaryMask segment(const Raster& image, const MaskPrompt& prompt) override;

 private:
  double radius_;
};

// PPM (P6) image IO for the render-overlay command.
std::string write_ppm(const Raster& img);
Raster read_ppm(const std::string& data);

}  // namespace egoalign
