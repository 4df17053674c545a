#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace egoalign {

struct GeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Camera-frame depth <= ~0: point is behind or on the image plane.
struct NonPositiveDepth : GeometryError {
  using GeometryError::GeometryError;
};

/// Closest rotation to M in Frobenius norm (polar factor, det forced to +1).
Eigen::Matrix3d closest_rotation(const Eigen::Matrix3d& m);

/// Rigid transform in SE(3). Rotation stored as a matrix; orthonormality
/// within 1e-9 is checked at construction.
class Pose3 {
 public:
  Pose3() : rot_(Eigen::Matrix3d::Identity()), trans_(Eigen::Vector3d::Zero()) {}
  Pose3(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);

  static Pose3 identity() { return Pose3(); }
  static Pose3 translation(double x, double y, double z);
  static Pose3 axis_angle(const Eigen::Vector3d& axis, double angle_rad,
                          const Eigen::Vector3d& t = Eigen::Vector3d::Zero());
  static Pose3 from_matrix(const Eigen::Matrix4d& hom);
  /// Construct from a possibly drifted rotation; snaps to the closest rotation.
  static Pose3 from_drifted(const Eigen::Matrix3d& rotation,
                            const Eigen::Vector3d& translation);

  const Eigen::Matrix3d& rotation() const { return rot_; }
  const Eigen::Vector3d& translation() const { return trans_; }
  Eigen::Matrix4d matrix() const;

  Pose3 inverse() const;
  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rot_ * p + trans_; }

 private:
  Eigen::Matrix3d rot_;
  Eigen::Vector3d trans_;
};

/// a . b as homogeneous-transform composition; re-orthonormalizes when the
/// product rotation has drifted beyond 1e-9.
Pose3 compose(const Pose3& a, const Pose3& b);

double rotation_drift(const Eigen::Matrix3d& m);

struct CameraModel {
  Eigen::Matrix3d intrinsics;  // fx, fy, cx, cy in pixels
  Pose3 extrinsics;            // base frame -> camera frame
  int width = 0;
  int height = 0;

  CameraModel(const Eigen::Matrix3d& k, const Pose3& extr, int w, int h);

  double fx() const { return intrinsics(0, 0); }
  double fy() const { return intrinsics(1, 1); }
  double cx() const { return intrinsics(0, 2); }
  double cy() const { return intrinsics(1, 2); }
};

/// Pinhole projection of a base-frame point to pixels.
/// Throws NonPositiveDepth when the camera-frame z <= 1e-9.
Eigen::Vector2d project(const CameraModel& cam, const Eigen::Vector3d& p_base);

}  // namespace egoalign
