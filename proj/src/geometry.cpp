#include "egoalign/geometry.hpp"

#include <cmath>

namespace egoalign {

double rotation_drift(const Eigen::Matrix3d& m) {
  double ortho = (m.transpose() * m - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return ortho;
}

Eigen::Matrix3d closest_rotation(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0) {
    Eigen::Matrix3d flip = Eigen::Matrix3d::Identity();
    flip(2, 2) = -1.0;
    r = svd.matrixU() * flip * svd.matrixV().transpose();
  }
  return r;
}

Pose3::Pose3(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
    : rot_(rotation), trans_(translation) {
  if (rotation_drift(rot_) > 1e-9 || std::abs(rot_.determinant() - 1.0) > 1e-9) {
    throw GeometryError("Pose3: rotation not orthonormal with det +1 within 1e-9");
  }
}

Pose3 Pose3::translation(double x, double y, double z) {
  return Pose3(Eigen::Matrix3d::Identity(), Eigen::Vector3d(x, y, z));
}

Pose3 Pose3::axis_angle(const Eigen::Vector3d& axis, double angle_rad,
                        const Eigen::Vector3d& t) {
  Eigen::AngleAxisd aa(angle_rad, axis.normalized());
  return Pose3(aa.toRotationMatrix(), t);
}

Pose3 Pose3::from_matrix(const Eigen::Matrix4d& hom) {
  return Pose3(hom.topLeftCorner<3, 3>(), hom.topRightCorner<3, 1>());
}

Pose3 Pose3::from_drifted(const Eigen::Matrix3d& rotation,
                          const Eigen::Vector3d& translation) {
  return Pose3(closest_rotation(rotation), translation);
}

Eigen::Matrix4d Pose3::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rot_;
  m.topRightCorner<3, 1>() = trans_;
  return m;
}

Pose3 Pose3::inverse() const {
  Eigen::Matrix3d rt = rot_.transpose();
  return Pose3(rt, -(rt * trans_));
}

Pose3 compose(const Pose3& a, const Pose3& b) {
  Eigen::Matrix3d r = a.rotation() * b.rotation();
  Eigen::Vector3d t = a.rotation() * b.translation() + a.translation();
  if (rotation_drift(r) > 1e-9) {
    r = closest_rotation(r);
  }
  return Pose3(r, t);
}

CameraModel::CameraModel(const Eigen::Matrix3d& k, const Pose3& extr, int w, int h)
    : intrinsics(k), extrinsics(extr), width(w), height(h) {
  if (fx() <= 0 || fy() <= 0) {
    throw GeometryError("CameraModel: focal lengths must be positive");
  }
  if (cx() < 0 || cx() >= w || cy() < 0 || cy() >= h) {
    throw GeometryError("CameraModel: principal point outside image");
  }
}

Eigen::Vector2d project(const CameraModel& cam, const Eigen::Vector3d& p_base) {
  Eigen::Vector3d pc = cam.extrinsics.apply(p_base);
  if (pc.z() <= 1e-9) {
    throw NonPositiveDepth("project: camera-frame depth " + std::to_string(pc.z()));
  }
  Eigen::Vector3d uvw = cam.intrinsics * pc;
  return {uvw.x() / uvw.z(), uvw.y() / uvw.z()};
}

}  // namespace egoalign
