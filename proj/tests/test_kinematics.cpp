#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "egoalign/kinematics.hpp"

using namespace egoalign;

namespace {

Eigen::VectorXd random_q(const ArmModel& arm, std::mt19937_64& rng) {
  Eigen::VectorXd q(arm.joints.size());
  for (size_t j = 0; j < arm.joints.size(); ++j) {
    std::uniform_real_distribution<double> u(arm.joints[j].lower, arm.joints[j].upper);
    q[j] = u(rng);
  }
  return q;
}

// Brute-force FK oracle: accumulate raw 4x4 homogeneous matrices.
Eigen::Matrix4d fk_oracle(const ArmModel& arm, const Eigen::VectorXd& q, int links) {
  Eigen::Matrix4d t = Eigen::Matrix4d::Identity();
  for (int j = 0; j < links; ++j) {
    t *= arm.joints[j].offset.matrix();
    Eigen::Matrix4d rot = Eigen::Matrix4d::Identity();
    rot.topLeftCorner<3, 3>() =
        Eigen::AngleAxisd(q[j], arm.joints[j].axis).toRotationMatrix();
    t *= rot;
  }
  return t;
}

}  // namespace

TEST_CASE("fk at the zero configuration sums the link offsets") {
  ArmModel arm = ArmModel::default_arm();
  Eigen::VectorXd q = Eigen::VectorXd::Zero(7);
  ArmKeypoints kp = fk(arm, q);
  auto offset_sum = [&](int links) {
    Eigen::Vector3d s = Eigen::Vector3d::Zero();
    for (int j = 0; j < links; ++j) s += arm.joints[j].offset.translation();
    return s;
  };
  CHECK((kp.forearm - offset_sum(arm.forearm_link)).norm() < 1e-12);
  CHECK((kp.wrist - offset_sum(arm.wrist_link)).norm() < 1e-12);
  CHECK((kp.gripper - offset_sum(arm.gripper_link)).norm() < 1e-12);
}

TEST_CASE("rotating the base joint by pi/2 swings the arm into the y axis") {
  ArmModel arm = ArmModel::default_arm();
  Eigen::VectorXd q0 = Eigen::VectorXd::Zero(7);
  Eigen::VectorXd q = q0;
  q[0] = M_PI / 2;  // base axis is z
  ArmKeypoints straight = fk(arm, q0);
  ArmKeypoints swung = fk(arm, q);
  // base offset is along x before the joint rotation, so it does not rotate
  Eigen::Vector3d pivot = arm.joints[0].offset.translation();
  Eigen::Vector3d expect =
      pivot + Eigen::Vector3d(-(straight.gripper - pivot).y(),
                              (straight.gripper - pivot).x(), (straight.gripper - pivot).z());
  CHECK((swung.gripper - expect).norm() < 1e-12);
}

TEST_CASE("fk matches the 4x4 homogeneous oracle at random configurations") {
  ArmModel arm = ArmModel::default_arm();
  std::mt19937_64 rng(61);
  for (int i = 0; i < 50; ++i) {
    Eigen::VectorXd q = random_q(arm, rng);
    for (int link : {arm.forearm_link, arm.wrist_link, arm.gripper_link}) {
      Eigen::Matrix4d expect = fk_oracle(arm, q, link);
      CHECK((fk_link(arm, q, link).matrix() - expect).cwiseAbs().maxCoeff() < 1e-10);
    }
    ArmKeypoints kp = fk(arm, q);
    CHECK((kp.gripper - fk_oracle(arm, q, arm.gripper_link).col(3).head<3>()).norm() <
          1e-10);
  }
}

TEST_CASE("fk is equivariant under a base-frame change") {
  // moving the base by B moves every keypoint by B
  ArmModel arm = ArmModel::default_arm();
  std::mt19937_64 rng(67);
  Eigen::VectorXd q = random_q(arm, rng);
  Pose3 base = Pose3::axis_angle({0, 0, 1}, 0.7, {0.1, 0.2, 0.05});
  ArmModel moved = arm;
  moved.joints[0].offset = compose(base, arm.joints[0].offset);
  ArmKeypoints a = fk(arm, q), b = fk(moved, q);
  CHECK((b.gripper - base.apply(a.gripper)).norm() < 1e-12);
  CHECK((b.wrist - base.apply(a.wrist)).norm() < 1e-12);
  CHECK((b.forearm - base.apply(a.forearm)).norm() < 1e-12);
}

TEST_CASE("joint limits are enforced") {
  ArmModel arm = ArmModel::default_arm();
  Eigen::VectorXd q = Eigen::VectorXd::Zero(7);
  q[2] = 99.0;
  CHECK_THROWS_AS(fk(arm, q), JointLimitViolation);
  Eigen::VectorXd short_q = Eigen::VectorXd::Zero(6);
  CHECK_THROWS_AS(fk(arm, short_q), KinematicsError);
}

TEST_CASE("arm config round trip") {
  ArmModel arm = ArmModel::default_arm();
  ArmModel back = ArmModel::from_config(arm.to_config());
  REQUIRE(back.joints.size() == arm.joints.size());
  std::mt19937_64 rng(71);
  Eigen::VectorXd q = random_q(arm, rng);
  CHECK((fk(back, q).gripper - fk(arm, q).gripper).norm() < 1e-12);
  CHECK(back.joints[6].lower == arm.joints[6].lower);
}

TEST_CASE("robot prompt") {
  ArmModel arm = ArmModel::default_arm();
  Eigen::Matrix3d k;
  k << 300, 0, 160, 0, 300, 120, 0, 0, 1;
  // camera 0.8 m above the workspace looking straight down
  Eigen::Matrix3d rot;
  rot << 1, 0, 0, 0, -1, 0, 0, 0, -1;
  CameraModel cam(k, Pose3(rot, {0.35, 0.0, 0.8}).inverse(), 320, 240);

  Eigen::VectorXd q = Eigen::VectorXd::Zero(7);
  MaskPrompt p = robot_prompt(arm, q, cam);
  REQUIRE(p.keypoints_px.size() == 3);
  CHECK(p.embodiment == Embodiment::Robot);
  CHECK_FALSE(p.partially_out_of_view);
  // the line runs from the gripper keypoint to the forearm keypoint
  CHECK((p.line_segment_px[0] - p.keypoints_px[2]).norm() < 1e-12);
  CHECK((p.line_segment_px[1] - p.keypoints_px[0]).norm() < 1e-12);
  // manual projection oracle for the gripper keypoint
  ArmKeypoints kp = fk(arm, q);
  Eigen::Vector2d expect = project(cam, kp.gripper);
  CHECK((p.keypoints_px[2] - expect).norm() < 1e-12);

  // shifting the camera +1 cm along x moves pixels by -fx * 0.01 / z
  CameraModel cam2(k, Pose3(rot, {0.36, 0.0, 0.8}).inverse(), 320, 240);
  MaskPrompt p2 = robot_prompt(arm, q, cam2);
  double z = cam.extrinsics.apply(kp.gripper).z();
  CHECK(p2.keypoints_px[2].x() - p.keypoints_px[2].x() ==
        doctest::Approx(-300 * 0.01 / z).epsilon(1e-9));
  CHECK(p2.keypoints_px[2].y() == doctest::Approx(p.keypoints_px[2].y()));
}

TEST_CASE("hand prompt uses the bottom-right to top-left diagonal") {
  MaskPrompt p = hand_prompt({10, 10, 20, 30}, {15, 20});
  CHECK(p.embodiment == Embodiment::Human);
  CHECK((p.line_segment_px[0] - Eigen::Vector2d(20, 30)).norm() < 1e-12);
  CHECK((p.line_segment_px[1] - Eigen::Vector2d(10, 10)).norm() < 1e-12);
  REQUIRE(p.keypoints_px.size() == 1);
  CHECK((p.keypoints_px[0] - Eigen::Vector2d(15, 20)).norm() < 1e-12);
  CHECK_THROWS_AS(hand_prompt({20, 10, 10, 30}, {15, 20}), DegenerateBox);
}

TEST_CASE("overlay blackout and red line") {
  Raster img = Raster::filled(40, 30, 200, 200, 200);
  BinaryMask mask = BinaryMask::empty(40, 30);
  for (int y = 5; y < 10; ++y)
    for (int x = 5; x < 10; ++x) mask.at(x, y) = 1;
  std::array<Eigen::Vector2d, 2> seg = {Eigen::Vector2d(20, 15), Eigen::Vector2d(30, 15)};
  Raster out = apply_overlay(mask, seg, img);

  // integer-walk oracle: classify every pixel independently
  auto seg_dist = [&](double px, double py) {
    Eigen::Vector2d a = seg[0], b = seg[1], p(px, py);
    Eigen::Vector2d d = b - a;
    double t = std::clamp(d.dot(p - a) / d.squaredNorm(), 0.0, 1.0);
    return (p - (a + t * d)).norm();
  };
  for (int y = 0; y < 30; ++y) {
    for (int x = 0; x < 40; ++x) {
      const uint8_t* px = out.px(x, y);
      if (seg_dist(x, y) <= 2.0) {
        CHECK(px[0] == 255);
        CHECK(px[1] == 0);
        CHECK(px[2] == 0);
      } else if (mask.at(x, y)) {
        CHECK(px[0] == 0);
        CHECK(px[2] == 0);
      } else {
        CHECK(px[0] == 200);
      }
    }
  }

  // idempotence: re-applying the overlay changes nothing
  Raster twice = apply_overlay(mask, seg, out);
  CHECK(twice.rgb == out.rgb);
}

TEST_CASE("hull segmenter covers its prompt keypoints") {
  Raster img = Raster::filled(64, 64, 128, 128, 128);
  MaskPrompt p;
  p.embodiment = Embodiment::Robot;
  p.keypoints_px = {{10, 10}, {50, 12}, {30, 50}};
  p.line_segment_px = {Eigen::Vector2d(30, 50), Eigen::Vector2d(10, 10)};
  HullSegmenter seg(4.0);
  BinaryMask m = seg.segment(img, p);
  for (const auto& kp : p.keypoints_px)
    CHECK(m.at(static_cast<int>(kp.x()), static_cast<int>(kp.y())) == 1);
  // centroid of the triangle is inside the hull
  CHECK(m.at(30, 24) == 1);
  CHECK(m.at(0, 63) == 0);
}

TEST_CASE("ppm round trip") {
  Raster img = Raster::filled(7, 5, 1, 2, 3);
  img.px(3, 2)[0] = 250;
  Raster back = read_ppm(write_ppm(img));
  CHECK(back.width == 7);
  CHECK(back.height == 5);
  CHECK(back.rgb == img.rgb);
}
