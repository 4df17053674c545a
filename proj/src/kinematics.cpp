#include "egoalign/kinematics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "egoalign/config.hpp"

namespace egoalign {

ArmModel ArmModel::default_arm() {
  // Desk-scale 6-DoF chain plus gripper jaw; link lengths loosely match a
  // small hobby arm. Offsets run along +x so the zero pose lies on the x axis.
  ArmModel arm;
  auto joint = [](double dx, const Eigen::Vector3d& axis, double lo, double hi) {
    RevoluteJoint j;
    j.offset = Pose3::translation(dx, 0, 0);
    j.axis = axis;
    j.lower = lo;
    j.upper = hi;
    return j;
  };
  arm.joints = {
      joint(0.00, {0, 0, 1}, -4.0, 4.0),   // base yaw
      joint(0.10, {0, 1, 0}, -4.0, 4.0),   // shoulder pitch
      joint(0.22, {0, 1, 0}, -4.0, 4.0),   // elbow pitch
      joint(0.16, {1, 0, 0}, -4.0, 4.0),   // forearm roll
      joint(0.12, {0, 1, 0}, -4.0, 4.0),   // wrist pitch
      joint(0.05, {1, 0, 0}, -4.0, 4.0),   // wrist roll
      joint(0.05, {0, 1, 0}, -0.1, 1.3),   // gripper jaw
  };
  arm.forearm_link = 3;
  arm.wrist_link = 5;
  arm.gripper_link = 7;
  return arm;
}

void ArmModel::check_limits(const Eigen::VectorXd& q) const {
  if (q.size() != static_cast<long>(joints.size())) {
    throw KinematicsError("joint vector length != " + std::to_string(joints.size()));
  }
  for (size_t j = 0; j < joints.size(); ++j) {
    if (q[static_cast<long>(j)] < joints[j].lower || q[static_cast<long>(j)] > joints[j].upper) {
      throw JointLimitViolation("joint " + std::to_string(j + 1) + " outside limits");
    }
  }
}

Pose3 fk_link(const ArmModel& arm, const Eigen::VectorXd& q, int link) {
  arm.check_limits(q);
  Pose3 t;
  for (int j = 0; j < link; ++j) {
    t = compose(t, arm.joints[static_cast<size_t>(j)].offset);
    t = compose(t, Pose3::axis_angle(arm.joints[static_cast<size_t>(j)].axis, q[j]));
  }
  return t;
}

ArmKeypoints fk(const ArmModel& arm, const Eigen::VectorXd& q) {
  arm.check_limits(q);
  ArmKeypoints kp;
  Pose3 t;
  for (size_t j = 0; j < arm.joints.size(); ++j) {
    t = compose(t, arm.joints[j].offset);
    t = compose(t, Pose3::axis_angle(arm.joints[j].axis, q[static_cast<long>(j)]));
    int link = static_cast<int>(j) + 1;
    if (link == arm.forearm_link) kp.forearm = t.translation();
    if (link == arm.wrist_link) kp.wrist = t.translation();
    if (link == arm.gripper_link) kp.gripper = t.translation();
  }
  return kp;
}

Pose3 fk_pose(const ArmModel& arm, const Eigen::VectorXd& q) {
  return fk_link(arm, q, static_cast<int>(arm.joints.size()));
}

std::string ArmModel::to_config() const {
  KeyValueFile kv;
  for (size_t j = 0; j < joints.size(); ++j) {
    std::string s = "joint" + std::to_string(j + 1);
    std::vector<double> off(12);
    Eigen::Map<Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(off.data()) = joints[j].offset.rotation();
    Eigen::Map<Eigen::Vector3d>(off.data() + 9) = joints[j].offset.translation();
    kv.set_doubles(s + ".offset", off);
    kv.set_doubles(s + ".axis", {joints[j].axis.x(), joints[j].axis.y(), joints[j].axis.z()});
    kv.set_doubles(s + ".limits", {joints[j].lower, joints[j].upper});
  }
  kv.set_int("keypoints.forearm_link", forearm_link);
  kv.set_int("keypoints.wrist_link", wrist_link);
  kv.set_int("keypoints.gripper_link", gripper_link);
  return kv.dump();
}

ArmModel ArmModel::from_config(const std::string& text) {
  KeyValueFile kv = KeyValueFile::parse(text, "arm-config");
  ArmModel arm;
  for (int j = 1; j <= 7; ++j) {
    std::string s = "joint" + std::to_string(j);
    RevoluteJoint rj;
    auto off = kv.get_doubles(s + ".offset");
    if (off.size() != 12) throw KinematicsError(s + ".offset needs 12 values");
    Eigen::Matrix3d r = Eigen::Map<Eigen::Matrix<double, 3, 3, Eigen::RowMajor>>(off.data());
    rj.offset = Pose3::from_drifted(r, Eigen::Map<Eigen::Vector3d>(off.data() + 9));
    auto ax = kv.get_doubles(s + ".axis");
    if (ax.size() != 3) throw KinematicsError(s + ".axis needs 3 values");
    rj.axis = Eigen::Vector3d(ax[0], ax[1], ax[2]).normalized();
    auto lim = kv.get_doubles(s + ".limits");
    if (lim.size() != 2) throw KinematicsError(s + ".limits needs 2 values");
    rj.lower = lim[0];
    rj.upper = lim[1];
    arm.joints.push_back(rj);
  }
  arm.forearm_link = static_cast<int>(kv.get_int("keypoints.forearm_link"));
  arm.wrist_link = static_cast<int>(kv.get_int("keypoints.wrist_link"));
  arm.gripper_link = static_cast<int>(kv.get_int("keypoints.gripper_link"));
  return arm;
}

MaskPrompt robot_prompt(const ArmModel& arm, const Eigen::VectorXd& q,
                        const CameraModel& cam) {
  ArmKeypoints kp = fk(arm, q);
  MaskPrompt prompt;
  prompt.embodiment = Embodiment::Robot;
  prompt.keypoints_px = {project(cam, kp.forearm), project(cam, kp.wrist),
                         project(cam, kp.gripper)};
  prompt.line_segment_px = {prompt.keypoints_px[2], prompt.keypoints_px[0]};
  for (const auto& p : prompt.keypoints_px) {
    if (p.x() < 0 || p.x() >= cam.width || p.y() < 0 || p.y() >= cam.height) {
      prompt.partially_out_of_view = true;
    }
  }
  return prompt;
}

MaskPrompt hand_prompt(const PixelBox& box, const Eigen::Vector2d& hand_px) {
  if (!(box.x1 > box.x0) || !(box.y1 > box.y0)) {
    throw DegenerateBox("contour bounding box has zero area");
  }
  MaskPrompt prompt;
  prompt.embodiment = Embodiment::Human;
  prompt.keypoints_px = {hand_px};
  prompt.line_segment_px = {Eigen::Vector2d(box.x1, box.y1), Eigen::Vector2d(box.x0, box.y0)};
  return prompt;
}

Raster Raster::filled(int w, int h, uint8_t r, uint8_t g, uint8_t b) {
  Raster img;
  img.width = w;
  img.height = h;
  img.rgb.resize(static_cast<size_t>(w) * h * 3);
  for (size_t i = 0; i < img.rgb.size(); i += 3) {
    img.rgb[i] = r;
    img.rgb[i + 1] = g;
    img.rgb[i + 2] = b;
  }
  return img;
}

BinaryMask BinaryMask::empty(int w, int h) {
  BinaryMask m;
  m.width = w;
  m.height = h;
  m.on.assign(static_cast<size_t>(w) * h, 0);
  return m;
}

namespace {

double point_segment_dist(const Eigen::Vector2d& p, const Eigen::Vector2d& a,
                          const Eigen::Vector2d& b) {
  Eigen::Vector2d ab = b - a;
  double len2 = ab.squaredNorm();
  if (len2 < 1e-18) return (p - a).norm();
  double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + t * ab)).norm();
}

}  // namespace

Raster apply_overlay(const BinaryMask& mask,
                     const std::array<Eigen::Vector2d, 2>& line_segment,
                     const Raster& image) {
  if (mask.width != image.width || mask.height != image.height) {
    throw KinematicsError("apply_overlay: mask and image dimensions differ");
  }
  Raster out = image;
  for (int y = 0; y < out.height; ++y) {
    for (int x = 0; x < out.width; ++x) {
      if (mask.at(x, y)) {
        uint8_t* p = out.px(x, y);
        p[0] = p[1] = p[2] = 0;
      }
    }
  }
  const Eigen::Vector2d& a = line_segment[0];
  const Eigen::Vector2d& b = line_segment[1];
  constexpr double kLineRadius = 2.0;
  int x0 = std::max(0, static_cast<int>(std::floor(std::min(a.x(), b.x()) - kLineRadius)));
  int x1 = std::min(out.width - 1,
                    static_cast<int>(std::ceil(std::max(a.x(), b.x()) + kLineRadius)));
  int y0 = std::max(0, static_cast<int>(std::floor(std::min(a.y(), b.y()) - kLineRadius)));
  int y1 = std::min(out.height - 1,
                    static_cast<int>(std::ceil(std::max(a.y(), b.y()) + kLineRadius)));
  for (int y = y0; y <= y1; ++y) {
    for (int x = x0; x <= x1; ++x) {
      if (point_segment_dist({static_cast<double>(x), static_cast<double>(y)}, a, b) <=
          kLineRadius) {
        uint8_t* p = out.px(x, y);
        p[0] = 255;
        p[1] = 0;
        p[2] = 0;
      }
    }
  }
  return out;
}

namespace {

// Monotone-chain convex hull; returns CCW polygon.
std::vector<Eigen::Vector2d> convex_hull(std::vector<Eigen::Vector2d> pts) {
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
    return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y());
  });
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [](const auto& a, const auto& b) { return a == b; }),
            pts.end());
  if (pts.size() <= 2) return pts;
  auto cross = [](const Eigen::Vector2d& o, const Eigen::Vector2d& a,
                  const Eigen::Vector2d& b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<Eigen::Vector2d> hull(2 * pts.size());
  size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
    hull[k++] = p;
  }
  size_t lower = k + 1;
  for (auto it = pts.rbegin(); it != pts.rend(); ++it) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], *it) <= 0) --k;
    hull[k++] = *it;
  }
  hull.resize(k - 1);
  return hull;
}

bool inside_convex(const std::vector<Eigen::Vector2d>& poly, const Eigen::Vector2d& p) {
  if (poly.size() < 3) return false;
  for (size_t i = 0; i < poly.size(); ++i) {
    const auto& a = poly[i];
    const auto& b = poly[(i + 1) % poly.size()];
    double cr = (b.x() - a.x()) * (p.y() - a.y()) - (b.y() - a.y()) * (p.x() - a.x());
    if (cr < 0) return false;
  }
  return true;
}

}  // namespace

BinaryMask HullSegmenter::segment(const Raster& image, const MaskPrompt& prompt) {
  if (prompt.keypoints_px.empty()) {
    throw ServiceUnavailable("stub segmenter needs at least one prompt keypoint");
  }
  auto hull = convex_hull(prompt.keypoints_px);
  BinaryMask mask = BinaryMask::empty(image.width, image.height);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      Eigen::Vector2d p(x, y);
      bool on = inside_convex(hull, p);
      if (!on) {
        double d = std::numeric_limits<double>::max();
        for (size_t i = 0; i < hull.size(); ++i) {
          d = std::min(d, point_segment_dist(p, hull[i], hull[(i + 1) % hull.size()]));
        }
        on = d <= radius_;
      }
      mask.at(x, y) = on ? 1 : 0;
    }
  }
  return mask;
}

std::string write_ppm(const Raster& img) {
  std::string out = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) +
                    "\n255\n";
  out.append(reinterpret_cast<const char*>(img.rgb.data()), img.rgb.size());
  return out;
}

Raster read_ppm(const std::string& data) {
  std::istringstream in(data);
  std::string magic;
  int w, h, maxval;
  in >> magic >> w >> h >> maxval;
  if (magic != "P6" || maxval != 255) throw KinematicsError("unsupported PPM");
  in.get();  // single whitespace after header
  Raster img;
  img.width = w;
  img.height = h;
  img.rgb.resize(static_cast<size_t>(w) * h * 3);
  in.read(reinterpret_cast<char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.rgb.size())) {
    throw KinematicsError("truncated PPM");
  }
  return img;
}

}  // namespace egoalign
