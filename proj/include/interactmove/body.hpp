#pragma once

#include <algorithm>
#include <limits>
#include <string>
#include <vector>

#include "interactmove/geometry.hpp"

namespace interactmove {

// Kinematic tree. Parents precede children; the root has parent -1. Bone j
// runs from parents[j] to j and carries a capsule of radius radii[j].
struct Skeleton {
  std::vector<std::string> names;
  std::vector<int> parents;
  std::vector<Vec3> rest_positions;  // standing pose, facing +x, feet on z = 0
  std::vector<double> radii;
  std::vector<int> left_hand;
  std::vector<int> right_hand;
  std::vector<int> feet;  // joints whose capsules touch the ground
  std::vector<int> arm_chain;  // joints edited when hands are retargeted
  int left_hip = -1;
  int right_hip = -1;

  std::size_t joint_count() const { return names.size(); }

  double rest_length(std::size_t j) const {
    const int p = parents[j];
    return p < 0 ? 0.0 : (rest_positions[j] - rest_positions[static_cast<std::size_t>(p)]).norm();
  }

  std::vector<int> hand_joints() const {
    std::vector<int> out = left_hand;
    out.insert(out.end(), right_hand.begin(), right_hand.end());
    return out;
  }

  int index_of(const std::string& name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return static_cast<int>(i);
    }
    throw ValidationError("skeleton has no joint '" + name + "'");
  }

  // 21-joint biped: pelvis, spine, chest, neck, head, two arms of
  // shoulder/elbow/wrist/hand and two legs of hip/knee/ankle/toe.
  static Skeleton biped() {
    Skeleton s;
    auto add = [&](const std::string& name, int parent, const Vec3& pos, double radius) {
      s.names.push_back(name);
      s.parents.push_back(parent);
      s.rest_positions.push_back(pos);
      s.radii.push_back(radius);
      return static_cast<int>(s.names.size()) - 1;
    };
    const int pelvis = add("pelvis", -1, {0, 0, 0.95}, 0.0);
    const int spine = add("spine", pelvis, {0, 0, 1.10}, 0.12);
    const int chest = add("chest", spine, {0, 0, 1.30}, 0.12);
    const int neck = add("neck", chest, {0, 0, 1.50}, 0.05);
    add("head", neck, {0, 0, 1.65}, 0.09);
    for (int side : {1, -1}) {
      const std::string p = side > 0 ? "l_" : "r_";
      const double y = 0.18 * side;
      const int shoulder = add(p + "shoulder", chest, {0, y, 1.45}, 0.05);
      const int elbow = add(p + "elbow", shoulder, {0, y, 1.17}, 0.045);
      const int wrist = add(p + "wrist", elbow, {0, y, 0.92}, 0.04);
      const int hand = add(p + "hand", wrist, {0, y, 0.84}, 0.035);
      auto& hand_set = side > 0 ? s.left_hand : s.right_hand;
      hand_set = {wrist, hand};
      s.arm_chain.insert(s.arm_chain.end(), {elbow, wrist, hand});
    }
    for (int side : {1, -1}) {
      const std::string p = side > 0 ? "l_" : "r_";
      const double y = 0.10 * side;
      const int hip = add(p + "hip", pelvis, {0, y, 0.90}, 0.08);
      (side > 0 ? s.left_hip : s.right_hip) = hip;
      const int knee = add(p + "knee", hip, {0, y, 0.50}, 0.07);
      const int ankle = add(p + "ankle", knee, {0, y, 0.10}, 0.05);
      const int toe = add(p + "toe", ankle, {0.15, y, 0.04}, 0.04);
      s.feet.insert(s.feet.end(), {ankle, toe});
    }
    return s;
  }
};

using Pose = std::vector<Vec3>;

struct MotionSequence {
  Skeleton skeleton = Skeleton::biped();
  std::vector<Pose> frames;
  double fps = 30.0;

  std::size_t frame_count() const { return frames.size(); }
  const Vec3& joint(std::size_t frame, std::size_t j) const { return frames[frame][j]; }

  // Root transform: pelvis position with the heading derived from the hips.
  RigidTransform root(std::size_t frame) const {
    const Pose& p = frames[frame];
    Vec3 left = Vec3::UnitY();
    if (skeleton.left_hip >= 0 && skeleton.right_hip >= 0) {
      left = p[static_cast<std::size_t>(skeleton.left_hip)] - p[static_cast<std::size_t>(skeleton.right_hip)];
    }
    left.z() = 0.0;
    const double yaw = left.norm() > 1e-9 ? std::atan2(-left.x(), left.y()) : 0.0;
    return RigidTransform::from_yaw(yaw, p[0]);
  }
};

struct ObjectTrajectory {
  std::vector<RigidTransform> poses;
  std::size_t frame_count() const { return poses.size(); }
};

inline void validate_motion(const MotionSequence& m) {
  const std::size_t j = m.skeleton.joint_count();
  require(m.skeleton.parents.size() == j && m.skeleton.rest_positions.size() == j && m.skeleton.radii.size() == j,
          "skeleton arrays disagree in length");
  for (std::size_t i = 0; i < j; ++i) require(m.skeleton.parents[i] < static_cast<int>(i), "skeleton parents must precede children");
  for (const auto& f : m.frames) {
    require(f.size() == j, "motion frame has the wrong joint count");
    for (const auto& p : f) require(is_finite(p), "motion contains a non-finite joint");
  }
}

inline void validate_trajectory(const ObjectTrajectory& t) {
  for (const auto& p : t.poses) {
    require(p.is_orthonormal() && is_finite(p.translation), "object trajectory has an invalid pose");
  }
}

// Largest |bone length - rest length| over all frames and bones.
inline double max_bone_deviation(const MotionSequence& m) {
  double worst = 0.0;
  for (const auto& f : m.frames) {
    for (std::size_t j = 0; j < f.size(); ++j) {
      const int p = m.skeleton.parents[j];
      if (p < 0) continue;
      worst = std::max(worst, std::abs((f[j] - f[static_cast<std::size_t>(p)]).norm() - m.skeleton.rest_length(j)));
    }
  }
  return worst;
}

inline double frame_bone_deviation(const Skeleton& s, const Pose& f) {
  double worst = 0.0;
  for (std::size_t j = 0; j < f.size(); ++j) {
    const int p = s.parents[j];
    if (p < 0) continue;
    worst = std::max(worst, std::abs((f[j] - f[static_cast<std::size_t>(p)]).norm() - s.rest_length(j)));
  }
  return worst;
}

// Re-imposes rest bone lengths frame by frame, walking from the root and
// keeping each bone's current direction.
inline void repair_bone_lengths(MotionSequence& m) {
  const Skeleton& s = m.skeleton;
  for (auto& f : m.frames) {
    const Pose original = f;
    for (std::size_t j = 0; j < f.size(); ++j) {
      const int p = s.parents[j];
      if (p < 0) continue;
      const auto pj = static_cast<std::size_t>(p);
      Vec3 dir = original[j] - original[pj];
      if (dir.norm() < 1e-12) dir = s.rest_positions[j] - s.rest_positions[pj];
      f[j] = f[pj] + s.rest_length(j) * dir.normalized();
    }
  }
}

// Two-bone inverse kinematics: the middle joint for a chain root -> mid -> end
// with the end placed at `end`, bending towards `pole`. Out-of-reach targets
// put the middle joint on the straightened chain.
inline Vec3 solve_two_bone(const Vec3& root, const Vec3& end, double upper, double lower, const Vec3& pole) {
  Vec3 axis = end - root;
  const double reach = axis.norm();
  axis = reach > 1e-12 ? Vec3(axis / reach) : Vec3(-Vec3::UnitZ());
  const double d = std::clamp(reach, std::abs(upper - lower) + 1e-9, upper + lower - 1e-9);
  const double a = (upper * upper - lower * lower + d * d) / (2.0 * d);
  const double h = std::sqrt(std::max(0.0, upper * upper - a * a));
  Vec3 side = pole - pole.dot(axis) * axis;
  if (side.norm() < 1e-9) side = std::abs(axis.z()) < 0.9 ? axis.cross(Vec3::UnitZ()) : axis.cross(Vec3::UnitX());
  return root + a * axis + h * side.normalized();
}

// ---------------------------------------------------------------------------
// Capsule body proxy

struct BodySample {
  int bone = 0;        // child joint of the bone
  int carrier = 0;     // joint that moves the sample under guidance
  double axial = 0.0;  // fraction along the bone for the cylinder part
  int cap = 0;         // 0 cylinder, -1 cap at parent end, +1 cap at child end
  double polar = 0.0;  // cap elevation from the bone axis
  double angle = 0.0;  // around the bone axis
};

// Surface samples of capsules attached to the skeleton's bones, standing in
// for body-mesh vertices. Radii may be inflated uniformly.
class BodyProxy {
 public:
  BodyProxy() : BodyProxy(Skeleton::biped()) {}
  explicit BodyProxy(const Skeleton& skeleton, double inflation = 0.0, int rings = 3, int around = 6)
      : skeleton_(skeleton), inflation_(inflation) {
    constexpr double kPi = 3.14159265358979323846;
    for (std::size_t j = 0; j < skeleton.joint_count(); ++j) {
      const int p = skeleton.parents[j];
      if (p < 0 || skeleton.radii[j] <= 0.0) continue;
      for (int r = 0; r < rings; ++r) {
        const double s = (r + 0.5) / rings;
        for (int a = 0; a < around; ++a) {
          const double ang = 2.0 * kPi * (a + 0.5 * (r % 2)) / around;
          samples_.push_back({static_cast<int>(j), s < 0.5 ? p : static_cast<int>(j), s, 0, 0.5 * kPi, ang});
        }
      }
      for (int end : {-1, 1}) {
        const int carrier = end < 0 ? p : static_cast<int>(j);
        samples_.push_back({static_cast<int>(j), carrier, end < 0 ? 0.0 : 1.0, end, 0.0, 0.0});
        for (int a = 0; a < 4; ++a) {
          samples_.push_back({static_cast<int>(j), carrier, end < 0 ? 0.0 : 1.0, end, 0.25 * kPi, 0.5 * kPi * a});
        }
      }
    }
  }

  const Skeleton& skeleton() const { return skeleton_; }
  const std::vector<BodySample>& samples() const { return samples_; }
  std::size_t size() const { return samples_.size(); }
  double radius(int bone) const { return skeleton_.radii[static_cast<std::size_t>(bone)] + inflation_; }

  // World positions and outward normals of every sample for one frame.
  PointCloud surface(const Pose& pose) const {
    PointCloud out;
    out.points.reserve(samples_.size());
    out.normals.reserve(samples_.size());
    for (const auto& s : samples_) {
      const Vec3& a = pose[static_cast<std::size_t>(skeleton_.parents[static_cast<std::size_t>(s.bone)])];
      const Vec3& b = pose[static_cast<std::size_t>(s.bone)];
      Vec3 axis = b - a;
      const double len = axis.norm();
      axis = len > 1e-12 ? Vec3(axis / len) : Vec3::UnitZ();
      const Vec3 ref = std::abs(axis.z()) < 0.9 ? Vec3::UnitZ() : Vec3::UnitX();
      const Vec3 u = axis.cross(ref).normalized();
      const Vec3 v = axis.cross(u);
      const Vec3 radial = std::cos(s.angle) * u + std::sin(s.angle) * v;
      Vec3 n;
      Vec3 base;
      if (s.cap == 0) {
        n = radial;
        base = a + s.axial * (b - a);
      } else {
        n = std::cos(s.polar) * (s.cap > 0 ? axis : Vec3(-axis)) + std::sin(s.polar) * radial;
        base = s.cap > 0 ? b : a;
      }
      out.append(base + radius(s.bone) * n, n);
    }
    return out;
  }

  // Lowest point of the foot capsules.
  double sole_height(const Pose& pose) const {
    double lo = std::numeric_limits<double>::infinity();
    for (int f : skeleton_.feet) lo = std::min(lo, pose[static_cast<std::size_t>(f)].z() - radius(f));
    return lo;
  }

 private:
  Skeleton skeleton_;
  double inflation_ = 0.0;
  std::vector<BodySample> samples_;
};

}  // namespace interactmove
