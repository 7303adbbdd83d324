#include <gtest/gtest.h>

#include "interactmove/body.hpp"

using namespace interactmove;

namespace {

// Distance from p to the segment ab.
double segment_distance(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double s = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
  return (p - (a + s * ab)).norm();
}

Pose tilted_pose(const Skeleton& s, double angle) {
  Pose p = s.rest_positions;
  const Mat3 r = Eigen::AngleAxisd(angle, Vec3(0.3, 1.0, 0.2).normalized()).toRotationMatrix();
  for (auto& q : p) q = r * q + Vec3(1.0, -2.0, 0.1);
  return p;
}

}  // namespace

TEST(Skeleton, BipedShape) {
  const Skeleton s = Skeleton::biped();
  EXPECT_EQ(s.joint_count(), 21u);
  EXPECT_EQ(s.hand_joints().size(), 4u);
  EXPECT_EQ(s.index_of("r_hand"), s.right_hand.back());
  EXPECT_THROW(s.index_of("tail"), ValidationError);
  for (std::size_t j = 0; j < s.joint_count(); ++j) EXPECT_LT(s.parents[j], static_cast<int>(j));
}

TEST(Skeleton, RootHeadingFollowsHips) {
  MotionSequence m;
  m.frames.push_back(m.skeleton.rest_positions);
  EXPECT_NEAR(m.root(0).translation.z(), 0.95, 1e-12);
  EXPECT_TRUE(m.root(0).rotation.isApprox(Mat3::Identity(), 1e-12));
  const RigidTransform yaw = RigidTransform::from_yaw(0.7);
  for (auto& p : m.frames[0]) p = yaw.apply(p);
  EXPECT_TRUE(m.root(0).rotation.isApprox(yaw.rotation, 1e-12));
}

TEST(Skeleton, RigidMotionKeepsBoneLengths) {
  MotionSequence m;
  for (int f = 0; f < 10; ++f) m.frames.push_back(tilted_pose(m.skeleton, 0.1 * f));
  EXPECT_LT(max_bone_deviation(m), 1e-12);
  validate_motion(m);
}

TEST(Skeleton, RepairRestoresLengthsAndDirections) {
  MotionSequence m;
  Rng rng(3);
  for (int f = 0; f < 5; ++f) {
    Pose p = tilted_pose(m.skeleton, 0.2 * f);
    for (auto& q : p) q += 0.05 * Vec3(standard_normal(rng), standard_normal(rng), standard_normal(rng));
    m.frames.push_back(p);
  }
  const MotionSequence noisy = m;
  EXPECT_GT(max_bone_deviation(m), 1e-3);
  repair_bone_lengths(m);
  EXPECT_LT(max_bone_deviation(m), 1e-12);
  for (std::size_t f = 0; f < m.frame_count(); ++f) {
    EXPECT_EQ(m.frames[f][0], noisy.frames[f][0]);
    for (std::size_t j = 1; j < m.skeleton.joint_count(); ++j) {
      const auto p = static_cast<std::size_t>(m.skeleton.parents[j]);
      const Vec3 a = (m.frames[f][j] - m.frames[f][p]).normalized();
      const Vec3 b = (noisy.frames[f][j] - noisy.frames[f][p]).normalized();
      EXPECT_NEAR(a.dot(b), 1.0, 1e-12);
    }
  }
}

TEST(Skeleton, NonFiniteRejected) {
  MotionSequence m;
  m.frames.push_back(m.skeleton.rest_positions);
  m.frames[0][3].x() = std::nan("");
  EXPECT_THROW(validate_motion(m), ValidationError);
  ObjectTrajectory t;
  t.poses.push_back({Mat3::Identity() * 2.0, Vec3::Zero()});
  EXPECT_THROW(validate_trajectory(t), ValidationError);
}

TEST(BodyProxy, SamplesLieOnCapsules) {
  const Skeleton s = Skeleton::biped();
  for (double inflation : {0.0, 0.01}) {
    const BodyProxy body(s, inflation);
    EXPECT_GT(body.size(), 450u);
    EXPECT_LT(body.size(), 650u);
    const Pose pose = tilted_pose(s, 0.4);
    const PointCloud cloud = body.surface(pose);
    ASSERT_TRUE(cloud.has_normals());
    for (std::size_t i = 0; i < cloud.size(); ++i) {
      const BodySample& smp = body.samples()[i];
      const auto bone = static_cast<std::size_t>(smp.bone);
      const Vec3& a = pose[static_cast<std::size_t>(s.parents[bone])];
      const Vec3& b = pose[bone];
      EXPECT_NEAR(segment_distance(cloud.points[i], a, b), body.radius(smp.bone), 1e-9);
      EXPECT_NEAR(cloud.normals[i].norm(), 1.0, 1e-12);
      // Outward: stepping along the normal moves away from the bone axis.
      EXPECT_GT(segment_distance(cloud.points[i] + 1e-3 * cloud.normals[i], a, b), body.radius(smp.bone));
      const int carrier = smp.carrier;
      EXPECT_TRUE(carrier == smp.bone || carrier == s.parents[bone]);
    }
  }
}

TEST(BodyProxy, RestPoseSoleTouchesGround) {
  const Skeleton s = Skeleton::biped();
  EXPECT_NEAR(BodyProxy(s).sole_height(s.rest_positions), 0.0, 1e-12);
  EXPECT_NEAR(BodyProxy(s, 0.01).sole_height(s.rest_positions), -0.01, 1e-12);
}
