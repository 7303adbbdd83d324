#include <gtest/gtest.h>

#include <chrono>

#include "interactmove/affordance.hpp"

using namespace interactmove;

namespace {

// Triple loop straight from the definition.
std::vector<std::vector<std::vector<double>>> oracle_distances(const std::vector<PointCloud>& obj, const JointTrack& joints) {
  std::vector<std::vector<std::vector<double>>> d(obj[0].size());
  for (std::size_t i = 0; i < obj[0].size(); ++i) {
    d[i].assign(joints[0].size(), std::vector<double>(joints.size()));
    for (std::size_t j = 0; j < joints[0].size(); ++j) {
      for (std::size_t n = 0; n < joints.size(); ++n) {
        const Vec3 diff = obj[n].points[i] - joints[n][j];
        d[i][j][n] = std::sqrt(diff.x() * diff.x() + diff.y() * diff.y() + diff.z() * diff.z());
      }
    }
  }
  return d;
}

struct Fixture {
  std::vector<PointCloud> object;
  JointTrack joints;
};

Vec3 random_vec(Rng& rng, double scale) { return scale * Vec3(standard_normal(rng), standard_normal(rng), standard_normal(rng)); }

Fixture random_fixture(Rng& rng, int points, int joints, int frames) {
  Fixture f;
  PointCloud local;
  for (int i = 0; i < points; ++i) local.append(random_vec(rng, 0.1));
  for (int n = 0; n < frames; ++n) {
    f.object.push_back(local.transformed(RigidTransform::from_yaw(0.1 * n, random_vec(rng, 0.02))));
    std::vector<Vec3> js;
    for (int j = 0; j < joints; ++j) js.push_back(random_vec(rng, 0.15));
    f.joints.push_back(js);
  }
  return f;
}

RigidTransform random_rigid(Rng& rng) {
  const Vec3 axis = random_vec(rng, 1.0).normalized();
  return {Eigen::AngleAxisd(uniform(rng, -3.0, 3.0), axis).toRotationMatrix(), random_vec(rng, 2.0)};
}

AffordanceTensor affordance_of(const Fixture& f, const AffordanceParams& p = {}) {
  return threshold_affordance(contact_likelihood(distance_map(f.object, f.joints), p.sigma), p.tau, p.sigma);
}

}  // namespace

TEST(DistanceMap, TrivialCases) {
  PointCloud obj;
  obj.append(Vec3(0, 0, 0));
  obj.append(Vec3(1, 0, 0));
  const JointTrack joints{{Vec3(0, 0, 0)}, {Vec3(0, 0, 0)}};
  const DistanceMap d = distance_map(std::vector<PointCloud>{obj, obj}, joints);
  EXPECT_EQ(d(0, 0, 0), 0.0);
  EXPECT_EQ(d(1, 0, 1), 1.0);
  EXPECT_THROW(distance_map(std::vector<PointCloud>{obj}, joints), ValidationError);
}

TEST(DistanceMap, MatchesTripleLoop) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Fixture f = random_fixture(rng, 13, 4, 7);
    const DistanceMap d = distance_map(f.object, f.joints);
    const auto o = oracle_distances(f.object, f.joints);
    for (int i = 0; i < 13; ++i)
      for (int j = 0; j < 4; ++j)
        for (int n = 0; n < 7; ++n) EXPECT_NEAR(d(i, j, n), o[i][j][n], 1e-15);
  }
}

TEST(DistanceMap, PosedOverloadAppliesTrajectory) {
  PointCloud local;
  local.append(Vec3(0.1, 0, 0));
  ObjectTrajectory traj;
  traj.poses = {RigidTransform::from_translation(Vec3(1, 0, 0)), RigidTransform::from_yaw(M_PI / 2)};
  const JointTrack joints{{Vec3(1.1, 0, 0)}, {Vec3(0, 0.1, 0)}};
  const DistanceMap d = distance_map(local, traj, joints);
  EXPECT_NEAR(d(0, 0, 0), 0.0, 1e-15);
  EXPECT_NEAR(d(0, 0, 1), 0.0, 1e-15);
}

TEST(Affordance, AnalyticValues) {
  for (double sigma : {0.05, 0.2, 1.0}) {
    for (double tau : {0.2, 0.5, 0.8}) {
      DistanceMap d(1, 1, 2);
      d(0, 0, 0) = 0.0;
      d(0, 0, 1) = 2.0 * sigma * sigma * std::log(2.0);
      const Tensor3 c = contact_likelihood(d, sigma);
      EXPECT_EQ(c(0, 0, 0), 1.0);
      EXPECT_NEAR(c(0, 0, 1), 0.5, 1e-15);

      Tensor3 cs(1, 1, 4);
      cs(0, 0, 0) = tau;
      cs(0, 0, 1) = 0.5 * (1.0 + tau);
      cs(0, 0, 2) = 1.0 - 1e-12;
      cs(0, 0, 3) = 1.0;
      const AffordanceTensor a = threshold_affordance(cs, tau, sigma);
      EXPECT_EQ(a.values(0, 0, 0), 0.0);
      EXPECT_NEAR(a.values(0, 0, 1), 0.5, 1e-15);
      EXPECT_NEAR(a.values(0, 0, 2), 1.0, 1e-11);
      EXPECT_LT(a.values(0, 0, 2), 1.0);
      EXPECT_EQ(a.values(0, 0, 3), 1.0);
    }
  }
}

TEST(Affordance, ParameterErrors) {
  const DistanceMap d(1, 1, 1);
  EXPECT_THROW(contact_likelihood(d, 0.0), ValidationError);
  EXPECT_THROW(contact_likelihood(d, -1.0), ValidationError);
  EXPECT_THROW(threshold_affordance(d, 0.0), ValidationError);
  EXPECT_THROW(threshold_affordance(d, 1.0), ValidationError);
}

TEST(Affordance, MonotoneAndBounded) {
  DistanceMap d(1, 1, 200);
  for (int n = 0; n < 200; ++n) d(0, 0, n) = 0.001 * n;
  const Tensor3 c = contact_likelihood(d, 0.2);
  const AffordanceTensor a = threshold_affordance(c, 0.5);
  for (int n = 1; n < 200; ++n) {
    EXPECT_LE(c(0, 0, n), c(0, 0, n - 1));
    EXPECT_GT(c(0, 0, n), 0.0);
    if (c(0, 0, n) > 0.5) {
      EXPECT_LT(a.values(0, 0, n), a.values(0, 0, n - 1));
    }
    EXPECT_EQ(a.values(0, 0, n) == 0.0, c(0, 0, n) <= 0.5);
    EXPECT_GE(a.values(0, 0, n), 0.0);
    EXPECT_LE(a.values(0, 0, n), 1.0);
  }
}

TEST(Affordance, InvertedRescaleIsIdempotent) {
  Rng rng(5);
  Tensor3 c(50, 2, 3);
  for (Eigen::Index k = 0; k < c.values.size(); ++k) c.values[k] = uniform01(rng);
  const double tau = 0.4;
  const AffordanceTensor a = threshold_affordance(c, tau);
  Tensor3 back = a.values;
  for (Eigen::Index k = 0; k < back.values.size(); ++k) {
    back.values[k] = a.values.values[k] > 0.0 ? tau + a.values.values[k] * (1.0 - tau) : tau;
  }
  const AffordanceTensor again = threshold_affordance(back, tau);
  EXPECT_LT((again.values.values - a.values.values).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Affordance, RigidInvarianceAndPermutationEquivariance) {
  Rng rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    Fixture f = random_fixture(rng, 9, 4, 5);
    const AffordanceTensor base = affordance_of(f);

    Fixture moved = f;
    const RigidTransform g = random_rigid(rng);
    for (auto& cloud : moved.object) cloud = cloud.transformed(g);
    for (auto& js : moved.joints)
      for (auto& j : js) j = g.apply(j);
    EXPECT_LT((affordance_of(moved).values.values - base.values.values).cwiseAbs().maxCoeff(), 1e-9);

    std::vector<std::size_t> perm(9);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    shuffle(perm, rng);
    Fixture permuted = f;
    for (std::size_t n = 0; n < f.object.size(); ++n) {
      for (std::size_t i = 0; i < 9; ++i) permuted.object[n].points[i] = f.object[n].points[perm[i]];
    }
    const AffordanceTensor pa = affordance_of(permuted);
    for (int i = 0; i < 9; ++i)
      for (int j = 0; j < 4; ++j)
        for (int n = 0; n < 5; ++n) EXPECT_EQ(pa.values(i, j, n), base.values(static_cast<int>(perm[static_cast<std::size_t>(i)]), j, n));
  }
}

TEST(Engagement, AllZeroIsDisengaged) {
  AffordanceTensor a{Tensor3(3, 4, 6), 0.2, 0.5};
  const HandEngagement e = hand_engagement(a, {{0, 1}, {2, 3}});
  EXPECT_FALSE(e.any());
  EXPECT_FALSE(e.two_handed());
  EXPECT_EQ(e.left.size(), 6u);
}

TEST(Engagement, OverlappingPartitionRejected) {
  AffordanceTensor a{Tensor3(3, 4, 6), 0.2, 0.5};
  EXPECT_THROW(hand_engagement(a, {{0, 1}, {1, 3}}), ValidationError);
  EXPECT_THROW(hand_engagement(a, {{0, 4}, {2}}), ValidationError);
}

namespace {

// Hands approach a box from either side; `right_only` keeps the left hand far.
struct HandFixture {
  PointCloud local;
  ObjectTrajectory traj;
  MotionSequence motion;
};

HandFixture hand_fixture(const Vec3& half, bool right_only) {
  HandFixture h;
  h.local = box_surface_points(half, 0.04);
  const Skeleton& s = h.motion.skeleton;
  for (int n = 0; n < 20; ++n) {
    const double gap = 0.3 * std::abs(n - 10) / 10.0;  // touches at frame 10
    Pose p = s.rest_positions;
    for (int j : s.left_hand) p[static_cast<std::size_t>(j)] = Vec3(0, half.y() + (right_only ? 0.5 : gap) + 0.08 * (j == s.left_hand[0]), 1.0);
    for (int j : s.right_hand) p[static_cast<std::size_t>(j)] = Vec3(0, -half.y() - gap - 0.08 * (j == s.right_hand[0]), 1.0);
    h.motion.frames.push_back(p);
    h.traj.poses.push_back(RigidTransform::from_translation(Vec3(0, 0, 1.0)));
  }
  return h;
}

}  // namespace

TEST(Engagement, OneAndTwoHandedFixtures) {
  const AffordanceParams params;
  const HandPartition hands = HandPartition::of(Skeleton::biped());
  {
    const HandFixture h = hand_fixture(Vec3(0.05, 0.04, 0.05), true);
    const HandEngagement e = hand_engagement(compute_affordance(h.local, h.traj, h.motion, params), hands);
    EXPECT_FALSE(e.two_handed());
    EXPECT_TRUE(e.right[10]);
    for (bool l : e.left) EXPECT_FALSE(l);
  }
  {
    const HandFixture h = hand_fixture(Vec3(0.15, 0.15, 0.1), false);
    const HandEngagement e = hand_engagement(compute_affordance(h.local, h.traj, h.motion, params), hands);
    EXPECT_TRUE(e.two_handed());
    EXPECT_FALSE(e.left[0]);
  }
}

TEST(Engagement, EquivalentToDistanceThreshold) {
  const AffordanceParams params;
  const double onset = engagement_distance(params);
  EXPECT_NEAR(onset, 0.08 * std::log(2.0), 1e-15);
  const HandPartition hands = HandPartition::of(Skeleton::biped());
  for (bool right_only : {true, false}) {
    const HandFixture h = hand_fixture(Vec3(0.1, 0.08, 0.06), right_only);
    const HandEngagement e = hand_engagement(compute_affordance(h.local, h.traj, h.motion, params), hands);
    const Skeleton& s = h.motion.skeleton;
    for (std::size_t n = 0; n < h.motion.frame_count(); ++n) {
      const PointCloud posed = h.local.transformed(h.traj.poses[n]);
      for (int side = 0; side < 2; ++side) {
        double best = INFINITY;
        for (int j : side == 0 ? s.left_hand : s.right_hand) {
          for (const auto& p : posed.points) best = std::min(best, (p - h.motion.frames[n][static_cast<std::size_t>(j)]).norm());
        }
        EXPECT_EQ(side == 0 ? e.left[n] : e.right[n], best < onset) << "frame " << n;
      }
    }
  }
}

TEST(GenerateAffordance, OracleRecoversGroundTruth) {
  const HandFixture h = hand_fixture(Vec3(0.15, 0.15, 0.1), false);
  const AffordanceTensor gt = compute_affordance(h.local, h.traj, h.motion, {});
  const Signal target = affordance_to_signal(gt);
  const FunctionDenoiser oracle([&](const Signal&, int, const ConditionBundle&) { return target; });
  Rng rng(2);
  const AffordanceTensor out = generate_affordance(h.local, "lift the box", 4, 20, oracle, 16, NoiseSchedule(), rng);
  EXPECT_LT((out.values.values - gt.values.values).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(GenerateAffordance, OutputIsClipped) {
  PointCloud local = box_surface_points(Vec3(0.05, 0.05, 0.05), 0.05);
  const FunctionDenoiser wild([](const Signal& x, int, const ConditionBundle&) { return Signal(5.0 * x); });
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    const AffordanceTensor a = generate_affordance(local, "lift the cup", 4, 3, wild, 8, NoiseSchedule::linear(5, 1e-4, 2e-2), rng);
    EXPECT_GE(a.values.values.minCoeff(), 0.0);
    EXPECT_LE(a.values.values.maxCoeff(), 1.0);
  }
}

TEST(GenerateAffordance, ShapeMismatchRejected) {
  const HandFixture h = hand_fixture(Vec3(0.15, 0.15, 0.1), false);
  const FunctionDenoiser bad([](const Signal& x, int, const ConditionBundle&) { return Signal(x.head(x.size() - 1)); });
  Rng rng(0);
  EXPECT_THROW(generate_affordance(h.local, "x", 4, 20, bad, 8, NoiseSchedule(), rng), ValidationError);
  EXPECT_THROW(generate_affordance(PointCloud{}, "x", 4, 20, bad, 8, NoiseSchedule(), rng), ValidationError);
}
