#pragma once

#include <algorithm>
#include <string>
#include <vector>

#include "interactmove/body.hpp"
#include "interactmove/diffusion.hpp"
#include "interactmove/tiny_denoiser.hpp"

namespace interactmove {

// Dense points x joints x frames array, stored point-major so that the J*F
// values of one object point are contiguous (one denoiser token per point).
struct Tensor3 {
  int points = 0;
  int joints = 0;
  int frames = 0;
  Eigen::VectorXd values;

  Tensor3() = default;
  Tensor3(int n, int j, int f, double fill = 0.0) : points(n), joints(j), frames(f), values(Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n) * j * f, fill)) {
    require(n >= 0 && j >= 0 && f >= 0, "tensor dimensions must be non-negative");
  }

  Eigen::Index index(int i, int j, int n) const { return (static_cast<Eigen::Index>(i) * joints + j) * frames + n; }
  double& operator()(int i, int j, int n) { return values[index(i, j, n)]; }
  double operator()(int i, int j, int n) const { return values[index(i, j, n)]; }
  bool same_shape(const Tensor3& o) const { return points == o.points && joints == o.joints && frames == o.frames; }
};

using DistanceMap = Tensor3;

struct AffordanceParams {
  double sigma = 0.2;  // kernel width; C = 0.5 at d = 2 sigma^2 ln 2
  double tau = 0.5;
};

struct AffordanceTensor {
  Tensor3 values;
  double sigma = 0.2;
  double tau = 0.5;
};

// Per-frame hand joint positions, frames x joints.
using JointTrack = std::vector<std::vector<Vec3>>;

// d[i][j][n] = |object point i at frame n - joint j at frame n|.
inline DistanceMap distance_map(const std::vector<PointCloud>& object_per_frame, const JointTrack& joints) {
  require(object_per_frame.size() == joints.size(), "distance_map: object and joint frame counts differ");
  const int f = static_cast<int>(joints.size());
  const int n = f > 0 ? static_cast<int>(object_per_frame[0].size()) : 0;
  const int j = f > 0 ? static_cast<int>(joints[0].size()) : 0;
  DistanceMap d(n, j, f);
  for (int fr = 0; fr < f; ++fr) {
    const auto& pts = object_per_frame[static_cast<std::size_t>(fr)].points;
    const auto& js = joints[static_cast<std::size_t>(fr)];
    require(static_cast<int>(pts.size()) == n && static_cast<int>(js.size()) == j, "distance_map: ragged input");
    for (int i = 0; i < n; ++i) {
      for (int k = 0; k < j; ++k) d(i, k, fr) = (pts[static_cast<std::size_t>(i)] - js[static_cast<std::size_t>(k)]).norm();
    }
  }
  return d;
}

// Object points given in the object's local frame, posed per frame.
inline DistanceMap distance_map(const PointCloud& local_points, const ObjectTrajectory& trajectory, const JointTrack& joints) {
  require(trajectory.frame_count() == joints.size(), "distance_map: object and joint frame counts differ");
  std::vector<PointCloud> posed;
  posed.reserve(joints.size());
  for (const auto& pose : trajectory.poses) posed.push_back(local_points.transformed(pose));
  return distance_map(posed, joints);
}

inline Tensor3 contact_likelihood(const DistanceMap& d, double sigma) {
  require(sigma > 0.0, "contact_likelihood: sigma must be positive");
  Tensor3 c = d;
  c.values = (-d.values.array() / (2.0 * sigma * sigma)).exp().matrix();
  return c;
}

inline AffordanceTensor threshold_affordance(const Tensor3& c, double tau, double sigma = 0.2) {
  require(tau > 0.0 && tau < 1.0, "threshold_affordance: tau must lie in (0, 1)");
  AffordanceTensor a{c, sigma, tau};
  for (Eigen::Index k = 0; k < c.values.size(); ++k) {
    const double v = c.values[k];
    a.values.values[k] = v > tau ? (v - tau) / (1.0 - tau) : 0.0;
  }
  return a;
}

// Distance below which a joint-point pair has nonzero affordance.
inline double engagement_distance(const AffordanceParams& p) { return 2.0 * p.sigma * p.sigma * std::log(1.0 / p.tau); }

inline JointTrack hand_track(const MotionSequence& motion, const std::vector<int>& joints) {
  JointTrack out(motion.frame_count());
  for (std::size_t f = 0; f < motion.frame_count(); ++f) {
    for (int j : joints) out[f].push_back(motion.frames[f][static_cast<std::size_t>(j)]);
  }
  return out;
}

// Ground-truth affordance of a motion: hand joints of the skeleton against
// the posed object points.
inline AffordanceTensor compute_affordance(const PointCloud& local_points, const ObjectTrajectory& trajectory,
                                           const MotionSequence& motion, const AffordanceParams& params) {
  const auto d = distance_map(local_points, trajectory, hand_track(motion, motion.skeleton.hand_joints()));
  return threshold_affordance(contact_likelihood(d, params.sigma), params.tau, params.sigma);
}

// Indices into the joint axis of an affordance tensor.
struct HandPartition {
  std::vector<int> left;
  std::vector<int> right;

  // Hand joints in Skeleton::hand_joints() order: left block then right block.
  static HandPartition of(const Skeleton& s) {
    HandPartition p;
    for (std::size_t i = 0; i < s.left_hand.size(); ++i) p.left.push_back(static_cast<int>(i));
    for (std::size_t i = 0; i < s.right_hand.size(); ++i) p.right.push_back(static_cast<int>(s.left_hand.size() + i));
    return p;
  }
};

struct HandEngagement {
  std::vector<bool> left;
  std::vector<bool> right;

  bool two_handed() const {
    for (std::size_t n = 0; n < left.size(); ++n) {
      if (left[n] && right[n]) return true;
    }
    return false;
  }
  bool any() const {
    return std::find(left.begin(), left.end(), true) != left.end() ||
           std::find(right.begin(), right.end(), true) != right.end();
  }
};

inline HandEngagement hand_engagement(const AffordanceTensor& a, const HandPartition& hands) {
  std::vector<bool> seen(static_cast<std::size_t>(a.values.joints), false);
  for (const auto* side : {&hands.left, &hands.right}) {
    for (int j : *side) {
      require(j >= 0 && j < a.values.joints, "hand_engagement: joint index out of range");
      require(!seen[static_cast<std::size_t>(j)], "hand_engagement: hand partition overlaps");
      seen[static_cast<std::size_t>(j)] = true;
    }
  }
  HandEngagement e;
  auto engaged = [&](const std::vector<int>& side, int n) {
    for (int j : side) {
      for (int i = 0; i < a.values.points; ++i) {
        if (a.values(i, j, n) > 0.0) return true;
      }
    }
    return false;
  };
  for (int n = 0; n < a.values.frames; ++n) {
    e.left.push_back(engaged(hands.left, n));
    e.right.push_back(engaged(hands.right, n));
  }
  return e;
}

// ---------------------------------------------------------------------------
// Conditional generation

// Object feature tokens: centroid and extent summaries. Per-point
// coordinates (centred) become side features of the point tokens.
inline std::vector<Eigen::VectorXd> object_summary_tokens(const PointCloud& local_points) {
  const Aabb b = local_points.bounds();
  const Vec3 c = local_points.centroid();
  Eigen::VectorXd centroid(6), extent(6);
  centroid << c, b.center();
  extent << b.extent(), 0.5 * b.extent().cwiseProduct(b.extent());
  return {centroid, extent};
}

inline Eigen::MatrixXd point_side_features(const PointCloud& local_points) {
  const Vec3 c = local_points.centroid();
  Eigen::MatrixXd side(3, static_cast<Eigen::Index>(local_points.size()));
  for (std::size_t i = 0; i < local_points.size(); ++i) side.col(static_cast<Eigen::Index>(i)) = local_points.points[i] - c;
  return side;
}

// Condition bundle of the affordance denoiser: text token, then object
// summary tokens; point coordinates as side features.
inline ConditionBundle affordance_condition(const PointCloud& local_points, const std::string& text, int cond_dim) {
  ConditionBundle cond(cond_dim);
  cond.add_token(text_embedding(text, cond_dim));
  for (const auto& t : object_summary_tokens(local_points)) cond.add_token(t);
  cond.set_side_features(point_side_features(local_points));
  return cond;
}

// The denoiser's signal is the affordance tensor's value array as is. Most
// entries are 0, which keeps the sparse background at the noise mean.
inline Signal affordance_to_signal(const AffordanceTensor& a) { return a.values.values; }

inline AffordanceTensor signal_to_affordance(const Signal& s, int points, int joints, int frames,
                                             const AffordanceParams& params) {
  AffordanceTensor a{Tensor3(points, joints, frames), params.sigma, params.tau};
  require(s.size() == a.values.values.size(), "affordance signal has the wrong size");
  a.values.values = s.cwiseMax(0.0).cwiseMin(1.0);
  return a;
}

inline AffordanceTensor generate_affordance(const PointCloud& local_points, const std::string& text, int joints,
                                            int frames, const Denoiser& denoiser, int cond_dim,
                                            const NoiseSchedule& sched, Rng& rng, const AffordanceParams& params = {}) {
  require(!local_points.empty(), "generate_affordance: empty object");
  const ConditionBundle cond = affordance_condition(local_points, text, cond_dim);
  const Eigen::Index n = static_cast<Eigen::Index>(local_points.size()) * joints * frames;
  const Signal noise = standard_normal_vector(rng, n);
  const Signal out = reverse_denoise(noise, denoiser, cond, sched, rng);
  return signal_to_affordance(out, static_cast<int>(local_points.size()), joints, frames, params);
}

struct AffordanceExample {
  PointCloud points;  // object-local
  std::string text;
  AffordanceTensor affordance;
};

inline DenoiserShape affordance_denoiser_shape(int points, int joints, int frames, int cond_dim = 16, int hidden = 64) {
  DenoiserShape s;
  s.tokens = points;
  s.token_size = joints * frames;
  s.side_dim = 3;
  s.cond_dim = cond_dim;
  s.embed_dim = 8;
  s.hidden = hidden;
  s.mlp_hidden = hidden;
  return s;
}

inline TrainingSample affordance_training_sample(const AffordanceExample& e, int cond_dim) {
  require(e.affordance.values.points == static_cast<int>(e.points.size()), "affordance example: point count mismatch");
  return {affordance_to_signal(e.affordance), affordance_condition(e.points, e.text, cond_dim)};
}

}  // namespace interactmove
