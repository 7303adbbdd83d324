#pragma once

#include <vector>

#include <Eigen/Eigenvalues>

#include "interactmove/alignment.hpp"

namespace interactmove {

struct EvalConfig {
  double collision_tolerance = 0.02;  // m of penetration ignored
  double foot_eps = 0.05;
  double max_joint_speed = 6.0;  // m/s
  double bone_tolerance = 0.01;  // m
  int multimodality_samples = 3;
  double surface_spacing = 0.02;
  double ground_z = 0.0;
};

inline void validate_eval_config(const EvalConfig& c) {
  require(c.collision_tolerance >= 0.0, "collision tolerance must be non-negative");
  require(c.foot_eps > 0.0 && c.max_joint_speed > 0.0 && c.bone_tolerance > 0.0 && c.surface_spacing > 0.0,
          "evaluation thresholds must be positive");
  require(c.multimodality_samples >= 2, "multimodality needs at least two samples");
}

struct MetricReport {
  double goal_distance = 0.0;  // m
  double multimodality = 0.0;  // m
  double physical_realism = 0.0;  // fraction of frames
  double non_collision = 0.0;  // percent of frames
};

// Distance from every body sample to the object's surface samples, taken in
// the object frame; samples behind the surface count as touching.
inline double frame_goal_distance(const PointCloud& body, const PointCloud& object_local, const SpatialIndex& index,
                                  const RigidTransform& object_pose) {
  const RigidTransform inv = object_pose.inverse();
  double best = std::numeric_limits<double>::infinity();
  for (const auto& v : body.points) {
    const Vec3 q = inv.apply(v);
    const NearestResult r = index.nearest(q);
    if (penetration_indicator(q, object_local.points[r.index], object_local.normals[r.index])) return 0.0;
    best = std::min(best, r.distance);
  }
  return best;
}

inline double goal_distance(const MotionSequence& m, const Geometry& object, const ObjectTrajectory& traj,
                            const BodyProxy& body, double spacing = 0.02) {
  require(m.frame_count() == traj.frame_count() && m.frame_count() > 0, "goal_distance: frame counts differ");
  const PointCloud local = surface_samples(object, spacing);
  const SpatialIndex index(local);
  double sum = 0.0;
  for (std::size_t f = 0; f < m.frame_count(); ++f) sum += frame_goal_distance(body.surface(m.frames[f]), local, index, traj.poses[f]);
  return sum / static_cast<double>(m.frame_count());
}

// Mean over unordered pairs of the per-frame per-joint L2 distance.
inline double multimodality(const std::vector<MotionSequence>& motions) {
  require(motions.size() >= 2, "multimodality needs at least two motions");
  const std::size_t frames = motions[0].frame_count();
  for (const auto& m : motions) require(m.frame_count() == frames && frames > 0, "multimodality: motions differ in length");
  double total = 0.0;
  int pairs = 0;
  for (std::size_t a = 0; a < motions.size(); ++a) {
    for (std::size_t b = a + 1; b < motions.size(); ++b) {
      double sum = 0.0;
      std::size_t n = 0;
      for (std::size_t f = 0; f < frames; ++f) {
        for (std::size_t j = 0; j < motions[a].frames[f].size(); ++j, ++n) sum += (motions[a].frames[f][j] - motions[b].frames[f][j]).norm();
      }
      total += sum / static_cast<double>(n);
      ++pairs;
    }
  }
  return total / pairs;
}

// Per frame: feet on the ground, every joint slower than the cap since the
// previous frame, bones within tolerance of rest length.
inline std::vector<bool> realistic_frames(const MotionSequence& m, const EvalConfig& cfg, const BodyProxy& body) {
  std::vector<bool> ok;
  for (std::size_t f = 0; f < m.frame_count(); ++f) {
    const double gap = body.sole_height(m.frames[f]) - cfg.ground_z;
    bool good = std::abs(gap) <= cfg.foot_eps;
    if (f > 0) {
      for (std::size_t j = 0; j < m.frames[f].size() && good; ++j) {
        good = (m.frames[f][j] - m.frames[f - 1][j]).norm() * m.fps <= cfg.max_joint_speed;
      }
    }
    good = good && frame_bone_deviation(m.skeleton, m.frames[f]) <= cfg.bone_tolerance;
    ok.push_back(good);
  }
  return ok;
}

inline double physical_realism_proxy(const MotionSequence& m, const EvalConfig& cfg = {}) {
  require(m.frame_count() > 0, "physical_realism_proxy: empty motion");
  const auto ok = realistic_frames(m, cfg, BodyProxy(m.skeleton));
  return static_cast<double>(std::count(ok.begin(), ok.end(), true)) / static_cast<double>(ok.size());
}

// Percent of frames where neither the body nor the moved object reaches
// deeper than the tolerance behind any scene surface.
inline double non_collision_score(const MotionSequence& m, const PointCloud& object_local, const ObjectTrajectory& traj,
                                  const ScenePoints& scene, const BodyProxy& body, double tolerance) {
  require(m.frame_count() == traj.frame_count() && m.frame_count() > 0, "non_collision_score: frame counts differ");
  int clean = 0;
  for (std::size_t f = 0; f < m.frame_count(); ++f) {
    const double depth = std::max(frame_penetration_depth(body.surface(m.frames[f]), scene),
                                  frame_penetration_depth(object_local.transformed(traj.poses[f]), scene));
    if (depth <= tolerance) ++clean;
  }
  return 100.0 * clean / static_cast<double>(m.frame_count());
}

// ---------------------------------------------------------------------------
// Frechet distance over handcrafted motion features

// Mean and spread of joint speeds, joint accelerations, foot heights and the
// nearest hand-object distance.
inline Eigen::VectorXd motion_features(const HOISequence& s, double spacing = 0.02) {
  const MotionSequence& m = s.motion;
  require(m.frame_count() >= 3, "motion_features: need at least three frames");
  std::vector<double> speed, accel, foot;
  for (std::size_t f = 0; f < m.frame_count(); ++f) {
    for (int j : m.skeleton.feet) foot.push_back(m.frames[f][static_cast<std::size_t>(j)].z());
    for (std::size_t j = 0; j < m.frames[f].size(); ++j) {
      if (f >= 1) speed.push_back((m.frames[f][j] - m.frames[f - 1][j]).norm() * m.fps);
      if (f >= 2) accel.push_back((m.frames[f][j] - 2.0 * m.frames[f - 1][j] + m.frames[f - 2][j]).norm() * m.fps * m.fps);
    }
  }
  std::vector<double> hand = hand_object_distances(s, spacing);
  auto stats = [](const std::vector<double>& v) {
    const Eigen::Map<const Eigen::ArrayXd> a(v.data(), static_cast<Eigen::Index>(v.size()));
    const double mean = a.mean();
    return std::pair<double, double>(mean, std::sqrt((a - mean).square().mean()));
  };
  Eigen::VectorXd out(8);
  int k = 0;
  for (const auto* v : {&speed, &accel, &foot, &hand}) {
    const auto [mean, sd] = stats(*v);
    out[k++] = mean;
    out[k++] = sd;
  }
  return out;
}

struct GaussianFit {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
};

inline GaussianFit fit_gaussian(const std::vector<Eigen::VectorXd>& features) {
  require(features.size() >= 2, "fit_gaussian: need at least two samples");
  const Eigen::Index d = features[0].size();
  GaussianFit g{Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d)};
  for (const auto& f : features) g.mean += f;
  g.mean /= static_cast<double>(features.size());
  for (const auto& f : features) g.covariance += (f - g.mean) * (f - g.mean).transpose();
  g.covariance /= static_cast<double>(features.size() - 1);
  return g;
}

inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& a) {
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (a + a.transpose()));
  return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() * es.eigenvectors().transpose();
}

// |m1 - m2|^2 + tr(C1 + C2 - 2 (C1^1/2 C2 C1^1/2)^1/2), clipped at zero.
inline double frechet_distance(const GaussianFit& a, const GaussianFit& b) {
  if (a.mean == b.mean && a.covariance == b.covariance) return 0.0;
  const Eigen::MatrixXd s = psd_sqrt(a.covariance);
  const Eigen::MatrixXd mid = psd_sqrt(s * b.covariance * s);
  return std::max(0.0, (a.mean - b.mean).squaredNorm() + (a.covariance + b.covariance - 2.0 * mid).trace());
}

inline double motion_frechet_proxy(const std::vector<HOISequence>& a, const std::vector<HOISequence>& b, double spacing = 0.02) {
  std::vector<Eigen::VectorXd> fa, fb;
  for (const auto& s : a) fa.push_back(motion_features(s, spacing));
  for (const auto& s : b) fb.push_back(motion_features(s, spacing));
  return frechet_distance(fit_gaussian(fa), fit_gaussian(fb));
}

}  // namespace interactmove
