#pragma once

#include <array>
#include <memory>
#include <tuple>
#include <string>
#include <utility>
#include <vector>

#include "interactmove/affordance.hpp"
#include "interactmove/body.hpp"
#include "interactmove/diffusion.hpp"
#include "interactmove/scene_model.hpp"
#include "interactmove/tiny_denoiser.hpp"

namespace interactmove {

struct InteractionState {
  MotionSequence motion;
  ObjectTrajectory object;
};

// ---------------------------------------------------------------------------
// Signal layout: one token per frame holding all joints (x, y, z), then the
// object translation and the first two rotation columns. Positions are taken
// relative to `origin` (the object's initial x-y, z untouched).

inline int interaction_channels(const Skeleton& s) { return static_cast<int>(s.joint_count()) * 3 + 9; }

inline Mat3 rotation_from_6d(const Vec3& a, const Vec3& b) {
  if (a.norm() < 1e-12) return Mat3::Identity();
  const Vec3 c0 = a.normalized();
  Vec3 c1 = b - c0.dot(b) * c0;
  if (c1.norm() < 1e-12) c1 = std::abs(c0.z()) < 0.9 ? c0.cross(Vec3::UnitZ()) : c0.cross(Vec3::UnitX());
  c1.normalize();
  Mat3 r;
  r.col(0) = c0;
  r.col(1) = c1;
  r.col(2) = c0.cross(c1);
  return r;
}

inline Signal encode_interaction(const MotionSequence& m, const ObjectTrajectory& o, const Vec3& origin) {
  require(m.frame_count() == o.frame_count(), "encode_interaction: motion and object frame counts differ");
  const int c = interaction_channels(m.skeleton);
  const Eigen::Index jc = static_cast<Eigen::Index>(m.skeleton.joint_count());
  Signal s(static_cast<Eigen::Index>(m.frame_count()) * c);
  for (std::size_t f = 0; f < m.frame_count(); ++f) {
    const Eigen::Index base = static_cast<Eigen::Index>(f) * c;
    for (Eigen::Index j = 0; j < jc; ++j) s.segment<3>(base + 3 * j) = m.frames[f][static_cast<std::size_t>(j)] - origin;
    s.segment<3>(base + 3 * jc) = o.poses[f].translation - origin;
    s.segment<3>(base + 3 * jc + 3) = o.poses[f].rotation.col(0);
    s.segment<3>(base + 3 * jc + 6) = o.poses[f].rotation.col(1);
  }
  return s;
}

inline InteractionState decode_interaction(const Signal& s, const Skeleton& skeleton, const Vec3& origin,
                                           double fps = 30.0) {
  const int c = interaction_channels(skeleton);
  require(s.size() % c == 0, "decode_interaction: signal size is not a whole number of frames");
  const Eigen::Index jc = static_cast<Eigen::Index>(skeleton.joint_count());
  InteractionState st;
  st.motion.skeleton = skeleton;
  st.motion.fps = fps;
  for (Eigen::Index base = 0; base < s.size(); base += c) {
    Pose p(static_cast<std::size_t>(jc));
    for (Eigen::Index j = 0; j < jc; ++j) p[static_cast<std::size_t>(j)] = s.segment<3>(base + 3 * j) + origin;
    st.motion.frames.push_back(std::move(p));
    const Vec3 t = s.segment<3>(base + 3 * jc) + origin;
    st.object.poses.push_back({rotation_from_6d(s.segment<3>(base + 3 * jc + 3), s.segment<3>(base + 3 * jc + 6)), t});
  }
  return st;
}

// ---------------------------------------------------------------------------
// Local scene tokens

struct LocalSceneConfig {
  double extent = 1.0;  // half side of the crop, meters
  int patches_x = 4;
  int patches_y = 4;
  int z_slabs = 6;
};

struct LocalSceneTokens {
  int patches_x = 0;
  int patches_y = 0;
  std::vector<Eigen::VectorXd> features;  // row-major over (px, py)
  std::string warning;
};

// Crop of side 2*extent (rounded to whole cells) centred on the cell holding
// `center`. Each patch feature is [max per z-slab, mean per z-slab]; cells
// outside the grid count as empty.
inline LocalSceneTokens local_scene_tokens(const VoxelGrid& grid, const Vec3& center, double extent,
                                           std::array<int, 2> patches, int z_slabs) {
  require(extent > 0.0, "local_scene_tokens: extent must be positive");
  require(patches[0] > 0 && patches[1] > 0, "local_scene_tokens: patch counts must be positive");
  const int nz = grid.dims()[2];
  require(z_slabs > 0 && z_slabs <= nz, "local_scene_tokens: z slab count out of range");
  const double res = grid.resolution();
  const int side = std::max(1, static_cast<int>(std::lround(2.0 * extent / res)));
  const long ci = detail::cell_of(center.x(), grid.origin().x(), res);
  const long cj = detail::cell_of(center.y(), grid.origin().y(), res);
  const long i0 = ci - side / 2, j0 = cj - side / 2;

  LocalSceneTokens out;
  out.patches_x = patches[0];
  out.patches_y = patches[1];
  const auto cells = static_cast<std::size_t>(patches[0]) * patches[1];
  std::vector<Eigen::VectorXd> maxes(cells, Eigen::VectorXd::Zero(z_slabs));
  std::vector<Eigen::VectorXd> sums(cells, Eigen::VectorXd::Zero(z_slabs));
  std::vector<Eigen::VectorXd> counts(cells, Eigen::VectorXd::Zero(z_slabs));
  bool any_inside = false;
  for (int a = 0; a < side; ++a) {
    for (int b = 0; b < side; ++b) {
      const auto pi = static_cast<std::size_t>(static_cast<long>(a) * patches[0] / side);
      const auto pj = static_cast<std::size_t>(static_cast<long>(b) * patches[1] / side);
      const std::size_t patch = pi * static_cast<std::size_t>(patches[1]) + pj;
      const long gi = i0 + a, gj = j0 + b;
      for (int k = 0; k < nz; ++k) {
        const auto slab = static_cast<Eigen::Index>(static_cast<long>(k) * z_slabs / nz);
        const bool inside = grid.in_range(static_cast<int>(gi), static_cast<int>(gj), k);
        any_inside = any_inside || inside;
        const double v = inside ? grid.value_or_empty(static_cast<int>(gi), static_cast<int>(gj), k) : 0.0;
        maxes[patch][slab] = std::max(maxes[patch][slab], v);
        sums[patch][slab] += v;
        counts[patch][slab] += 1.0;
      }
    }
  }
  for (std::size_t p = 0; p < cells; ++p) {
    Eigen::VectorXd f(2 * z_slabs);
    f << maxes[p], sums[p].cwiseQuotient(counts[p].cwiseMax(1.0));
    out.features.push_back(f);
  }
  if (!any_inside) out.warning = "local_scene_tokens: region lies entirely outside the grid";
  return out;
}

// ---------------------------------------------------------------------------
// Training losses

// Mean squared nearest-point distance over (joint, frame) pairs closer than
// `threshold` to the object.
inline double contact_loss(const JointTrack& joints, const std::vector<PointCloud>& object, double threshold) {
  require(joints.size() == object.size(), "contact_loss: frame counts differ");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t f = 0; f < joints.size(); ++f) {
    if (object[f].empty()) continue;
    const SpatialIndex index(object[f]);
    for (const auto& j : joints[f]) {
      const NearestResult r = index.nearest(j);
      if (r.distance < threshold) {
        sum += r.distance * r.distance;
        ++count;
      }
    }
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

// Mean squared distance to the nearest object point over body samples that
// lie behind that point's surface.
inline double penetration_loss(const std::vector<PointCloud>& body, const std::vector<PointCloud>& object) {
  require(body.size() == object.size(), "penetration_loss: frame counts differ");
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t f = 0; f < body.size(); ++f) {
    if (object[f].empty()) continue;
    require(object[f].has_normals(), "penetration_loss: object normals required");
    const SpatialIndex index(object[f]);
    for (const auto& v : body[f].points) {
      const NearestResult r = index.nearest(v);
      if (penetration_indicator(v, object[f].points[r.index], object[f].normals[r.index])) {
        sum += r.distance * r.distance;
        ++count;
      }
    }
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

struct PenetrationPair {
  std::size_t generated = 0;
  std::size_t scene = 0;
  bool operator==(const PenetrationPair&) const = default;
};

inline std::vector<PenetrationPair> penetration_set(const PointCloud& generated, const PointCloud& scene,
                                                    const SpatialIndex& index) {
  require(scene.has_normals(), "penetration_set: scene normals required");
  std::vector<PenetrationPair> out;
  if (scene.empty()) return out;
  for (std::size_t i = 0; i < generated.size(); ++i) {
    const NearestResult r = index.nearest(generated.points[i]);
    if (penetration_indicator(generated.points[i], scene.points[r.index], scene.normals[r.index])) out.push_back({i, r.index});
  }
  return out;
}

inline std::vector<PenetrationPair> penetration_set(const PointCloud& generated, const PointCloud& scene) {
  return penetration_set(generated, scene, SpatialIndex(scene));
}

inline double ttp_loss(const std::vector<PenetrationPair>& pairs, const PointCloud& generated, const PointCloud& scene) {
  double sum = 0.0;
  for (const auto& p : pairs) sum += (generated.points[p.generated] - scene.points[p.scene]).norm();
  return sum;
}

// ---------------------------------------------------------------------------
// Test-time penetration guidance

struct ScenePoints {
  PointCloud cloud;
  SpatialIndex index;

  ScenePoints() = default;
  explicit ScenePoints(PointCloud c) : cloud(std::move(c)), index(cloud) {}
};

// What moves under guidance: body samples follow their carrier joint, object
// samples follow the object translation.
struct InteractionGeometry {
  BodyProxy body;
  PointCloud object_local;  // with normals
};

// Generated points of one frame: body samples, then object samples.
inline PointCloud generated_points(const Pose& pose, const RigidTransform& object_pose, const InteractionGeometry& g) {
  PointCloud out = g.body.surface(pose);
  out.append(g.object_local.transformed(object_pose));
  return out;
}

// Carrier of every generated point: a joint index, or -1 for the object.
inline std::vector<int> generated_carriers(const InteractionGeometry& g) {
  std::vector<int> out;
  for (const auto& s : g.body.samples()) out.push_back(s.carrier);
  out.insert(out.end(), g.object_local.size(), -1);
  return out;
}

struct TtpGradient {
  std::vector<Vec3> joints;      // dL/d(translation of the samples carried by each joint)
  std::vector<double> joint_depth;  // deepest penetration among each joint's pairs
  Vec3 object = Vec3::Zero();
  double object_depth = 0.0;
  double loss = 0.0;
  std::size_t pairs = 0;
};

// Gradient of L_ttp for one frame with the nearest-neighbour assignment held
// fixed: each pair contributes the unit vector from its scene point to its
// generated point.
inline TtpGradient ttp_frame_gradient(const Pose& pose, const RigidTransform& object_pose, const InteractionGeometry& g,
                                      const ScenePoints& scene) {
  TtpGradient grad;
  grad.joints.assign(pose.size(), Vec3::Zero());
  grad.joint_depth.assign(pose.size(), 0.0);
  if (scene.cloud.empty()) return grad;
  const PointCloud gen = generated_points(pose, object_pose, g);
  const std::vector<int> carriers = generated_carriers(g);
  const auto pairs = penetration_set(gen, scene.cloud, scene.index);
  grad.pairs = pairs.size();
  grad.loss = ttp_loss(pairs, gen, scene.cloud);
  for (const auto& p : pairs) {
    const Vec3 diff = gen.points[p.generated] - scene.cloud.points[p.scene];
    const double n = diff.norm();
    if (n <= 0.0) continue;
    const double depth = penetration_depth(gen.points[p.generated], scene.cloud.points[p.scene], scene.cloud.normals[p.scene]);
    const int c = carriers[p.generated];
    if (c < 0) {
      grad.object += diff / n;
      grad.object_depth = std::max(grad.object_depth, depth);
    } else {
      grad.joints[static_cast<std::size_t>(c)] += diff / n;
      grad.joint_depth[static_cast<std::size_t>(c)] = std::max(grad.joint_depth[static_cast<std::size_t>(c)], depth);
    }
  }
  return grad;
}

inline double ttp_state_loss(const InteractionState& s, const InteractionGeometry& g, const ScenePoints& scene) {
  double sum = 0.0;
  for (std::size_t f = 0; f < s.motion.frame_count(); ++f) {
    if (scene.cloud.empty()) break;
    const PointCloud gen = generated_points(s.motion.frames[f], s.object.poses[f], g);
    sum += ttp_loss(penetration_set(gen, scene.cloud, scene.index), gen, scene.cloud);
  }
  return sum;
}

// Descent displacement for one carrier, never longer than the deepest
// penetration it is correcting.
inline Vec3 guidance_displacement(const Vec3& grad, double depth, double step_size) {
  Vec3 d = -step_size * grad;
  const double n = d.norm();
  if (n > depth && n > 0.0) d *= depth / n;
  return d;
}

// One descent step on L_ttp: moves the object translation and the joints that
// carry penetrating body samples.
inline InteractionState ttp_guidance_step(InteractionState s, const InteractionGeometry& g, const ScenePoints& scene,
                                          double step_size) {
  require(step_size > 0.0, "ttp_guidance_step: step size must be positive");
  for (std::size_t f = 0; f < s.motion.frame_count(); ++f) {
    const TtpGradient grad = ttp_frame_gradient(s.motion.frames[f], s.object.poses[f], g, scene);
    if (grad.pairs == 0) continue;
    for (std::size_t j = 0; j < grad.joints.size(); ++j) {
      s.motion.frames[f][j] += guidance_displacement(grad.joints[j], grad.joint_depth[j], step_size);
    }
    s.object.poses[f].translation += guidance_displacement(grad.object, grad.object_depth, step_size);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Total training loss

struct LossWeights {
  double lambda_contact = 1.0;
  double lambda_penetration = 1.0;
  double contact_threshold = 0.1;  // meters
  double guidance_step = 0.01;     // meters per unit gradient
  int guidance_repeats = 1;        // corrector applications per reverse step
};

inline void validate_weights(const LossWeights& w) {
  require(w.lambda_contact >= 0.0 && w.lambda_penetration >= 0.0 && w.contact_threshold >= 0.0 && w.guidance_step >= 0.0 &&
              w.guidance_repeats >= 0,
          "loss weights must be non-negative");
}

struct LossBreakdown {
  double diffusion = 0.0;
  double contact = 0.0;
  double penetration = 0.0;
  double total = 0.0;
};

inline std::vector<PointCloud> posed_object(const PointCloud& local, const ObjectTrajectory& traj) {
  std::vector<PointCloud> out;
  for (const auto& p : traj.poses) out.push_back(local.transformed(p));
  return out;
}

inline std::vector<PointCloud> body_surfaces(const BodyProxy& body, const MotionSequence& m) {
  std::vector<PointCloud> out;
  for (const auto& f : m.frames) out.push_back(body.surface(f));
  return out;
}

inline JointTrack joint_track(const MotionSequence& m) { return JointTrack(m.frames.begin(), m.frames.end()); }

// L_diff + lambda1 L_cont + lambda2 L_pene with the auxiliary terms evaluated
// on the decoded prediction.
inline LossBreakdown total_loss(const Signal& a0, const Signal& a0_hat, const InteractionGeometry& g, const Vec3& origin,
                                const LossWeights& w) {
  validate_weights(w);
  LossBreakdown out;
  out.diffusion = diffusion_loss(a0, a0_hat);
  const InteractionState st = decode_interaction(a0_hat, g.body.skeleton(), origin);
  const auto obj = posed_object(g.object_local, st.object);
  if (w.lambda_contact > 0.0) out.contact = contact_loss(joint_track(st.motion), obj, w.contact_threshold);
  if (w.lambda_penetration > 0.0) out.penetration = penetration_loss(body_surfaces(g.body, st.motion), obj);
  out.total = out.diffusion + w.lambda_contact * out.contact + w.lambda_penetration * out.penetration;
  return out;
}

// lambda1 L_cont + lambda2 L_pene on a predicted signal, with its gradient
// with respect to the joint and object-translation channels. Body samples are
// treated as rigidly carried by their carrier joint; rotation channels
// receive no gradient.
inline double interaction_aux_loss(const Signal& prediction, const InteractionGeometry& g, const Vec3& origin,
                                   const LossWeights& w, Signal& grad) {
  const Skeleton& sk = g.body.skeleton();
  const InteractionState st = decode_interaction(prediction, sk, origin);
  const int c = interaction_channels(sk);
  const Eigen::Index tcol = static_cast<Eigen::Index>(sk.joint_count()) * 3;
  const Aabb local_box = g.object_local.bounds();
  std::vector<std::tuple<std::size_t, int, Vec3>> contact_terms, pene_terms;  // frame, carrier, (v - p)
  // Queries run in the object frame against the local samples.
  const SpatialIndex index(g.object_local);
  for (std::size_t f = 0; f < st.motion.frame_count(); ++f) {
    const RigidTransform& pose = st.object.poses[f];
    const RigidTransform inv = pose.inverse();
    if (w.lambda_contact > 0.0) {
      for (std::size_t j = 0; j < st.motion.frames[f].size(); ++j) {
        const Vec3 q = inv.apply(st.motion.frames[f][j]);
        const NearestResult r = index.nearest(q);
        if (r.distance < w.contact_threshold) {
          contact_terms.emplace_back(f, static_cast<int>(j), pose.apply_direction(q - g.object_local.points[r.index]));
        }
      }
    }
    if (w.lambda_penetration > 0.0) {
      const PointCloud body = g.body.surface(st.motion.frames[f]);
      for (std::size_t i = 0; i < body.size(); ++i) {
        const Vec3 q = inv.apply(body.points[i]);
        // Outside the object's box nothing is inside the object.
        if (!local_box.contains_closed(q)) continue;
        const NearestResult r = index.nearest(q);
        if (penetration_indicator(q, g.object_local.points[r.index], g.object_local.normals[r.index])) {
          pene_terms.emplace_back(f, g.body.samples()[i].carrier, pose.apply_direction(q - g.object_local.points[r.index]));
        }
      }
    }
  }
  double loss = 0.0;
  auto accumulate = [&](const auto& terms, double lambda) {
    if (terms.empty()) return;
    const double scale = lambda / static_cast<double>(terms.size());
    for (const auto& [f, j, diff] : terms) {
      loss += scale * diff.squaredNorm();
      const Eigen::Index base = static_cast<Eigen::Index>(f) * c;
      grad.segment<3>(base + 3 * j) += 2.0 * scale * diff;
      grad.segment<3>(base + tcol) -= 2.0 * scale * diff;
    }
  };
  accumulate(contact_terms, w.lambda_contact);
  accumulate(pene_terms, w.lambda_penetration);
  return loss;
}

// ---------------------------------------------------------------------------
// Conditioning and generation

struct InteractionConfig {
  int frames = 48;
  int cond_dim = 32;
  int object_points = 64;
  double scene_spacing = 0.05;
  double voxel_resolution = 0.1;
  LocalSceneConfig local;
  LossWeights weights;
  double fps = 30.0;
};

// Fixed-count surface samples with normals in the object frame; the same
// geometry always yields the same points.
inline PointCloud object_point_samples(const Geometry& geometry, int count) {
  require(count > 0, "object point count must be positive");
  if (const auto* box = std::get_if<BoxShape>(&geometry)) {
    Rng rng(0x0b1ec7u);
    return sample_surface(make_box_mesh(box->half_extent), static_cast<std::size_t>(count), rng);
  }
  if (const auto* mesh = std::get_if<TriMesh>(&geometry)) {
    Rng rng(0x0b1ec7u);
    return sample_surface(*mesh, static_cast<std::size_t>(count), rng);
  }
  const auto& cloud = std::get<PointCloud>(geometry);
  require(cloud.size() >= static_cast<std::size_t>(count) && cloud.has_normals(), "point-cloud geometry too small or lacks normals");
  PointCloud out;
  for (int i = 0; i < count; ++i) {
    const std::size_t k = static_cast<std::size_t>(i) * cloud.size() / static_cast<std::size_t>(count);
    out.append(cloud.points[k], cloud.normals[k]);
  }
  return out;
}

// Everything generation needs to know about one scene and target.
struct InteractionScene {
  std::string target;
  Geometry target_geometry;
  PointCloud object_local;
  RigidTransform initial_pose;
  Vec3 origin = Vec3::Zero();
  ScenePoints obstacles;  // all geometry except the target
  VoxelGrid grid;
  Aabb bounds;
};

inline VoxelGrid scene_grid(const PointCloud& obstacles, const Aabb& bounds, double res) {
  std::array<int, 3> dims{};
  for (int a = 0; a < 3; ++a) dims[static_cast<std::size_t>(a)] = std::max(1, static_cast<int>(std::ceil((bounds.max[a] - bounds.min[a]) / res)));
  return voxelize(obstacles, bounds.min, res, dims);
}

inline InteractionScene prepare_interaction_scene(const SceneGraph& scene, const std::string& target,
                                                  const InteractionConfig& cfg) {
  const SceneObject& obj = scene.at(target);
  InteractionScene s;
  s.target = target;
  s.target_geometry = obj.geometry;
  s.object_local = object_point_samples(obj.geometry, cfg.object_points);
  s.initial_pose = obj.pose;
  s.origin = Vec3(obj.pose.translation.x(), obj.pose.translation.y(), 0.0);
  s.obstacles = ScenePoints(scene.all_points(cfg.scene_spacing, target));
  s.bounds = scene.bounds;
  s.grid = scene_grid(s.obstacles.cloud, scene.bounds, cfg.voxel_resolution);
  return s;
}

// Per-frame affordance features for each hand joint: the affordance-weighted
// mean contact point (object frame) and the peak affordance.
inline Eigen::MatrixXd affordance_frame_features(const AffordanceTensor& a, const PointCloud& object_local) {
  const Tensor3& t = a.values;
  require(t.points == static_cast<int>(object_local.size()), "affordance point count does not match the object samples");
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(4 * t.joints, t.frames);
  for (int n = 0; n < t.frames; ++n) {
    for (int j = 0; j < t.joints; ++j) {
      double mass = 0.0, peak = 0.0;
      Vec3 point = Vec3::Zero();
      for (int i = 0; i < t.points; ++i) {
        const double v = t(i, j, n);
        mass += v;
        peak = std::max(peak, v);
        point += v * object_local.points[static_cast<std::size_t>(i)];
      }
      if (mass > 0.0) point /= mass;
      out.block<3, 1>(4 * j, n) = point;
      out(4 * j + 3, n) = peak;
    }
  }
  return out;
}

// Condition tokens ordered (text, object features fused with affordance,
// local scene patches); per-frame affordance features ride along as side
// features of the frame tokens.
inline ConditionBundle interaction_condition(const InteractionScene& scene, const AffordanceTensor& affordance,
                                             const std::string& text, const InteractionConfig& cfg) {
  require(affordance.values.frames == cfg.frames, "affordance frame count does not match the requested motion length");
  ConditionBundle cond(cfg.cond_dim);
  cond.add_token(text_embedding(text, cfg.cond_dim));
  for (const auto& t : object_summary_tokens(scene.object_local)) cond.add_token(t);
  const Eigen::MatrixXd feats = affordance_frame_features(affordance, scene.object_local);
  const Vec3 start = scene.initial_pose.translation - scene.origin;
  Eigen::VectorXd pose_token(6 + feats.rows());
  pose_token << start, scene.initial_pose.rotation.col(0), feats.rowwise().mean();
  cond.add_token(pose_token);
  const LocalSceneTokens local = local_scene_tokens(scene.grid, scene.initial_pose.translation, cfg.local.extent,
                                                    {cfg.local.patches_x, cfg.local.patches_y}, cfg.local.z_slabs);
  for (const auto& f : local.features) cond.add_token(f);
  cond.set_side_features(feats);
  return cond;
}

inline DenoiserShape interaction_denoiser_shape(const Skeleton& s, const InteractionConfig& cfg, int hidden = 96) {
  DenoiserShape d;
  d.tokens = cfg.frames;
  d.token_size = interaction_channels(s);
  d.side_dim = 4 * static_cast<int>(s.hand_joints().size());
  d.cond_dim = cfg.cond_dim;
  d.embed_dim = 8;
  d.hidden = hidden;
  d.mlp_hidden = hidden;
  return d;
}

// Guidance applied to the decoded A_0 estimate: joints and object translation
// are moved in place, rotation channels are left alone.
inline GuidanceCorrector make_ttp_corrector(const InteractionGeometry& g, const ScenePoints& scene, const Vec3& origin,
                                            const LossWeights& w) {
  return [&g, &scene, origin, w](Signal& a0_hat, int) {
    const Skeleton& sk = g.body.skeleton();
    const int c = interaction_channels(sk);
    const Eigen::Index tcol = static_cast<Eigen::Index>(sk.joint_count()) * 3;
    for (int r = 0; r < w.guidance_repeats; ++r) {
      const InteractionState before = decode_interaction(a0_hat, sk, origin);
      const InteractionState after = ttp_guidance_step(before, g, scene, w.guidance_step);
      for (std::size_t f = 0; f < before.motion.frame_count(); ++f) {
        const Eigen::Index base = static_cast<Eigen::Index>(f) * c;
        for (std::size_t j = 0; j < sk.joint_count(); ++j) {
          a0_hat.segment<3>(base + 3 * static_cast<Eigen::Index>(j)) += after.motion.frames[f][j] - before.motion.frames[f][j];
        }
        a0_hat.segment<3>(base + tcol) += after.object.poses[f].translation - before.object.poses[f].translation;
      }
    }
  };
}

inline InteractionState generate_interaction(const InteractionScene& scene, const AffordanceTensor& affordance,
                                             const std::string& text, const Denoiser& denoiser,
                                             const NoiseSchedule& sched, Rng& rng, bool enable_guidance,
                                             const InteractionConfig& cfg, const Skeleton& skeleton = Skeleton::biped()) {
  validate_weights(cfg.weights);
  const ConditionBundle cond = interaction_condition(scene, affordance, text, cfg);
  const InteractionGeometry geometry{BodyProxy(skeleton), scene.object_local};
  GuidanceCorrector corrector;
  if (enable_guidance && cfg.weights.guidance_step > 0.0) corrector = make_ttp_corrector(geometry, scene.obstacles, scene.origin, cfg.weights);
  const Eigen::Index n = static_cast<Eigen::Index>(cfg.frames) * interaction_channels(skeleton);
  const Signal out = reverse_denoise(standard_normal_vector(rng, n), denoiser, cond, sched, rng, corrector);
  InteractionState st = decode_interaction(out, skeleton, scene.origin, cfg.fps);
  repair_bone_lengths(st.motion);
  return st;
}

// One training example of the interaction model.
struct InteractionExample {
  InteractionScene scene;
  std::string text;
  InteractionState state;
  AffordanceTensor affordance;
};

inline TrainingSample interaction_training_sample(const InteractionExample& e, const InteractionConfig& cfg) {
  require(static_cast<int>(e.state.motion.frame_count()) == cfg.frames, "interaction example has the wrong frame count");
  return {encode_interaction(e.state.motion, e.state.object, e.scene.origin),
          interaction_condition(e.scene, e.affordance, e.text, cfg)};
}

// Auxiliary contact and penetration terms for train_denoiser.
inline SampleAuxLoss interaction_aux(const std::vector<InteractionExample>& examples, const LossWeights& w,
                                     const Skeleton& skeleton = Skeleton::biped()) {
  if (w.lambda_contact == 0.0 && w.lambda_penetration == 0.0) return {};
  auto geometries = std::make_shared<std::vector<InteractionGeometry>>();
  for (const auto& e : examples) geometries->push_back({BodyProxy(skeleton), e.scene.object_local});
  std::vector<Vec3> origins;
  for (const auto& e : examples) origins.push_back(e.scene.origin);
  return [geometries, origins, w](std::size_t i, const Signal& y, Signal& g) {
    return interaction_aux_loss(y, (*geometries)[i], origins[i], w, g);
  };
}

}  // namespace interactmove
