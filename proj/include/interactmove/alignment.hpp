#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "interactmove/body.hpp"
#include "interactmove/diffusion.hpp"
#include "interactmove/interaction_gen.hpp"
#include "interactmove/parallel.hpp"
#include "interactmove/scene_model.hpp"

namespace interactmove {

// A captured human-object interaction. `rest_height` is the height of the
// support the object rests on in the capture (h_i).
struct HOISequence {
  MotionSequence motion;
  ObjectTrajectory object;
  std::string action;
  std::string category;
  Geometry geometry = BoxShape{};
  double rest_height = 0.0;
};

inline void validate_hoi(const HOISequence& s) {
  require(s.motion.frame_count() > 0, "HOI sequence is empty");
  require(s.motion.frame_count() == s.object.frame_count(), "HOI sequence: motion and object frame counts differ");
  validate_motion(s.motion);
  validate_trajectory(s.object);
}

class NoContactError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

struct ContactParams {
  double motion_eps = 0.005;  // m/frame
  double prox_eps = 0.15;     // m
  double surface_spacing = 0.02;
};

// Smallest distance from any hand joint to the object's surface samples.
inline std::vector<double> hand_object_distances(const HOISequence& s, double spacing) {
  const PointCloud local = surface_samples(s.geometry, spacing);
  const SpatialIndex index(local);
  std::vector<double> out;
  for (std::size_t f = 0; f < s.motion.frame_count(); ++f) {
    const RigidTransform inv = s.object.poses[f].inverse();
    double best = std::numeric_limits<double>::infinity();
    for (int j : s.motion.skeleton.hand_joints()) best = std::min(best, index.nearest(inv.apply(s.motion.frames[f][static_cast<std::size_t>(j)])).distance);
    out.push_back(best);
  }
  return out;
}

inline int detect_contact_start(const HOISequence& s, const ContactParams& p = {}) {
  validate_hoi(s);
  const std::vector<double> hand = hand_object_distances(s, p.surface_spacing);
  for (std::size_t f = 1; f < s.object.frame_count(); ++f) {
    const double moved = (s.object.poses[f].translation - s.object.poses[f - 1].translation).norm();
    if (moved > p.motion_eps && hand[f] < p.prox_eps) return static_cast<int>(f);
  }
  throw NoContactError("no frame where the object starts moving with a hand nearby");
}

// First frame after `contact` whose hand-object distance reaches prox_eps;
// the frame count when the hands never leave.
inline int detect_release(const HOISequence& s, int contact, const ContactParams& p = {}) {
  const std::vector<double> hand = hand_object_distances(s, p.surface_spacing);
  for (std::size_t f = static_cast<std::size_t>(contact) + 1; f < hand.size(); ++f) {
    if (hand[f] >= p.prox_eps) return static_cast<int>(f);
  }
  return static_cast<int>(hand.size());
}

struct AlignmentParams {
  double h_i = 0.0;  // original support height
  double h_a = 0.0;  // target surface height
  int t_w = 6;       // blend window, frames
  int t_noise = 25;  // repair noise steps
  int resample = 10;
  double smoothing_rate = 1.0 / 64.0;  // step of the repair prior
  double signal_scale = 100.0;  // repair signal units per metre
};

inline void validate_alignment(const AlignmentParams& p) {
  require(p.t_w >= 1, "alignment window must be at least one frame");
  require(std::isfinite(p.h_i) && std::isfinite(p.h_a), "alignment heights must be finite");
  require(p.t_noise >= 0 && p.resample >= 1, "alignment repair settings out of range");
}

struct ShiftResult {
  HOISequence sequence;
  std::vector<double> offsets;  // hand z offset per frame
  std::vector<bool> editable;   // frames strictly inside a blend window
  int contact = 0;
  int release = 0;
  std::string warning;
  std::vector<int> arm_joints;  // elbows and hand joints of the shifted arms
  double overshoot = 0.0;       // largest wrist distance beyond arm reach
};

// Hand offset M_t: ramps 0 -> (h_a - h_i) over [contact - T_w, contact],
// holds until release, ramps back to 0 over [release, release + T_w].
inline double hand_offset(int t, int contact, int release, const AlignmentParams& p) {
  const double delta = p.h_a - p.h_i;
  if (t <= contact - p.t_w) return 0.0;
  if (t < contact) return delta * static_cast<double>(t - (contact - p.t_w)) / p.t_w;
  if (t <= release) return delta;
  if (t < release + p.t_w) return delta * (1.0 - static_cast<double>(t - release) / p.t_w);
  return 0.0;
}

// Hand-joint sets of the arms touching the object at `frame`.
inline std::vector<const std::vector<int>*> engaged_hands(const HOISequence& s, int frame, const ContactParams& p = {}) {
  const PointCloud local = surface_samples(s.geometry, p.surface_spacing);
  const SpatialIndex index(local);
  const RigidTransform inv = s.object.poses.at(static_cast<std::size_t>(frame)).inverse();
  std::vector<const std::vector<int>*> out;
  for (const auto* hand : {&s.motion.skeleton.left_hand, &s.motion.skeleton.right_hand}) {
    for (int j : *hand) {
      if (index.nearest(inv.apply(s.motion.frames[static_cast<std::size_t>(frame)][static_cast<std::size_t>(j)])).distance < p.prox_eps) {
        out.push_back(hand);
        break;
      }
    }
  }
  return out;
}

inline std::vector<const std::vector<int>*> all_hands(const Skeleton& s) { return {&s.left_hand, &s.right_hand}; }

// Places the elbows of the given arms so they keep their bone lengths with
// the wrists where they are, bending in each elbow's current plane. Returns
// how far the farthest wrist lies beyond reach (0 when all are reachable).
inline double resolve_elbows(const Skeleton& s, Pose& pose, const std::vector<const std::vector<int>*>& hands) {
  double overshoot = 0.0;
  for (const auto* hand : hands) {
    const auto wrist = static_cast<std::size_t>(hand->front());
    const auto elbow = static_cast<std::size_t>(s.parents[wrist]);
    const auto shoulder = static_cast<std::size_t>(s.parents[elbow]);
    const Vec3 pole = pose[elbow] - pose[shoulder];
    const double reach = s.rest_length(elbow) + s.rest_length(wrist);
    overshoot = std::max(overshoot, (pose[wrist] - pose[shoulder]).norm() - reach);
    pose[elbow] = solve_two_bone(pose[shoulder], pose[wrist], s.rest_length(elbow), s.rest_length(wrist), pole);
  }
  return std::max(0.0, overshoot);
}

inline double resolve_elbows(const Skeleton& s, Pose& pose) { return resolve_elbows(s, pose, all_hands(s)); }

// Shifts the joints of `hands` (every hand when empty) by the ramped offset
// and the object by h_a - h_i on all frames.
inline ShiftResult height_shift(const HOISequence& seq, const AlignmentParams& p, int contact, int release,
                                std::vector<const std::vector<int>*> hands = {}) {
  validate_hoi(seq);
  validate_alignment(p);
  const int frames = static_cast<int>(seq.motion.frame_count());
  require(contact >= 0 && contact < frames && release > contact, "height_shift: contact frames out of range");
  const Skeleton& s = seq.motion.skeleton;
  if (hands.empty()) hands = all_hands(s);
  ShiftResult r{seq, {}, std::vector<bool>(static_cast<std::size_t>(frames), false), contact, release, {}, {}, 0.0};
  for (const auto* hand : hands) {
    const int elbow = s.parents[static_cast<std::size_t>(hand->front())];
    r.arm_joints.push_back(elbow);
    r.arm_joints.insert(r.arm_joints.end(), hand->begin(), hand->end());
  }
  if (contact - p.t_w < 0 || release + p.t_w > frames - 1) r.warning = "height_shift: blend window clipped at the sequence ends";
  const double delta = p.h_a - p.h_i;
  for (int t = 0; t < frames; ++t) {
    const double m = hand_offset(t, contact, release, p);
    r.offsets.push_back(m);
    r.editable[static_cast<std::size_t>(t)] = (t > contact - p.t_w && t < contact) || (t > release && t < release + p.t_w);
    Pose& pose = r.sequence.motion.frames[static_cast<std::size_t>(t)];
    if (m != 0.0) {
      for (const auto* hand : hands) {
        for (int j : *hand) pose[static_cast<std::size_t>(j)].z() += m;
      }
      r.overshoot = std::max(r.overshoot, resolve_elbows(s, pose, hands));
    }
    r.sequence.object.poses[static_cast<std::size_t>(t)].translation.z() += delta;
  }
  if (r.overshoot > 1e-9) {
    r.warning += (r.warning.empty() ? "" : "; ") + std::string("height_shift: wrist beyond arm reach by ") +
                 std::to_string(r.overshoot) + " m";
  }
  r.sequence.rest_height = p.h_a;
  return r;
}

// Moves the whole interaction so the object's first pose sits at `xy`.
inline HOISequence retarget_xy(HOISequence s, double x, double y) {
  const Vec3 d(x - s.object.poses[0].translation.x(), y - s.object.poses[0].translation.y(), 0.0);
  for (auto& f : s.motion.frames)
    for (auto& j : f) j += d;
  for (auto& pose : s.object.poses) pose.translation += d;
  return s;
}

inline std::vector<bool> arm_mask(const Skeleton& s) {
  std::vector<bool> arm(s.joint_count(), false);
  for (int j : s.arm_chain) arm[static_cast<std::size_t>(j)] = true;
  return arm;
}

// Re-generates the arm joints of the blend-window frames by inpainting the
// joint signal; every other entry is clamped to the shifted input. Arm bone
// lengths of the edited frames are restored afterwards, so observed frames
// stay bit-exact.
inline HOISequence repair_motion(const ShiftResult& shifted, const Denoiser& denoiser, const NoiseSchedule& sched,
                                 int t_noise, Rng& rng, int resample = 10, double scale = 100.0) {
  require(scale > 0.0, "repair_motion: signal scale must be positive");
  const MotionSequence& m = shifted.sequence.motion;
  const Skeleton& s = m.skeleton;
  const int frames = static_cast<int>(m.frame_count());
  const int jc = static_cast<int>(s.joint_count());
  const Vec3 origin(shifted.sequence.object.poses[0].translation.x(), shifted.sequence.object.poses[0].translation.y(), 0.0);
  Signal sig(static_cast<Eigen::Index>(frames) * jc * 3);
  std::vector<bool> observed(static_cast<std::size_t>(sig.size()), true);
  std::vector<bool> arm = arm_mask(s);
  if (!shifted.arm_joints.empty()) {
    arm.assign(s.joint_count(), false);
    for (int j : shifted.arm_joints) arm[static_cast<std::size_t>(j)] = true;
  }
  for (int f = 0; f < frames; ++f) {
    for (int j = 0; j < jc; ++j) {
      const Eigen::Index base = (static_cast<Eigen::Index>(f) * jc + j) * 3;
      sig.segment<3>(base) = scale * (m.frames[static_cast<std::size_t>(f)][static_cast<std::size_t>(j)] - origin);
      if (shifted.editable[static_cast<std::size_t>(f)] && arm[static_cast<std::size_t>(j)]) {
        for (int a = 0; a < 3; ++a) observed[static_cast<std::size_t>(base + a)] = false;
      }
    }
  }
  HOISequence out = shifted.sequence;
  if (t_noise == 0) return out;
  const InpaintResult res = inpaint(sig, observed, t_noise, denoiser, ConditionBundle(1), sched, rng, resample);
  for (int f = 0; f < frames; ++f) {
    if (!shifted.editable[static_cast<std::size_t>(f)]) continue;
    Pose& pose = out.motion.frames[static_cast<std::size_t>(f)];
    const Pose edited_raw = [&] {
      Pose p = pose;
      for (int j = 0; j < jc; ++j) p[static_cast<std::size_t>(j)] = res.signal.segment<3>((static_cast<Eigen::Index>(f) * jc + j) * 3) / scale + origin;
      return p;
    }();
    // Edited arm joints walk outwards from the shoulder along their new directions.
    for (int j : s.arm_chain) {
      const auto jj = static_cast<std::size_t>(j);
      if (!arm[jj]) continue;
      const auto pj = static_cast<std::size_t>(s.parents[jj]);
      Vec3 dir = edited_raw[jj] - (arm[pj] ? edited_raw[pj] : pose[pj]);
      if (dir.norm() < 1e-12) dir = s.rest_positions[jj] - s.rest_positions[pj];
      pose[jj] = pose[pj] + s.rest_length(jj) * dir.normalized();
    }
  }
  return out;
}

inline JerkSmoothingDenoiser repair_denoiser(const HOISequence& s, const AlignmentParams& p, const NoiseSchedule& sched) {
  return JerkSmoothingDenoiser(static_cast<int>(s.motion.frame_count()), static_cast<int>(s.motion.skeleton.joint_count()) * 3,
                               p.smoothing_rate, sched);
}

// ---------------------------------------------------------------------------
// Physics filters

struct FilterResult {
  bool pass = true;
  int first_frame = -1;    // first offending frame
  double magnitude = 0.0;  // largest violation over the sequence
};

struct FilterReport {
  FilterResult foot;
  FilterResult bounds;
  FilterResult collision;

  bool pass() const { return foot.pass && bounds.pass && collision.pass; }
  // First failing filter in the order foot, bounds, collision.
  std::string first_failure() const {
    if (!foot.pass) return "foot";
    if (!bounds.pass) return "bounds";
    if (!collision.pass) return "collision";
    return {};
  }
};

inline void note_violation(FilterResult& r, int frame, double magnitude) {
  if (r.pass) r.first_frame = frame;
  r.pass = false;
  r.magnitude = std::max(r.magnitude, magnitude);
}

// Fails when the lowest foot point of a frame floats above or sinks below
// the ground by more than eps.
inline FilterResult filter_foot_contact(const MotionSequence& m, double ground_z, double eps, const BodyProxy& body) {
  FilterResult r;
  for (std::size_t f = 0; f < m.frame_count(); ++f) {
    const double gap = body.sole_height(m.frames[f]) - ground_z;
    if (gap > eps || gap < -eps) note_violation(r, static_cast<int>(f), std::abs(gap));
  }
  return r;
}

inline FilterResult filter_foot_contact(const MotionSequence& m, double ground_z, double eps) {
  return filter_foot_contact(m, ground_z, eps, BodyProxy(m.skeleton));
}

// Root joint against closed bounds; magnitude is the distance outside.
inline FilterResult filter_bounds(const MotionSequence& m, const Aabb& bounds) {
  FilterResult r;
  for (std::size_t f = 0; f < m.frame_count(); ++f) {
    const Vec3& root = m.frames[f][0];
    if (!bounds.contains_closed(root)) {
      const Vec3 outside = (bounds.min - root).cwiseMax(root - bounds.max).cwiseMax(0.0);
      note_violation(r, static_cast<int>(f), outside.norm());
    }
  }
  return r;
}

// Deepest penetration of body samples behind the nearest scene sample.
inline double frame_penetration_depth(const PointCloud& body, const ScenePoints& scene) {
  double worst = 0.0;
  if (scene.cloud.empty()) return worst;
  for (const auto& v : body.points) {
    const NearestResult r = scene.index.nearest(v);
    worst = std::max(worst, penetration_depth(v, scene.cloud.points[r.index], scene.cloud.normals[r.index]));
  }
  return worst;
}

inline FilterResult filter_collision(const MotionSequence& m, const ScenePoints& scene, double delta, const BodyProxy& body) {
  FilterResult r;
  for (std::size_t f = 0; f < m.frame_count(); ++f) {
    const double depth = frame_penetration_depth(body.surface(m.frames[f]), scene);
    if (depth > delta) note_violation(r, static_cast<int>(f), depth);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Dataset synthesis

struct SynthesisConfig {
  int samples = 50;
  int distractors = 2;
  ContactParams contact;
  AlignmentParams alignment;  // heights are filled per sample
  double foot_eps = 0.05;
  double collision_delta = 0.02;
  double inflation = 0.01;
  double scene_spacing = 0.05;
  std::uint64_t seed = 0;
};

struct SynthesizedSample {
  std::string id;
  std::size_t sequence_index = 0;
  std::size_t scene_index = 0;
  SceneGraph scene;  // with target and distractors placed
  std::string target;
  std::string text;
  InteractionSpec spec;
  HOISequence aligned;
  HOISequence forced;  // hands snapped to the new height with no blend or repair
  FilterReport report;
  int contact = 0;
  int release = 0;
};

struct SynthesisStats {
  int attempted = 0;
  int emitted = 0;
  std::map<std::string, int> rejected_by;  // first failing stage
  std::map<std::string, int> failures;     // every failing filter
};

struct SynthesisResult {
  std::vector<SynthesizedSample> samples;
  SynthesisStats stats;
};

// Relations of the target's support that single it out among same-category
// objects; the first unique one is used.
inline std::optional<InteractionSpec> unique_spec(const SceneGraph& scene, const std::string& target, const std::string& action) {
  const SceneObject& obj = scene.at(target);
  if (!obj.support) return std::nullopt;
  const std::string& owner = scene.surfaces[*obj.support].owner;
  const SceneObject& surface = scene.at(owner);
  for (const auto& rel : scene.relations) {
    if (rel.subject != owner) continue;
    InteractionSpec spec{action, obj.category, surface.category, rel.relation, scene.at(rel.anchor).category};
    const auto c = grounding_candidates(spec, scene);
    if (c.size() == 1 && c[0] == target) return spec;
  }
  return std::nullopt;
}

inline std::uint64_t job_seed(std::uint64_t seed, std::uint64_t job) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (job + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Outcome of one synthesis job: a sample, or the stage that rejected it.
struct SynthesisJob {
  std::optional<SynthesizedSample> sample;
  std::string rejection;
  std::vector<std::string> failures;
};

// place -> describe -> align -> repair -> filter for job `job`, pairing
// sequence job % corpus with scene job % scenes and seeding by index.
inline SynthesisJob synthesize_job(int job, const std::vector<HOISequence>& corpus, const std::vector<SceneGraph>& scenes,
                                   const SynthesisConfig& cfg, const Vocabulary& vocab) {
  SynthesisJob out;
  const NoiseSchedule sched;
  const auto si = static_cast<std::size_t>(job) % corpus.size();
  const auto ki = static_cast<std::size_t>(job) % scenes.size();
  const HOISequence& seq = corpus[si];
  Rng rng(job_seed(cfg.seed, static_cast<std::uint64_t>(job)));
  require(detail::contains(vocab.actions, seq.action) && detail::contains(vocab.targets, seq.category),
          "synthesize_dataset: sequence action or category not in the vocabulary");

  std::vector<std::string> placed;
  SceneGraph scene;
  try {
    scene = place_objects(scenes[ki], seq.category, seq.geometry, static_cast<std::size_t>(1 + cfg.distractors), rng(), &placed);
  } catch (const ValidationError&) {
    out.rejection = "placement";
    return out;
  }
  const std::string target = placed.front();
  const auto spec = unique_spec(scene, target, seq.action);
  if (!spec) {
    out.rejection = "ambiguous";
    return out;
  }
  int contact = 0, release = 0;
  try {
    contact = detect_contact_start(seq, cfg.contact);
    release = detect_release(seq, contact, cfg.contact);
  } catch (const NoContactError&) {
    out.rejection = "no_contact";
    return out;
  }
  const SceneObject& obj = scene.at(target);
  AlignmentParams ap = cfg.alignment;
  ap.h_i = seq.rest_height;
  ap.h_a = scene.surfaces[*obj.support].height;
  const HOISequence moved = retarget_xy(seq, obj.pose.translation.x(), obj.pose.translation.y());
  const auto hands = engaged_hands(moved, contact, cfg.contact);
  const ShiftResult shifted = height_shift(moved, ap, contact, release, hands);
  const JerkSmoothingDenoiser repairer = repair_denoiser(seq, ap, sched);
  const HOISequence aligned = repair_motion(shifted, repairer, sched, ap.t_noise, rng, ap.resample, ap.signal_scale);

  const ScenePoints obstacles(scene.all_points(cfg.scene_spacing, target));
  const BodyProxy filter_body(seq.motion.skeleton, cfg.inflation);
  FilterReport report;
  report.foot = filter_foot_contact(aligned.motion, scene.bounds.min.z(), cfg.foot_eps, BodyProxy(seq.motion.skeleton));
  report.bounds = filter_bounds(aligned.motion, scene.bounds);
  report.collision = filter_collision(aligned.motion, obstacles, cfg.collision_delta, filter_body);
  if (!report.foot.pass) out.failures.push_back("foot");
  if (!report.bounds.pass) out.failures.push_back("bounds");
  if (!report.collision.pass) out.failures.push_back("collision");
  if (!report.pass()) {
    out.rejection = report.first_failure();
    return out;
  }
  // an arm stretched past its reach passes the filters but is not a valid pose
  if (shifted.overshoot > 1e-6) {
    out.rejection = "reach";
    return out;
  }
  SynthesizedSample sample;
  sample.id = "sample_" + std::to_string(job);
  sample.sequence_index = si;
  sample.scene_index = ki;
  sample.scene = std::move(scene);
  sample.target = target;
  sample.spec = *spec;
  sample.text = render_text(*spec, vocab);
  sample.aligned = aligned;
  AlignmentParams step = ap;
  step.t_w = 1;
  sample.forced = height_shift(moved, step, contact, release, hands).sequence;
  sample.report = report;
  sample.contact = contact;
  sample.release = release;
  out.sample = std::move(sample);
  return out;
}

// Jobs are independent, so results are merged in job order whatever the
// worker count.
inline SynthesisResult synthesize_dataset(const std::vector<HOISequence>& corpus, const std::vector<SceneGraph>& scenes,
                                          const SynthesisConfig& cfg, const Vocabulary& vocab = Vocabulary::defaults(),
                                          int workers = 1) {
  require(!corpus.empty() && !scenes.empty(), "synthesize_dataset: empty corpus or scene list");
  require(cfg.samples >= 0, "synthesize_dataset: negative sample count");
  std::vector<SynthesisJob> jobs(static_cast<std::size_t>(cfg.samples));
  parallel_for(jobs.size(), workers, [&](std::size_t j) { jobs[j] = synthesize_job(static_cast<int>(j), corpus, scenes, cfg, vocab); });
  SynthesisResult out;
  for (auto& j : jobs) {
    ++out.stats.attempted;
    for (const auto& f : j.failures) ++out.stats.failures[f];
    if (j.sample) {
      out.samples.push_back(std::move(*j.sample));
      ++out.stats.emitted;
    } else {
      ++out.stats.rejected_by[j.rejection];
    }
  }
  return out;
}

}  // namespace interactmove
