#pragma once

#include <string>
#include <vector>

#include "interactmove/alignment.hpp"

// Synthetic capture corpus and toy rooms. Captured sequences are expressed
// with the object resting at the origin in x-y on a support of height
// `rest_height`, the human standing on z = 0 on the -x side facing +x.
namespace interactmove {

enum class ToyMotion { kLift, kTilt, kCarry };

struct ToyItem {
  std::string action;
  std::string category;
  Vec3 half_extent;
  bool two_handed = true;
  ToyMotion motion = ToyMotion::kLift;
};

inline const std::vector<ToyItem>& toy_items() {
  static const std::vector<ToyItem> items = {
      {"lift", "box", {0.10, 0.10, 0.08}, true, ToyMotion::kLift},
      {"carry", "box", {0.10, 0.10, 0.08}, true, ToyMotion::kCarry},
      {"drink", "cup", {0.04, 0.04, 0.06}, false, ToyMotion::kTilt},
      {"pour", "kettle", {0.08, 0.06, 0.08}, false, ToyMotion::kTilt},
      {"take pictures with", "camera", {0.05, 0.07, 0.04}, true, ToyMotion::kLift},
      {"inspect", "bowl", {0.08, 0.08, 0.04}, true, ToyMotion::kLift},
      {"pick up", "apple", {0.04, 0.04, 0.04}, false, ToyMotion::kLift},
      {"hold", "mug", {0.04, 0.04, 0.05}, false, ToyMotion::kLift},
      {"move", "basket", {0.10, 0.12, 0.08}, true, ToyMotion::kCarry},
      {"call", "phone", {0.04, 0.08, 0.04}, false, ToyMotion::kLift},
      {"eat", "apple", {0.04, 0.04, 0.04}, false, ToyMotion::kTilt},
      {"pass", "bottle", {0.035, 0.035, 0.10}, false, ToyMotion::kCarry},
  };
  return items;
}

// Fixed timeline of every toy capture (frame indices).
struct ToyTimeline {
  int frames = 48;
  int contact = 8;       // first frame the object moves
  int lift_end = 15;
  int hold_end = 27;
  int lower_end = 35;
  int grip_end = 37;     // hands leave the grasp after this frame
  double hand_gap = 0.035;
  double stand_off = 0.42;  // pelvis behind the object's near face
};

namespace detail {

inline double smoothstep(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * (3.0 - 2.0 * u);
}

inline RigidTransform toy_object_pose(const ToyItem& item, const ToyTimeline& tl, double rest_z, double lift, int t) {
  constexpr double kPi = 3.14159265358979323846;
  double z = 0.0;
  if (t >= tl.contact && t <= tl.lift_end) {
    z = lift * (t - tl.contact + 1) / (tl.lift_end - tl.contact + 1);
  } else if (t > tl.lift_end && t <= tl.hold_end) {
    z = lift;
  } else if (t > tl.hold_end && t <= tl.lower_end) {
    z = lift * (1.0 - static_cast<double>(t - tl.hold_end) / (tl.lower_end - tl.hold_end));
  }
  RigidTransform pose = RigidTransform::from_translation(Vec3(0.0, 0.0, rest_z + z));
  if (t > tl.lift_end && t <= tl.hold_end) {
    const double s = std::sin(kPi * (t - tl.lift_end) / (tl.hold_end - tl.lift_end + 1));
    if (item.motion == ToyMotion::kTilt) pose.rotation = Eigen::AngleAxisd(0.5 * s * s, Vec3::UnitY()).toRotationMatrix();
    if (item.motion == ToyMotion::kCarry) pose.translation.y() += 0.12 * s;
  }
  return pose;
}

// Pitches the upper body forward by `lean` about the pelvis.
inline Pose toy_lean(const Skeleton& s, const Vec3& pelvis, double lean) {
  const Mat3 r = Eigen::AngleAxisd(lean, Vec3::UnitY()).toRotationMatrix();
  const Vec3 rest_pelvis = s.rest_positions[0];
  Pose pose(s.joint_count());
  for (std::size_t j = 0; j < s.joint_count(); ++j) {
    // legs stay planted; everything hanging off the spine tilts
    std::size_t a = j;
    while (s.parents[a] > 0) a = static_cast<std::size_t>(s.parents[a]);
    const bool upper = j != 0 && static_cast<int>(a) != s.left_hip && static_cast<int>(a) != s.right_hip;
    const Vec3 rel = s.rest_positions[j] - rest_pelvis;
    pose[j] = pelvis + (upper ? Vec3(r * rel) : rel);
  }
  return pose;
}

struct ToyArm {
  int shoulder, elbow, wrist, hand;
  double side;        // +1 left, -1 right
  Vec3 grasp_local;   // hand joint in the object frame
  Vec3 normal_local;  // outward face normal at the grasp
};

inline Vec3 toy_wrist_dir(const Vec3& n) { return Vec3(0.45 * n + Vec3(-0.5, 0.0, 0.75)).normalized(); }

}  // namespace detail

// One synthetic capture of `item` lifted by `lift` metres from a support of
// height `rest_height`.
inline HOISequence make_toy_sequence(const ToyItem& item, double rest_height, double lift, const ToyTimeline& tl = {}) {
  require(item.half_extent.minCoeff() >= 0.035, "toy item is too small to grasp");
  require(lift >= 0.08, "toy lift must move the object at least 1 cm on the contact frame");
  const Skeleton s = Skeleton::biped();
  const Vec3 h = item.half_extent;
  const double rest_z = rest_height + h.z();
  const double grasp_z = std::min(h.z(), std::max(0.0, 0.07 - h.z()));

  std::vector<detail::ToyArm> arms;
  auto arm = [&](const std::string& p, double side) {
    const Vec3 n(0.0, side, 0.0);
    return detail::ToyArm{s.index_of(p + "shoulder"), s.index_of(p + "elbow"), s.index_of(p + "wrist"),
                          s.index_of(p + "hand"), side, Vec3(0.0, side * (h.y() + tl.hand_gap), grasp_z), n};
  };
  if (item.two_handed) arms.push_back(arm("l_", 1.0));
  arms.push_back(arm("r_", -1.0));
  const Vec3 pelvis(-(h.x() + tl.stand_off), item.two_handed ? 0.0 : 0.12, s.rest_positions[0].z());

  std::vector<RigidTransform> poses;
  for (int t = 0; t < tl.frames; ++t) poses.push_back(detail::toy_object_pose(item, tl, rest_z, lift, t));
  const RigidTransform& rest = poses[0];

  // Target hand position and wrist direction per arm and frame.
  auto hand_target = [&](const detail::ToyArm& a, int t, Vec3& wrist_dir) {
    const Vec3 n = rest.rotation * a.normal_local;
    const Vec3 grasp = rest.apply(a.grasp_local);
    if (t < tl.contact - 1) {
      const Vec3 ready = grasp + Vec3(-0.03, 0.0, 0.15) + 0.05 * n;
      wrist_dir = detail::toy_wrist_dir(n);
      return Vec3(ready + detail::smoothstep(static_cast<double>(t) / (tl.contact - 1)) * (grasp - ready));
    }
    if (t <= tl.grip_end) {
      const RigidTransform& p = poses[static_cast<std::size_t>(t)];
      wrist_dir = detail::toy_wrist_dir(p.rotation * a.normal_local);
      return p.apply(a.grasp_local);
    }
    static constexpr double kRetreat[] = {0.03, 0.07, 0.13, 0.20};
    const double d = kRetreat[std::min(t - tl.grip_end - 1, 3)];
    wrist_dir = detail::toy_wrist_dir(n);
    return Vec3(grasp + d * Vec3(n + Vec3(0.0, 0.0, 0.3)).normalized());
  };

  // Smallest forward lean that keeps every grasping wrist within comfortable reach.
  auto reach = [&](double lean) {
    const Pose base = detail::toy_lean(s, pelvis, lean);
    double worst = 0.0;
    for (const auto& a : arms) {
      for (int t = 0; t < tl.frames; ++t) {
        Vec3 dir;
        const Vec3 hand = hand_target(a, t, dir);
        worst = std::max(worst, (hand + s.rest_length(static_cast<std::size_t>(a.hand)) * dir - base[static_cast<std::size_t>(a.shoulder)]).norm());
      }
    }
    return worst;
  };
  double lean = 0.0;
  while (lean < 0.9 && reach(lean) > 0.40) lean += 0.005;
  require(reach(lean) < 0.52, "toy capture: object out of reach");

  HOISequence seq;
  seq.action = item.action;
  seq.category = item.category;
  seq.geometry = BoxShape{h};
  seq.rest_height = rest_height;
  seq.object.poses = poses;
  seq.motion.skeleton = s;
  const Pose base = detail::toy_lean(s, pelvis, lean);
  for (int t = 0; t < tl.frames; ++t) {
    Pose pose = base;
    for (const auto& a : arms) {
      Vec3 dir;
      const Vec3 hand = hand_target(a, t, dir);
      const auto sh = static_cast<std::size_t>(a.shoulder);
      const auto el = static_cast<std::size_t>(a.elbow);
      const auto wr = static_cast<std::size_t>(a.wrist);
      const Vec3 wrist = hand + s.rest_length(static_cast<std::size_t>(a.hand)) * dir;
      pose[el] = solve_two_bone(pose[sh], wrist, s.rest_length(el), s.rest_length(wr), Vec3(-0.5, 0.8 * a.side, -0.4));
      pose[wr] = wrist;
      pose[static_cast<std::size_t>(a.hand)] = hand;
    }
    seq.motion.frames.push_back(std::move(pose));
  }
  return seq;
}

inline constexpr double kToyCaptureHeights[] = {0.78, 0.80, 0.82};

// `count` captures cycling through toy_items() and the capture heights;
// lift heights are drawn per index.
inline std::vector<HOISequence> toy_corpus(int count, std::uint64_t seed = 0) {
  std::vector<HOISequence> out;
  const auto& items = toy_items();
  for (int i = 0; i < count; ++i) {
    Rng rng(job_seed(seed, static_cast<std::uint64_t>(i)));
    out.push_back(make_toy_sequence(items[static_cast<std::size_t>(i) % items.size()],
                                    kToyCaptureHeights[i % 3], uniform(rng, 0.1, 0.25)));
  }
  return out;
}

enum class ToyPoison { kNone, kFoot, kBounds, kCollision };

// Corrupts a capture so that exactly one filter should reject it: the body
// sunk into the floor, teleported out of the room for the last frames, or
// walked forward into the support with the hands kept on the grasp.
inline HOISequence poison_sequence(HOISequence s, ToyPoison p) {
  const int frames = static_cast<int>(s.motion.frame_count());
  const Skeleton& sk = s.motion.skeleton;
  std::vector<bool> keep(sk.joint_count(), false);
  if (p == ToyPoison::kCollision) {
    for (int j : sk.hand_joints()) keep[static_cast<std::size_t>(j)] = true;
  }
  for (int t = 0; t < frames; ++t) {
    Vec3 d = Vec3::Zero();
    if (p == ToyPoison::kFoot) d = Vec3(0.0, 0.0, -0.1);
    if (p == ToyPoison::kBounds && t >= frames - 4) d = Vec3(-5.0, 0.0, 0.0);
    if (p == ToyPoison::kCollision) d = Vec3(0.45, 0.0, 0.0);
    Pose& pose = s.motion.frames[static_cast<std::size_t>(t)];
    for (std::size_t j = 0; j < pose.size(); ++j) {
      if (!keep[j]) pose[j] += d;
    }
    if (p == ToyPoison::kCollision) resolve_elbows(sk, pose);
  }
  return s;
}

inline std::vector<HOISequence> poison_corpus(std::vector<HOISequence> corpus, ToyPoison p) {
  for (auto& s : corpus) s = poison_sequence(std::move(s), p);
  return corpus;
}

// ---------------------------------------------------------------------------
// Toy rooms

struct ToyRoomConfig {
  Vec3 size = Vec3(6.0, 6.0, 3.0);
  double wall = 0.1;
  double min_height = 0.72;
  double max_height = 0.86;
};

// A walled room with four solid tables, each with a placement strip near its
// -x edge and one anchor behind it. Two tables share a category and differ in
// their relation, so every placement is groundable.
inline SceneGraph toy_scene(std::uint64_t seed, const ToyRoomConfig& cfg = {}, const Vocabulary& vocab = Vocabulary::defaults()) {
  Rng rng(seed);
  SceneGraph g;
  g.bounds = {Vec3::Zero(), cfg.size};
  auto add_box = [&](const std::string& category, const Vec3& half, const Vec3& center) {
    SceneObject o;
    o.id = detail::next_instance_id(g, category);
    o.category = category;
    o.geometry = BoxShape{half};
    o.pose = RigidTransform::from_translation(center);
    g.objects.push_back(o);
    return o.id;
  };
  const Vec3 c = 0.5 * cfg.size;
  const double w = 0.5 * cfg.wall;
  add_box("floor", Vec3(c.x(), c.y(), w), Vec3(c.x(), c.y(), -w));
  add_box("wall", Vec3(w, c.y(), c.z()), Vec3(-w, c.y(), c.z()));
  add_box("wall", Vec3(w, c.y(), c.z()), Vec3(cfg.size.x() + w, c.y(), c.z()));
  add_box("wall", Vec3(c.x(), w, c.z()), Vec3(c.x(), -w, c.z()));
  add_box("wall", Vec3(c.x(), w, c.z()), Vec3(c.x(), cfg.size.y() + w, c.z()));

  std::vector<std::string> surfaces = vocab.surfaces;
  std::vector<std::string> anchors = vocab.anchors;
  shuffle(surfaces, rng);
  shuffle(anchors, rng);
  const std::string categories[4] = {surfaces[0], surfaces[0], surfaces[1], surfaces[2]};
  std::vector<int> slots = {0, 1, 2, 3};
  shuffle(slots, rng);
  const double xs[2] = {1.5, 4.0};
  const double ys[2] = {0.6, 3.6};
  for (int k = 0; k < 4; ++k) {
    const int slot = slots[static_cast<std::size_t>(k)];
    const double x0 = xs[slot / 2];
    const double y0 = ys[slot % 2];
    const double height = uniform(rng, cfg.min_height, cfg.max_height);
    const std::string table = add_box(categories[k], Vec3(0.4, 0.6, 0.5 * height), Vec3(x0 + 0.4, y0 + 0.6, 0.5 * height));
    const double az = uniform(rng, 0.35, 0.5);
    const std::string anchor = add_box(anchors[static_cast<std::size_t>(k)], Vec3(0.2, 0.3, az), Vec3(x0 + 1.2, y0 + 0.6, az));
    g.relations.push_back({table, uniform01(rng) < 0.5 ? Relation::kNextTo : Relation::kNear, anchor});
    g.surfaces.push_back({table,
                          {Vec3(x0 + 0.16, y0 + 0.2, height), Vec3(x0 + 0.22, y0 + 0.2, height),
                           Vec3(x0 + 0.22, y0 + 1.0, height), Vec3(x0 + 0.16, y0 + 1.0, height)},
                          height});
  }
  validate_scene(g);
  return g;
}

inline std::vector<SceneGraph> toy_scenes(int count, std::uint64_t seed = 0) {
  std::vector<SceneGraph> out;
  for (int i = 0; i < count; ++i) out.push_back(toy_scene(job_seed(seed ^ 0x5ce9e5ull, static_cast<std::uint64_t>(i))));
  return out;
}

}  // namespace interactmove
