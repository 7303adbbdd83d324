#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "interactmove/geometry.hpp"

namespace interactmove {

enum class Relation { kNextTo, kNear, kOn, kAbove, kBelow };

inline constexpr std::array<Relation, 5> kAllRelations = {Relation::kNextTo, Relation::kNear, Relation::kOn,
                                                          Relation::kAbove, Relation::kBelow};

inline std::string_view relation_name(Relation r) {
  switch (r) {
    case Relation::kNextTo: return "next_to";
    case Relation::kNear: return "near";
    case Relation::kOn: return "on";
    case Relation::kAbove: return "above";
    case Relation::kBelow: return "below";
  }
  return "";
}

inline Relation relation_from_name(std::string_view name) {
  for (Relation r : kAllRelations) {
    if (relation_name(r) == name) return r;
  }
  throw ValidationError("unknown relation '" + std::string(name) + "'");
}

// Words of the relation as it appears in a sentence.
inline std::string_view relation_phrase(Relation r) {
  switch (r) {
    case Relation::kNextTo: return "next to";
    case Relation::kNear: return "near";
    case Relation::kOn: return "on";
    case Relation::kAbove: return "above";
    case Relation::kBelow: return "below";
  }
  return "";
}

// ---------------------------------------------------------------------------
// Scene graph

struct BoxShape {
  Vec3 half_extent = Vec3::Constant(0.5);
};

using Geometry = std::variant<BoxShape, TriMesh, PointCloud>;

inline Aabb local_bounds(const Geometry& g) {
  return std::visit(
      [](const auto& shape) -> Aabb {
        using T = std::decay_t<decltype(shape)>;
        if constexpr (std::is_same_v<T, BoxShape>) {
          return {-shape.half_extent, shape.half_extent};
        } else {
          return shape.bounds();
        }
      },
      g);
}

// Surface samples with outward normals in the geometry's local frame.
inline PointCloud surface_samples(const Geometry& g, double spacing) {
  return std::visit(
      [spacing](const auto& shape) -> PointCloud {
        using T = std::decay_t<decltype(shape)>;
        if constexpr (std::is_same_v<T, BoxShape>) {
          return box_surface_points(shape.half_extent, spacing);
        } else if constexpr (std::is_same_v<T, TriMesh>) {
          double area = 0.0;
          for (const auto& f : shape.faces) area += 0.5 * face_area_normal(shape, f).norm();
          Rng rng(0x5eed5u);
          const auto count = static_cast<std::size_t>(std::max(16.0, std::ceil(area / (spacing * spacing))));
          return sample_surface(shape, count, rng);
        } else {
          return shape;
        }
      },
      g);
}

struct SceneObject {
  std::string id;
  std::string category;
  Geometry geometry = BoxShape{};
  RigidTransform pose;
  bool movable = false;
  // Index into SceneGraph::surfaces of the surface this object rests on.
  std::optional<std::size_t> support;

  Aabb world_bounds() const {
    const Aabb local = local_bounds(geometry);
    Aabb box = Aabb::empty();
    for (int c = 0; c < 8; ++c) {
      box.extend(pose.apply(Vec3((c & 1) ? local.max.x() : local.min.x(), (c & 2) ? local.max.y() : local.min.y(),
                                 (c & 4) ? local.max.z() : local.min.z())));
    }
    return box;
  }

  PointCloud world_samples(double spacing) const { return surface_samples(geometry, spacing).transformed(pose); }
};

struct PlacementSurface {
  std::string owner;
  std::vector<Vec3> polygon;  // planar loop at z = height
  double height = 0.0;
};

struct SpatialRelation {
  std::string subject;
  Relation relation = Relation::kNear;
  std::string anchor;
};

struct SceneGraph {
  std::vector<SceneObject> objects;
  std::vector<PlacementSurface> surfaces;
  std::vector<SpatialRelation> relations;
  Aabb bounds;

  const SceneObject* find(std::string_view id) const {
    for (const auto& o : objects) {
      if (o.id == id) return &o;
    }
    return nullptr;
  }

  const SceneObject& at(std::string_view id) const {
    const SceneObject* o = find(id);
    if (!o) throw NotFoundError("no object with id '" + std::string(id) + "'");
    return *o;
  }

  // Static geometry (everything except movable objects and `exclude`) as
  // surface samples with outward normals.
  PointCloud static_points(double spacing, std::string_view exclude = {}) const {
    PointCloud out;
    for (const auto& o : objects) {
      if (o.movable || o.id == exclude) continue;
      out.append(o.world_samples(spacing));
    }
    return out;
  }

  // All geometry except `exclude`, movable objects included.
  PointCloud all_points(double spacing, std::string_view exclude = {}) const {
    PointCloud out;
    for (const auto& o : objects) {
      if (o.id == exclude) continue;
      out.append(o.world_samples(spacing));
    }
    return out;
  }
};

inline bool point_in_polygon_xy(const std::vector<Vec3>& polygon, double x, double y) {
  bool inside = false;
  const std::size_t n = polygon.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec3& a = polygon[i];
    const Vec3& b = polygon[j];
    if ((a.y() > y) != (b.y() > y) && x < (b.x() - a.x()) * (y - a.y()) / (b.y() - a.y()) + a.x()) inside = !inside;
  }
  return inside;
}

inline void validate_scene(const SceneGraph& scene) {
  std::set<std::string> ids;
  for (const auto& o : scene.objects) {
    require(!o.id.empty(), "scene object with empty id");
    require(ids.insert(o.id).second, "duplicate object id '" + o.id + "'");
    require(o.pose.is_orthonormal(), "object '" + o.id + "' has a non-orthonormal rotation");
    if (o.support) require(*o.support < scene.surfaces.size(), "object '" + o.id + "' references a missing surface");
  }
  for (const auto& s : scene.surfaces) {
    require(ids.count(s.owner) == 1, "surface owner '" + s.owner + "' is not an object");
    require(s.polygon.size() >= 3, "surface polygon of '" + s.owner + "' needs at least 3 points");
    for (const auto& p : s.polygon) {
      require(std::abs(p.z() - s.height) <= 1e-3, "surface polygon of '" + s.owner + "' is not planar at its height");
    }
  }
  for (const auto& r : scene.relations) {
    require(r.subject != r.anchor, "relation subject equals anchor ('" + r.subject + "')");
    require(ids.count(r.subject) == 1 && ids.count(r.anchor) == 1,
            "relation endpoint does not resolve: " + r.subject + " -> " + r.anchor);
  }
}

// ---------------------------------------------------------------------------
// Template text

struct Vocabulary {
  std::vector<std::string> actions;  // base verb phrases ("take pictures with")
  std::vector<std::string> targets;
  std::vector<std::string> surfaces;
  std::vector<std::string> anchors;

  static Vocabulary defaults() {
    Vocabulary v;
    v.actions = {"take pictures with", "drink", "lift", "pass", "inspect", "eat", "pour", "play", "open", "use", "toast",
                 "brush", "call", "hold", "carry", "push", "pull", "wear", "move", "pick up", "squeeze"};
    v.targets = {"camera", "bowl", "cup", "mug", "apple", "binoculars", "box", "bottle", "phone", "flashlight",
                 "teapot", "wineglass", "banana", "knife", "stapler", "toothbrush", "headphones", "mouse", "train",
                 "airplane", "backpack", "basketball", "keyboard", "suitcase", "monitor", "stool", "plastic container",
                 "trash bin", "yoga ball", "toy", "hammer", "torus", "cylinder", "pyramid", "sphere", "cube", "elephant",
                 "fryingpan", "gamecontroller", "eyeglasses", "lightbulb", "doorknob", "scissors", "watch", "duck",
                 "alarmclock", "piggybank", "waterbottle", "stanfordbunny", "wristwatch", "mug lid", "spoon",
                 "fork", "plate", "vase", "book", "pillow", "candle", "tray", "basket", "kettle", "remote", "laptop",
                 "tablet", "speaker", "jar", "pan", "pot", "clock", "board"};
    v.surfaces = {"table", "desk", "shelf", "counter", "cabinet", "nightstand", "dresser", "coffee table"};
    v.anchors = {"door", "sofa", "bed", "window", "chair", "lamp", "tv", "radiator", "bookshelf", "armchair",
                 "refrigerator", "sink", "plant", "couch", "wardrobe"};
    return v;
  }
};

struct InteractionSpec {
  std::string action;
  std::string target_category;
  std::string surface_category;
  Relation relation = Relation::kNextTo;
  std::string anchor_category;

  bool operator==(const InteractionSpec&) const = default;
};

class ParseError : public ValidationError {
 public:
  ParseError(const std::string& message, std::string clause, std::size_t position)
      : ValidationError(message + " (clause '" + clause + "', position " + std::to_string(position) + ")"),
        clause_(std::move(clause)),
        position_(position) {}
  const std::string& clause() const { return clause_; }
  std::size_t position() const { return position_; }

 private:
  std::string clause_;
  std::size_t position_;
};

namespace detail {

inline bool reserved_word(std::string_view w) {
  static const std::set<std::string_view> kReserved = {"a", "an", "the", "on", "near", "next", "above", "below"};
  return kReserved.count(w) != 0;
}

inline std::vector<std::string> split_words(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && s[i] == ' ') ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ') ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

inline bool contains(const std::vector<std::string>& items, const std::string& item) {
  return std::find(items.begin(), items.end(), item) != items.end();
}

inline bool starts_with_vowel(std::string_view w) {
  return !w.empty() && std::string_view("aeiou").find(w.front()) != std::string_view::npos;
}

}  // namespace detail

// Third-person singular of the first word of a verb phrase.
inline std::string conjugate(std::string_view base) {
  const std::size_t sp = base.find(' ');
  std::string verb(base.substr(0, sp));
  const std::string rest = sp == std::string_view::npos ? "" : std::string(base.substr(sp));
  auto ends = [&](std::string_view suffix) {
    return verb.size() >= suffix.size() && verb.compare(verb.size() - suffix.size(), suffix.size(), suffix) == 0;
  };
  if (ends("s") || ends("sh") || ends("ch") || ends("x") || ends("z") || ends("o")) {
    verb += "es";
  } else if (verb.size() >= 2 && ends("y") && std::string_view("aeiou").find(verb[verb.size() - 2]) == std::string_view::npos) {
    verb = verb.substr(0, verb.size() - 1) + "ies";
  } else {
    verb += "s";
  }
  return verb + rest;
}

inline void validate_vocabulary(const Vocabulary& vocab) {
  auto check = [](const std::vector<std::string>& items, const char* field) {
    require(!items.empty(), std::string("vocabulary field '") + field + "' is empty");
    std::set<std::string> seen;
    for (const auto& item : items) {
      require(!item.empty() && seen.insert(item).second, std::string("duplicate or empty entry in '") + field + "'");
      for (const auto& w : detail::split_words(item)) {
        require(!detail::reserved_word(w), "vocabulary item '" + item + "' contains reserved word '" + w + "'");
      }
    }
  };
  check(vocab.actions, "actions");
  check(vocab.targets, "targets");
  check(vocab.surfaces, "surfaces");
  check(vocab.anchors, "anchors");
  std::set<std::string> conjugated;
  for (const auto& a : vocab.actions) require(conjugated.insert(conjugate(a)).second, "actions conjugate ambiguously");
}

// Article in front of the anchor noun. "near" reads with a definite article
// ("near the sofa"); the other relations use the indefinite one.
inline std::string anchor_article(Relation r, std::string_view anchor) {
  if (r == Relation::kNear) return "the";
  return detail::starts_with_vowel(anchor) ? "an" : "a";
}

inline std::string render_text(const InteractionSpec& spec, const Vocabulary& vocab) {
  if (!detail::contains(vocab.actions, spec.action)) throw ValidationError("unknown action '" + spec.action + "'");
  if (!detail::contains(vocab.targets, spec.target_category))
    throw ValidationError("unknown target category '" + spec.target_category + "'");
  if (!detail::contains(vocab.surfaces, spec.surface_category))
    throw ValidationError("unknown surface category '" + spec.surface_category + "'");
  if (!detail::contains(vocab.anchors, spec.anchor_category))
    throw ValidationError("unknown anchor category '" + spec.anchor_category + "'");
  std::string out = "A person ";
  out += conjugate(spec.action);
  out += " the ";
  out += spec.target_category;
  out += detail::starts_with_vowel(spec.surface_category) ? " on an " : " on a ";
  out += spec.surface_category;
  out += ' ';
  out += relation_phrase(spec.relation);
  out += ' ';
  out += anchor_article(spec.relation, spec.anchor_category);
  out += ' ';
  out += spec.anchor_category;
  return out;
}

// Inverse of render_text. The grammar is checked first, then each clause is
// looked up in the vocabulary; errors report the clause and the character
// offset where it failed.
inline InteractionSpec parse_text(std::string_view text, const Vocabulary& vocab) {
  struct Word {
    std::string text;
    std::size_t pos;
  };
  std::vector<Word> words;
  {
    std::size_t i = 0;
    std::size_t end = text.size();
    while (end > 0 && (text[end - 1] == '.' || text[end - 1] == ' ')) --end;
    while (i < end) {
      while (i < end && text[i] == ' ') ++i;
      std::size_t j = i;
      while (j < end && text[j] != ' ') ++j;
      if (j > i) words.push_back({std::string(text.substr(i, j - i)), i});
      i = j;
    }
  }
  std::size_t k = 0;
  auto pos_here = [&]() { return k < words.size() ? words[k].pos : text.size(); };
  auto join = [&](std::size_t from, std::size_t to) {
    std::string s;
    for (std::size_t i = from; i < to; ++i) {
      if (i > from) s += ' ';
      s += words[i].text;
    }
    return s;
  };
  auto is_relation_start = [&](std::size_t i) {
    const std::string& w = words[i].text;
    if (w == "near" || w == "on" || w == "above" || w == "below") return true;
    return w == "next" && i + 1 < words.size() && words[i + 1].text == "to";
  };
  auto is_article = [](const std::string& w) { return w == "a" || w == "an" || w == "the"; };

  if (words.size() < 2 || words[0].text != "A" || words[1].text != "person") {
    throw ParseError("expected sentence to start with 'A person'", "subject", 0);
  }
  k = 2;

  const std::size_t action_begin = k;
  while (k < words.size() && words[k].text != "the") ++k;
  if (k == action_begin) throw ParseError("missing action", "action", pos_here());
  if (k == words.size()) throw ParseError("expected 'the' before the target", "target", pos_here());
  const std::size_t action_end = k++;

  const std::size_t target_begin = k;
  while (k < words.size() && words[k].text != "on") ++k;
  if (k == target_begin) throw ParseError("missing target", "target", pos_here());
  if (k == words.size()) throw ParseError("expected 'on a <surface>'", "surface", pos_here());
  const std::size_t target_end = k++;
  if (k == words.size() || !is_article(words[k].text)) throw ParseError("expected article after 'on'", "surface", pos_here());
  ++k;

  const std::size_t surface_begin = k;
  while (k < words.size() && !is_relation_start(k)) ++k;
  if (k == surface_begin) throw ParseError("missing surface", "surface", pos_here());
  if (k == words.size()) throw ParseError("expected a spatial relation", "relation", pos_here());
  const std::size_t surface_end = k;

  Relation relation = Relation::kNear;
  if (words[k].text == "next") {
    relation = Relation::kNextTo;
    k += 2;
  } else {
    const std::string& w = words[k].text;
    relation = w == "near" ? Relation::kNear : w == "on" ? Relation::kOn : w == "above" ? Relation::kAbove : Relation::kBelow;
    ++k;
  }
  if (k == words.size() || !is_article(words[k].text)) throw ParseError("expected article before anchor", "anchor", pos_here());
  ++k;
  if (k == words.size()) throw ParseError("missing anchor", "anchor", pos_here());
  const std::size_t anchor_begin = k;

  InteractionSpec spec;
  const std::string action_text = join(action_begin, action_end);
  bool found = false;
  for (const auto& a : vocab.actions) {
    if (conjugate(a) == action_text) {
      spec.action = a;
      found = true;
      break;
    }
  }
  if (!found) throw ParseError("unknown action '" + action_text + "'", "action", words[action_begin].pos);
  spec.target_category = join(target_begin, target_end);
  if (!detail::contains(vocab.targets, spec.target_category))
    throw ParseError("unknown target '" + spec.target_category + "'", "target", words[target_begin].pos);
  spec.surface_category = join(surface_begin, surface_end);
  if (!detail::contains(vocab.surfaces, spec.surface_category))
    throw ParseError("unknown surface '" + spec.surface_category + "'", "surface", words[surface_begin].pos);
  spec.relation = relation;
  spec.anchor_category = join(anchor_begin, words.size());
  if (!detail::contains(vocab.anchors, spec.anchor_category))
    throw ParseError("unknown anchor '" + spec.anchor_category + "'", "anchor", words[anchor_begin].pos);
  return spec;
}

// ---------------------------------------------------------------------------
// Grounding

// Every movable object satisfying all three constraints of `spec`, sorted by id.
inline std::vector<std::string> grounding_candidates(const InteractionSpec& spec, const SceneGraph& scene) {
  std::vector<std::string> out;
  for (const auto& o : scene.objects) {
    if (!o.movable || o.category != spec.target_category || !o.support) continue;
    const PlacementSurface& surface = scene.surfaces.at(*o.support);
    const SceneObject* owner = scene.find(surface.owner);
    if (!owner || owner->category != spec.surface_category) continue;
    const bool related = std::any_of(scene.relations.begin(), scene.relations.end(), [&](const SpatialRelation& r) {
      if (r.subject != owner->id || r.relation != spec.relation) return false;
      const SceneObject* anchor = scene.find(r.anchor);
      return anchor && anchor->category == spec.anchor_category;
    });
    if (related) out.push_back(o.id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline std::string ground(const InteractionSpec& spec, const SceneGraph& scene) {
  auto candidates = grounding_candidates(spec, scene);
  if (candidates.empty()) throw NotFoundError("no " + spec.target_category + " satisfies the description");
  if (candidates.size() > 1) {
    std::string ids;
    for (const auto& c : candidates) ids += (ids.empty() ? "" : ", ") + c;
    throw AmbiguousError("ambiguous reference, candidates: " + ids, std::move(candidates));
  }
  return candidates.front();
}

// ---------------------------------------------------------------------------
// Placement

namespace detail {

inline std::string next_instance_id(const SceneGraph& scene, const std::string& category) {
  for (int n = 0;; ++n) {
    std::string id = category + "_" + std::to_string(n);
    std::replace(id.begin(), id.end(), ' ', '_');
    if (!scene.find(id)) return id;
  }
}

}  // namespace detail

// Surfaces that currently carry no object.
inline std::vector<std::size_t> free_surfaces(const SceneGraph& scene) {
  std::vector<bool> used(scene.surfaces.size(), false);
  for (const auto& o : scene.objects) {
    if (o.support && *o.support < used.size()) used[*o.support] = true;
  }
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < used.size(); ++i) {
    if (!used[i]) out.push_back(i);
  }
  return out;
}

// Places `count` instances of `category` on distinct free surfaces, each at a
// uniformly random point of the support polygon with its base at the surface
// height and its bounding box clear of every other object.
inline SceneGraph place_objects(const SceneGraph& scene, const std::string& category, const Geometry& prototype,
                                std::size_t count, std::uint64_t seed, std::vector<std::string>* placed_ids = nullptr) {
  std::vector<std::size_t> eligible = free_surfaces(scene);
  if (count > eligible.size()) {
    throw ValidationError("cannot place " + std::to_string(count) + " objects on " + std::to_string(eligible.size()) +
                          " free surfaces");
  }
  SceneGraph out = scene;
  if (count == 0) return out;
  Rng rng(seed);
  shuffle(eligible, rng);
  const Aabb local = local_bounds(prototype);
  for (std::size_t n = 0; n < count; ++n) {
    const std::size_t si = eligible[n];
    const PlacementSurface& surface = out.surfaces[si];
    Aabb poly = Aabb::empty();
    for (const auto& p : surface.polygon) poly.extend(p);
    SceneObject obj;
    obj.id = detail::next_instance_id(out, category);
    obj.category = category;
    obj.geometry = prototype;
    obj.movable = true;
    obj.support = si;
    bool ok = false;
    for (int attempt = 0; attempt < 500 && !ok; ++attempt) {
      const double x = uniform(rng, poly.min.x(), poly.max.x());
      const double y = uniform(rng, poly.min.y(), poly.max.y());
      if (!point_in_polygon_xy(surface.polygon, x, y)) continue;
      obj.pose = RigidTransform::from_translation(Vec3(x, y, surface.height - local.min.z()));
      const Aabb box = obj.world_bounds();
      ok = std::none_of(out.objects.begin(), out.objects.end(),
                        [&](const SceneObject& other) {
                          // the support owner is touched from above by construction
                          return other.id != surface.owner && other.world_bounds().overlaps(box);
                        });
    }
    if (!ok) throw ValidationError("could not find a collision-free spot on the surface of '" + surface.owner + "'");
    if (placed_ids) placed_ids->push_back(obj.id);
    out.objects.push_back(std::move(obj));
  }
  return out;
}

}  // namespace interactmove
